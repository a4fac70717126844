#pragma once

#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace ltpi {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream seed for (seed, index, lane); lanes keep unrelated draws apart.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index, std::uint64_t lane = 0) {
  return splitmix64(splitmix64(seed ^ (lane * 0xd1b54a32d192ed03ULL)) + index);
}

// Small counter-based generator; output depends only on its seed.
class counter_rng {
 public:
  explicit counter_rng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() { return splitmix64(state_++ * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL); }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Index drawn from a discrete law by inversion.
  std::size_t categorical(const std::vector<double>& probs) {
    double u = uniform(), acc = 0.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return i;
    }
    return probs.size() - 1;
  }

 private:
  std::uint64_t state_;
};

// Worker cap from LTPI_MAX_THREADS, else hardware concurrency.
inline unsigned max_threads() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("LTPI_MAX_THREADS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v) < hw ? static_cast<unsigned>(v) : hw;
  }
  return hw;
}

// Static block partition; results must not depend on scheduling.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  unsigned t = max_threads();
  if (t <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  if (t > n) t = static_cast<unsigned>(n);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> failures(t);
  pool.reserve(t);
  for (unsigned k = 0; k < t; ++k) {
    std::size_t lo = n * k / t, hi = n * (k + 1) / t;
    pool.emplace_back([lo, hi, k, &body, &failures] {
      try {
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        failures[k] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& f : failures)
    if (f) std::rethrow_exception(f);
}

}  // namespace ltpi
