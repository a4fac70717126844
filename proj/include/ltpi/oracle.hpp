#pragma once

// Sampling oracle for the sharp ATETS interval. It builds candidate laws of the
// potential outcomes directly from the observed cells and never touches the
// linear program, so it can audit the solver.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "ltpi/data.hpp"
#include "ltpi/error.hpp"
#include "ltpi/result.hpp"
#include "ltpi/rng.hpp"
#include "ltpi/sharp_set.hpp"

namespace ltpi {

namespace detail {

// Random coupling of row masses r[R] with C columns, optionally with pinned
// column sums c[C]; allowed[a*C+b] masks cells. Vertex draws fill cells
// greedily in random order; interior draws mix several vertex draws.
class Coupler {
 public:
  explicit Coupler(counter_rng& g) : g_(g) {}

  bool draw(const double* r, int R, int C, const double* c, const bool* allowed, bool interior, double* out) {
    if (c == nullptr) return free_draw(r, R, C, allowed, interior, out);
    double sr = 0.0, sc = 0.0;
    for (int a = 0; a < R; ++a) sr += r[a];
    for (int b = 0; b < C; ++b) {
      if (c[b] < -1e-12) return false;
      sc += c[b];
    }
    if (std::abs(sr - sc) > 1e-9) return false;
    const int k = interior ? 3 : 1;
    double tmp[64], wsum = 0.0;
    std::fill(out, out + R * C, 0.0);
    int got = 0;
    for (int attempt = 0; attempt < 12 && got < k; ++attempt) {
      if (!greedy(r, R, C, c, allowed, tmp)) continue;
      double w = interior ? -std::log(1.0 - g_.uniform()) : 1.0;
      for (int t = 0; t < R * C; ++t) out[t] += w * tmp[t];
      wsum += w;
      ++got;
    }
    if (got == 0) return false;
    for (int t = 0; t < R * C; ++t) out[t] /= wsum;
    return true;
  }

 private:
  bool free_draw(const double* r, int R, int C, const bool* allowed, bool interior, double* out) {
    for (int a = 0; a < R; ++a) {
      double w[8], s = 0.0;
      int n_ok = 0;
      for (int b = 0; b < C; ++b) n_ok += allowed[a * C + b];
      if (n_ok == 0) {
        if (r[a] > 1e-15) return false;
        for (int b = 0; b < C; ++b) out[a * C + b] = 0.0;
        continue;
      }
      int pick = static_cast<int>(g_.next() % static_cast<std::uint64_t>(n_ok));
      for (int b = 0, seen = 0; b < C; ++b) {
        w[b] = 0.0;
        if (!allowed[a * C + b]) continue;
        w[b] = interior ? -std::log(1.0 - g_.uniform()) : (seen == pick ? 1.0 : 0.0);
        ++seen;
        s += w[b];
      }
      for (int b = 0; b < C; ++b) out[a * C + b] = r[a] * w[b] / s;
    }
    return true;
  }

  bool greedy(const double* r, int R, int C, const double* c, const bool* allowed, double* out) {
    double rr[8], cc[8];
    std::copy(r, r + R, rr);
    std::copy(c, c + C, cc);
    int cells[64], n = 0;
    for (int t = 0; t < R * C; ++t)
      if (allowed[t]) cells[n++] = t;
    for (int t = n - 1; t > 0; --t) std::swap(cells[t], cells[g_.next() % static_cast<std::uint64_t>(t + 1)]);
    std::fill(out, out + R * C, 0.0);
    for (int t = 0; t < n; ++t) {
      int a = cells[t] / C, b = cells[t] % C;
      double m = std::max(0.0, std::min(rr[a], cc[b]));
      out[cells[t]] = m;
      rr[a] -= m;
      cc[b] -= m;
    }
    for (int a = 0; a < R; ++a)
      if (rr[a] > 1e-12) return false;
    for (int b = 0; b < C; ++b)
      if (cc[b] > 1e-12) return false;
    return true;
  }

  counter_rng& g_;
};

struct HullPoint {
  double d, n;  // block contribution to the denominator and numerator
};

inline double cross(const HullPoint& o, const HullPoint& a, const HullPoint& b) {
  return (a.d - o.d) * (b.n - o.n) - (a.n - o.n) * (b.d - o.d);
}

// Convex hull, monotone chain. Extremes of n - lambda*d live on it.
inline std::vector<HullPoint> hull(std::vector<HullPoint> p) {
  std::sort(p.begin(), p.end(), [](const HullPoint& a, const HullPoint& b) { return a.d < b.d || (a.d == b.d && a.n < b.n); });
  if (p.size() < 3) return p;
  std::vector<HullPoint> h(2 * p.size());
  std::size_t k = 0;
  for (const auto& q : p) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], q) <= 0.0) --k;
    h[k++] = q;
  }
  for (std::size_t i = p.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(h[k - 2], h[k - 1], p[i]) <= 0.0) --k;
    h[k++] = p[i];
  }
  h.resize(k - 1);
  return h;
}

// Best ratio sum(n)/sum(d) choosing one point per block (Dinkelbach).
inline double product_extreme(const std::vector<std::vector<HullPoint>>& blocks, double start, int sign) {
  double lambda = start;
  for (int it = 0; it < 1000; ++it) {
    double n = 0.0, d = 0.0;
    for (const auto& b : blocks) {
      const HullPoint* best = &b.front();
      for (const auto& p : b)
        if (sign * (p.n - lambda * p.d) > sign * (best->n - lambda * best->d)) best = &p;
      n += best->n, d += best->d;
    }
    if (d <= 1e-12) break;
    double next = n / d;
    if (sign * (next - lambda) <= 1e-15) break;
    lambda = next;
  }
  return lambda;
}

}  // namespace detail

// Inner approximation of the sharp interval from `samples` random candidate laws.
inline BoundsResult brute_force_bounds(const CellTable& ct, const RestrictionSet& rs, std::size_t samples,
                                       std::uint64_t seed) {
  if (ct.n_cells > 2) throw error(errc::invalid_argument, "oracle supports at most two covariate cells");
  if (rs.st) throw error(errc::unsupported_restriction, "oracle cannot sample stationarity equalities", "st");
  if (rs.ev && !rs.iv) throw error(errc::unsupported_restriction, "oracle needs iv alongside ev", "ev");
  if (rs.nsd) throw error(errc::unsupported_restriction, "nsd point-identifies the ATETS", "nsd");
  const bool pin = rs.iv && rs.ev;
  const int nc = ct.n_cells;

  // Observed conditional laws and pinned quantities per cell.
  struct Cell {
    double pw[2];
    double obs[2][4];   // block w: observed pair (a, b) -> mass; w=1: (i,k), w=0: (j,l)
    double pinned[2];   // P(l=0|W=1,O), P(k=0|W=0,O) when iv+ev
    bool has_ratio[2][2];
    double ratio[2][2];  // [arm][level]
    double e_l0, e_k0;
  };
  std::vector<Cell> cells(nc);
  for (int x = 0; x < nc; ++x) {
    Cell& c = cells[x];
    for (int w = 0; w < 2; ++w) {
      c.pw[w] = ct.pw(w, x, Sample::O);
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          c.obs[w][a * 2 + b] = c.pw[w] > 0.0 ? ct.o[x][CellTable::oi(a, b, w)] / c.pw[w] : 0.0;
    }
    double e0 = ct.pw(0, x, Sample::E), e1 = ct.pw(1, x, Sample::E);
    c.e_l0 = e0 > 0.0 ? ct.e[x][CellTable::ei(0, 0)] / e0 : 0.5;
    c.e_k0 = e1 > 0.0 ? ct.e[x][CellTable::ei(0, 1)] / e1 : 0.5;
    double l0_w0 = c.obs[0][0] + c.obs[0][2];  // P(Y1=0|W=0,O)
    double k0_w1 = c.obs[1][0] + c.obs[1][2];  // P(Y1=0|W=1,O)
    c.pinned[1] = c.pw[1] > 0.0 ? (c.e_l0 - c.pw[0] * l0_w0) / c.pw[1] : 0.0;
    c.pinned[0] = c.pw[0] > 0.0 ? (c.e_k0 - c.pw[1] * k0_w1) / c.pw[0] : 0.0;
    if (pin) {
      for (int w = 0; w < 2; ++w)
        if (c.pw[w] > 0.0 && (c.pinned[w] < -1e-9 || c.pinned[w] > 1.0 + 1e-9))
          throw error(errc::no_feasible_point, "experimental margins cannot be matched in cell " + std::to_string(x));
      if (c.pw[1] == 0.0 && std::abs(c.e_l0 - l0_w0) > 1e-9)
        throw error(errc::no_feasible_point, "experimental margins cannot be matched in cell " + std::to_string(x));
      if (c.pw[0] == 0.0 && std::abs(c.e_k0 - k0_w1) > 1e-9)
        throw error(errc::no_feasible_point, "experimental margins cannot be matched in cell " + std::to_string(x));
      for (double& v : c.pinned) v = std::clamp(v, 0.0, 1.0);
    }
    for (int arm = 0; arm < 2; ++arm)
      for (int lev = 0; lev < 2; ++lev) {
        double m = ct.py1w(lev, arm, x, Sample::O);
        c.has_ratio[arm][lev] = rs.lu && m > 0.0;
        c.ratio[arm][lev] = m > 0.0 ? ct.o[x][CellTable::oi(1, lev, arm)] / m : 0.0;
      }
  }

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  std::size_t feasible = 0;
  // Without cross-block restrictions the observational blocks are independent
  // given the pinned margins, so any combination of feasible blocks is feasible.
  const bool separable = !rs.sd && !rs.pco;
  std::vector<std::vector<detail::HullPoint>> pts(static_cast<std::size_t>(nc) * 2);
  QTable q(nc);
  for (std::size_t s = 0; s < samples; ++s) {
    counter_rng g(derive_seed(seed, s, 11));
    detail::Coupler cp(g);
    const bool interior = (g.next() & 3u) == 0;  // mostly vertex draws
    bool ok = true;
    for (int x = 0; x < nc && ok; ++x) {
      const Cell& c = cells[x];
      for (int w = 0; w < 2 && ok; ++w) {
        auto& blk = q.block(x, Sample::O, w);
        blk.fill(0.0);
        if (c.pw[w] == 0.0) {
          blk[0] = 1.0;
          continue;
        }
        // Step A: observed pair (a,b) coupled with the missing Y1 coordinate m.
        // w=1: (a,b)=(i,k), m=l.  w=0: (a,b)=(j,l), m=k.
        bool allowA[8];
        for (int ab = 0; ab < 4; ++ab)
          for (int m = 0; m < 2; ++m) {
            int k = w == 1 ? ab % 2 : m, l = w == 1 ? m : ab % 2;
            allowA[ab * 2 + m] = !(rs.mtr && k == 0 && l == 1);
          }
        double colA[2] = {c.pinned[w], 1.0 - c.pinned[w]};
        double A[8];
        ok = cp.draw(c.obs[w], 4, 2, pin ? colA : nullptr, allowA, interior, A);
        if (!ok) break;
        // Step B: for each value of the missing Y1 coordinate, couple with the
        // missing Y2 coordinate. LU pins its conditional law given that coordinate.
        for (int m = 0; m < 2 && ok; ++m) {
          double rows[4], mass = 0.0;
          for (int ab = 0; ab < 4; ++ab) rows[ab] = A[ab * 2 + m], mass += rows[ab];
          bool allowB[8];
          for (int ab = 0; ab < 4; ++ab)
            for (int z = 0; z < 2; ++z) {
              int i = w == 1 ? ab / 2 : z, j = w == 1 ? z : ab / 2;
              allowB[ab * 2 + z] = !(rs.mtr && i == 0 && j == 1);
            }
          int arm = 1 - w;  // missing Y2 belongs to the other arm
          bool pinned_b = c.has_ratio[arm][m];
          double colB[2] = {mass * (1.0 - c.ratio[arm][m]), mass * c.ratio[arm][m]};
          double B[8];
          ok = cp.draw(rows, 4, 2, pinned_b ? colB : nullptr, allowB, interior, B);
          if (!ok) break;
          for (int ab = 0; ab < 4; ++ab)
            for (int z = 0; z < 2; ++z) {
              int a = ab / 2, b = ab % 2;
              int u = w == 1 ? uidx(a, z, b, m) : uidx(z, a, m, b);
              blk[u] += B[ab * 2 + z];
            }
        }
      }
      if (!ok) break;
      // Experimental blocks.
      for (int w = 0; w < 2; ++w) {
        auto& blk = q.block(x, Sample::E, w);
        blk.fill(0.0);
        if (pin) {
          for (int u = 0; u < 16; ++u)
            blk[u] = c.pw[0] * q.block(x, Sample::O, 0)[u] + c.pw[1] * q.block(x, Sample::O, 1)[u];
        } else if (rs.iv) {
          // comonotone (k,l) coupling with copies i=k, j=l
          double k0 = c.e_k0, l0 = c.e_l0;
          double m00 = std::min(k0, l0), m01 = k0 - m00, m10 = l0 - m00, m11 = 1.0 - m00 - m01 - m10;
          blk[uidx(0, 0, 0, 0)] = m00, blk[uidx(0, 1, 0, 1)] = m01;
          blk[uidx(1, 0, 1, 0)] = m10, blk[uidx(1, 1, 1, 1)] = m11;
        } else {
          double p0 = w == 0 ? c.e_l0 : c.e_k0;
          blk[0] = p0, blk[15] = 1.0 - p0;
        }
      }
    }
    if (!ok) continue;
    if (constraint_violation(ct, rs, q) > 1e-6) continue;
    double num = 0.0, den = 0.0;
    for (int x = 0; x < nc; ++x)
      for (int w = 0; w < 2; ++w) {
        double f = ct.fwx(w, x, Sample::O), bn = 0.0, bd = 0.0;
        const auto& b = q.block(x, Sample::O, w);
        for (int u = 0; u < 16; ++u)
          if (u_k(u) == 0) bn += f * (u_i(u) - u_j(u)) * b[u], bd += f * b[u];
        num += bn, den += bd;
        if (separable) {
          auto& v = pts[x * 2 + w];
          v.push_back({bd, bn});
          if (v.size() > 4096) v = detail::hull(std::move(v));
        }
      }
    if (den <= 1e-12) continue;
    double v = num / den;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    ++feasible;
  }
  if (feasible == 0)
    throw error(errc::no_feasible_point, "no sampled law satisfied the restrictions",
                nlohmann::json{{"samples", samples}}.dump());
  if (separable) {
    for (auto& v : pts) v = detail::hull(std::move(v));
    hi = std::max(hi, detail::product_extreme(pts, hi, 1));
    lo = std::min(lo, detail::product_extreme(pts, lo, -1));
  }
  BoundsResult b;
  b.lower = lo;
  b.upper = hi;
  b.status = "oracle";
  b.feasible_samples = feasible;
  b.informative = is_informative(lo, hi);
  return b;
}

}  // namespace ltpi
