#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <exception>
#include <numeric>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "ltpi/data.hpp"
#include "ltpi/error.hpp"
#include "ltpi/estimands.hpp"
#include "ltpi/result.hpp"
#include "ltpi/rng.hpp"

namespace ltpi {

// Plug-in nuisances for the no-state-dependence ATETS. Index order [w][y1][x]
// or [w][x]; g-indexed pieces use Sample as 0/1.
struct NuisanceTables {
  int n_cells = 0;
  std::array<std::array<std::vector<double>, 2>, 2> mu;       // E[Y2 | W=w, Y1=y1, x, O]
  std::array<std::vector<double>, 2> mubar;                   // E[mu_w(Y1,x) | W=w, x, E]
  std::array<std::array<std::vector<double>, 2>, 2> pg_o;     // P(G=O | Y1=y1, W=w, x)
  std::array<std::vector<double>, 2> pw1;                     // P(W=1 | x, G=g)
  std::vector<double> pg_o_x;                                 // P(G=O | x)
  double p_o = 0.5;                                           // P(G=O)
  std::vector<std::string> clipped;                           // clip events

  void resize(int nc) {
    n_cells = nc;
    for (auto& a : mu)
      for (auto& b : a) b.assign(nc, 0.0);
    for (auto& a : pg_o)
      for (auto& b : a) b.assign(nc, 0.5);
    for (auto& a : mubar) a.assign(nc, 0.0);
    for (auto& a : pw1) a.assign(nc, 0.5);
    pg_o_x.assign(nc, 0.5);
  }
};

struct DmlResult {
  double tau_hat = 0.0;
  double se = 0.0;
  double ci_lo = 0.0, ci_hi = 0.0;
  double alpha = 0.05;
  int k = 0;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::vector<double> fold_estimates;
  std::vector<std::string> warnings;
};

constexpr double kOverlapEps = 0.01;

namespace detail {

inline double clip(double p, const std::string& what, std::vector<std::string>& log) {
  if (p < kOverlapEps || p > 1.0 - kOverlapEps) {
    double c = std::clamp(p, kOverlapEps, 1.0 - kOverlapEps);
    log.push_back(what + " clipped from " + std::to_string(p) + " to " + std::to_string(c));
    return c;
  }
  return p;
}

// Cell masses on the pooled scale: o[x][oi], e[x][ei].
struct PooledCells {
  int nc = 0;
  std::vector<std::array<double, 8>> o;
  std::vector<std::array<double, 4>> e;
};

inline NuisanceTables nuisances_from(const PooledCells& pc, const std::string& where) {
  NuisanceTables nt;
  nt.resize(pc.nc);
  auto empty = [&](const std::string& cell) {
    throw error(errc::empty_cell, "no observations in " + cell + where + "; try fewer folds", cell + where);
  };
  double mo = 0.0, me = 0.0;
  for (int x = 0; x < pc.nc; ++x) {
    for (double v : pc.o[x]) mo += v;
    for (double v : pc.e[x]) me += v;
  }
  if (!(mo > 0.0)) empty("sample g=O");
  if (!(me > 0.0)) empty("sample g=E");
  nt.p_o = clip(mo / (mo + me), "P(G=O)", nt.clipped);
  for (int x = 0; x < pc.nc; ++x) {
    const std::string xs = std::to_string(x);
    double ox = 0.0, ex = 0.0, ow[2] = {0, 0}, ew[2] = {0, 0}, oyw[2][2] = {{0, 0}, {0, 0}};
    for (int y2 = 0; y2 < 2; ++y2)
      for (int y1 = 0; y1 < 2; ++y1)
        for (int w = 0; w < 2; ++w) {
          double m = pc.o[x][CellTable::oi(y2, y1, w)];
          ox += m, ow[w] += m, oyw[y1][w] += m;
        }
    for (int y1 = 0; y1 < 2; ++y1)
      for (int w = 0; w < 2; ++w) ex += pc.e[x][CellTable::ei(y1, w)], ew[w] += pc.e[x][CellTable::ei(y1, w)];
    for (int w = 0; w < 2; ++w) {
      if (!(ow[w] > 0.0)) empty("cell (w=" + std::to_string(w) + ", x=" + xs + ", g=O)");
      if (!(ew[w] > 0.0)) empty("cell (w=" + std::to_string(w) + ", x=" + xs + ", g=E)");
    }
    nt.pg_o_x[x] = clip(ox / (ox + ex), "P(G=O|x=" + xs + ")", nt.clipped);
    nt.pw1[0][x] = clip(ew[1] / ex, "P(W=1|x=" + xs + ",g=E)", nt.clipped);
    nt.pw1[1][x] = clip(ow[1] / ox, "P(W=1|x=" + xs + ",g=O)", nt.clipped);
    for (int w = 0; w < 2; ++w) {
      double mb = 0.0;
      for (int y1 = 0; y1 < 2; ++y1) {
        const std::string cell = "(y1=" + std::to_string(y1) + ", w=" + std::to_string(w) + ", x=" + xs;
        double ec = pc.e[x][CellTable::ei(y1, w)];
        if (oyw[y1][w] > 0.0) {
          nt.mu[w][y1][x] = pc.o[x][CellTable::oi(1, y1, w)] / oyw[y1][w];
        } else if (ec > 0.0) {
          empty("cell " + cell + ", g=O)");
        }
        nt.pg_o[w][y1][x] = clip(oyw[y1][w] / (oyw[y1][w] + ec), "P(G=O|" + cell.substr(1) + ")", nt.clipped);
        mb += ec / ew[w] * nt.mu[w][y1][x];
      }
      nt.mubar[w][x] = mb;
    }
  }
  return nt;
}

// P(Y1=y1|w,x,E) / P(Y1=y1|w,x,O) written through the stored propensities.
inline double density_ratio(const NuisanceTables& nt, int y1, int w, int x) {
  double pgo = nt.pg_o[w][y1][x];
  double pwo = w ? nt.pw1[1][x] : 1.0 - nt.pw1[1][x];
  double pwe = w ? nt.pw1[0][x] : 1.0 - nt.pw1[0][x];
  double qo = nt.pg_o_x[x] * pwo, qe = (1.0 - nt.pg_o_x[x]) * pwe;  // P(G, W=w | x) up to P(x)
  return (1.0 - pgo) / pgo * qo / qe;
}

}  // namespace detail

// Influence function split as psi = a(obs) - b(obs) * tau.
struct EifParts {
  double a = 0.0, b = 0.0;
};

inline EifParts eif_parts(const Observation& ob, const NuisanceTables& nt) {
  const int x = ob.x, w = ob.w, y1 = ob.y1;
  if (x < 0 || x >= nt.n_cells) throw error(errc::invalid_argument, "covariate cell out of range");
  const double sgn = w ? 1.0 : -1.0;
  EifParts r;
  if (ob.g == Sample::O) {
    if (!ob.y2) throw error(errc::invalid_argument, "observational row without y2");
    double pwo = w ? nt.pw1[1][x] : 1.0 - nt.pw1[1][x];
    double resid = *ob.y2 - nt.mu[w][y1][x];
    r.a = (sgn * resid * detail::density_ratio(nt, y1, w, x) / pwo + nt.mubar[1][x] - nt.mubar[0][x]) / nt.p_o;
    r.b = 1.0 / nt.p_o;
  } else {
    double pwe = w ? nt.pw1[0][x] : 1.0 - nt.pw1[0][x];
    double scale = nt.pg_o_x[x] / (nt.p_o * (1.0 - nt.pg_o_x[x]));
    r.a = scale * sgn * (nt.mu[w][y1][x] - nt.mubar[w][x]) / pwe;
  }
  return r;
}

inline double eif_value(const Observation& ob, const NuisanceTables& nt, double tau) {
  auto p = eif_parts(ob, nt);
  return p.a - p.b * tau;
}

// Exact nuisances of a population table.
inline NuisanceTables fit_nuisances(const CellTable& ct) {
  detail::PooledCells pc;
  pc.nc = ct.n_cells;
  pc.o.resize(pc.nc);
  pc.e.resize(pc.nc);
  for (int x = 0; x < pc.nc; ++x) {
    for (int k = 0; k < 8; ++k) pc.o[x][k] = ct.p_o * ct.fx_o[x] * ct.o[x][k];
    for (int k = 0; k < 4; ++k) pc.e[x][k] = (1.0 - ct.p_o) * ct.fx_e[x] * ct.e[x][k];
  }
  return detail::nuisances_from(pc, "");
}

inline NuisanceTables fit_nuisances(const CombinedDataset& ds, const std::vector<std::size_t>& rows,
                                    const std::string& where = "") {
  detail::PooledCells pc;
  pc.nc = ds.n_cells;
  pc.o.assign(pc.nc, {});
  pc.e.assign(pc.nc, {});
  for (auto i : rows) {
    const auto& ob = ds.observations[i];
    if (ob.x < 0 || ob.x >= pc.nc) throw error(errc::invalid_argument, "covariate cell out of range");
    if (ob.g == Sample::O)
      pc.o[ob.x][CellTable::oi(ob.y2.value_or(0), ob.y1, ob.w)] += 1.0;
    else
      pc.e[ob.x][CellTable::ei(ob.y1, ob.w)] += 1.0;
  }
  return detail::nuisances_from(pc, where);
}

// E[psi] under the population law of a table, by exact summation.
inline double population_mean_eif(const CellTable& ct, const NuisanceTables& nt, double tau) {
  double s = 0.0;
  for (int x = 0; x < ct.n_cells; ++x) {
    Observation ob;
    ob.x = x;
    ob.g = Sample::O;
    for (int k = 0; k < 8; ++k) {
      double m = ct.p_o * ct.fx_o[x] * ct.o[x][k];
      if (m == 0.0) continue;
      ob.y2 = k / 4, ob.y1 = (k / 2) % 2, ob.w = k % 2;
      s += m * eif_value(ob, nt, tau);
    }
    ob.g = Sample::E;
    ob.y2.reset();
    for (int k = 0; k < 4; ++k) {
      double m = (1.0 - ct.p_o) * ct.fx_e[x] * ct.e[x][k];
      if (m == 0.0) continue;
      ob.y1 = k / 2, ob.w = k % 2;
      s += m * eif_value(ob, nt, tau);
    }
  }
  return s;
}

// The estimating equation solved on the population table as a single fold.
inline double dml_population(const CellTable& ct) {
  auto nt = fit_nuisances(ct);
  return population_mean_eif(ct, nt, 0.0) / (ct.p_o / nt.p_o);
}

inline std::vector<int> fold_assignment(std::size_t n, int k, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  counter_rng g(derive_seed(seed, 0, 5));
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[g.next() % i]);
  std::vector<int> fold(n);
  for (std::size_t r = 0; r < n; ++r) fold[perm[r]] = static_cast<int>(r % static_cast<std::size_t>(k));
  return fold;
}

inline DmlResult dml_estimate(const CombinedDataset& ds, int k, double alpha, std::uint64_t seed) {
  const std::size_t n = ds.observations.size();
  if (n == 0) throw error(errc::empty_input, "no data rows");
  if (k < 2) throw error(errc::invalid_argument, "need at least two folds");
  if (n < 10 * static_cast<std::size_t>(k)) throw error(errc::invalid_argument, "need n >= 10 k");
  if (!(alpha > 0.0 && alpha < 1.0)) throw error(errc::invalid_argument, "alpha must lie in (0,1)");
  auto fold = fold_assignment(n, k, seed);
  std::vector<std::vector<std::size_t>> members(k), complement(k);
  for (std::size_t i = 0; i < n; ++i)
    for (int l = 0; l < k; ++l) (fold[i] == l ? members : complement)[l].push_back(i);

  std::vector<std::vector<EifParts>> parts(k);
  std::vector<std::vector<std::string>> logs(k);
  std::vector<std::exception_ptr> fail(k);
  parallel_for(static_cast<std::size_t>(k), [&](std::size_t l) {
    try {
      auto nt = fit_nuisances(ds, complement[l], " (fold " + std::to_string(l) + ")");
      for (auto& c : nt.clipped) logs[l].push_back("fold " + std::to_string(l) + ": " + c);
      for (auto i : members[l]) parts[l].push_back(eif_parts(ds.observations[i], nt));
    } catch (...) {
      fail[l] = std::current_exception();
    }
  });
  for (auto& f : fail)
    if (f) std::rethrow_exception(f);

  DmlResult r;
  r.k = k, r.alpha = alpha, r.seed = seed, r.n = n;
  double sa = 0.0, sb = 0.0;
  for (int l = 0; l < k; ++l) {
    double a = 0.0, b = 0.0;
    for (const auto& p : parts[l]) a += p.a, b += p.b;
    double m = static_cast<double>(parts[l].size());
    r.fold_estimates.push_back(a / b);
    sa += a / m, sb += b / m;
  }
  r.tau_hat = sa / sb;
  double u = 0.0;
  for (int l = 0; l < k; ++l) {
    double s2 = 0.0;
    for (const auto& p : parts[l]) {
      double psi = p.a - p.b * r.tau_hat;
      s2 += psi * psi;
    }
    u += s2 / static_cast<double>(parts[l].size()) / k;
  }
  r.se = std::sqrt(u / static_cast<double>(n));
  double z = boost::math::quantile(boost::math::normal(), 1.0 - alpha / 2.0);
  r.ci_lo = r.tau_hat - z * r.se;
  r.ci_hi = r.tau_hat + z * r.se;
  for (auto& v : logs)
    for (auto& s : v) r.warnings.push_back(std::move(s));
  return r;
}

inline nlohmann::json to_json(const DmlResult& r) {
  return {{"tau_hat", r.tau_hat}, {"se", r.se},     {"ci", {r.ci_lo, r.ci_hi}}, {"alpha", r.alpha},
          {"folds", r.k},         {"seed", r.seed}, {"n", r.n},                 {"fold_estimates", r.fold_estimates},
          {"warnings", r.warnings}};
}

}  // namespace ltpi
