#pragma once

// Shared generators and independent reference formulas for the test suite.

#include <array>
#include <random>
#include <vector>

#include "ltpi/data.hpp"
#include "ltpi/simulate.hpp"

namespace fx {

using ltpi::CellTable;
using ltpi::DiscreteDgp;

template <std::size_t N>
std::array<double, N> dirichlet(std::mt19937_64& gen, double floor = 0.0) {
  std::gamma_distribution<double> ga(1.0, 1.0);
  std::array<double, N> a{};
  double s = 0.0;
  for (auto& v : a) v = ga(gen) + floor, s += v;
  for (auto& v : a) v /= s;
  return a;
}

inline std::vector<double> simplex(std::mt19937_64& gen, int n, double floor = 0.05) {
  std::gamma_distribution<double> ga(1.0, 1.0);
  std::vector<double> v(n);
  double s = 0.0;
  for (auto& a : v) a = ga(gen) + floor, s += a;
  for (auto& a : v) a /= s;
  return v;
}

// Random table with every pattern present.
inline CellTable random_table(std::mt19937_64& gen, int n_cells = 1) {
  CellTable ct;
  ct.n_cells = n_cells;
  ct.o.resize(n_cells);
  ct.e.resize(n_cells);
  ct.n_o.assign(n_cells, 0);
  ct.n_e.assign(n_cells, 0);
  for (int x = 0; x < n_cells; ++x) {
    ct.o[x] = dirichlet<8>(gen, 0.05);
    ct.e[x] = dirichlet<4>(gen, 0.05);
  }
  ct.fx_o = simplex(gen, n_cells);
  ct.fx_e = simplex(gen, n_cells);
  std::uniform_real_distribution<double> U(0.2, 0.8);
  ct.p_o = U(gen);
  return ct;
}

// Sharp interval for the ATETS using only the observational sample:
// treated survivors pick Y2(0) freely; untreated units pick Y1(1), Y2(1).
struct Interval {
  double lo, hi;
};

inline Interval joint_worstcase(const CellTable& ct) {
  double p110 = 0.0, q = 0.0, a0 = 0.0, a1 = 0.0;
  for (int x = 0; x < ct.n_cells; ++x) {
    const auto& o = ct.o[x];
    double f = ct.fx_o[x];
    p110 += f * o[CellTable::oi(1, 0, 1)];
    q += f * (o[CellTable::oi(0, 0, 1)] + o[CellTable::oi(1, 0, 1)]);
    a0 += f * (o[CellTable::oi(0, 0, 0)] + o[CellTable::oi(0, 1, 0)]);
    a1 += f * (o[CellTable::oi(1, 0, 0)] + o[CellTable::oi(1, 1, 0)]);
  }
  return {(p110 - q - a1) / (q + a1), (p110 + a0) / (q + a0)};
}

// Sharp ATETS interval under IV+EV+LU, written blockwise: inside each
// observational (x, w) block the margins of Y2(0) and Y1(1) are identified
// and their coupling is free, so copula bounds apply block by block.
inline Interval blockwise_copula(const CellTable& ct) {
  double num_t1 = 0.0, den = 0.0, lo2 = 0.0, hi2 = 0.0;
  for (int x = 0; x < ct.n_cells; ++x) {
    const auto& o = ct.o[x];
    const auto& e = ct.e[x];
    double f = ct.fx_o[x];
    double pw[2] = {0.0, 0.0};
    for (int k = 0; k < 8; ++k) pw[k % 2] += o[k];
    auto obs = [&](int y2, int y1, int w) { return o[CellTable::oi(y2, y1, w)] / pw[w]; };
    double e_l0 = e[CellTable::ei(0, 0)] / (e[CellTable::ei(0, 0)] + e[CellTable::ei(1, 0)]);
    double e_k0 = e[CellTable::ei(0, 1)] / (e[CellTable::ei(0, 1)] + e[CellTable::ei(1, 1)]);
    // untreated block: Y2(0) seen, Y1(1) margin from E minus the treated part
    double a0 = obs(1, 0, 0) + obs(1, 1, 0);
    double k0_w1 = obs(0, 0, 1) + obs(1, 0, 1);
    double k0_w0 = (e_k0 - pw[1] * k0_w1) / pw[0];
    // treated block: Y1(1) seen, Y2(0) via Y1(0) margin and the untreated regression
    double l0_w0 = obs(0, 0, 0) + obs(1, 0, 0);
    double l0_w1 = (e_l0 - pw[0] * l0_w0) / pw[1];
    double r0 = obs(1, 0, 0) / l0_w0, r1 = obs(1, 1, 0) / (1.0 - l0_w0);
    double a1 = r0 * l0_w1 + r1 * (1.0 - l0_w1);
    double s0 = obs(1, 0, 1) / k0_w1;  // E[Y2(1) | Y1(1)=0]
    num_t1 += f * s0 * e_k0;
    den += f * e_k0;
    double A[2] = {a0, a1}, K[2] = {k0_w0, k0_w1};
    for (int w = 0; w < 2; ++w) {
      lo2 += f * pw[w] * std::max(A[w] + K[w] - 1.0, 0.0);
      hi2 += f * pw[w] * std::min(A[w], K[w]);
    }
  }
  double t1 = num_t1 / den;
  return {t1 - hi2 / den, t1 - lo2 / den};
}

// Finite DGP with latent unconfoundedness in both arms, a randomized
// experiment and a common law of u in both samples.
//   W depends on Y1(0) only; Y2(1) depends on Y1(1) only.
// With mtr set, both outcomes are also monotone in treatment.
inline DiscreteDgp lu_dgp(std::mt19937_64& gen, int n_cells = 1, bool mtr = false) {
  std::uniform_real_distribution<double> U(0.1, 0.9);
  DiscreteDgp d;
  d.n_cells = n_cells;
  d.px_o = simplex(gen, n_cells);
  d.px_e = d.px_o;
  d.p_o = U(gen);
  d.pu.resize(n_cells);
  d.sel.resize(n_cells);
  d.pw_e.resize(n_cells);
  for (int x = 0; x < n_cells; ++x) {
    auto kl = dirichlet<4>(gen, 0.1);
    if (mtr) {
      // no unit with Y1(1)=0, Y1(0)=1
      double r = 1.0 - kl[1];
      kl[1] = 0.0;
      for (auto& v : kl) v /= r;
    }
    double pi_k[2] = {U(gen), U(gen)};
    double sel_l[2] = {U(gen), U(gen)};
    for (int k = 0; k < 2; ++k)
      for (int l = 0; l < 2; ++l)
        for (int i = 0; i < 2; ++i) {
          double pj = mtr && i == 0 ? 0.0 : U(gen);
          for (int j = 0; j < 2; ++j) {
            double p = kl[k * 2 + l] * (i ? pi_k[k] : 1.0 - pi_k[k]) * (j ? pj : 1.0 - pj);
            d.pu[x][ltpi::uidx(i, j, k, l)] = p;
          }
        }
    for (int u = 0; u < 16; ++u) d.sel[x][u] = sel_l[ltpi::u_l(u)];
    d.pw_e[x] = U(gen);
  }
  return d;
}

// Finite DGP with Y2(.) independent of Y1(.) and W depending on Y1 only:
// no state dependence plus latent unconfoundedness.
inline DiscreteDgp nsd_dgp(std::mt19937_64& gen, int n_cells = 1) {
  std::uniform_real_distribution<double> U(0.1, 0.9);
  DiscreteDgp d = lu_dgp(gen, n_cells);
  for (int x = 0; x < n_cells; ++x) {
    auto ij = dirichlet<4>(gen, 0.1);
    auto kl = dirichlet<4>(gen, 0.1);
    for (int u = 0; u < 16; ++u)
      d.pu[x][u] = ij[ltpi::u_i(u) * 2 + ltpi::u_j(u)] * kl[ltpi::u_k(u) * 2 + ltpi::u_l(u)];
    double s[4] = {U(gen), U(gen), U(gen), U(gen)};
    for (int u = 0; u < 16; ++u) d.sel[x][u] = s[ltpi::u_k(u) * 2 + ltpi::u_l(u)];
  }
  return d;
}

// Row-level draw from a cell table; O rows get an instrument uniform on {0..nv-1} when nv > 0.
inline ltpi::CombinedDataset sample_rows(const CellTable& ct, std::size_t n_o, std::size_t n_e, std::mt19937_64& gen,
                                         int nv = 0) {
  ltpi::CombinedDataset ds;
  ds.n_cells = ct.n_cells;
  std::discrete_distribution<int> xo(ct.fx_o.begin(), ct.fx_o.end()), xe(ct.fx_e.begin(), ct.fx_e.end());
  for (std::size_t i = 0; i < n_o + n_e; ++i) {
    ltpi::Observation ob;
    if (i < n_o) {
      ob.g = ltpi::Sample::O;
      ob.x = xo(gen);
      std::discrete_distribution<int> c(ct.o[ob.x].begin(), ct.o[ob.x].end());
      int k = c(gen);
      ob.y2 = k / 4, ob.y1 = (k / 2) % 2, ob.w = k % 2;
      if (nv > 0) ob.v = std::uniform_int_distribution<int>(0, nv - 1)(gen);
    } else {
      ob.g = ltpi::Sample::E;
      ob.x = xe(gen);
      std::discrete_distribution<int> c(ct.e[ob.x].begin(), ct.e[ob.x].end());
      int k = c(gen);
      ob.y1 = k / 2, ob.w = k % 2;
    }
    ds.observations.push_back(ob);
  }
  ds.n_o = n_o, ds.n_e = n_e;
  return ds;
}

}  // namespace fx
