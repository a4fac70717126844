#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ltpi/data.hpp"
#include "ltpi/error.hpp"
#include "ltpi/result.hpp"
#include "ltpi/rng.hpp"
#include "ltpi/simplex.hpp"

namespace ltpi {

// u = (i, j, k, l) = (Y2(1), Y2(0), Y1(1), Y1(0))
constexpr int uidx(int i, int j, int k, int l) { return i * 8 + j * 4 + k * 2 + l; }
constexpr int u_i(int u) { return (u >> 3) & 1; }
constexpr int u_j(int u) { return (u >> 2) & 1; }
constexpr int u_k(int u) { return (u >> 1) & 1; }
constexpr int u_l(int u) { return u & 1; }

constexpr int block_index(int x, Sample g, int w) { return (x * 2 + static_cast<int>(g)) * 2 + w; }
constexpr int var_index(int x, Sample g, int w, int u) { return block_index(x, g, w) * 16 + u; }

struct QTable {
  int n_cells = 0;
  std::vector<std::array<double, 16>> q;  // one 16-vector per (x, g, w) block

  QTable() = default;
  explicit QTable(int cells) : n_cells(cells), q(static_cast<std::size_t>(cells) * 4) {
    for (auto& b : q) b.fill(0.0);
  }
  std::array<double, 16>& block(int x, Sample g, int w) { return q[block_index(x, g, w)]; }
  const std::array<double, 16>& block(int x, Sample g, int w) const { return q[block_index(x, g, w)]; }
};

struct SolverOptions {
  double tol = 1e-9;
  int grid = 21;                       // profiling points per free ratio
  int max_dims = 8;                    // full grid only up to this many ratios
  int starts = 32;                     // multi-starts for the local search fallback
  std::uint64_t seed = 0;
  std::size_t max_grid_points = 4096;  // full grid also capped by total size
};

struct Bilinear {
  enum class Kind { lu, pco } kind = Kind::lu;
  int x = 0;
  Sample g = Sample::O;
  int arm = 0;     // lu: which potential-outcome arm the ratio describes
  int level = 0;   // lu: conditioning value of Y1(arm)
  bool pinned = false;
  double ratio = 0.0;  // lu: data ratio when pinned
  std::string label;
};

// Linear-fractional program over q, written in q-space with constant right-hand sides.
struct Program {
  int n_cells = 0;
  int n_vars = 0;
  std::vector<double> num, den;
  std::vector<LpRow> equalities;    // sense eq
  std::vector<LpRow> inequalities;  // sense le
  std::vector<Bilinear> bilinear;
  RestrictionSet restrictions;
  std::size_t n_simplex = 0, n_containment = 0, n_mtr = 0;
  std::vector<std::array<double, 2>> pco_weights;  // f(w|x,g) per pco descriptor
};

namespace detail {

inline LpRow make_row(Sense s, double rhs, std::string label) {
  LpRow r;
  r.sense = s;
  r.rhs = rhs;
  r.label = std::move(label);
  return r;
}

inline std::string blk(int x, Sample g, int w) {
  return "w=" + std::to_string(w) + ",x=" + std::to_string(x) + ",g=" + sample_name(g);
}

// P(W=w | x, g) with a guard for empty cells
inline double pw_given(const CellTable& ct, int w, int x, Sample g) { return ct.pw(w, x, g); }

// Rows A - r*B <= 0 and r*D - C <= 0 for one pco descriptor at ratio r.
inline void pco_rows(const Program& pr, std::size_t d, double r, std::vector<LpRow>& out) {
  const auto& b = pr.bilinear[d];
  const auto& fw = pr.pco_weights[d];
  LpRow lo = make_row(Sense::le, 0.0, b.label + "[lower]");
  LpRow hi = make_row(Sense::le, 0.0, b.label + "[upper]");
  for (int w = 0; w < 2; ++w) {
    if (fw[w] == 0.0) continue;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        int v00 = var_index(b.x, b.g, w, uidx(i, j, 0, 0));
        int v10 = var_index(b.x, b.g, w, uidx(i, j, 1, 0));
        // A = P(j=1,k=0,l=0), B = P(k=0,l=0), C = P(j=1,k=1,l=0), D = P(k=1,l=0)
        lo.coef.emplace_back(v00, fw[w] * ((j == 1 ? 1.0 : 0.0) - r));
        hi.coef.emplace_back(v10, fw[w] * (r - (j == 1 ? 1.0 : 0.0)));
      }
  }
  out.push_back(std::move(lo));
  out.push_back(std::move(hi));
}

}  // namespace detail

inline Program build_program(const CellTable& ct, const RestrictionSet& rs) {
  if (rs.nsd) throw error(errc::unsupported_restriction, "nsd point-identifies the ATETS; no bounds to compute", "nsd");
  for (int x = 0; x < ct.n_cells; ++x) {
    double so = 0.0, se = 0.0;
    for (double m : ct.o[x]) so += m;
    for (double m : ct.e[x]) se += m;
    if (!(so > 0.0)) throw error(errc::empty_cell, "O cell x=" + std::to_string(x) + " is empty", "x=" + std::to_string(x) + ",g=O");
    if (!(se > 0.0)) throw error(errc::empty_cell, "E cell x=" + std::to_string(x) + " is empty", "x=" + std::to_string(x) + ",g=E");
  }
  using detail::blk;
  using detail::make_row;
  Program pr;
  pr.n_cells = ct.n_cells;
  pr.n_vars = 64 * ct.n_cells;
  pr.restrictions = rs;
  pr.num.assign(pr.n_vars, 0.0);
  pr.den.assign(pr.n_vars, 0.0);

  for (int x = 0; x < ct.n_cells; ++x)
    for (int w = 0; w < 2; ++w) {
      double f = ct.fwx(w, x, Sample::O);
      for (int u = 0; u < 16; ++u)
        if (u_k(u) == 0) {
          pr.num[var_index(x, Sample::O, w, u)] = f * (u_i(u) - u_j(u));
          pr.den[var_index(x, Sample::O, w, u)] = f;
        }
    }

  for (int x = 0; x < ct.n_cells; ++x)
    for (Sample g : {Sample::E, Sample::O})
      for (int w = 0; w < 2; ++w) {
        LpRow s = make_row(Sense::eq, 1.0, "simplex[" + blk(x, g, w) + "]");
        for (int u = 0; u < 16; ++u) s.coef.emplace_back(var_index(x, g, w, u), 1.0);
        pr.equalities.push_back(std::move(s));
        ++pr.n_simplex;

        double pw = detail::pw_given(ct, w, x, g);
        if (!(pw > 0.0)) continue;  // no data on this block
        // containment: data mass <= q-mass of the matching observed pattern
        if (g == Sample::E) {
          for (int y = 0; y < 2; ++y) {
            double p = ct.py1w(y, w, x, g) / pw;
            LpRow r = make_row(Sense::le, -p, "contain[" + blk(x, g, w) + ",y1=" + std::to_string(y) + "]");
            for (int u = 0; u < 16; ++u)
              if ((w == 0 ? u_l(u) : u_k(u)) == y) r.coef.emplace_back(var_index(x, g, w, u), -1.0);
            pr.inequalities.push_back(std::move(r));
            ++pr.n_containment;
          }
        } else {
          for (int y2 = 0; y2 < 2; ++y2)
            for (int y1 = 0; y1 < 2; ++y1) {
              double p = ct.o[x][CellTable::oi(y2, y1, w)] / pw;
              LpRow r = make_row(Sense::le, -p,
                                 "contain[" + blk(x, g, w) + ",y2=" + std::to_string(y2) + ",y1=" + std::to_string(y1) + "]");
              for (int u = 0; u < 16; ++u) {
                bool hit = w == 0 ? (u_j(u) == y2 && u_l(u) == y1) : (u_i(u) == y2 && u_k(u) == y1);
                if (hit) r.coef.emplace_back(var_index(x, g, w, u), -1.0);
              }
              pr.inequalities.push_back(std::move(r));
              ++pr.n_containment;
            }
        }
      }

  if (rs.iv)
    for (int x = 0; x < ct.n_cells; ++x)
      for (int u = 0; u < 16; ++u) {
        LpRow r = make_row(Sense::eq, 0.0, "iv[x=" + std::to_string(x) + ",u=" + std::to_string(u) + "]");
        r.coef = {{var_index(x, Sample::E, 0, u), 1.0}, {var_index(x, Sample::E, 1, u), -1.0}};
        pr.equalities.push_back(std::move(r));
      }

  if (rs.ev)
    for (int x = 0; x < ct.n_cells; ++x)
      for (int u = 0; u < 16; ++u) {
        LpRow r = make_row(Sense::eq, 0.0, "ev[x=" + std::to_string(x) + ",u=" + std::to_string(u) + "]");
        for (int w = 0; w < 2; ++w) {
          double fe = ct.pw(w, x, Sample::E), fo = ct.pw(w, x, Sample::O);
          if (fe != 0.0) r.coef.emplace_back(var_index(x, Sample::E, w, u), fe);
          if (fo != 0.0) r.coef.emplace_back(var_index(x, Sample::O, w, u), -fo);
        }
        pr.equalities.push_back(std::move(r));
      }

  if (rs.mtr)
    for (int x = 0; x < ct.n_cells; ++x)
      for (Sample g : {Sample::E, Sample::O})
        for (int w = 0; w < 2; ++w)
          for (int u = 0; u < 16; ++u)
            if ((u_k(u) == 0 && u_l(u) == 1) || (u_i(u) == 0 && u_j(u) == 1)) {
              LpRow r = make_row(Sense::eq, 0.0, "mtr[" + blk(x, g, w) + ",u=" + std::to_string(u) + "]");
              r.coef = {{var_index(x, g, w, u), 1.0}};
              pr.equalities.push_back(std::move(r));
              ++pr.n_mtr;
            }

  if (rs.sd)
    for (int x = 0; x < ct.n_cells; ++x)
      for (Sample g : {Sample::E, Sample::O})
        for (int t = 0; t < 2; ++t) {
          // P(Y_t(1)=0) <= P(Y_t(0)=0) over the w-mixture
          LpRow r = make_row(Sense::le, 0.0, "sd[t=" + std::to_string(t + 1) + ",x=" + std::to_string(x) + ",g=" + sample_name(g) + "]");
          for (int w = 0; w < 2; ++w) {
            double f = ct.pw(w, x, g);
            if (f == 0.0) continue;
            for (int u = 0; u < 16; ++u) {
              int y1v = t == 0 ? u_k(u) : u_i(u);
              int y0v = t == 0 ? u_l(u) : u_j(u);
              double c = (y1v == 0 ? f : 0.0) - (y0v == 0 ? f : 0.0);
              if (c != 0.0) r.coef.emplace_back(var_index(x, g, w, u), c);
            }
          }
          pr.inequalities.push_back(std::move(r));
        }

  if (rs.st)
    for (int x = 0; x < ct.n_cells; ++x)
      for (Sample g : {Sample::E, Sample::O})
        for (int w = 0; w < 2; ++w)
          for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
              LpRow r = make_row(Sense::eq, 0.0,
                                 "st[" + blk(x, g, w) + ",y=(" + std::to_string(a) + "," + std::to_string(b) + ")]");
              for (int u = 0; u < 16; ++u) {
                double c = (u_i(u) == a && u_j(u) == b ? 1.0 : 0.0) - (u_k(u) == a && u_l(u) == b ? 1.0 : 0.0);
                if (c != 0.0) r.coef.emplace_back(var_index(x, g, w, u), c);
              }
              pr.equalities.push_back(std::move(r));
            }

  if (rs.lu)
    for (int x = 0; x < ct.n_cells; ++x)
      for (int arm = 0; arm < 2; ++arm)
        for (int lev = 0; lev < 2; ++lev) {
          // ratio P(Y2(arm)=1 | Y1(arm)=lev) read off the arm that observes it
          Bilinear b;
          b.kind = Bilinear::Kind::lu;
          b.x = x;
          b.arm = arm;
          b.level = lev;
          double m = ct.py1w(lev, arm, x, Sample::O);
          b.pinned = m > 0.0;
          b.ratio = b.pinned ? ct.o[x][CellTable::oi(1, lev, arm)] / m : 0.0;
          b.label = "lu[arm=" + std::to_string(arm) + ",y1=" + std::to_string(lev) + ",x=" + std::to_string(x) + "]";
          pr.bilinear.push_back(b);
        }

  if (rs.pco)
    for (int x = 0; x < ct.n_cells; ++x)
      for (Sample g : {Sample::E, Sample::O}) {
        Bilinear b;
        b.kind = Bilinear::Kind::pco;
        b.x = x;
        b.g = g;
        b.label = "pco[x=" + std::to_string(x) + ",g=" + sample_name(g) + "]";
        pr.bilinear.push_back(b);
        pr.pco_weights.push_back({ct.pw(0, x, g), ct.pw(1, x, g)});
      }
  if (!rs.pco) pr.pco_weights.clear();
  return pr;
}

// Linear rows implied by data-pinned lu ratios; unpinned ratios impose nothing.
inline std::vector<LpRow> pinned_rows(const Program& pr) {
  std::vector<LpRow> out;
  for (const auto& b : pr.bilinear) {
    if (b.kind != Bilinear::Kind::lu || !b.pinned) continue;
    int w = 1 - b.arm;  // the block where Y2(arm) is latent
    LpRow r = detail::make_row(Sense::eq, 0.0, b.label);
    for (int u = 0; u < 16; ++u) {
      int y2 = b.arm == 0 ? u_j(u) : u_i(u);
      int y1 = b.arm == 0 ? u_l(u) : u_k(u);
      if (y1 != b.level) continue;
      double c = (y2 == 1 ? 1.0 : 0.0) - b.ratio;
      if (c != 0.0) r.coef.emplace_back(var_index(b.x, Sample::O, w, u), c);
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<std::size_t> profiled_dims(const Program& pr) {
  std::vector<std::size_t> d;
  for (std::size_t k = 0; k < pr.bilinear.size(); ++k)
    if (pr.bilinear[k].kind == Bilinear::Kind::pco) d.push_back(k);
  return d;
}

struct DirectionSolution {
  bool feasible = false;
  double value = 0.0;
  double t = 0.0;
  QTable q;
  std::vector<std::string> active;
  LpResult lp;
};

// Charnes-Cooper: p = t q, den'p = 1, maximize sign * num'p.
inline DirectionSolution solve_direction(const Program& pr, const std::vector<LpRow>& extra, int sign,
                                         const SolverOptions& opt) {
  const int n = pr.n_vars, tcol = n;
  LinearProgram lp;
  lp.n_vars = n + 1;
  lp.objective.assign(n + 1, 0.0);
  for (int v = 0; v < n; ++v) lp.objective[v] = sign * pr.num[v];
  auto homog = [&](const LpRow& r) {
    LpRow h = r;
    if (r.rhs != 0.0) h.coef.emplace_back(tcol, -r.rhs);
    h.rhs = 0.0;
    lp.rows.push_back(std::move(h));
  };
  for (const auto& r : pr.equalities) homog(r);
  for (const auto& r : pr.inequalities) homog(r);
  for (const auto& r : extra) homog(r);
  LpRow norm = detail::make_row(Sense::eq, 1.0, "normalization");
  for (int v = 0; v < n; ++v)
    if (pr.den[v] != 0.0) norm.coef.emplace_back(v, pr.den[v]);
  lp.rows.push_back(std::move(norm));

  LpOptions lo;
  lo.tol = opt.tol;
  DirectionSolution s;
  s.lp = lp_solve(lp, lo);
  if (s.lp.status != LpStatus::optimal) return s;
  // guard against a numerically broken vertex
  double worst = 0.0;
  for (const auto& r : lp.rows) {
    double v = -r.rhs;
    for (auto& [j, c] : r.coef) v += c * s.lp.primal[j];
    worst = std::max(worst, r.sense == Sense::eq ? std::abs(v) : r.sense == Sense::le ? v : -v);
  }
  if (worst > 1e-7)
    throw error(errc::numerical_breakdown, "simplex vertex violates its rows by " + std::to_string(worst), "residual");
  s.feasible = true;
  s.t = s.lp.primal[tcol];
  s.value = sign * s.lp.optimum;
  s.q = QTable(pr.n_cells);
  if (s.t > 0.0)
    for (int v = 0; v < n; ++v) s.q.q[v / 16][v % 16] = s.lp.primal[v] / s.t;
  s.active = active_rows(lp, s.lp.primal, 1e-8);
  return s;
}

struct SharpSetSolution {
  BoundsResult bounds;
  DirectionSolution upper, lower;
  std::vector<double> upper_ratios, lower_ratios;  // profiled ratios at the optima
};

namespace detail {

inline std::string certificate(const LpResult& r) {
  nlohmann::json j{{"phase1_residual", r.phase1_residual}, {"rows", r.infeasible_rows}};
  return j.dump();
}

}  // namespace detail

inline SharpSetSolution solve_sharp_set(const Program& pr, const SolverOptions& opt = {}) {
  if (opt.grid < 2) throw error(errc::invalid_argument, "profiling grid needs at least 2 points");
  if (!(opt.tol > 0.0)) throw error(errc::invalid_argument, "tolerance must be positive");
  const std::vector<LpRow> base = pinned_rows(pr);
  const auto dims = profiled_dims(pr);
  SharpSetSolution out;

  // Feasibility of everything except the profiled ratios.
  {
    DirectionSolution probe = solve_direction(pr, base, 1, opt);
    if (!probe.feasible) {
      if (probe.lp.status == LpStatus::infeasible)
        throw error(errc::infeasible, "restrictions contradict the data", detail::certificate(probe.lp));
      throw error(errc::numerical_breakdown, "unbounded transformed program");
    }
    if (dims.empty()) {
      out.upper = std::move(probe);
      out.lower = solve_direction(pr, base, -1, opt);
    }
  }

  std::size_t points = 0;
  if (!dims.empty()) {
    const std::size_t d = dims.size();
    std::vector<double> grid(opt.grid);
    for (int k = 0; k < opt.grid; ++k) grid[k] = static_cast<double>(k) / (opt.grid - 1);
    std::map<std::vector<int>, std::pair<DirectionSolution, DirectionSolution>> cache;
    auto eval = [&](const std::vector<int>& idx) -> const std::pair<DirectionSolution, DirectionSolution>& {
      auto it = cache.find(idx);
      if (it != cache.end()) return it->second;
      std::vector<LpRow> rows = base;
      for (std::size_t a = 0; a < d; ++a) detail::pco_rows(pr, dims[a], grid[idx[a]], rows);
      auto up = solve_direction(pr, rows, 1, opt);
      auto dn = up.feasible ? solve_direction(pr, rows, -1, opt) : DirectionSolution{};
      ++points;
      return cache.emplace(idx, std::make_pair(std::move(up), std::move(dn))).first->second;
    };
    auto take = [&](const std::vector<int>& idx) {
      const auto& pr2 = eval(idx);
      if (!pr2.first.feasible) return;
      auto ratios = [&] {
        std::vector<double> r;
        for (int i : idx) r.push_back(grid[i]);
        return r;
      };
      if (!out.upper.feasible || pr2.first.value > out.upper.value) out.upper = pr2.first, out.upper_ratios = ratios();
      if (!out.lower.feasible || pr2.second.value < out.lower.value) out.lower = pr2.second, out.lower_ratios = ratios();
    };

    double total = std::pow(static_cast<double>(opt.grid), static_cast<double>(d));
    if (static_cast<int>(d) <= opt.max_dims && total <= static_cast<double>(opt.max_grid_points)) {
      std::vector<int> idx(d, 0);
      for (;;) {
        take(idx);
        std::size_t a = 0;
        while (a < d && ++idx[a] == opt.grid) idx[a++] = 0;
        if (a == d) break;
      }
    } else {
      // Coordinate search over grid indices, from several deterministic starts.
      for (int sign : {1, -1}) {
        for (int s = 0; s < opt.starts; ++s) {
          std::vector<int> idx(d, opt.grid / 2);
          if (s > 0) {
            counter_rng rng(derive_seed(opt.seed, static_cast<std::uint64_t>(s), sign > 0 ? 1 : 2));
            for (auto& v : idx) v = static_cast<int>(rng.next() % static_cast<std::uint64_t>(opt.grid));
          }
          auto score = [&](const std::vector<int>& i) {
            const auto& e = eval(i);
            take(i);
            if (!e.first.feasible) return -std::numeric_limits<double>::infinity();
            return sign > 0 ? e.first.value : -e.second.value;
          };
          double cur = score(idx);
          for (bool improved = true; improved;) {
            improved = false;
            for (std::size_t a = 0; a < d; ++a)
              for (int g = 0; g < opt.grid; ++g) {
                if (g == idx[a]) continue;
                auto cand = idx;
                cand[a] = g;
                double v = score(cand);
                if (v > cur + 1e-12) cur = v, idx = cand, improved = true;
              }
          }
        }
      }
    }
    if (!out.upper.feasible)
      throw error(errc::infeasible, "no profiled ratio on the grid is feasible",
                  nlohmann::json{{"profiling_points", points}}.dump());
  }

  BoundsResult& b = out.bounds;
  b.upper = out.upper.value;
  b.lower = out.lower.value;
  b.profiling_points_used = points;
  b.status = "optimal";
  double dmin = std::min(out.upper.t > 0 ? 1.0 / out.upper.t : 0.0, out.lower.t > 0 ? 1.0 / out.lower.t : 0.0);
  if (dmin < 1e-9) b.status = "denominator_vanishes";
  b.informative = is_informative(b.lower, b.upper);
  std::set<std::string> act(out.upper.active.begin(), out.upper.active.end());
  act.insert(out.lower.active.begin(), out.lower.active.end());
  b.binding_constraints.assign(act.begin(), act.end());
  b.components["survivor_mass_at_upper"] = out.upper.t > 0 ? 1.0 / out.upper.t : 0.0;
  b.components["survivor_mass_at_lower"] = out.lower.t > 0 ? 1.0 / out.lower.t : 0.0;
  return out;
}

inline BoundsResult solve_bounds(const Program& pr, const SolverOptions& opt = {}) {
  return solve_sharp_set(pr, opt).bounds;
}

// Objective evaluated directly on a candidate q.
inline double phi(const CellTable& ct, const QTable& q) {
  double num = 0.0, den = 0.0;
  for (int x = 0; x < ct.n_cells; ++x)
    for (int w = 0; w < 2; ++w) {
      double f = ct.fwx(w, x, Sample::O);
      const auto& b = q.block(x, Sample::O, w);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          for (int l = 0; l < 2; ++l) {
            double m = b[uidx(i, j, 0, l)] * f;
            num += (i - j) * m;
            den += m;
          }
    }
  return num / den;
}

// Largest violation of the sharp-set constraints by q, written from the
// definitions rather than from Program rows.
inline double constraint_violation(const CellTable& ct, const RestrictionSet& rs, const QTable& q) {
  double v = 0.0;
  auto bump = [&v](double x) { v = std::max(v, x); };
  auto marg = [](const std::array<double, 16>& b, auto pred) {
    double s = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k)
          for (int l = 0; l < 2; ++l)
            if (pred(i, j, k, l)) s += b[uidx(i, j, k, l)];
    return s;
  };
  for (int x = 0; x < ct.n_cells; ++x)
    for (Sample g : {Sample::E, Sample::O})
      for (int w = 0; w < 2; ++w) {
        const auto& b = q.block(x, g, w);
        double s = 0.0;
        for (double m : b) bump(-m), s += m;
        bump(std::abs(s - 1.0));
        double pw = ct.pw(w, x, g);
        if (pw > 0.0) {
          if (g == Sample::E) {
            for (int y = 0; y < 2; ++y) {
              double have = marg(b, [&](int, int, int k, int l) { return (w == 0 ? l : k) == y; });
              bump(ct.e[x][CellTable::ei(y, w)] / pw - have);
            }
          } else {
            for (int y2 = 0; y2 < 2; ++y2)
              for (int y1 = 0; y1 < 2; ++y1) {
                double have = marg(b, [&](int i, int j, int k, int l) {
                  return w == 0 ? (j == y2 && l == y1) : (i == y2 && k == y1);
                });
                bump(ct.o[x][CellTable::oi(y2, y1, w)] / pw - have);
              }
          }
        }
        if (rs.mtr)
          bump(marg(b, [](int i, int j, int k, int l) { return (k == 0 && l == 1) || (i == 0 && j == 1); }));
        if (rs.st)
          for (int a = 0; a < 2; ++a)
            for (int c = 0; c < 2; ++c)
              bump(std::abs(marg(b, [&](int i, int j, int, int) { return i == a && j == c; }) -
                            marg(b, [&](int, int, int k, int l) { return k == a && l == c; })));
      }
  for (int x = 0; x < ct.n_cells; ++x) {
    if (rs.iv)
      for (int u = 0; u < 16; ++u) bump(std::abs(q.block(x, Sample::E, 0)[u] - q.block(x, Sample::E, 1)[u]));
    if (rs.ev)
      for (int u = 0; u < 16; ++u) {
        double me = 0.0, mo = 0.0;
        for (int w = 0; w < 2; ++w) {
          me += ct.pw(w, x, Sample::E) * q.block(x, Sample::E, w)[u];
          mo += ct.pw(w, x, Sample::O) * q.block(x, Sample::O, w)[u];
        }
        bump(std::abs(me - mo));
      }
    for (Sample g : {Sample::E, Sample::O}) {
      std::array<double, 16> mix{};
      for (int w = 0; w < 2; ++w)
        for (int u = 0; u < 16; ++u) mix[u] += ct.pw(w, x, g) * q.block(x, g, w)[u];
      if (rs.sd) {
        bump(marg(mix, [](int i, int, int, int) { return i == 0; }) - marg(mix, [](int, int j, int, int) { return j == 0; }));
        bump(marg(mix, [](int, int, int k, int) { return k == 0; }) - marg(mix, [](int, int, int, int l) { return l == 0; }));
      }
      if (rs.pco) {
        double a = marg(mix, [](int, int j, int k, int l) { return j == 1 && k == 0 && l == 0; });
        double bb = marg(mix, [](int, int, int k, int l) { return k == 0 && l == 0; });
        double c = marg(mix, [](int, int j, int k, int l) { return j == 1 && k == 1 && l == 0; });
        double d = marg(mix, [](int, int, int k, int l) { return k == 1 && l == 0; });
        bump(a * d - c * bb);
      }
    }
    if (rs.lu) {
      // Y2(0) | Y1(0) among the treated matches the untreated data, and symmetrically.
      for (int lev = 0; lev < 2; ++lev) {
        double m0 = ct.py1w(lev, 0, x, Sample::O);
        if (m0 > 0.0) {
          double r = ct.o[x][CellTable::oi(1, lev, 0)] / m0;
          const auto& b = q.block(x, Sample::O, 1);
          double num = marg(b, [&](int, int j, int, int l) { return j == 1 && l == lev; });
          double den = marg(b, [&](int, int, int, int l) { return l == lev; });
          bump(std::abs(num - r * den));
        }
        double m1 = ct.py1w(lev, 1, x, Sample::O);
        if (m1 > 0.0) {
          double s = ct.o[x][CellTable::oi(1, lev, 1)] / m1;
          const auto& b = q.block(x, Sample::O, 0);
          double num = marg(b, [&](int i, int, int k, int) { return i == 1 && k == lev; });
          double den = marg(b, [&](int, int, int k, int) { return k == lev; });
          bump(std::abs(num - s * den));
        }
      }
    }
  }
  return v;
}

inline nlohmann::json to_json(const QTable& q) {
  nlohmann::json blocks = nlohmann::json::array();
  for (int x = 0; x < q.n_cells; ++x)
    for (Sample g : {Sample::E, Sample::O})
      for (int w = 0; w < 2; ++w) {
        const auto& b = q.block(x, g, w);
        blocks.push_back({{"x", x}, {"g", sample_name(g)}, {"w", w}, {"q", std::vector<double>(b.begin(), b.end())}});
      }
  return blocks;
}

}  // namespace ltpi
