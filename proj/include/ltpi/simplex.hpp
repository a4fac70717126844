#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "ltpi/error.hpp"

namespace ltpi {

enum class Sense { le, eq, ge };

struct LpRow {
  std::vector<std::pair<int, double>> coef;  // sparse (column, value)
  Sense sense = Sense::le;
  double rhs = 0.0;
  std::string label;
};

// maximize c'x subject to rows, x >= 0
struct LinearProgram {
  int n_vars = 0;
  std::vector<double> objective;
  std::vector<LpRow> rows;
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
  LpStatus status = LpStatus::optimal;
  double optimum = 0.0;
  std::vector<double> primal;
  double phase1_residual = 0.0;
  std::vector<std::string> infeasible_rows;  // rows whose artificials stay positive
  std::size_t iterations = 0;
};

struct LpOptions {
  double tol = 1e-9;
  double pivot_tol = 1e-11;
  std::size_t max_iterations = 200000;
};

namespace detail {

// Dense two-phase tableau with Bland's rule on both entering and leaving choices.
class Tableau {
 public:
  Tableau(std::size_t m, std::size_t n) : m_(m), n_(n), a_((m + 1) * (n + 1), 0.0), basis_(m, 0) {}

  double& at(std::size_t i, std::size_t j) { return a_[i * (n_ + 1) + j]; }
  double at(std::size_t i, std::size_t j) const { return a_[i * (n_ + 1) + j]; }
  double& rhs(std::size_t i) { return at(i, n_); }
  double& obj(std::size_t j) { return at(m_, j); }
  std::size_t rows() const { return m_; }
  std::size_t cols() const { return n_; }
  std::vector<std::size_t>& basis() { return basis_; }

  void pivot(std::size_t r, std::size_t c) {
    const std::size_t w = n_ + 1;
    double* pr = &a_[r * w];
    double inv = 1.0 / pr[c];
    for (std::size_t j = 0; j < w; ++j) pr[j] *= inv;
    pr[c] = 1.0;
    for (std::size_t i = 0; i <= m_; ++i) {
      if (i == r) continue;
      double* pi = &a_[i * w];
      double f = pi[c];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < w; ++j) pi[j] -= f * pr[j];
      pi[c] = 0.0;
    }
    basis_[r] = c;
  }

  // Minimizes the objective row over eligible columns. Returns false if unbounded.
  // Entering column by Bland's rule. Leaving row by a Harris ratio test that
  // prefers large pivots; long degenerate runs fall back to Bland's leaving rule.
  bool run(const std::vector<char>& eligible, const LpOptions& opt, std::size_t& iters) {
    std::size_t degenerate = 0;
    for (;;) {
      if (++iters > opt.max_iterations)
        throw error(errc::numerical_breakdown,
                    "simplex iteration limit reached (" + std::to_string(opt.max_iterations) + ")",
                    "iterations");
      std::size_t enter = n_;
      for (std::size_t j = 0; j < n_; ++j)
        if (eligible[j] && obj(j) < -opt.tol) {
          enter = j;
          break;
        }
      if (enter == n_) return true;
      double colmax = 0.0;
      for (std::size_t i = 0; i < m_; ++i) colmax = std::max(colmax, std::abs(at(i, enter)));
      const double piv = std::max(opt.pivot_tol, 1e-9 * colmax);
      double theta = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m_; ++i) {
        double aij = at(i, enter);
        if (aij > piv) theta = std::min(theta, (std::max(rhs(i), 0.0) + opt.tol) / aij);
      }
      if (!std::isfinite(theta)) return false;
      const bool bland = degenerate > 50;
      std::size_t leave = m_;
      double exact = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m_; ++i) {
        double aij = at(i, enter);
        if (aij <= piv) continue;
        double ratio = std::max(rhs(i), 0.0) / aij;
        if (bland) exact = std::min(exact, ratio);
        if (ratio > theta) continue;
        if (leave == m_ || (!bland && aij > at(leave, enter))) leave = i;
      }
      if (bland) {
        leave = m_;
        for (std::size_t i = 0; i < m_; ++i) {
          double aij = at(i, enter);
          if (aij <= piv) continue;
          if (std::max(rhs(i), 0.0) / aij <= exact + 1e-12 && (leave == m_ || basis_[i] < basis_[leave])) leave = i;
        }
      }
      degenerate = std::max(rhs(leave), 0.0) / at(leave, enter) <= opt.tol ? degenerate + 1 : 0;
      pivot(leave, enter);
      for (std::size_t i = 0; i < m_; ++i)
        if (rhs(i) < 0.0 && rhs(i) > -opt.tol) rhs(i) = 0.0;
    }
  }

  void drop_row(std::size_t r) {
    const std::size_t w = n_ + 1;
    a_.erase(a_.begin() + static_cast<std::ptrdiff_t>(r * w), a_.begin() + static_cast<std::ptrdiff_t>((r + 1) * w));
    basis_.erase(basis_.begin() + static_cast<std::ptrdiff_t>(r));
    --m_;
  }

 private:
  std::size_t m_, n_;
  std::vector<double> a_;
  std::vector<std::size_t> basis_;
};

}  // namespace detail

inline LpResult lp_solve(const LinearProgram& lp, const LpOptions& opt = {}) {
  const int n0 = lp.n_vars;
  if (static_cast<int>(lp.objective.size()) != n0)
    throw error(errc::invalid_argument, "objective length differs from n_vars");
  for (double c : lp.objective)
    if (!std::isfinite(c)) throw error(errc::invalid_argument, "non-finite objective coefficient");

  // Presolve: singleton rows x_j = 0 fix a column at zero.
  std::vector<char> fixed(n0, 0);
  std::vector<char> keep_row(lp.rows.size(), 1);
  for (std::size_t r = 0; r < lp.rows.size(); ++r) {
    const auto& row = lp.rows[r];
    for (auto& [j, v] : row.coef)
      if (j < 0 || j >= n0 || !std::isfinite(v)) throw error(errc::invalid_argument, "bad coefficient in row " + row.label);
    if (!std::isfinite(row.rhs)) throw error(errc::invalid_argument, "non-finite rhs in row " + row.label);
    int nz = 0, col = -1;
    for (auto& [j, v] : row.coef)
      if (v != 0.0) ++nz, col = j;
    if (nz == 1 && row.sense == Sense::eq && row.rhs == 0.0) {
      fixed[col] = 1;
      keep_row[r] = 0;
    }
  }
  std::vector<int> map(n0, -1);
  int n = 0;
  for (int j = 0; j < n0; ++j)
    if (!fixed[j]) map[j] = n++;

  struct Std {
    std::vector<std::pair<int, double>> coef;
    Sense sense;
    double rhs;
    std::size_t src;
  };
  std::vector<Std> rows;
  for (std::size_t r = 0; r < lp.rows.size(); ++r) {
    if (!keep_row[r]) continue;
    Std s{{}, lp.rows[r].sense, lp.rows[r].rhs, r};
    for (auto& [j, v] : lp.rows[r].coef)
      if (map[j] >= 0 && v != 0.0) s.coef.emplace_back(map[j], v);
    if (s.coef.empty()) {
      bool ok = s.sense == Sense::eq   ? std::abs(s.rhs) <= opt.tol
                : s.sense == Sense::le ? s.rhs >= -opt.tol
                                       : s.rhs <= opt.tol;
      if (!ok) {
        LpResult res;
        res.status = LpStatus::infeasible;
        res.phase1_residual = std::abs(s.rhs);
        res.infeasible_rows.push_back(lp.rows[r].label);
        res.primal.assign(n0, 0.0);
        return res;
      }
      continue;
    }
    if (s.rhs < 0.0) {
      s.rhs = -s.rhs;
      for (auto& cv : s.coef) cv.second = -cv.second;
      if (s.sense == Sense::le)
        s.sense = Sense::ge;
      else if (s.sense == Sense::ge)
        s.sense = Sense::le;
    }
    rows.push_back(std::move(s));
  }

  const std::size_t m = rows.size();
  std::size_t n_slack = 0, n_art = 0;
  for (auto& s : rows) {
    if (s.sense != Sense::eq) ++n_slack;
    if (s.sense != Sense::le) ++n_art;
  }
  const std::size_t n_struct = static_cast<std::size_t>(n);
  const std::size_t art0 = n_struct + n_slack;
  const std::size_t ncol = art0 + n_art;
  detail::Tableau t(m, ncol);
  std::vector<std::size_t> art_row_src;  // source row for each artificial
  std::size_t si = n_struct, ai = art0;
  for (std::size_t i = 0; i < m; ++i) {
    for (auto& [j, v] : rows[i].coef) t.at(i, j) += v;
    t.rhs(i) = rows[i].rhs;
    if (rows[i].sense == Sense::le) {
      t.at(i, si) = 1.0;
      t.basis()[i] = si++;
    } else {
      if (rows[i].sense == Sense::ge) t.at(i, si++) = -1.0;
      t.at(i, ai) = 1.0;
      t.basis()[i] = ai++;
      art_row_src.push_back(rows[i].src);
    }
  }

  LpResult res;
  std::vector<char> eligible(ncol, 1);

  // Phase 1: minimize the sum of artificials.
  if (n_art > 0) {
    for (std::size_t j = 0; j <= ncol; ++j) t.at(m, j) = 0.0;
    for (std::size_t j = art0; j < ncol; ++j) t.obj(j) = 1.0;
    for (std::size_t i = 0; i < m; ++i)
      if (t.basis()[i] >= art0)
        for (std::size_t j = 0; j <= ncol; ++j) t.at(m, j) -= t.at(i, j);
    if (!t.run(eligible, opt, res.iterations))
      throw error(errc::numerical_breakdown, "phase 1 reported unbounded", "phase1");
    double resid = -t.at(m, ncol);
    res.phase1_residual = resid;
    double scale = 1.0;
    for (auto& s : rows) scale = std::max(scale, std::abs(s.rhs));
    if (resid > opt.tol * scale * 10.0) {
      res.status = LpStatus::infeasible;
      for (std::size_t i = 0; i < t.rows(); ++i)
        if (t.basis()[i] >= art0 && t.rhs(i) > opt.tol)
          res.infeasible_rows.push_back(lp.rows[art_row_src[t.basis()[i] - art0]].label);
      res.primal.assign(n0, 0.0);
      return res;
    }
    // Drive zero-level artificials out; rows with no other support are redundant.
    for (std::size_t i = 0; i < t.rows();) {
      if (t.basis()[i] < art0) {
        ++i;
        continue;
      }
      std::size_t c = art0;
      double best = 1e-7;
      for (std::size_t j = 0; j < art0; ++j)
        if (std::abs(t.at(i, j)) > best) best = std::abs(t.at(i, j)), c = j;
      if (c < art0) {
        t.pivot(i, c);
        ++i;
      } else {
        t.drop_row(i);
      }
    }
    for (std::size_t j = art0; j < ncol; ++j) eligible[j] = 0;
  }

  // Phase 2: minimize -c'x.
  const std::size_t mm = t.rows();
  for (std::size_t j = 0; j <= ncol; ++j) t.at(mm, j) = 0.0;
  for (int j = 0; j < n0; ++j)
    if (map[j] >= 0) t.obj(static_cast<std::size_t>(map[j])) = -lp.objective[j];
  for (std::size_t i = 0; i < mm; ++i) {
    double cb = t.obj(t.basis()[i]);
    if (cb != 0.0)
      for (std::size_t j = 0; j <= ncol; ++j) t.at(mm, j) -= cb * t.at(i, j);
  }
  if (!t.run(eligible, opt, res.iterations)) {
    res.status = LpStatus::unbounded;
    res.optimum = std::numeric_limits<double>::infinity();
    res.primal.assign(n0, 0.0);
    return res;
  }
  std::vector<double> xs(ncol, 0.0);
  for (std::size_t i = 0; i < mm; ++i) xs[t.basis()[i]] = t.rhs(i);
  res.primal.assign(n0, 0.0);
  double z = 0.0;
  for (int j = 0; j < n0; ++j)
    if (map[j] >= 0) {
      res.primal[j] = std::max(0.0, xs[static_cast<std::size_t>(map[j])]);
      z += lp.objective[j] * res.primal[j];
    }
  res.optimum = z;
  res.status = LpStatus::optimal;
  return res;
}

// Labels of rows active (within tol) at x.
inline std::vector<std::string> active_rows(const LinearProgram& lp, const std::vector<double>& x, double tol = 1e-8) {
  std::vector<std::string> out;
  for (const auto& row : lp.rows) {
    if (row.sense == Sense::eq) continue;
    double s = 0.0;
    for (auto& [j, v] : row.coef) s += v * x[j];
    if (std::abs(s - row.rhs) <= tol) out.push_back(row.label);
  }
  return out;
}

}  // namespace ltpi
