#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "ltpi/error.hpp"
#include "ltpi/result.hpp"

namespace ltpi {

// On-the-job search with endogenous effort s(w) and quadratic cost c0 s^2.
struct JobSearchModel {
  double w_low = 0.0, w_bar = 1.0;
  int m = 401;
  std::vector<double> cdf;  // offer cdf on the grid; empty means Beta(beta_a, beta_b)
  double beta_a = 2.0, beta_b = 2.0;
  double r = 0.05, delta = 0.1, lambda = 0.5, theta = 0.0, c0 = 1.0, b = 0.2;
  int omega = 0;

  double step() const { return (w_bar - w_low) / (m - 1); }
  double wage(int i) const { return i == m - 1 ? w_bar : w_low + i * step(); }
  double arrival() const { return lambda + theta * omega; }
};

inline void validate(const JobSearchModel& md) {
  auto bad = [](const std::string& s) { throw error(errc::invalid_argument, s); };
  if (md.m < 50) bad("wage grid needs at least 50 points");
  if (!(md.w_bar > md.w_low)) bad("w_bar must exceed w_low");
  if (!(md.r > 0.0) || !(md.delta >= 0.0) || !(md.lambda > 0.0) || !(md.c0 > 0.0) || md.theta < 0.0)
    bad("r, lambda, c0 must be positive; delta and theta non-negative");
  if (md.omega != 0 && md.omega != 1) bad("omega must be 0 or 1");
  if (!md.cdf.empty()) {
    if (static_cast<int>(md.cdf.size()) != md.m) bad("cdf needs one value per grid point");
    for (int i = 1; i < md.m; ++i)
      if (md.cdf[i] < md.cdf[i - 1]) bad("cdf must be non-decreasing");
    if (md.cdf.back() != 1.0) bad("cdf must reach 1 at w_bar");
  } else if (!(md.beta_a > 0.0 && md.beta_b > 0.0)) {
    bad("beta offer law needs positive shapes");
  }
}

inline std::vector<double> offer_cdf(const JobSearchModel& md) {
  if (!md.cdf.empty()) return md.cdf;
  std::vector<double> f(md.m);
  for (int i = 0; i < md.m; ++i) {
    double z = static_cast<double>(i) / (md.m - 1);
    f[i] = boost::math::ibeta(md.beta_a, md.beta_b, z);
  }
  f.back() = 1.0;
  return f;
}

namespace detail {

inline double effort_integrand(const JobSearchModel& md, double kappa, double surv, double s) {
  return surv / (md.r + md.delta + kappa * s * surv);
}

}  // namespace detail

// Backward recursion from s(w_bar) = 0 on c'(s(w)) = kappa * int_w^wbar (1-F)/(r+delta+kappa s (1-F)).
inline std::vector<double> solve_effort(const JobSearchModel& md) {
  validate(md);
  const auto F = offer_cdf(md);
  const double kappa = md.arrival(), h = md.step(), scale = kappa / (2.0 * md.c0);
  std::vector<double> s(md.m, 0.0);
  double integral = 0.0;
  double g_hi = detail::effort_integrand(md, kappa, 1.0 - F[md.m - 1], 0.0);
  for (int i = md.m - 2; i >= 0; --i) {
    const double surv = 1.0 - F[i];
    double si = s[i + 1], res = 0.0;
    int it = 0;
    for (; it < 100; ++it) {
      double next = scale * (integral + 0.5 * h * (g_hi + detail::effort_integrand(md, kappa, surv, si)));
      res = std::abs(next - si);
      si = next;
      if (res <= 1e-12 * std::max(1.0, std::abs(si))) break;
    }
    if (res > 1e-10)
      throw error(errc::non_convergence, "effort fixed point did not converge at grid node " + std::to_string(i),
                  "node=" + std::to_string(i));
    double g = detail::effort_integrand(md, kappa, surv, si);
    integral += 0.5 * h * (g_hi + g);
    g_hi = g;
    s[i] = si;
  }
  return s;
}

struct Hazards {
  std::vector<double> d;  // employed job-to-job plus separation hazard
  double d_u = 0.0;       // unemployment exit hazard
  int r_index = 0;
};

inline int grid_index(const JobSearchModel& md, double w) {
  double pos = (w - md.w_low) / md.step();
  int i = static_cast<int>(std::lround(pos));
  if (i < 0 || i >= md.m || std::abs(md.wage(i) - w) > 1e-9 * std::max(1.0, std::abs(w)))
    throw error(errc::r_off_grid, "reservation wage " + std::to_string(w) + " is not a grid point", std::to_string(w));
  return i;
}

inline Hazards hazards(const JobSearchModel& md, const std::vector<double>& s) {
  if (static_cast<int>(s.size()) != md.m) throw error(errc::invalid_argument, "effort curve does not match the grid");
  const auto F = offer_cdf(md);
  const double kappa = md.arrival();
  Hazards hz;
  hz.d.resize(md.m);
  for (int i = 0; i < md.m; ++i) hz.d[i] = md.delta + kappa * s[i] * (1.0 - F[i]);
  hz.r_index = grid_index(md, md.b);
  hz.d_u = kappa * s[hz.r_index] * (1.0 - F[hz.r_index]);
  return hz;
}

inline double unemployment_hazard(const JobSearchModel& md) { return hazards(md, solve_effort(md)).d_u; }

struct ThetaRecovery {
  double lambda = 0.0, theta = 0.0;
  int iterations = 0;
};

namespace detail {

// Smallest kappa with d_u(kappa) = target, by bisection; d_u is increasing in kappa.
inline double invert_arrival(JobSearchModel md, double target, double lo, const char* what, int& iters) {
  auto du = [&](double kappa) {
    md.lambda = kappa, md.theta = 0.0, md.omega = 0;
    return unemployment_hazard(md);
  };
  double f_lo = du(lo) - target;
  if (std::abs(f_lo) <= 1e-14) return lo;
  if (f_lo > 0.0) throw error(errc::no_root, std::string(what) + ": observed hazard below the model's lower bracket");
  double hi = std::max(2.0 * lo, 1.0), f_hi = du(hi) - target;
  std::string curve = "kappa,residual;" + std::to_string(lo) + "," + std::to_string(f_lo);
  for (int k = 0; f_hi < 0.0; ++k) {
    curve += ";" + std::to_string(hi) + "," + std::to_string(f_hi);
    if (k >= 60) throw error(errc::no_root, std::string(what) + ": bracket exhausted", curve);
    lo = hi, f_lo = f_hi;
    hi *= 2.0;
    f_hi = du(hi) - target;
  }
  for (iters = 0; iters < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++iters) {
    double mid = 0.5 * (lo + hi), fm = du(mid) - target;
    (fm < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// Control hazard pins lambda (theta omega = 0); the treated hazard then pins lambda + theta.
inline ThetaRecovery recover_theta(double du_control, double du_treated, const JobSearchModel& md) {
  if (!(du_control > 0.0) || !(du_treated > 0.0)) throw error(errc::invalid_argument, "hazards must be positive");
  validate(md);
  if (du_treated < du_control)
    throw error(errc::no_root, "treated hazard below control hazard: no theta >= 0 fits", "theta<0");
  ThetaRecovery out;
  int it = 0;
  out.lambda = detail::invert_arrival(md, du_control, 1e-8, "control", it);
  out.iterations += it;
  if (du_treated == du_control) return out;
  double kappa = detail::invert_arrival(md, du_treated, out.lambda, "treated", it);
  out.iterations += it;
  out.theta = std::max(0.0, kappa - out.lambda);
  return out;
}

inline JobSearchModel jobsearch_from_json(const nlohmann::json& j) {
  JobSearchModel md;
  md.w_low = j.value("w_low", md.w_low);
  md.w_bar = j.value("w_bar", md.w_bar);
  md.m = j.value("m", md.m);
  md.r = j.value("r", md.r);
  md.delta = j.value("delta", md.delta);
  md.lambda = j.value("lambda", md.lambda);
  md.theta = j.value("theta", md.theta);
  md.omega = j.value("omega", md.omega);
  md.c0 = j.value("c0", md.c0);
  md.b = j.value("b", md.b);
  if (j.contains("cdf")) md.cdf = j["cdf"].get<std::vector<double>>();
  if (j.contains("beta")) {
    md.beta_a = j["beta"].at(0).get<double>();
    md.beta_b = j["beta"].at(1).get<double>();
  }
  validate(md);
  return md;
}

}  // namespace ltpi
