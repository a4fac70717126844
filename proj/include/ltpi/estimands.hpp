#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "ltpi/data.hpp"
#include "ltpi/error.hpp"
#include "ltpi/result.hpp"

namespace ltpi {

namespace detail {

inline std::string cell_tag(int y1, int w, int x, Sample g) {
  std::string s = "(";
  if (y1 >= 0) s += "y1=" + std::to_string(y1) + ", ";
  return s + "w=" + std::to_string(w) + ", x=" + std::to_string(x) + ", g=" + sample_name(g) + ")";
}

[[noreturn]] inline void zero_mass(int y1, int w, int x, Sample g) {
  std::string tag = cell_tag(y1, w, x, g);
  throw error(errc::zero_conditioning_mass, "conditioning cell " + tag + " has zero mass", tag);
}

// P(Y1=y1 | W=w, x, g)
inline double py1_given(const CellTable& ct, int y1, int w, int x, Sample g) {
  double den = ct.pw(w, x, g);
  if (!(den > 0.0)) zero_mass(-1, w, x, g);
  return ct.py1w(y1, w, x, g) / den;
}

// E[Y2 | Y1=y1, W=w, x, O]
inline double mu(const CellTable& ct, int y1, int w, int x) {
  double den = ct.py1w(y1, w, x, Sample::O);
  if (!(den > 0.0)) zero_mass(y1, w, x, Sample::O);
  return ct.o[x][CellTable::oi(1, y1, w)] / den;
}

// E[Y2 | W=w, x, O]
inline double mean_y2(const CellTable& ct, int w, int x) {
  double den = ct.pw(w, x, Sample::O);
  if (!(den > 0.0)) zero_mass(-1, w, x, Sample::O);
  return (ct.o[x][CellTable::oi(1, 0, w)] + ct.o[x][CellTable::oi(1, 1, w)]) / den;
}

// Nested mean E[ E[Y2|Y1,W=w,x,O] | W=w, x, E ] with the Y1 law of the E arm w.
inline double nested_mean(const CellTable& ct, int w, int x) {
  double s = 0.0;
  for (int y1 = 0; y1 < 2; ++y1) {
    double wt = py1_given(ct, y1, w, x, Sample::E);
    if (wt > 0.0) s += wt * mu(ct, y1, w, x);
  }
  return s;
}

inline double p_w_o(const CellTable& ct, int w) { return prob(ct, Event{Sample::O, -1, -1, w, -1}); }

}  // namespace detail

inline EstimandResult naive_att(const CellTable& ct) {
  EstimandResult r{0.0, "naive", std::vector<double>(ct.n_cells, 0.0)};
  double m1 = cond_mean(ct, Var::Y2, Event{Sample::O, -1, -1, 1, -1});
  double m0 = cond_mean(ct, Var::Y2, Event{Sample::O, -1, -1, 0, -1});
  double p1 = detail::p_w_o(ct, 1), p0 = 1.0 - p1;
  for (int x = 0; x < ct.n_cells; ++x) {
    double a = ct.o[x][CellTable::oi(1, 0, 1)] + ct.o[x][CellTable::oi(1, 1, 1)];
    double b = ct.o[x][CellTable::oi(1, 0, 0)] + ct.o[x][CellTable::oi(1, 1, 0)];
    r.per_cell[x] = ct.fx_o[x] * (a / p1 - b / p0);
  }
  r.value = m1 - m0;
  return r;
}

// Long-term ATT under latent unconfoundedness of the untreated arm.
inline EstimandResult lu_att(const CellTable& ct) {
  EstimandResult r{0.0, "lu_att", std::vector<double>(ct.n_cells, 0.0)};
  double p1 = detail::p_w_o(ct, 1);
  if (!(p1 > 0.0)) detail::zero_mass(-1, 1, -1, Sample::O);
  double p0 = 1.0 - p1;
  double m1 = cond_mean(ct, Var::Y2, Event{Sample::O, -1, -1, 1, -1});
  double m0 = p0 > 0.0 ? cond_mean(ct, Var::Y2, Event{Sample::O, -1, -1, 0, -1}) : 0.0;
  double total = m1 + p0 * m0 / p1;
  for (int x = 0; x < ct.n_cells; ++x) {
    if (ct.fx_o[x] <= 0.0) continue;
    r.per_cell[x] = -ct.fx_o[x] * detail::nested_mean(ct, 0, x) / p1;
    total += r.per_cell[x];
  }
  r.value = total;
  return r;
}

// Long-term ATT under equi-confounding bias (parallel growth of Y(0)).
inline EstimandResult ecb_att(const CellTable& ct) {
  EstimandResult r{0.0, "ecb_att", std::vector<double>(ct.n_cells, 0.0)};
  double p1 = detail::p_w_o(ct, 1);
  if (!(p1 > 0.0)) detail::zero_mass(-1, 1, -1, Sample::O);
  double total = cond_mean(ct, Var::Y2, Event{Sample::O, -1, -1, 1, -1});
  for (int x = 0; x < ct.n_cells; ++x) {
    double p1x = ct.pw(1, x, Sample::O);
    if (ct.fx_o[x] <= 0.0 || p1x <= 0.0) continue;
    double m_o = detail::py1_given(ct, 1, 0, x, Sample::O);
    double m_e = detail::py1_given(ct, 1, 0, x, Sample::E);
    double y2_0 = detail::mean_y2(ct, 0, x);
    // treated-weighted: f(x|W=1,O) = f(x|O) p1x / p1
    r.per_cell[x] = -(ct.fx_o[x] / p1) * (m_e - m_o) - ct.fx_o[x] * p1x / p1 * y2_0;
    total += r.per_cell[x];
  }
  r.value = total;
  return r;
}

// ATETS point-identified under no state dependence.
inline EstimandResult nsd_atets(const CellTable& ct) {
  EstimandResult r{0.0, "nsd_atets", std::vector<double>(ct.n_cells, 0.0)};
  double total = 0.0;
  for (int x = 0; x < ct.n_cells; ++x) {
    if (ct.fx_o[x] <= 0.0) continue;
    r.per_cell[x] = ct.fx_o[x] * (detail::nested_mean(ct, 1, x) - detail::nested_mean(ct, 0, x));
    total += r.per_cell[x];
  }
  r.value = total;
  return r;
}

inline BoundsResult worstcase_atets_bounds(const CellTable& ct) {
  double p110 = prob(ct, Event{Sample::O, 1, 0, 1, -1});
  double q = prob(ct, Event{Sample::O, -1, 0, 1, -1});
  double p0 = detail::p_w_o(ct, 0);
  double den = q + p0;
  if (!(den > 0.0))
    throw error(errc::degenerate_denominator, "P(Y1=0,W=1|O) + P(W=0|O) is zero", "survivor mass");
  BoundsResult b;
  b.status = "closed_form";
  double l1 = p110 / den, u1 = (p110 + p0) / den;
  b.lower = l1 - 1.0;
  b.upper = u1;
  b.informative = is_informative(b.lower, b.upper);
  b.components = {{"p110", p110}, {"q", q}, {"p0", p0}, {"term1_lower", l1}, {"term1_upper", u1},
                  {"term2_lower", 0.0}, {"term2_upper", 1.0}};
  return b;
}

// Copula bounds on E[Y2(0) | Y1(1)=0] from the two margins a and b.
inline BoundsResult fh_from_components(double a, double b, double t1) {
  if (!(b < 1.0)) throw error(errc::degenerate_denominator, "b = E[Y1(1)|O] equals 1", "b");
  double lo2 = std::max((a - b) / (1.0 - b), 0.0);
  double hi2 = std::min(a / (1.0 - b), 1.0);
  BoundsResult r;
  r.status = "closed_form";
  r.lower = t1 - hi2;
  r.upper = t1 - lo2;
  r.informative = is_informative(r.lower, r.upper);
  r.components = {{"a", a}, {"b", b}, {"t1", t1}, {"term2_lower", lo2}, {"term2_upper", hi2}};
  return r;
}

inline BoundsResult fh_atets_bounds(const CellTable& ct) {
  double a = 0.0, b = 0.0, num = 0.0, den = 0.0;
  for (int x = 0; x < ct.n_cells; ++x) {
    double f = ct.fx_o[x];
    if (f <= 0.0) continue;
    a += f * detail::nested_mean(ct, 0, x);
    double s0 = detail::py1_given(ct, 0, 1, x, Sample::E);
    b += f * (1.0 - s0);
    if (s0 > 0.0) num += f * detail::mu(ct, 0, 1, x) * s0;
    den += f * s0;
  }
  if (!(den > 0.0)) throw error(errc::degenerate_denominator, "b = E[Y1(1)|O] equals 1", "b");
  return fh_from_components(a, b, num / den);
}

struct BracketingReport {
  double theta_lu = 0.0, theta_ecb = 0.0, naive = 0.0;
  std::array<double, 2> psi{};                // pooled Psi(y), y in {0,1}
  std::vector<std::array<double, 2>> psi_cell;  // NaN where undefined
  bool nep_ok = false;
  std::array<double, 2> fosd_margins{};          // pooled F_O(y) - F_E(y)
  std::vector<double> fosd_margin_cell;          // at y=0 per cell
  bool fosd_ok = false;
  bool bracket_ok = false;
  bool reversed = false;
  std::string note;
};

// NEP: growth E[Y2-Y1|Y1=y,W=0,x,O] non-increasing in y.
// FOSD: F_{Y1|W=0,x,O}(0) <= F_{Y1|W=0,x,E}(0), both checked per cell.
inline BracketingReport bracketing_report(const CellTable& ct, double tol = 1e-8) {
  BracketingReport r;
  r.theta_lu = lu_att(ct).value;
  r.theta_ecb = ecb_att(ct).value;
  r.naive = naive_att(ct).value;
  for (int y = 0; y < 2; ++y) {
    Event ev{Sample::O, -1, y, 0, -1};
    r.psi[y] = prob(ct, ev) > 0.0 ? cond_mean(ct, Var::Y2, ev) - y : std::nan("");
  }
  r.nep_ok = true;
  r.fosd_ok = true;
  r.psi_cell.resize(ct.n_cells);
  r.fosd_margin_cell.resize(ct.n_cells);
  for (int x = 0; x < ct.n_cells; ++x) {
    for (int y = 0; y < 2; ++y)
      r.psi_cell[x][y] = ct.py1w(y, 0, x, Sample::O) > 0.0 ? detail::mu(ct, y, 0, x) - y : std::nan("");
    if (ct.fx_o[x] > 0.0) {
      bool defined = !std::isnan(r.psi_cell[x][0]) && !std::isnan(r.psi_cell[x][1]);
      if (!defined || r.psi_cell[x][1] > r.psi_cell[x][0] + tol) r.nep_ok = false;
    }
    double fo = detail::py1_given(ct, 0, 0, x, Sample::O);
    double fe = detail::py1_given(ct, 0, 0, x, Sample::E);
    r.fosd_margin_cell[x] = fo - fe;
    if (fo - fe > tol) r.fosd_ok = false;
  }
  double fo = cond_mean(ct, Var::Y1, Event{Sample::O, -1, -1, 0, -1});
  double fe = cond_mean(ct, Var::Y1, Event{Sample::E, -1, -1, 0, -1});
  r.fosd_margins = {(1.0 - fo) - (1.0 - fe), 0.0};
  r.bracket_ok = r.theta_lu <= r.theta_ecb + tol;
  r.reversed = r.theta_ecb < r.theta_lu - tol;
  if (r.reversed) r.note = "reversed bracketing";
  return r;
}

struct SensitivityResult {
  double rho_bar = 1.0;
  double delta = 0.0;
  double adjusted_ecb = 0.0;
};

// Bias of the ECB estimand when untreated outcomes follow Y2 = rho*Y1 + noise.
inline SensitivityResult sensitivity_delta(const CellTable& ct, double rho_bar) {
  double p1 = detail::p_w_o(ct, 1);
  if (!(p1 > 0.0)) throw error(errc::degenerate_denominator, "P(W=1|O) is zero", "P(W=1|O)");
  double me = cond_mean(ct, Var::Y1, Event{Sample::E, -1, -1, 0, -1});
  double mo = cond_mean(ct, Var::Y1, Event{Sample::O, -1, -1, 0, -1});
  SensitivityResult s;
  s.rho_bar = rho_bar;
  s.delta = rho_bar == 1.0 ? 0.0 : (rho_bar - 1.0) * (me - mo) / p1;
  s.adjusted_ecb = ecb_att(ct).value - s.delta;
  return s;
}

// Total policy effect after equilibrium price adjustment.
inline double ge_total_effect(double tau_ade, double kappa_d, double kappa_s) {
  if (kappa_d == kappa_s)
    throw error(errc::equal_elasticities, "demand and supply elasticities coincide", "kappa");
  return kappa_d / (kappa_d - kappa_s) * tau_ade;
}

inline nlohmann::json to_json(const BracketingReport& r) {
  auto num = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
  nlohmann::json cells = nlohmann::json::array();
  for (std::size_t x = 0; x < r.psi_cell.size(); ++x)
    cells.push_back({{"cell", x},
                     {"psi", {num(r.psi_cell[x][0]), num(r.psi_cell[x][1])}},
                     {"fosd_margin", r.fosd_margin_cell[x]}});
  nlohmann::json j{{"theta_lu", r.theta_lu},     {"theta_ecb", r.theta_ecb},
                   {"naive", r.naive},           {"psi", {num(r.psi[0]), num(r.psi[1])}},
                   {"nep_ok", r.nep_ok},         {"fosd_margins", r.fosd_margins},
                   {"fosd_ok", r.fosd_ok},       {"bracket_ok", r.bracket_ok},
                   {"reversed", r.reversed},     {"cells", cells}};
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

inline nlohmann::json to_json(const SensitivityResult& s) {
  return {{"rho_bar", s.rho_bar}, {"delta", s.delta}, {"adjusted_ecb", s.adjusted_ecb}};
}

}  // namespace ltpi
