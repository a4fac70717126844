#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ltpi/data.hpp"
#include "ltpi/error.hpp"
#include "ltpi/rng.hpp"
#include "ltpi/sharp_set.hpp"

namespace ltpi {

// ---------------------------------------------------------------------------
// Generic finite potential-outcome model; yields exact cell tables and truths.

struct DiscreteDgp {
  int n_cells = 1;
  std::vector<double> px_o, px_e;          // covariate law in each sample
  std::vector<std::array<double, 16>> pu;  // law of u=(Y2(1),Y2(0),Y1(1),Y1(0)) given x
  std::vector<std::array<double, 16>> sel; // P(W=1 | x, u) in O
  std::vector<double> pw_e;                // P(W=1 | x) in E
  double p_o = 0.5;
};

inline void validate(const DiscreteDgp& d) {
  auto bad = [](const std::string& m) { throw error(errc::invalid_argument, m); };
  const auto n = static_cast<std::size_t>(d.n_cells);
  if (d.n_cells < 1 || d.px_o.size() != n || d.px_e.size() != n || d.pu.size() != n || d.sel.size() != n ||
      d.pw_e.size() != n)
    bad("dgp arrays disagree with n_cells");
  if (!(d.p_o > 0.0 && d.p_o < 1.0)) bad("P(G=O) must lie in (0,1)");
  for (std::size_t x = 0; x < n; ++x) {
    double s = 0.0;
    for (double p : d.pu[x]) s += p;
    if (std::abs(s - 1.0) > 1e-9) bad("law of u does not sum to 1 in cell " + std::to_string(x));
    for (double p : d.sel[x])
      if (p < 0.0 || p > 1.0) bad("selection probability outside [0,1]");
  }
}

inline CellTable population_table(const DiscreteDgp& d) {
  validate(d);
  CellTable ct;
  ct.n_cells = d.n_cells;
  ct.o.resize(d.n_cells);
  ct.e.resize(d.n_cells);
  ct.n_o.assign(d.n_cells, 0);
  ct.n_e.assign(d.n_cells, 0);
  ct.p_o = d.p_o;
  double so = 0.0, se = 0.0;
  for (double v : d.px_o) so += v;
  for (double v : d.px_e) se += v;
  for (int x = 0; x < d.n_cells; ++x) {
    ct.o[x].fill(0.0);
    ct.e[x].fill(0.0);
    for (int u = 0; u < 16; ++u) {
      double p = d.pu[x][u];
      if (p == 0.0) continue;
      for (int w = 0; w < 2; ++w) {
        double pw = w == 1 ? d.sel[x][u] : 1.0 - d.sel[x][u];
        int y2 = w == 1 ? u_i(u) : u_j(u);
        int y1 = w == 1 ? u_k(u) : u_l(u);
        ct.o[x][CellTable::oi(y2, y1, w)] += p * pw;
        double pe = w == 1 ? d.pw_e[x] : 1.0 - d.pw_e[x];
        ct.e[x][CellTable::ei(y1, w)] += p * pe;
      }
    }
    double a = 0.0, b = 0.0;
    for (double m : ct.o[x]) a += m;
    for (double m : ct.e[x]) b += m;
    for (double& m : ct.o[x]) m /= a;
    for (double& m : ct.e[x]) m /= b;
  }
  ct.fx_o.resize(d.n_cells);
  ct.fx_e.resize(d.n_cells);
  for (int x = 0; x < d.n_cells; ++x) ct.fx_o[x] = d.px_o[x] / so, ct.fx_e[x] = d.px_e[x] / se;
  validate(ct, 1e-12);
  return ct;
}

struct DgpTruth {
  double att = 0.0;    // E[Y2(1)-Y2(0) | W=1, O]
  double atets = 0.0;  // E[Y2(1)-Y2(0) | Y1(1)=0, O]
  double ltate = 0.0;  // E[Y2(1)-Y2(0) | O]
  double term2 = 0.0;  // E[Y2(0) | Y1(1)=0, O]
};

inline DgpTruth dgp_truth(const DiscreteDgp& d) {
  validate(d);
  double so = 0.0;
  for (double v : d.px_o) so += v;
  double att_n = 0.0, att_d = 0.0, ts_n = 0.0, ts_d = 0.0, t2_n = 0.0, lt = 0.0;
  for (int x = 0; x < d.n_cells; ++x)
    for (int u = 0; u < 16; ++u) {
      double p = d.px_o[x] / so * d.pu[x][u];
      double eff = u_i(u) - u_j(u);
      att_n += p * d.sel[x][u] * eff;
      att_d += p * d.sel[x][u];
      lt += p * eff;
      if (u_k(u) == 0) ts_n += p * eff, ts_d += p, t2_n += p * u_j(u);
    }
  DgpTruth t;
  t.att = att_d > 0.0 ? att_n / att_d : std::nan("");
  t.atets = ts_d > 0.0 ? ts_n / ts_d : std::nan("");
  t.term2 = ts_d > 0.0 ? t2_n / ts_d : std::nan("");
  t.ltate = lt;
  return t;
}

// The true q implied by a DGP, a feasible point of the sharp-set program when
// the flagged restrictions hold in the DGP.
inline QTable true_qtable(const DiscreteDgp& d) {
  QTable q(d.n_cells);
  for (int x = 0; x < d.n_cells; ++x) {
    for (int w = 0; w < 2; ++w) {
      auto& bo = q.block(x, Sample::O, w);
      auto& be = q.block(x, Sample::E, w);
      double so = 0.0;
      for (int u = 0; u < 16; ++u) {
        bo[u] = d.pu[x][u] * (w == 1 ? d.sel[x][u] : 1.0 - d.sel[x][u]);
        so += bo[u];
        be[u] = d.pu[x][u];
      }
      for (int u = 0; u < 16; ++u) bo[u] = so > 0.0 ? bo[u] / so : d.pu[x][u];
    }
  }
  return q;
}

// ---------------------------------------------------------------------------
// Interactive fixed-effect outcome model with AC or Roy selection.

struct DiscreteLaw {
  std::vector<double> values{0.0};
  std::vector<double> probs{1.0};

  static DiscreteLaw point(double v) { return {{v}, {1.0}}; }
  // Two-point law with the given mean and standard deviation.
  static DiscreteLaw two_point(double mean, double sd) {
    if (sd == 0.0) return point(mean);
    return {{mean - sd, mean + sd}, {0.5, 0.5}};
  }
};

struct OutcomeConfig {
  DiscreteLaw alpha = DiscreteLaw::two_point(0.0, 1.0);
  double lambda1 = 0.0, lambda2 = 0.0;
  DiscreteLaw eps = DiscreteLaw::two_point(0.0, 1.0);  // i.i.d. across periods
  std::vector<std::array<double, 2>> delta{{0.0, 0.0}};  // support of (delta1, delta2)
  std::vector<double> delta_probs{1.0};
  double threshold = 0.0;             // Y = 1{latent > threshold}
  std::vector<double> x_probs{1.0};   // covariate cells
  std::vector<double> alpha_shift{0.0};  // added to alpha in each cell
};

struct SelectionConfig {
  enum class Mechanism { ac, roy } mechanism = Mechanism::ac;
  double beta = 0.0;   // ac discount factor
  double cutoff = 0.0; // ac: W = 1{Y1*(0) + beta Y2*(0) <= cutoff}
  double roy_a = 1.0, roy_b = 1.0, roy_c = 0.0;  // roy: W = 1{a d1 + b d2 > c}
  std::vector<int> roy_rule;                      // optional W per delta atom
};

inline void validate(const OutcomeConfig& c) {
  auto law_ok = [](const DiscreteLaw& l) {
    if (l.values.empty() || l.values.size() != l.probs.size()) return false;
    double s = 0.0;
    for (double p : l.probs) {
      if (p < 0.0) return false;
      s += p;
    }
    return std::abs(s - 1.0) < 1e-9;
  };
  if (!law_ok(c.alpha) || !law_ok(c.eps)) throw error(errc::invalid_argument, "discrete laws must be non-empty pmfs");
  double m = 0.0;
  for (std::size_t i = 0; i < c.eps.values.size(); ++i) m += c.eps.values[i] * c.eps.probs[i];
  if (std::abs(m) > 1e-12) throw error(errc::invalid_argument, "eps must have mean zero");
  if (c.delta.empty() || c.delta.size() != c.delta_probs.size())
    throw error(errc::invalid_argument, "delta support and probabilities disagree");
  if (c.x_probs.empty() || c.alpha_shift.size() != c.x_probs.size())
    throw error(errc::invalid_argument, "x_probs and alpha_shift disagree");
}

inline void validate(const SelectionConfig& s, std::size_t n_delta) {
  if (s.beta < 0.0 || s.beta > 1.0) throw error(errc::invalid_argument, "beta must lie in [0,1]");
  if (!s.roy_rule.empty() && s.roy_rule.size() != n_delta)
    throw error(errc::invalid_argument, "roy rule needs one entry per delta atom");
}

struct SimPanel {
  std::size_t n = 0;
  std::vector<int> x, delta_atom;
  std::vector<double> alpha, eps1, eps2, d1, d2;
  std::vector<double> y1s0, y2s0;  // latent untreated outcomes
  std::vector<int> y1_0, y1_1, y2_0, y2_1;
  std::vector<int> w, w_e, g;      // g: 0 = E, 1 = O
  bool selected = false;
};

namespace detail {

inline double latent(double a, double lambda, double eps) { return a + lambda + a * lambda + eps; }

inline int select_one(const SelectionConfig& s, double y1s0, double y2s0, double d1, double d2, int atom) {
  if (s.mechanism == SelectionConfig::Mechanism::ac) return y1s0 + s.beta * y2s0 <= s.cutoff ? 1 : 0;
  if (!s.roy_rule.empty()) return s.roy_rule[atom] ? 1 : 0;
  return s.roy_a * d1 + s.roy_b * d2 > s.roy_c ? 1 : 0;
}

}  // namespace detail

inline SimPanel gen_panel(const OutcomeConfig& cfg, std::size_t n, std::uint64_t seed) {
  validate(cfg);
  if (n < 1) throw error(errc::invalid_argument, "panel needs at least one unit");
  SimPanel p;
  p.n = n;
  auto resize = [n](auto&... v) { (v.resize(n), ...); };
  resize(p.x, p.delta_atom, p.alpha, p.eps1, p.eps2, p.d1, p.d2, p.y1s0, p.y2s0, p.y1_0, p.y1_1, p.y2_0, p.y2_1);
  p.w.assign(n, 0), p.w_e.assign(n, 0), p.g.assign(n, 1);
  parallel_for(n, [&](std::size_t i) {
    counter_rng rng(derive_seed(seed, i, 1));
    int x = static_cast<int>(rng.categorical(cfg.x_probs));
    double a = cfg.alpha.values[rng.categorical(cfg.alpha.probs)] + cfg.alpha_shift[x];
    double e1 = cfg.eps.values[rng.categorical(cfg.eps.probs)];
    double e2 = cfg.eps.values[rng.categorical(cfg.eps.probs)];
    int atom = static_cast<int>(rng.categorical(cfg.delta_probs));
    p.x[i] = x, p.alpha[i] = a, p.eps1[i] = e1, p.eps2[i] = e2, p.delta_atom[i] = atom;
    p.d1[i] = cfg.delta[atom][0], p.d2[i] = cfg.delta[atom][1];
    p.y1s0[i] = detail::latent(a, cfg.lambda1, e1);
    p.y2s0[i] = detail::latent(a, cfg.lambda2, e2);
    p.y1_0[i] = p.y1s0[i] > cfg.threshold;
    p.y2_0[i] = p.y2s0[i] > cfg.threshold;
    p.y1_1[i] = p.y1s0[i] + p.d1[i] > cfg.threshold;
    p.y2_1[i] = p.y2s0[i] + p.d2[i] > cfg.threshold;
  });
  return p;
}

inline SimPanel select(SimPanel panel, const SelectionConfig& s) {
  std::size_t n_delta = 0;
  for (int a : panel.delta_atom) n_delta = std::max<std::size_t>(n_delta, static_cast<std::size_t>(a) + 1);
  if (!s.roy_rule.empty() && s.roy_rule.size() < n_delta)
    throw error(errc::invalid_argument, "roy rule shorter than delta support");
  if (s.beta < 0.0 || s.beta > 1.0) throw error(errc::invalid_argument, "beta must lie in [0,1]");
  for (std::size_t i = 0; i < panel.n; ++i)
    panel.w[i] = detail::select_one(s, panel.y1s0[i], panel.y2s0[i], panel.d1[i], panel.d2[i], panel.delta_atom[i]);
  panel.selected = true;
  return panel;
}

// Splits a selected panel into experimental and observational samples.
inline CombinedDataset assemble(SimPanel& panel, double share_e, std::uint64_t seed, int n_cells = 1,
                                double p_treat_e = 0.5) {
  if (!(share_e > 0.0 && share_e < 1.0)) throw error(errc::invalid_argument, "share_E must lie in (0,1)");
  if (!panel.selected) throw error(errc::invalid_argument, "panel has no selection applied");
  CombinedDataset ds;
  ds.n_cells = n_cells;
  ds.observations.resize(panel.n);
  for (std::size_t i = 0; i < panel.n; ++i) {
    counter_rng rng(derive_seed(seed, i, 2));
    bool exp = rng.uniform() < share_e;
    panel.g[i] = exp ? 0 : 1;
    panel.w_e[i] = rng.uniform() < p_treat_e ? 1 : 0;
    Observation ob;
    ob.x = panel.x[i];
    if (ob.x >= n_cells) throw error(errc::invalid_argument, "panel covariate exceeds n_cells");
    if (exp) {
      ob.g = Sample::E;
      ob.w = panel.w_e[i];
      ob.y1 = ob.w ? panel.y1_1[i] : panel.y1_0[i];
      ++ds.n_e;
    } else {
      ob.g = Sample::O;
      ob.w = panel.w[i];
      ob.y1 = ob.w ? panel.y1_1[i] : panel.y1_0[i];
      ob.y2 = ob.w ? panel.y2_1[i] : panel.y2_0[i];
      ++ds.n_o;
    }
    ds.observations[i] = ob;
  }
  return ds;
}

// One unit type (population) or one simulated unit (sample) with its weight.
struct UnitRecord {
  double weight = 1.0;
  int x = 0, w = 0;
  double y1s[2]{}, y2s[2]{};  // latent outcomes by arm
  int y1[2]{}, y2[2]{};       // binary outcomes by arm
};

struct AssumptionDiagnostics {
  // post-binarization
  double lu_untreated = 0.0, lu_untreated_se = 0.0;
  double lu_treated = 0.0, lu_treated_se = 0.0;
  double ecb_untreated = 0.0, ecb_untreated_se = 0.0;
  double ecb_treated = 0.0, ecb_treated_se = 0.0;
  // latent outcomes
  double lu_latent_untreated = 0.0, lu_latent_treated = 0.0;
  double ecb_latent_untreated = 0.0, ecb_latent_treated = 0.0;
  std::size_t empty_strata = 0;
  double treated_share = 0.0;
  bool population = false;
};

namespace detail {

struct Moments {
  double w = 0.0, s = 0.0, ss = 0.0;
  std::size_t n = 0;
  void add(double wt, double v) { w += wt, s += wt * v, ss += wt * v * v, ++n; }
  double mean() const { return s / w; }
  double var() const { return std::max(0.0, ss / w - mean() * mean()); }
};

// Difference of group means and its standard error (zero at population level).
inline std::pair<double, double> gap(const Moments& a, const Moments& b, bool population) {
  double d = a.mean() - b.mean();
  double se = population ? 0.0 : std::sqrt(a.var() / static_cast<double>(a.n) + b.var() / static_cast<double>(b.n));
  return {d, se};
}

}  // namespace detail

inline AssumptionDiagnostics diagnose_records(const std::vector<UnitRecord>& units, bool population) {
  AssumptionDiagnostics d;
  d.population = population;
  double wt = 0.0, w1 = 0.0;
  for (const auto& u : units) wt += u.weight, w1 += u.weight * u.w;
  d.treated_share = wt > 0.0 ? w1 / wt : 0.0;

  for (int arm = 0; arm < 2; ++arm) {
    // LU: strata (Y1(arm), x); compare Y2(arm) across W.
    std::map<std::pair<double, int>, std::array<detail::Moments, 2>> bin, lat;
    detail::Moments e[2], el[2];
    for (const auto& u : units) {
      bin[{static_cast<double>(u.y1[arm]), u.x}][u.w].add(u.weight, u.y2[arm]);
      lat[{u.y1s[arm], u.x}][u.w].add(u.weight, u.y2s[arm]);
      e[u.w].add(u.weight, u.y2[arm] - u.y1[arm]);
      el[u.w].add(u.weight, u.y2s[arm] - u.y1s[arm]);
    }
    double best = 0.0, best_se = 0.0, best_lat = 0.0;
    for (auto& [k, m] : bin) {
      if (m[0].w <= 0.0 || m[1].w <= 0.0) {
        ++d.empty_strata;
        continue;
      }
      auto [g, se] = detail::gap(m[1], m[0], population);
      if (std::abs(g) > best) best = std::abs(g), best_se = se;
    }
    for (auto& [k, m] : lat) {
      if (m[0].w <= 0.0 || m[1].w <= 0.0) continue;
      best_lat = std::max(best_lat, std::abs(m[1].mean() - m[0].mean()));
    }
    double ecb = 0.0, ecb_se = 0.0, ecb_lat = 0.0;
    if (e[0].w > 0.0 && e[1].w > 0.0) {
      auto [g, se] = detail::gap(e[1], e[0], population);
      ecb = std::abs(g), ecb_se = se;
      ecb_lat = std::abs(el[1].mean() - el[0].mean());
    }
    if (arm == 0) {
      d.lu_untreated = best, d.lu_untreated_se = best_se, d.lu_latent_untreated = best_lat;
      d.ecb_untreated = ecb, d.ecb_untreated_se = ecb_se, d.ecb_latent_untreated = ecb_lat;
    } else {
      d.lu_treated = best, d.lu_treated_se = best_se, d.lu_latent_treated = best_lat;
      d.ecb_treated = ecb, d.ecb_treated_se = ecb_se, d.ecb_latent_treated = ecb_lat;
    }
  }
  return d;
}

inline AssumptionDiagnostics diagnose(const SimPanel& p) {
  if (!p.selected) throw error(errc::invalid_argument, "panel has no selection applied");
  std::vector<UnitRecord> units(p.n);
  for (std::size_t i = 0; i < p.n; ++i) {
    auto& u = units[i];
    u.x = p.x[i], u.w = p.w[i];
    u.y1s[0] = p.y1s0[i], u.y1s[1] = p.y1s0[i] + p.d1[i];
    u.y2s[0] = p.y2s0[i], u.y2s[1] = p.y2s0[i] + p.d2[i];
    u.y1[0] = p.y1_0[i], u.y1[1] = p.y1_1[i], u.y2[0] = p.y2_0[i], u.y2[1] = p.y2_1[i];
  }
  return diagnose_records(units, false);
}

// Exact enumeration of the unit types of a finite-support configuration.
inline std::vector<UnitRecord> enumerate_units(const OutcomeConfig& cfg, const SelectionConfig& s) {
  validate(cfg);
  validate(s, cfg.delta.size());
  std::vector<UnitRecord> out;
  for (std::size_t x = 0; x < cfg.x_probs.size(); ++x)
    for (std::size_t ia = 0; ia < cfg.alpha.values.size(); ++ia)
      for (std::size_t i1 = 0; i1 < cfg.eps.values.size(); ++i1)
        for (std::size_t i2 = 0; i2 < cfg.eps.values.size(); ++i2)
          for (std::size_t id = 0; id < cfg.delta.size(); ++id) {
            double p = cfg.x_probs[x] * cfg.alpha.probs[ia] * cfg.eps.probs[i1] * cfg.eps.probs[i2] * cfg.delta_probs[id];
            if (p == 0.0) continue;
            double a = cfg.alpha.values[ia] + cfg.alpha_shift[x];
            double y1 = detail::latent(a, cfg.lambda1, cfg.eps.values[i1]);
            double y2 = detail::latent(a, cfg.lambda2, cfg.eps.values[i2]);
            UnitRecord u;
            u.weight = p;
            u.x = static_cast<int>(x);
            u.y1s[0] = y1, u.y1s[1] = y1 + cfg.delta[id][0];
            u.y2s[0] = y2, u.y2s[1] = y2 + cfg.delta[id][1];
            for (int arm = 0; arm < 2; ++arm) {
              u.y1[arm] = u.y1s[arm] > cfg.threshold;
              u.y2[arm] = u.y2s[arm] > cfg.threshold;
            }
            u.w = detail::select_one(s, y1, y2, cfg.delta[id][0], cfg.delta[id][1], static_cast<int>(id));
            out.push_back(u);
          }
  return out;
}

inline AssumptionDiagnostics diagnose_population(const OutcomeConfig& cfg, const SelectionConfig& s) {
  return diagnose_records(enumerate_units(cfg, s), true);
}

// Collapses unit types into the finite DGP seen by the estimators.
inline DiscreteDgp to_dgp(const OutcomeConfig& cfg, const SelectionConfig& s, double share_e, double p_treat_e = 0.5) {
  if (!(share_e > 0.0 && share_e < 1.0)) throw error(errc::invalid_argument, "share_E must lie in (0,1)");
  auto units = enumerate_units(cfg, s);
  const int nc = static_cast<int>(cfg.x_probs.size());
  DiscreteDgp d;
  d.n_cells = nc;
  d.px_o = cfg.x_probs;
  d.px_e = cfg.x_probs;
  d.p_o = 1.0 - share_e;
  d.pw_e.assign(nc, p_treat_e);
  d.pu.assign(nc, {});
  d.sel.assign(nc, {});
  std::vector<std::array<double, 16>> treated(nc);
  for (auto& a : treated) a.fill(0.0);
  for (const auto& u : units) {
    int k = uidx(u.y2[1], u.y2[0], u.y1[1], u.y1[0]);
    d.pu[u.x][k] += u.weight / cfg.x_probs[u.x];
    treated[u.x][k] += u.w * u.weight / cfg.x_probs[u.x];
  }
  for (int x = 0; x < nc; ++x)
    for (int k = 0; k < 16; ++k) d.sel[x][k] = d.pu[x][k] > 0.0 ? treated[x][k] / d.pu[x][k] : 0.0;
  return d;
}

// ---------------------------------------------------------------------------
// JSON plumbing for the command line.

inline DiscreteLaw law_from_json(const nlohmann::json& j) {
  if (j.is_number()) return DiscreteLaw::point(j.get<double>());
  if (j.contains("values")) {
    DiscreteLaw l{j.at("values").get<std::vector<double>>(), j.at("probs").get<std::vector<double>>()};
    return l;
  }
  return DiscreteLaw::two_point(j.value("mean", 0.0), j.value("sd", 0.0));
}

inline OutcomeConfig outcome_from_json(const nlohmann::json& j) {
  OutcomeConfig c;
  if (j.contains("alpha")) c.alpha = law_from_json(j["alpha"]);
  if (j.contains("eps")) c.eps = law_from_json(j["eps"]);
  c.lambda1 = j.value("lambda1", 0.0);
  c.lambda2 = j.value("lambda2", 0.0);
  c.threshold = j.value("threshold", 0.0);
  if (j.contains("delta")) {
    const auto& d = j["delta"];
    if (d.contains("support")) {
      c.delta.clear();
      for (const auto& pair : d["support"]) c.delta.push_back({pair.at(0).get<double>(), pair.at(1).get<double>()});
      c.delta_probs = d.at("probs").get<std::vector<double>>();
    } else {
      c.delta = {{d.value("delta1", 0.0), d.value("delta2", 0.0)}};
      c.delta_probs = {1.0};
    }
  }
  if (j.contains("x_probs")) c.x_probs = j["x_probs"].get<std::vector<double>>();
  c.alpha_shift = j.value("alpha_shift", std::vector<double>(c.x_probs.size(), 0.0));
  validate(c);
  return c;
}

inline SelectionConfig selection_from_json(const nlohmann::json& j) {
  SelectionConfig s;
  std::string m = j.value("mechanism", std::string("ac"));
  if (m == "ac") {
    s.mechanism = SelectionConfig::Mechanism::ac;
  } else if (m == "roy") {
    s.mechanism = SelectionConfig::Mechanism::roy;
  } else {
    throw error(errc::invalid_argument, "selection mechanism must be ac or roy");
  }
  s.beta = j.value("beta", 0.0);
  s.cutoff = j.value("cutoff", 0.0);
  s.roy_a = j.value("a", 1.0);
  s.roy_b = j.value("b", 1.0);
  s.roy_c = j.value("c", 0.0);
  if (j.contains("rule")) s.roy_rule = j["rule"].get<std::vector<int>>();
  return s;
}

inline nlohmann::json to_json(const AssumptionDiagnostics& d) {
  return {{"population", d.population},
          {"treated_share", d.treated_share},
          {"lu_untreated", d.lu_untreated},
          {"lu_untreated_se", d.lu_untreated_se},
          {"lu_treated", d.lu_treated},
          {"lu_treated_se", d.lu_treated_se},
          {"ecb_untreated", d.ecb_untreated},
          {"ecb_untreated_se", d.ecb_untreated_se},
          {"ecb_treated", d.ecb_treated},
          {"ecb_treated_se", d.ecb_treated_se},
          {"latent", {{"lu_untreated", d.lu_latent_untreated},
                      {"lu_treated", d.lu_latent_treated},
                      {"ecb_untreated", d.ecb_latent_untreated},
                      {"ecb_treated", d.ecb_latent_treated}}},
          {"empty_strata", d.empty_strata}};
}

}  // namespace ltpi
