#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ltpi/data.hpp"
#include "ltpi/dml.hpp"
#include "ltpi/estimands.hpp"
#include "ltpi/jobsearch.hpp"
#include "ltpi/moment_test.hpp"
#include "ltpi/sharp_set.hpp"
#include "ltpi/simulate.hpp"

namespace ltpi {
namespace {

using json = nlohmann::json;

struct Options {
  std::string input, output, config, data_out, format = "json";
  int cells = 1;
  std::uint64_t seed = 0;
  bool timing = false;
  // sharp-set
  RestrictionSet rs;
  int grid = 21, max_dims = 8, starts = 32;
  bool show_q = false;
  // test
  std::string which = "fosd", assumption = "none";
  double alpha = 0.05;
  int boot = 1000;
  // dml
  int folds = 5;
  // sensitivity
  std::vector<double> rho{0.0, 0.5, 1.0, 1.5, 2.0};
  // estimate
  std::optional<double> kappa_d, kappa_s;
  // simulate
  std::optional<std::size_t> n;
  // jobsearch
  std::optional<double> du_control, du_treated;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

CombinedDataset load(const Options& o) {
  if (o.input.empty()) throw UsageError("--input is required");
  std::ifstream in(o.input);
  if (!in) throw error(errc::empty_input, "cannot open input file " + o.input, o.input);
  return ingest(in, o.cells);
}

json read_json(const std::string& path) {
  if (path.empty()) throw UsageError("--config is required");
  std::ifstream in(path);
  if (!in) throw error(errc::empty_input, "cannot open config file " + path, path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw error(errc::invalid_argument, std::string("config is not valid JSON: ") + e.what(), path);
  }
}

json config_echo(const std::string& cmd, const Options& o) {
  json c{{"format", o.format}};
  auto data = [&] { c["input"] = o.input, c["cells"] = o.cells; };
  if (cmd == "estimate") {
    data();
    if (o.kappa_d) c["kappa_d"] = *o.kappa_d;
    if (o.kappa_s) c["kappa_s"] = *o.kappa_s;
  } else if (cmd == "bounds") {
    data();
  } else if (cmd == "sharp-set") {
    data();
    c["restrictions"] = o.rs.label();
    c["grid"] = o.grid, c["max_dims"] = o.max_dims, c["starts"] = o.starts;
  } else if (cmd == "test") {
    data();
    c["which"] = o.which, c["assumption"] = o.assumption, c["alpha"] = o.alpha, c["boot"] = o.boot;
  } else if (cmd == "dml") {
    data();
    c["folds"] = o.folds, c["alpha"] = o.alpha;
  } else if (cmd == "sensitivity") {
    data();
    c["rho"] = o.rho;
  } else if (cmd == "simulate") {
    c["config"] = o.config;
    if (o.n) c["n"] = *o.n;
    if (!o.data_out.empty()) c["data"] = o.data_out;
  } else if (cmd == "jobsearch") {
    c["config"] = o.config;
    if (o.du_control) c["du_control"] = *o.du_control;
    if (o.du_treated) c["du_treated"] = *o.du_treated;
  }
  return c;
}

json run_estimate(const Options& o) {
  if (o.kappa_d.has_value() != o.kappa_s.has_value()) throw UsageError("--kappa-d and --kappa-s go together");
  auto ct = tabulate(load(o));
  json r{{"estimands",
          {{"naive", to_json(naive_att(ct))},
           {"lu", to_json(lu_att(ct))},
           {"ecb", to_json(ecb_att(ct))},
           {"nsd_atets", to_json(nsd_atets(ct))}}},
         {"worstcase", to_json(worstcase_atets_bounds(ct))},
         {"bracketing", to_json(bracketing_report(ct))}};
  if (o.kappa_d) {
    double f = ge_total_effect(1.0, *o.kappa_d, *o.kappa_s);
    r["ge"] = {{"kappa_d", *o.kappa_d}, {"kappa_s", *o.kappa_s}, {"factor", f},
               {"total_effect_lu", f * lu_att(ct).value}, {"total_effect_ecb", f * ecb_att(ct).value}};
  }
  return r;
}

json run_bounds(const Options& o) {
  auto ct = tabulate(load(o));
  return {{"worstcase", to_json(worstcase_atets_bounds(ct))}, {"fh", to_json(fh_atets_bounds(ct))}, {"table", to_json(ct)}};
}

json run_sharp_set(const Options& o) {
  auto ct = tabulate(load(o));
  SolverOptions so;
  so.grid = o.grid, so.max_dims = o.max_dims, so.starts = o.starts, so.seed = o.seed;
  auto pr = build_program(ct, o.rs);
  if (!o.show_q) return {{"restrictions", o.rs.label()}, {"bounds", to_json(solve_bounds(pr, so))}};
  auto sol = solve_sharp_set(pr, so);
  return {{"restrictions", o.rs.label()},
          {"bounds", to_json(sol.bounds)},
          {"upper_q", to_json(sol.upper.q)},
          {"lower_q", to_json(sol.lower.q)}};
}

json run_test(const Options& o) {
  auto ds = load(o);
  MomentMatrix m;
  if (o.which == "fosd")
    m = fosd_moments(ds);
  else if (o.which == "external-validity")
    m = external_validity_moments(ds, ev_assumption_from(o.assumption));
  else
    throw UsageError("--which must be fosd or external-validity");
  auto r = to_json(moment_test(m, o.alpha, o.boot, o.seed));
  r["moments"] = m.labels;
  r["n"] = m.n();
  return r;
}

json run_dml(const Options& o) { return to_json(dml_estimate(load(o), o.folds, o.alpha, o.seed)); }

json run_sensitivity(const Options& o) {
  auto ct = tabulate(load(o));
  json curve = json::array();
  for (double r : o.rho) curve.push_back(to_json(sensitivity_delta(ct, r)));
  return {{"ecb", ecb_att(ct).value}, {"curve", curve}};
}

void write_csv(const CombinedDataset& ds, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw error(errc::invalid_argument, "cannot write data file " + path, path);
  f << "y2,y1,w,x,g\n";
  for (const auto& o : ds.observations)
    f << (o.y2 ? std::to_string(*o.y2) : "") << ',' << o.y1 << ',' << o.w << ',' << o.x << ',' << sample_name(o.g) << '\n';
}

json run_simulate(const Options& o) {
  auto cfg = read_json(o.config);
  if (!cfg.contains("outcome") || !cfg.contains("selection"))
    throw error(errc::invalid_argument, "simulate config needs outcome and selection objects");
  auto oc = outcome_from_json(cfg["outcome"]);
  auto sc = selection_from_json(cfg["selection"]);
  std::size_t n = o.n ? *o.n : cfg.value("n", std::size_t{10000});
  double share_e = cfg.value("share_e", 0.3), p_treat_e = cfg.value("p_treat_e", 0.5);
  int nc = static_cast<int>(oc.x_probs.size());
  auto panel = select(gen_panel(oc, n, o.seed), sc);
  auto ds = assemble(panel, share_e, o.seed, nc, p_treat_e);
  if (!o.data_out.empty()) write_csv(ds, o.data_out);
  auto dgp = to_dgp(oc, sc, share_e, p_treat_e);
  auto truth = dgp_truth(dgp);
  auto num = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
  return {{"n", n},
          {"n_e", ds.n_e},
          {"n_o", ds.n_o},
          {"diagnostics", to_json(diagnose(panel))},
          {"population_diagnostics", to_json(diagnose_population(oc, sc))},
          {"truth", {{"att", num(truth.att)}, {"atets", num(truth.atets)}, {"ltate", num(truth.ltate)}}}};
}

json run_jobsearch(const Options& o) {
  auto md = jobsearch_from_json(read_json(o.config));
  auto s = solve_effort(md);
  auto hz = hazards(md, s);
  json r{{"wage", json::array()}, {"s", s}, {"d", hz.d}, {"d_u", hz.d_u}, {"theta_hat", nullptr}};
  for (int i = 0; i < md.m; ++i) r["wage"].push_back(md.wage(i));
  if (o.du_control.has_value() != o.du_treated.has_value()) throw UsageError("--du-control and --du-treated go together");
  std::optional<std::pair<double, double>> du;
  if (o.du_control) {
    du = {*o.du_control, *o.du_treated};
  } else if (md.omega == 1) {
    // round trip through the model's own hazards
    auto c = md;
    c.theta = 0.0;
    du = {unemployment_hazard(c), hz.d_u};
  }
  if (du) {
    auto rec = recover_theta(du->first, du->second, md);
    r["theta_hat"] = rec.theta;
    r["lambda_hat"] = rec.lambda;
  }
  return r;
}

// --- markdown -------------------------------------------------------------

std::string cell(const json& v) {
  if (v.is_null()) return "null";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_primitive(); })) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + cell(v[i]);
    return s;
  }
  return v.dump();
}

void flatten(const json& v, const std::string& key, std::vector<std::pair<std::string, std::string>>& rows) {
  if (v.is_object()) {
    for (auto it = v.begin(); it != v.end(); ++it) flatten(it.value(), key.empty() ? it.key() : key + "." + it.key(), rows);
  } else if (v.is_array() && !v.empty() && !std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_primitive(); })) {
    for (std::size_t i = 0; i < v.size(); ++i) flatten(v[i], key + "[" + std::to_string(i) + "]", rows);
  } else {
    rows.emplace_back(key, cell(v));
  }
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << v;
  return s.str();
}

std::string markdown(const json& rep) {
  std::ostringstream md;
  md << "# ltpi " << rep["command"].get<std::string>() << "\n\n";
  md << "- version: " << rep["version"].get<std::string>() << "\n";
  md << "- seed: " << rep["seed"].dump() << "\n";
  md << "- wall_clock_s: " << rep["wall_clock_s"].dump() << "\n\n";
  md << "## Config\n\n| key | value |\n|---|---|\n";
  for (auto it = rep["config"].begin(); it != rep["config"].end(); ++it) md << "| " << it.key() << " | " << cell(it.value()) << " |\n";
  if (rep.contains("error")) {
    md << "\n## Error\n\n| key | value |\n|---|---|\n";
    std::vector<std::pair<std::string, std::string>> rows;
    flatten(rep["error"], "", rows);
    for (auto& [k, v] : rows) md << "| " << k << " | " << v << " |\n";
    return md.str();
  }
  const auto& r = rep["result"];
  if (rep["command"] == "estimate") {
    const auto& e = r["estimands"];
    md << "\n## Estimates\n\n| Naive | LU | ECB | NSD ATETS | Worst-case bounds |\n|---|---|---|---|---|\n";
    md << "| " << fmt(e["naive"]["value"]) << " | " << fmt(e["lu"]["value"]) << " | " << fmt(e["ecb"]["value"]) << " | "
       << fmt(e["nsd_atets"]["value"]) << " | [" << fmt(r["worstcase"]["lower"]) << ", " << fmt(r["worstcase"]["upper"])
       << "] |\n";
  }
  md << "\n## Result\n\n| key | value |\n|---|---|\n";
  std::vector<std::pair<std::string, std::string>> rows;
  flatten(r, "", rows);
  for (auto& [k, v] : rows) md << "| " << k << " | " << v << " |\n";
  return md.str();
}

void clear_negative_zero(json& v) {
  if (v.is_number_float() && v.get<double>() == 0.0) v = 0.0;
  else if (v.is_structured())
    for (auto& e : v) clear_negative_zero(e);
}

int exit_code(errc c) { return c == errc::invalid_argument ? 2 : 3; }

json error_json(const error& e) {
  json d = e.detail();
  if (!e.detail().empty() && (e.detail().front() == '{' || e.detail().front() == '[')) {
    try {
      d = json::parse(e.detail());
    } catch (const json::exception&) {
    }
  }
  return {{"code", errc_name(e.code())}, {"message", e.what()}, {"detail", d}};
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Long-term treatment effects: point estimates, sharp bounds, tests and simulation", "ltpi"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  auto common = [&](CLI::App* s, bool data) {
    s->add_option("--format", o.format, "json or markdown")->check(CLI::IsMember({"json", "markdown"}));
    s->add_option("--output", o.output, "report path (default stdout)");
    s->add_option("--seed", o.seed, "random seed");
    s->add_flag("--timing", o.timing, "record wall-clock seconds (breaks byte-identical reports)");
    if (data) {
      s->add_option("--input", o.input, "CSV with header y2,y1,w,x,g")->required();
      s->add_option("--cells", o.cells, "number of covariate cells")->check(CLI::PositiveNumber);
    }
  };
  auto* est = app.add_subcommand("estimate", "point estimands and bracketing");
  common(est, true);
  est->add_option("--kappa-d", o.kappa_d, "demand elasticity for the equilibrium correction");
  est->add_option("--kappa-s", o.kappa_s, "supply elasticity for the equilibrium correction");
  common(app.add_subcommand("bounds", "closed-form worst-case and copula bounds"), true);
  auto* sh = app.add_subcommand("sharp-set", "sharp identified set by linear programming");
  common(sh, true);
  sh->add_flag("--iv", o.rs.iv, "instrument independence");
  sh->add_flag("--ev", o.rs.ev, "external validity");
  sh->add_flag("--lu", o.rs.lu, "latent unconfoundedness");
  sh->add_flag("--mtr", o.rs.mtr, "monotone treatment response");
  sh->add_flag("--sd", o.rs.sd, "stochastic dominance across samples");
  sh->add_flag("--st", o.rs.st, "stationarity");
  sh->add_flag("--pco", o.rs.pco, "positive correlation of outcomes");
  sh->add_flag("--nsd", o.rs.nsd, "no state dependence");
  sh->add_option("--grid", o.grid, "profiling points per ratio")->check(CLI::Range(2, 10001));
  sh->add_option("--max-dims", o.max_dims, "largest full profiling grid dimension");
  sh->add_option("--starts", o.starts, "coordinate-search starts");
  sh->add_flag("--show-q", o.show_q, "include optimizing laws");
  auto* te = app.add_subcommand("test", "moment inequality test");
  common(te, true);
  te->add_option("--which", o.which)->check(CLI::IsMember({"fosd", "external-validity"}));
  te->add_option("--assumption", o.assumption)->check(CLI::IsMember({"none", "sd", "lqd", "sdl", "het", "ex", "miv"}));
  te->add_option("--alpha", o.alpha);
  te->add_option("--boot", o.boot);
  auto* dm = app.add_subcommand("dml", "cross-fitted estimate under no state dependence");
  common(dm, true);
  dm->add_option("--folds", o.folds);
  dm->add_option("--alpha", o.alpha);
  auto* se = app.add_subcommand("sensitivity", "bias of the equi-confounding estimand");
  common(se, true);
  se->add_option("--rho", o.rho, "persistence values")->expected(1, -1);
  auto* si = app.add_subcommand("simulate", "simulate a panel and diagnose assumptions");
  common(si, false);
  si->add_option("--config", o.config, "JSON with outcome and selection")->required();
  si->add_option("--n", o.n, "number of units");
  si->add_option("--data", o.data_out, "write the combined dataset CSV here");
  auto* js = app.add_subcommand("jobsearch", "on-the-job search model");
  common(js, false);
  js->add_option("--config", o.config, "JSON model")->required();
  js->add_option("--du-control", o.du_control);
  js->add_option("--du-treated", o.du_treated);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  json rep{{"tool", "ltpi"}, {"version", kVersion}, {"command", cmd}, {"config", config_echo(cmd, o)}, {"seed", o.seed},
           {"wall_clock_s", nullptr}};
  auto t0 = std::chrono::steady_clock::now();
  int code = 0;
  try {
    json r;
    if (cmd == "estimate") r = run_estimate(o);
    else if (cmd == "bounds") r = run_bounds(o);
    else if (cmd == "sharp-set") r = run_sharp_set(o);
    else if (cmd == "test") r = run_test(o);
    else if (cmd == "dml") r = run_dml(o);
    else if (cmd == "sensitivity") r = run_sensitivity(o);
    else if (cmd == "simulate") r = run_simulate(o);
    else r = run_jobsearch(o);
    rep["result"] = std::move(r);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << app.get_subcommand(cmd)->help();
    return 2;
  } catch (const error& e) {
    err << "error: " << e.what() << "\n";
    rep["error"] = error_json(e);
    code = exit_code(e.code());
  } catch (const json::exception& e) {
    err << "error: malformed config: " << e.what() << "\n";
    rep["error"] = {{"code", "InvalidArgument"}, {"message", e.what()}, {"detail", ""}};
    code = 2;
  }
  if (o.timing) rep["wall_clock_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  clear_negative_zero(rep);
  std::string text = o.format == "markdown" ? markdown(rep) : rep.dump(2) + "\n";
  if (o.output.empty()) {
    out << text;
  } else {
    std::ofstream f(o.output, std::ios::binary);
    if (!f) {
      err << "error: cannot write " << o.output << "\n";
      return 3;
    }
    f << text;
  }
  return code;
}

}  // namespace ltpi
