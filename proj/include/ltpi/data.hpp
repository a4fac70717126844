#pragma once

#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ltpi/error.hpp"

namespace ltpi {

enum class Sample : int { E = 0, O = 1 };

inline const char* sample_name(Sample g) { return g == Sample::E ? "E" : "O"; }

struct Observation {
  std::optional<int> y2;  // absent for experimental rows
  int y1 = 0;
  int w = 0;
  int x = 0;
  Sample g = Sample::O;
  std::optional<int> v;  // optional discrete instrument
};

struct CombinedDataset {
  std::vector<Observation> observations;
  int n_cells = 1;
  std::size_t n_e = 0;
  std::size_t n_o = 0;
};

struct RestrictionSet {
  bool iv = false, ev = false, lu = false, mtr = false, sd = false, st = false, pco = false, nsd = false;

  std::string label() const {
    std::string s;
    auto add = [&](bool on, const char* name) {
      if (!on) return;
      if (!s.empty()) s += "+";
      s += name;
    };
    add(iv, "iv"), add(ev, "ev"), add(lu, "lu"), add(mtr, "mtr");
    add(sd, "sd"), add(st, "st"), add(pco, "pco"), add(nsd, "nsd");
    return s.empty() ? "none" : s;
  }
};

// Sufficient statistic for every estimator: per-cell pmfs plus cell weights.
// O pmf index is y2*4 + y1*2 + w, E pmf index is y1*2 + w (lexicographic).
struct CellTable {
  int n_cells = 0;
  std::vector<std::array<double, 8>> o;
  std::vector<std::array<double, 4>> e;
  std::vector<double> fx_o, fx_e;
  std::vector<std::size_t> n_o, n_e;  // all zero for population tables
  double p_o = 0.5;                   // share of O in the pooled population

  static constexpr int oi(int y2, int y1, int w) { return y2 * 4 + y1 * 2 + w; }
  static constexpr int ei(int y1, int w) { return y1 * 2 + w; }

  double fx(int x, Sample g) const { return g == Sample::O ? fx_o[x] : fx_e[x]; }

  // P(W=w | x, g)
  double pw(int w, int x, Sample g) const {
    double s = 0.0;
    if (g == Sample::O) {
      for (int y2 = 0; y2 < 2; ++y2)
        for (int y1 = 0; y1 < 2; ++y1) s += o[x][oi(y2, y1, w)];
    } else {
      for (int y1 = 0; y1 < 2; ++y1) s += e[x][ei(y1, w)];
    }
    return s;
  }

  // f(w, x | g)
  double fwx(int w, int x, Sample g) const { return fx(x, g) * pw(w, x, g); }

  // P(Y1=y1, W=w | x, g)
  double py1w(int y1, int w, int x, Sample g) const {
    if (g == Sample::E) return e[x][ei(y1, w)];
    return o[x][oi(0, y1, w)] + o[x][oi(1, y1, w)];
  }

  bool population() const {
    for (auto c : n_o)
      if (c) return false;
    for (auto c : n_e)
      if (c) return false;
    return true;
  }
};

inline void validate(const CellTable& ct, double tol = 1e-12) {
  auto bad = [](const std::string& m) { throw error(errc::invalid_argument, m); };
  if (ct.n_cells < 1) bad("cell table needs at least one covariate cell");
  const auto n = static_cast<std::size_t>(ct.n_cells);
  if (ct.o.size() != n || ct.e.size() != n || ct.fx_o.size() != n || ct.fx_e.size() != n)
    bad("cell table arrays disagree with n_cells");
  if (!(ct.p_o > 0.0 && ct.p_o < 1.0)) bad("P(G=O) must lie strictly inside (0,1)");
  double so = 0.0, se = 0.0;
  for (std::size_t x = 0; x < n; ++x) {
    double a = 0.0, b = 0.0;
    for (double m : ct.o[x]) {
      if (!(m >= 0.0)) bad("negative or NaN mass in O cell " + std::to_string(x));
      a += m;
    }
    for (double m : ct.e[x]) {
      if (!(m >= 0.0)) bad("negative or NaN mass in E cell " + std::to_string(x));
      b += m;
    }
    if (std::abs(a - 1.0) > tol) bad("O pmf in cell " + std::to_string(x) + " does not sum to 1");
    if (std::abs(b - 1.0) > tol) bad("E pmf in cell " + std::to_string(x) + " does not sum to 1");
    if (ct.fx_o[x] < 0.0 || ct.fx_e[x] < 0.0) bad("negative cell weight");
    so += ct.fx_o[x];
    se += ct.fx_e[x];
  }
  if (std::abs(so - 1.0) > tol || std::abs(se - 1.0) > tol) bad("cell weights do not sum to 1");
}

namespace detail {

inline std::string trim(std::string s) {
  auto issp = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && issp(s.back())) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && issp(s[i])) ++i;
  return s.substr(i);
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(trim(cur));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline int parse_int(const std::string& s, std::size_t line, const char* col) {
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(s, &pos);
  } catch (...) {
    pos = 0;
  }
  if (s.empty() || pos != s.size())
    throw error(errc::malformed_row,
                "line " + std::to_string(line) + ": column " + col + " is not an integer: '" + s + "'");
  return v;
}

inline int parse_binary(const std::string& s, std::size_t line, const char* col) {
  int v = parse_int(s, line, col);
  if (v != 0 && v != 1)
    throw error(errc::malformed_row,
                "line " + std::to_string(line) + ": column " + col + " must be 0 or 1, got " + s);
  return v;
}

}  // namespace detail

// CSV with header y2,y1,w,x,g and an optional trailing v column.
inline CombinedDataset ingest(std::istream& in, int n_cells) {
  if (n_cells < 1) throw error(errc::invalid_argument, "n_cells must be positive");
  CombinedDataset ds;
  ds.n_cells = n_cells;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false, have_v = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    auto f = detail::split_csv(line);
    if (!have_header) {
      std::vector<std::string> want{"y2", "y1", "w", "x", "g"};
      bool ok = f.size() == 5 || (f.size() == 6 && f[5] == "v");
      for (std::size_t i = 0; ok && i < 5; ++i) ok = f[i] == want[i];
      if (!ok) throw error(errc::malformed_row, "line " + std::to_string(lineno) + ": header must be y2,y1,w,x,g[,v]");
      have_v = f.size() == 6;
      have_header = true;
      continue;
    }
    if (f.size() != (have_v ? 6u : 5u))
      throw error(errc::malformed_row, "line " + std::to_string(lineno) + ": wrong number of fields");
    Observation ob;
    std::string g = f[4];
    for (auto& c : g) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (g == "E")
      ob.g = Sample::E;
    else if (g == "O")
      ob.g = Sample::O;
    else
      throw error(errc::malformed_row, "line " + std::to_string(lineno) + ": g must be E or O");
    ob.y1 = detail::parse_binary(f[1], lineno, "y1");
    ob.w = detail::parse_binary(f[2], lineno, "w");
    ob.x = detail::parse_int(f[3], lineno, "x");
    if (ob.x < 0 || ob.x >= n_cells)
      throw error(errc::malformed_row, "line " + std::to_string(lineno) + ": x=" + f[3] + " outside [0," +
                                           std::to_string(n_cells) + ")");
    if (f[0].empty()) {
      if (ob.g == Sample::O)
        throw error(errc::missingness_violation, "line " + std::to_string(lineno) + ": O row without y2");
    } else {
      if (ob.g == Sample::E)
        throw error(errc::missingness_violation, "line " + std::to_string(lineno) + ": E row carries y2");
      ob.y2 = detail::parse_binary(f[0], lineno, "y2");
    }
    if (have_v && !f[5].empty()) ob.v = detail::parse_int(f[5], lineno, "v");
    (ob.g == Sample::E ? ds.n_e : ds.n_o)++;
    ds.observations.push_back(ob);
  }
  if (ds.observations.empty()) throw error(errc::empty_input, "no data rows");
  return ds;
}

inline CellTable tabulate(const CombinedDataset& ds) {
  if (ds.observations.empty()) throw error(errc::empty_input, "no data rows");
  const int nc = ds.n_cells;
  CellTable ct;
  ct.n_cells = nc;
  std::vector<std::array<std::size_t, 8>> co(nc);
  std::vector<std::array<std::size_t, 4>> ce(nc);
  for (auto& a : co) a.fill(0);
  for (auto& a : ce) a.fill(0);
  ct.n_o.assign(nc, 0);
  ct.n_e.assign(nc, 0);
  std::size_t no = 0, ne = 0;
  for (const auto& ob : ds.observations) {
    if (ob.x < 0 || ob.x >= nc) throw error(errc::malformed_row, "x outside declared cells");
    if (ob.g == Sample::O) {
      if (!ob.y2) throw error(errc::missingness_violation, "O row without y2");
      ++co[ob.x][CellTable::oi(*ob.y2, ob.y1, ob.w)];
      ++ct.n_o[ob.x];
      ++no;
    } else {
      if (ob.y2) throw error(errc::missingness_violation, "E row carries y2");
      ++ce[ob.x][CellTable::ei(ob.y1, ob.w)];
      ++ct.n_e[ob.x];
      ++ne;
    }
  }
  if (no == 0) throw error(errc::empty_cell, "observational sample is empty", "g=O");
  if (ne == 0) throw error(errc::empty_cell, "experimental sample is empty", "g=E");
  ct.o.resize(nc);
  ct.e.resize(nc);
  ct.fx_o.resize(nc);
  ct.fx_e.resize(nc);
  for (int x = 0; x < nc; ++x) {
    for (Sample g : {Sample::E, Sample::O}) {
      std::size_t n = g == Sample::O ? ct.n_o[x] : ct.n_e[x];
      if (n == 0) {
        std::string cell = "x=" + std::to_string(x) + ", g=" + sample_name(g);
        throw error(errc::empty_cell, "no observations in cell (" + cell + ")", cell);
      }
    }
    for (int k = 0; k < 8; ++k) ct.o[x][k] = static_cast<double>(co[x][k]) / static_cast<double>(ct.n_o[x]);
    for (int k = 0; k < 4; ++k) ct.e[x][k] = static_cast<double>(ce[x][k]) / static_cast<double>(ct.n_e[x]);
    ct.fx_o[x] = static_cast<double>(ct.n_o[x]) / static_cast<double>(no);
    ct.fx_e[x] = static_cast<double>(ct.n_e[x]) / static_cast<double>(ne);
  }
  ct.p_o = static_cast<double>(no) / static_cast<double>(no + ne);
  return ct;
}

enum class Var { Y2, Y1, W };

// Conditioning event within one sample; -1 leaves a coordinate free.
struct Event {
  Sample g = Sample::O;
  int y2 = -1, y1 = -1, w = -1, x = -1;
};

// P(event | G=g), mixing cells by f(x|g).
inline double prob(const CellTable& ct, const Event& ev) {
  if (ev.g == Sample::E && ev.y2 != -1)
    throw error(errc::invalid_argument, "y2 is not observed in the experimental sample");
  auto match = [](int want, int v) { return want == -1 || want == v; };
  double s = 0.0;
  for (int x = 0; x < ct.n_cells; ++x) {
    if (!match(ev.x, x)) continue;
    double in = 0.0;
    for (int y1 = 0; y1 < 2; ++y1)
      for (int w = 0; w < 2; ++w) {
        if (!match(ev.y1, y1) || !match(ev.w, w)) continue;
        if (ev.g == Sample::E) {
          in += ct.e[x][CellTable::ei(y1, w)];
        } else {
          for (int y2 = 0; y2 < 2; ++y2)
            if (match(ev.y2, y2)) in += ct.o[x][CellTable::oi(y2, y1, w)];
        }
      }
    s += ct.fx(x, ev.g) * in;
  }
  return s;
}

inline std::string describe(const Event& ev) {
  std::string s = std::string("g=") + sample_name(ev.g);
  if (ev.y2 != -1) s += ", y2=" + std::to_string(ev.y2);
  if (ev.y1 != -1) s += ", y1=" + std::to_string(ev.y1);
  if (ev.w != -1) s += ", w=" + std::to_string(ev.w);
  if (ev.x != -1) s += ", x=" + std::to_string(ev.x);
  return s;
}

// E[target | event] as an exact ratio of tabulated masses.
inline double cond_mean(const CellTable& ct, Var target, const Event& cond) {
  double den = prob(ct, cond);
  if (!(den > 0.0))
    throw error(errc::zero_conditioning_mass, "conditioning event (" + describe(cond) + ") has zero mass",
                describe(cond));
  Event num = cond;
  int* slot = target == Var::Y2 ? &num.y2 : target == Var::Y1 ? &num.y1 : &num.w;
  if (*slot == 0) return 0.0;
  *slot = 1;
  return prob(ct, num) / den;
}

inline nlohmann::json to_json(const CellTable& ct) {
  nlohmann::json cells = nlohmann::json::array();
  for (int x = 0; x < ct.n_cells; ++x) {
    cells.push_back({{"cell", x}, {"g", "E"}, {"weight", ct.fx_e[x]}, {"n", ct.n_e[x]},
                     {"pmf", std::vector<double>(ct.e[x].begin(), ct.e[x].end())}});
    cells.push_back({{"cell", x}, {"g", "O"}, {"weight", ct.fx_o[x]}, {"n", ct.n_o[x]},
                     {"pmf", std::vector<double>(ct.o[x].begin(), ct.o[x].end())}});
  }
  return cells;
}

}  // namespace ltpi
