// JSON system/certificate/report files and CSV grids.
//
// Polynomials are arrays of terms {"c": coefficient, "e": [exponents]} with
// one exponent per variable of state_vars ++ perturb_vars.

#pragma once

#include <algorithm>
#include <fstream>
#include <set>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "roa/poly.hpp"
#include "roa/system.hpp"
#include "roa/verify.hpp"
#include "roa/zubov.hpp"

namespace roa {

using json = nlohmann::json;

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline json to_json(const Polynomial& p) {
  json arr = json::array();
  for (const auto& [m, c] : p.terms()) arr.push_back({{"c", c}, {"e", m.exponents()}});
  return arr;
}

inline Polynomial polynomial_from_json(const json& j, std::size_t nvars, const std::string& where) {
  if (!j.is_array()) throw InputError(where + ": polynomial must be an array of terms");
  Polynomial p(nvars);
  for (const auto& t : j) {
    if (!t.is_object() || !t.contains("c") || !t.contains("e")) {
      throw InputError(where + ": each term needs \"c\" and \"e\"");
    }
    if (!t["c"].is_number()) throw InputError(where + ": coefficient must be a number");
    const auto& e = t["e"];
    if (!e.is_array() || e.size() != nvars) {
      throw InputError(where + ": exponent array must have " + std::to_string(nvars) + " entries");
    }
    std::vector<int> ex;
    for (const auto& v : e) {
      if (!v.is_number_integer() || v.get<int>() < 0) throw InputError(where + ": exponents must be non-negative integers");
      ex.push_back(v.get<int>());
    }
    p.add_term(Monomial(std::move(ex)), t["c"].get<double>());
  }
  return p;
}

inline json to_json(const DegreeConfig& d) {
  return {{"k", d.k}, {"d_s", d.d_s}, {"d_s_prime", d.d_s_prime}, {"unit", to_string(d.unit)}};
}

inline DegreeConfig degrees_from_json(const json& d, const std::string& where) {
  DegreeConfig c;
  try {
    c.k = d.at("k").get<int>();
    c.d_s = d.at("d_s").get<int>();
    c.d_s_prime = d.at("d_s_prime").get<int>();
    const std::string u = d.value("unit", std::string("product"));
    if (u == "multiplier") {
      c.unit = DegreeUnit::Multiplier;
    } else if (u != "product") {
      throw InputError(where + ": degree unit must be \"product\" or \"multiplier\"");
    }
  } catch (const json::exception& e) {
    throw InputError(where + ": degrees need integer k, d_s, d_s_prime");
  }
  return c;
}

struct SystemFile {
  SystemSpec spec;
  std::optional<DegreeConfig> degrees;
  std::string hash;  // SHA-256 of the canonical JSON text
};

inline std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

inline json parse_json_text(const std::string& text, const std::string& name) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // nlohmann reports a byte offset; translate it to line/column.
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw InputError(name + ": JSON parse error at line " + std::to_string(line) + ", column " +
                     std::to_string(col) + ": " + e.what());
  }
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline SystemFile system_from_json(const json& j, const std::string& where = "system") {
  auto need = [&](const char* key) -> const json& {
    if (!j.contains(key)) throw InputError(where + ": missing key \"" + key + "\"");
    return j.at(key);
  };
  SystemFile out;
  SystemSpec& s = out.spec;
  try {
    s.state_names = need("state_vars").get<std::vector<std::string>>();
    s.perturb_names = j.value("perturb_vars", std::vector<std::string>{});
  } catch (const json::exception& e) {
    throw InputError(where + ": variable names must be string arrays");
  }
  s.n = s.state_names.size();
  s.m = s.perturb_names.size();
  const std::size_t N = s.nvars();
  const json& dyn = need("dynamics");
  if (!dyn.is_array() || dyn.size() != s.n) throw InputError(where + ": dynamics must have one entry per state variable");
  for (std::size_t i = 0; i < dyn.size(); ++i) s.f.push_back(polynomial_from_json(dyn[i], N, where + ".dynamics[" + std::to_string(i) + "]"));
  const json& sc = need("state_constraints");
  if (!sc.is_array()) throw InputError(where + ": state_constraints must be an array");
  for (std::size_t i = 0; i < sc.size(); ++i) {
    s.state_constraints.push_back(polynomial_from_json(sc[i], N, where + ".state_constraints[" + std::to_string(i) + "]"));
  }
  if (j.contains("perturb_constraints")) {
    const json& pc = j.at("perturb_constraints");
    if (!pc.is_array()) throw InputError(where + ": perturb_constraints must be an array");
    for (std::size_t i = 0; i < pc.size(); ++i) {
      s.perturb_constraints.push_back(polynomial_from_json(pc[i], N, where + ".perturb_constraints[" + std::to_string(i) + "]"));
    }
  }
  if (j.contains("perturb_ball_R")) {
    const double rd = j.at("perturb_ball_R").get<double>();
    if (!(rd > 0.0)) throw InputError(where + ": perturb_ball_R must be positive");
    Polynomial g(N);
    for (std::size_t i = s.n; i < N; ++i) g.add_term(Monomial::unit(N, i, 2), 1.0 / rd);
    s.perturb_constraints.push_back(g);
  }
  const json& seed = need("seed");
  if (!seed.contains("q") || !seed.contains("alpha")) throw InputError(where + ": seed needs q and alpha");
  s.seed.q = polynomial_from_json(seed.at("q"), N, where + ".seed.q");
  s.seed.alpha = seed.at("alpha").get<double>();
  s.R = need("ball_R").get<double>();
  const json& dl = j.contains("delta") ? j.at("delta") : json(1);
  if (!dl.is_number_integer()) throw InputError(where + ": delta must be an integer");
  s.delta = dl.get<int>();
  if (j.contains("degrees")) {
    out.degrees = degrees_from_json(j.at("degrees"), where + ".degrees");
  }
  out.hash = sha256_hex(j.dump());
  return out;
}

inline SystemFile load_system(const std::string& path) {
  const std::string text = read_text(path);
  return system_from_json(parse_json_text(text, path), path);
}

inline json system_to_json(const SystemSpec& s, const std::optional<DegreeConfig>& deg = std::nullopt) {
  json j;
  j["state_vars"] = s.state_names;
  j["perturb_vars"] = s.perturb_names;
  j["dynamics"] = json::array();
  for (const auto& p : s.f) j["dynamics"].push_back(to_json(p));
  j["state_constraints"] = json::array();
  for (const auto& p : s.state_constraints) j["state_constraints"].push_back(to_json(p));
  j["perturb_constraints"] = json::array();
  for (const auto& p : s.perturb_constraints) j["perturb_constraints"].push_back(to_json(p));
  j["seed"] = {{"q", to_json(s.seed.q)}, {"alpha", s.seed.alpha}};
  j["ball_R"] = s.R;
  j["delta"] = s.delta;
  if (deg) j["degrees"] = to_json(*deg);
  return j;
}

// ---------------------------------------------------------------------------
// Certificates

inline json matrix_to_json(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index k = 0; k < M.cols(); ++k) r.push_back(M(i, k));
    rows.push_back(std::move(r));
  }
  return rows;
}

inline json certificate_to_json(const Certificate& c, const std::string& system_hash) {
  json j;
  j["system_hash"] = system_hash;
  j["u"] = to_json(c.u);
  j["degrees"] = to_json(c.degrees);
  j["objective"] = c.objective_value;
  j["status"] = to_string(c.status);
  j["iterations"] = c.iterations;
  j["residuals"] = {{"primal", c.solver_residuals.primal},
                    {"dual", c.solver_residuals.dual},
                    {"gap", c.solver_residuals.gap},
                    {"reconstruction", c.reconstruction_residual},
                    {"min_gram_eigenvalue", c.min_gram_eigenvalue}};
  j["wall_time_seconds"] = c.solve_seconds;
  j["multipliers"] = json::object();
  for (const auto& [name, p] : c.multipliers) j["multipliers"][name] = to_json(p);
  j["grams"] = json::array();
  for (const auto& g : c.grams) {
    json basis = json::array();
    for (const auto& m : g.basis) basis.push_back(m.exponents());
    j["grams"].push_back({{"name", g.name}, {"basis", basis}, {"factor", to_json(g.factor)}, {"Q", matrix_to_json(g.Q)}});
  }
  j["warnings"] = c.warnings;
  return j;
}

struct CertificateFile {
  Certificate cert;
  std::string system_hash;
};

inline CertificateFile certificate_from_json(const json& j, std::size_t nvars, const std::string& where = "certificate") {
  CertificateFile out;
  Certificate& c = out.cert;
  try {
    out.system_hash = j.at("system_hash").get<std::string>();
    c.u = polynomial_from_json(j.at("u"), nvars, where + ".u");
    c.degrees = degrees_from_json(j.at("degrees"), where + ".degrees");
    c.objective_value = j.at("objective").get<double>();
    const auto& r = j.at("residuals");
    c.solver_residuals = {r.at("primal").get<double>(), r.at("dual").get<double>(), r.at("gap").get<double>()};
    c.reconstruction_residual = r.at("reconstruction").get<double>();
    c.min_gram_eigenvalue = r.at("min_gram_eigenvalue").get<double>();
    c.iterations = j.value("iterations", 0);
    c.solve_seconds = j.value("wall_time_seconds", 0.0);
    for (const auto& g : j.at("grams")) {
      GramBlock b;
      b.name = g.at("name").get<std::string>();
      for (const auto& e : g.at("basis")) {
        auto ex = e.get<std::vector<int>>();
        if (ex.size() != nvars) throw InputError(where + ": Gram basis has wrong dimension");
        b.basis.emplace_back(std::move(ex));
      }
      b.factor = polynomial_from_json(g.at("factor"), nvars, where + ".factor");
      const auto& Q = g.at("Q");
      const auto n = static_cast<Eigen::Index>(b.basis.size());
      if (Q.size() != b.basis.size()) throw InputError(where + ": Gram matrix size mismatch");
      b.Q.resize(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        if (Q[static_cast<std::size_t>(i)].size() != b.basis.size()) throw InputError(where + ": Gram matrix size mismatch");
        for (Eigen::Index k = 0; k < n; ++k) b.Q(i, k) = Q[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
      }
      c.multipliers[b.name] = gram_polynomial(b.basis, b.Q);
      c.grams.push_back(std::move(b));
    }
  } catch (const json::exception& e) {
    throw InputError(where + ": " + e.what());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Grids: header x1,...,xn,value then rows in row-major order (last axis
// fastest).

struct Grid {
  std::vector<std::string> axes;
  std::vector<std::vector<double>> coords;  // one coordinate list per axis
  std::vector<double> values;               // row-major

  std::size_t size() const {
    std::size_t s = 1;
    for (const auto& c : coords) s *= c.size();
    return s;
  }
};

inline void write_grid_csv(const Grid& g, std::ostream& out) {
  for (const auto& a : g.axes) out << a << ',';
  out << "value\n";
  std::vector<std::size_t> idx(g.coords.size(), 0);
  out << std::setprecision(17);
  for (std::size_t k = 0; k < g.values.size(); ++k) {
    for (std::size_t a = 0; a < g.coords.size(); ++a) out << g.coords[a][idx[a]] << ',';
    out << g.values[k] << '\n';
    for (std::size_t a = g.coords.size(); a-- > 0;) {
      if (++idx[a] < g.coords[a].size()) break;
      idx[a] = 0;
    }
  }
}


// Every state coordinate is written; axes outside a slice have one value.
inline Grid to_grid(const RoaGrid& g, const SystemSpec& s) {
  Grid out;
  const auto names = s.names();
  for (std::size_t i = 0; i < s.n; ++i) {
    out.axes.push_back(names[i]);
    out.coords.push_back({g.base[i]});
  }
  for (auto a : g.axes) {
    out.coords[a].clear();
    for (std::size_t i = 0; i < g.resolution; ++i) out.coords[a].push_back(g.coord(i));
  }
  out.values.assign(g.inside.begin(), g.inside.end());
  return out;
}

inline Grid read_grid_csv(std::istream& in, const std::string& where = "grid") {
  Grid g;
  std::string line;
  if (!std::getline(in, line)) throw InputError(where + ": empty grid file");
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) g.axes.push_back(cell);
    if (g.axes.size() < 2 || g.axes.back() != "value") throw InputError(where + ": header must be x1,...,xn,value");
    g.axes.pop_back();
  }
  const std::size_t n = g.axes.size();
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> r;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        r.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw InputError(where + ": line " + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
    if (r.size() != n + 1) throw InputError(where + ": line " + std::to_string(lineno) + ": expected " + std::to_string(n + 1) + " fields");
    rows.push_back(std::move(r));
  }
  g.coords.resize(n);
  for (std::size_t a = 0; a < n; ++a) {
    std::set<double> vals;
    for (const auto& r : rows) vals.insert(r[a]);
    g.coords[a].assign(vals.begin(), vals.end());
  }
  if (rows.size() != g.size()) throw InputError(where + ": row count does not match the axis resolutions");
  for (const auto& r : rows) g.values.push_back(r[n]);
  return g;
}

inline RoaGrid roa_grid_from(const Grid& g, const SystemSpec& s, const std::string& where = "grid") {
  const auto names = s.names();
  if (g.axes.size() != s.n) throw InputError(where + ": grid has " + std::to_string(g.axes.size()) + " axes, system has " + std::to_string(s.n));
  RoaGrid out;
  out.base.assign(s.n, 0.0);
  for (std::size_t a = 0; a < s.n; ++a) {
    if (g.axes[a] != names[a]) throw InputError(where + ": axis " + g.axes[a] + " does not match " + names[a]);
    if (g.coords[a].size() == 1) {
      out.base[a] = g.coords[a][0];
      continue;
    }
    out.axes.push_back(a);
    const auto& c = g.coords[a];
    if (out.resolution == 0) {
      out.resolution = c.size();
      out.half_width = -c.front() + 0.5 * (c[1] - c[0]);
    } else if (out.resolution != c.size()) {
      throw InputError(where + ": all grid axes need the same resolution");
    }
  }
  if (out.axes.empty()) throw InputError(where + ": grid has no varying axis");
  for (double v : g.values) {
    if (v != 0.0 && v != 1.0) throw InputError(where + ": ROA grid values must be 0 or 1");
    out.inside.push_back(v != 0.0 ? 1 : 0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

inline json to_json(const VerificationReport& r) {
  json j;
  j["passed"] = r.passed();
  j["tolerance"] = kVerifyTolerance;
  j["n_samples"] = r.n_samples;
  j["seed"] = r.seed;
  j["margins"] = {{"decrease", r.margins.decrease}, {"inside", r.margins.inside}, {"outside", r.margins.outside},
                  {"min", r.margins.min_margin()}};
  json tel = json::array();
  for (const auto& t : r.margins.telemetry) {
    tel.push_back({{"domain", t.domain}, {"accepted", t.accepted}, {"attempts", t.attempts},
                   {"acceptance_rate", t.acceptance_rate()}});
  }
  j["sampling"] = tel;
  j["min_gram_eigenvalue"] = r.min_gram_eigenvalue;
  j["reconstruction_residual"] = r.reconstruction_residual;
  j["containment_violations"] = r.containment_violations;
  if (r.trajectories) {
    const auto& t = *r.trajectories;
    j["trajectories"] = {{"start_points", t.start_points}, {"converged", t.converged}, {"left_X", t.left_X},
                         {"timeout", t.timeout}};
  }
  if (r.volume_error) {
    const auto& v = *r.volume_error;
    if (v.defined) {
      j["volume_error"] = {{"percent", v.percent}, {"std_error", v.std_error}, {"roa_samples", v.roa_samples}};
    } else {
      j["volume_error"] = {{"percent", nullptr}, {"reason", "simulated ROA is empty"}};
    }
  }
  return j;
}

}  // namespace roa
