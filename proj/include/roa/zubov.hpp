// End-to-end synthesis of a robust domain-of-attraction certificate.
//
// If u solves the SOS program then { x in B(0,R) : u(x) < 1 } is a robust
// domain of attraction: every trajectory started there stays in X under any
// admissible perturbation and reaches the seed set X_inf.

#pragma once

#include <chrono>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "roa/moments.hpp"
#include "roa/poly.hpp"
#include "roa/sdp_solver.hpp"
#include "roa/sos.hpp"
#include "roa/system.hpp"

namespace roa {

struct Violation {
  std::string code;
  std::string message;
  bool hard = true;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SynthesisFailure : public std::runtime_error {
 public:
  SynthesisFailure(SdpStatus status, SdpSolution best, const std::string& what)
      : std::runtime_error(what), status_(status), best_(std::move(best)) {}
  SdpStatus status() const { return status_; }
  const SdpSolution& best_iterate() const { return best_; }

 private:
  SdpStatus status_;
  SdpSolution best_;
};

struct GramBlock {
  std::string name;
  std::vector<Monomial> basis;
  Polynomial factor;
  Eigen::MatrixXd Q;
};

struct Certificate {
  Polynomial u;
  std::map<std::string, Polynomial> multipliers;
  std::vector<GramBlock> grams;
  double objective_value = 0.0;
  DegreeConfig degrees;
  SdpResiduals solver_residuals;
  SdpStatus status = SdpStatus::Optimal;
  int iterations = 0;
  double reconstruction_residual = 0.0;
  double min_gram_eigenvalue = 0.0;
  double solve_seconds = 0.0;
  std::vector<std::string> warnings;
};

// Tolerance used for the soundness checks on every certificate.
inline constexpr double kCertificateTolerance = 1e-6;
// contains() treats u < 1 - margin as inside.
inline constexpr double kSublevelMargin = 1e-6;

namespace detail {

template <class Rng>
std::vector<double> random_state(Rng& rng, const SystemSpec& s, double radius_sq) {
  std::vector<double> pt(s.nvars(), 0.0);
  sample_ball(rng, s.n, radius_sq, pt.data());
  return pt;
}

inline bool is_perturbation_ball(const Polynomial& g, std::size_t n, std::size_t m) {
  if (g.size() != m) return false;
  double c = 0.0;
  for (const auto& [mono, coef] : g.terms()) {
    bool ok = false;
    for (std::size_t i = n; i < n + m; ++i) {
      if (mono == Monomial::unit(n + m, i, 2)) ok = true;
    }
    if (!ok || !(coef > 0.0)) return false;
    if (c == 0.0) c = coef;
    if (coef != c) return false;
  }
  return true;
}

}  // namespace detail

inline std::vector<Violation> validate(const SystemSpec& s, std::size_t samples = 10000, std::uint64_t seed = 7) {
  std::vector<Violation> out;
  const std::size_t N = s.nvars();
  auto hard = [&](const std::string& code, const std::string& msg) { out.push_back({code, msg, true}); };

  if (s.n == 0) hard("dimension", "state dimension must be positive");
  if (s.f.size() != s.n) hard("dynamics", "need one dynamics component per state variable");
  auto dims_ok = [&](const Polynomial& p) { return p.nvars() == N; };
  for (const auto& p : s.f) {
    if (!dims_ok(p)) hard("dimension", "dynamics polynomial has wrong variable count");
  }
  for (const auto& p : s.state_constraints) {
    if (!dims_ok(p)) hard("dimension", "state constraint has wrong variable count");
  }
  for (const auto& p : s.perturb_constraints) {
    if (!dims_ok(p)) hard("dimension", "perturbation constraint has wrong variable count");
  }
  if (!dims_ok(s.seed.q)) hard("dimension", "seed polynomial has wrong variable count");
  if (s.delta <= 0 || s.delta % 2 == 0) hard("delta", "δ must be odd");
  if (!(s.R > 0.0)) hard("ball", "R must be positive");
  if (!(s.seed.alpha > 0.0)) hard("seed", "alpha must be positive");
  if (s.state_constraints.empty()) hard("state_set", "at least one state constraint is required");
  if (!out.empty()) return out;

  for (std::size_t i = 0; i < s.n; ++i) {
    Polynomial p = s.f[i];
    for (std::size_t v = 0; v < s.n; ++v) p = substitute(p, v, 0.0);
    if (!p.is_zero()) hard("equilibrium", "f(0,d) ≠ 0 in component " + std::to_string(i + 1));
  }
  for (std::size_t j = 0; j < s.state_constraints.size(); ++j) {
    const auto& h = s.state_constraints[j];
    if (!h.supported_on_first(s.n)) hard("state_set", "h_" + std::to_string(j + 1) + " depends on d");
    if (h.coeff(Monomial(N)) != 0.0) hard("state_set", "h_" + std::to_string(j + 1) + "(0) ≠ 0");
  }
  for (std::size_t i = 0; i < s.perturb_constraints.size(); ++i) {
    for (const auto& [mono, c] : s.perturb_constraints[i].terms()) {
      for (std::size_t v = 0; v < s.n; ++v) {
        if (mono[v] != 0) hard("perturb_set", "g_" + std::to_string(i + 1) + " depends on x");
      }
    }
  }
  if (!s.seed.q.supported_on_first(s.n)) hard("seed", "q depends on d");
  if (s.seed.q.coeff(Monomial(N)) != 0.0) hard("seed", "q(0) ≠ 0");
  if (s.m > 0) {
    bool has_ball = false;
    for (const auto& g : s.perturb_constraints) has_ball = has_ball || detail::is_perturbation_ball(g, s.n, s.m);
    if (!has_ball) hard("perturb_ball", "D lacks a ball constraint c·||d||² ≤ 1");
  }
  if (!out.empty()) return out;

  std::mt19937_64 rng(seed);
  std::vector<CompiledPolynomial> hs;
  for (const auto& h : s.state_constraints) hs.emplace_back(h);
  CompiledPolynomial q(s.seed.q);
  std::vector<double> scratch;
  bool neg_h = false, seed_outside = false, q_nonpos = false, boundary_touch = false;
  for (std::size_t k = 0; k < samples; ++k) {
    auto pt = detail::random_state(rng, s, s.R);
    bool inside_x = true;
    for (const auto& h : hs) {
      const double v = h(pt.data(), scratch);
      if (v < 0.0) neg_h = true;
      if (!(v < 1.0)) inside_x = false;
    }
    double r2 = 0.0;
    for (std::size_t i = 0; i < s.n; ++i) r2 += pt[i] * pt[i];
    const double qv = q(pt.data(), scratch);
    if (r2 > 1e-8 && !(qv > 0.0)) q_nonpos = true;
    if (qv < s.seed.alpha && !inside_x) seed_outside = true;

    // Same direction pushed to the sphere ||x||^2 = R.
    if (r2 > 0.0) {
      const double sc = std::sqrt(s.R / r2);
      for (std::size_t i = 0; i < s.n; ++i) pt[i] *= sc;
      bool outside = false;
      for (const auto& h : hs) outside = outside || h(pt.data(), scratch) >= 1.0;
      if (!outside) boundary_touch = true;
    }
  }
  if (neg_h) hard("state_set", "some h_j is negative on sampled points of B(0,R)");
  if (boundary_touch) hard("ball", "X is not strictly inside B(0,R) on sampled boundary points");
  if (q_nonpos) hard("seed", "q is not positive away from the origin");
  if (seed_outside) hard("seed", "{q < alpha} is not contained in X");

  out.push_back({"stability",
                 "exponential stability of the origin is asserted, simulation-checked later", false});
  return out;
}

inline bool has_hard_violation(const std::vector<Violation>& v) {
  for (const auto& x : v) {
    if (x.hard) return true;
  }
  return false;
}

struct SynthesisOptions {
  double tol = 1e-7;
  int max_iter = 200;
  bool verbose = false;
  MomentOptions moments;
};

// Max-coefficient residual of every identity and the smallest Gram eigenvalue.
inline std::pair<double, double> certificate_margins(const SosProgram& prog, const Certificate& c) {
  std::vector<Polynomial> gp;
  double min_eig = std::numeric_limits<double>::infinity();
  for (const auto& g : c.grams) {
    gp.push_back(gram_polynomial(g.basis, g.Q));
    if (g.Q.rows() > 0) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.Q, Eigen::EigenvaluesOnly);
      min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
    }
  }
  double res = 0.0;
  for (std::size_t i = 0; i < prog.identities.size(); ++i) {
    res = std::max(res, identity_residual(prog, i, c.u, gp).max_abs_coeff());
  }
  if (!std::isfinite(min_eig)) min_eig = 0.0;
  return {res, min_eig};
}

inline Certificate extract_certificate(const SosProgram& prog, const SdpSolution& sol) {
  Certificate c;
  c.degrees = prog.degrees;
  c.u = Polynomial(prog.nvars);
  for (std::size_t k = 0; k < prog.u_basis.size(); ++k) {
    c.u.add_term(prog.u_basis[k], sol.free_values(static_cast<Eigen::Index>(k)));
  }
  for (const auto& g : prog.gram_vars) {
    GramBlock b;
    b.name = g.name;
    b.basis = g.basis;
    b.factor = g.factor;
    b.Q = sol.block_values.at(g.block_index);
    c.multipliers[g.name] = gram_polynomial(g.basis, b.Q);
    c.grams.push_back(std::move(b));
  }
  c.objective_value = sol.objective_value;
  c.solver_residuals = sol.residuals;
  c.status = sol.status;
  c.iterations = sol.iterations;
  c.warnings = sol.warnings;
  return c;
}

inline Certificate synthesize(const SystemSpec& spec, const DegreeConfig& cfg, const SynthesisOptions& opts = {}) {
  const auto violations = validate(spec);
  for (const auto& v : violations) {
    if (v.hard) throw ConfigError(v.message);
  }
  const auto t0 = std::chrono::steady_clock::now();
  SosProgram prog = assemble_program(spec, cfg, opts.moments);
  LoweredProgram low = lower_to_sdp(prog);
  SdpOptions so;
  so.tol = opts.tol;
  so.max_iter = opts.max_iter;
  so.verbose = opts.verbose;
  SdpSolution sol = SdpSolver(so).solve(low.sdp);
  const auto t1 = std::chrono::steady_clock::now();
  if (sol.status != SdpStatus::Optimal) {
    const SdpStatus st = sol.status;
    throw SynthesisFailure(st, std::move(sol), std::string("solver returned ") + to_string(st));
  }
  Certificate c = extract_certificate(prog, sol);
  c.solve_seconds = std::chrono::duration<double>(t1 - t0).count();
  c.warnings.insert(c.warnings.end(), prog.warnings.begin(), prog.warnings.end());
  auto [res, eig] = certificate_margins(prog, c);
  c.reconstruction_residual = res;
  c.min_gram_eigenvalue = eig;
  if (res > kCertificateTolerance || eig < -kCertificateTolerance) {
    throw SynthesisFailure(SdpStatus::NumericalTrouble, std::move(sol),
                           "certificate fails soundness margins (residual " + std::to_string(res) +
                               ", min eigenvalue " + std::to_string(eig) + ")");
  }
  return c;
}

inline bool contains(const Certificate& cert, const SystemSpec& spec, const std::vector<double>& point) {
  if (point.size() != spec.n && point.size() != spec.nvars()) {
    throw DimensionError("point must have one entry per state variable");
  }
  std::vector<double> pt(spec.nvars(), 0.0);
  double r2 = 0.0;
  for (std::size_t i = 0; i < spec.n; ++i) {
    pt[i] = point[i];
    r2 += point[i] * point[i];
  }
  if (r2 > spec.R) return false;
  return cert.u.eval(pt) < 1.0 - kSublevelMargin;
}

}  // namespace roa
