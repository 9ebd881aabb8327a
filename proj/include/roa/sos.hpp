// Sum-of-squares program for the robust domain-of-attraction certificate and
// its lowering to an SdpProblem by Gram parameterization and coefficient
// matching.
//
// Decision polynomials: u (free coefficients over a degree-k basis in x) and
// SOS multipliers s = z^T Q z with Q PSD. Identities:
//
//  (i)   -grad(u).f - delta q (1 - u)
//          = s0 + s1 h + sum_i s2i (1 - g_i) + s3 (q - alpha)            in (x, d)
//  (ii)  u - 1 = s4j + s5j h + s6j (h_j - 1)                             in x, per j
//  (iii) u + (1 - h_j)^delta - 1
//          = s7j + s8j h + s9j (q - alpha) + sum_l s10lj (1 - h_l)       in x, per j
//
// with h = R - ||x||^2. The objective is the integral of u over
// B(0,R) \ X_inf.

#pragma once

#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "roa/moments.hpp"
#include "roa/poly.hpp"
#include "roa/sdp.hpp"
#include "roa/system.hpp"

namespace roa {

class DegreeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// All monomials of total degree <= max_degree in the variables listed in
// `vars`, embedded in a universe of `nvars` variables; graded-lex order.
inline std::vector<Monomial> monomial_basis(std::size_t nvars, int max_degree,
                                            const std::vector<std::size_t>& vars) {
  std::vector<Monomial> out;
  if (max_degree < 0) return out;
  std::vector<int> e(nvars, 0);
  // Generate per degree in descending-lex order, which is graded-lex.
  std::function<void(std::size_t, int)> rec = [&](std::size_t pos, int remaining) {
    if (pos + 1 == vars.size()) {
      e[vars[pos]] = remaining;
      out.emplace_back(e);
      e[vars[pos]] = 0;
      return;
    }
    for (int k = remaining; k >= 0; --k) {
      e[vars[pos]] = k;
      rec(pos + 1, remaining - k);
    }
    e[vars[pos]] = 0;
  };
  if (vars.empty()) {
    out.emplace_back(e);
    return out;
  }
  for (int d = 0; d <= max_degree; ++d) rec(0, d);
  return out;
}

inline std::vector<Monomial> monomial_basis(std::size_t nvars, int max_degree) {
  std::vector<std::size_t> vars(nvars);
  for (std::size_t i = 0; i < nvars; ++i) vars[i] = i;
  return monomial_basis(nvars, max_degree, vars);
}

// z^T Q z with Q PSD, multiplied by a fixed factor polynomial.
struct GramVariable {
  std::string name;
  std::vector<Monomial> basis;
  std::size_t block_index = 0;
  Polynomial factor;
};

// One (a, b) pair of the upper triangle and how often Q[a,b] enters the
// coefficient (2 off the diagonal, 1 on it).
struct GramTerm {
  std::size_t a = 0;
  std::size_t b = 0;
  int multiplicity = 0;

  bool operator==(const GramTerm&) const = default;
};

inline std::map<Monomial, std::vector<GramTerm>, GradedLex> gram_to_coefficients(const GramVariable& g) {
  std::map<Monomial, std::vector<GramTerm>, GradedLex> out;
  for (std::size_t a = 0; a < g.basis.size(); ++a) {
    for (std::size_t b = a; b < g.basis.size(); ++b) {
      out[g.basis[a] * g.basis[b]].push_back({a, b, a == b ? 1 : 2});
    }
  }
  return out;
}

// z^T Q z as a polynomial (without the factor).
inline Polynomial gram_polynomial(const std::vector<Monomial>& basis, const Eigen::MatrixXd& Q) {
  if (basis.empty()) return Polynomial();
  Polynomial p(basis.front().nvars());
  for (std::size_t a = 0; a < basis.size(); ++a) {
    for (std::size_t b = a; b < basis.size(); ++b) {
      const double w = a == b ? 1.0 : 2.0;
      p.add_term(basis[a] * basis[b], w * Q(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
    }
  }
  return p;
}

// fixed + sum_k c_k lhs_u[k] == sum_g factor_g * (z_g^T Q_g z_g)
struct SosIdentity {
  std::string name;
  Polynomial fixed;
  std::vector<Polynomial> lhs_u;  // aligned with SosProgram::u_basis
  std::vector<std::size_t> grams;
};

struct SosProgram {
  std::size_t n = 0;
  std::size_t nvars = 0;
  std::vector<Monomial> u_basis;
  std::vector<GramVariable> gram_vars;
  std::vector<SosIdentity> identities;
  MomentVector objective;
  DegreeConfig degrees;
  std::vector<std::string> warnings;

  std::size_t identity_count() const { return identities.size(); }
};

// Where each SDP row came from, for certificate extraction and diagnostics.
struct RowOrigin {
  std::size_t identity = 0;
  Monomial monomial;
};

struct LoweredProgram {
  SdpProblem sdp;
  std::vector<RowOrigin> row_origin;
};

namespace detail {

inline std::vector<std::size_t> index_range(std::size_t begin, std::size_t end) {
  std::vector<std::size_t> v;
  for (std::size_t i = begin; i < end; ++i) v.push_back(i);
  return v;
}

}  // namespace detail

inline SosProgram assemble_program(const SystemSpec& spec, const DegreeConfig& cfg,
                                   const MomentOptions& mopts = {}) {
  if (cfg.k < 0 || cfg.d_s < 0 || cfg.d_s_prime < 0) throw DegreeError("degrees must be non-negative");
  if (cfg.d_s % 2 != 0 || cfg.d_s_prime % 2 != 0) throw DegreeError("multiplier degrees must be even");
  if (spec.f.size() != spec.n) throw DimensionError("need one dynamics component per state variable");

  const std::size_t N = spec.nvars();
  SosProgram prog;
  prog.n = spec.n;
  prog.nvars = N;
  prog.degrees = cfg;
  const auto state_vars = detail::index_range(0, spec.n);
  const auto joint_vars = detail::index_range(0, N);
  prog.u_basis = monomial_basis(N, cfg.k, state_vars);

  const Polynomial h = spec.ball_polynomial();
  const Polynomial one = Polynomial::constant(N, 1.0);
  const Polynomial q_minus_alpha = spec.seed.q - Polynomial::constant(N, spec.seed.alpha);

  auto add_gram = [&](SosIdentity& id, const std::string& name, const Polynomial& factor, int budget,
                      const std::vector<std::size_t>& vars) {
    const int sos_degree = cfg.unit == DegreeUnit::Multiplier
                               ? even_floor(budget)
                               : even_floor(budget - std::max(0, factor.degree()));
    if (sos_degree < 0) {
      prog.warnings.push_back("multiplier " + name + " dropped (degree budget below its factor)");
      return;
    }
    GramVariable g;
    g.name = name;
    g.basis = monomial_basis(N, sos_degree / 2, vars);
    g.block_index = prog.gram_vars.size();
    g.factor = factor;
    id.grams.push_back(prog.gram_vars.size());
    prog.gram_vars.push_back(std::move(g));
  };

  // (i) decrease along trajectories on B(0,R) \ X_inf, for all d in D.
  {
    SosIdentity id;
    id.name = "decrease";
    const double delta = spec.delta;
    id.fixed = -delta * spec.seed.q;
    for (const auto& mono : prog.u_basis) {
      const Polynomial mk = Polynomial::monomial(mono);
      id.lhs_u.push_back(-lie_derivative(mk, spec.f) + delta * (spec.seed.q * mk));
    }
    const auto& vars = spec.m > 0 ? joint_vars : state_vars;
    add_gram(id, "s0", one, cfg.d_s, vars);
    add_gram(id, "s1", h, cfg.d_s, vars);
    for (std::size_t i = 0; i < spec.perturb_constraints.size(); ++i) {
      add_gram(id, "s2_" + std::to_string(i + 1), one - spec.perturb_constraints[i], cfg.d_s, vars);
    }
    add_gram(id, "s3", q_minus_alpha, cfg.d_s, vars);
    prog.identities.push_back(std::move(id));
  }

  const std::size_t nx = spec.state_constraints.size();
  // (ii) u >= 1 on B(0,R) \ X.
  for (std::size_t j = 0; j < nx; ++j) {
    SosIdentity id;
    id.name = "outside_" + std::to_string(j + 1);
    id.fixed = -one;
    for (const auto& mono : prog.u_basis) id.lhs_u.push_back(Polynomial::monomial(mono));
    const std::string sfx = "_" + std::to_string(j + 1);
    add_gram(id, "s4" + sfx, one, cfg.d_s_prime, state_vars);
    add_gram(id, "s5" + sfx, h, cfg.d_s_prime, state_vars);
    add_gram(id, "s6" + sfx, spec.state_constraints[j] - one, cfg.d_s_prime, state_vars);
    prog.identities.push_back(std::move(id));
  }
  // (iii) u + (1 - h_j)^delta - 1 >= 0 on closure(X) \ X_inf.
  for (std::size_t j = 0; j < nx; ++j) {
    SosIdentity id;
    id.name = "inside_" + std::to_string(j + 1);
    id.fixed = pow(one - spec.state_constraints[j], spec.delta) - one;
    for (const auto& mono : prog.u_basis) id.lhs_u.push_back(Polynomial::monomial(mono));
    const std::string sfx = "_" + std::to_string(j + 1);
    add_gram(id, "s7" + sfx, one, cfg.d_s_prime, state_vars);
    add_gram(id, "s8" + sfx, h, cfg.d_s_prime, state_vars);
    add_gram(id, "s9" + sfx, q_minus_alpha, cfg.d_s_prime, state_vars);
    for (std::size_t l = 0; l < nx; ++l) {
      add_gram(id, "s10_" + std::to_string(l + 1) + sfx, one - spec.state_constraints[l], cfg.d_s_prime,
               state_vars);
    }
    prog.identities.push_back(std::move(id));
  }

  // Unreachable fixed monomials make the program structurally infeasible.
  for (const auto& id : prog.identities) {
    std::map<Monomial, bool, GradedLex> reach;
    for (const auto& p : id.lhs_u) {
      for (const auto& [mono, c] : p.terms()) reach[mono] = true;
    }
    for (auto gi : id.grams) {
      const auto& g = prog.gram_vars[gi];
      for (std::size_t a = 0; a < g.basis.size(); ++a) {
        for (std::size_t b = a; b < g.basis.size(); ++b) {
          const Monomial zz = g.basis[a] * g.basis[b];
          for (const auto& [t, c] : g.factor.terms()) reach[zz * t] = true;
        }
      }
    }
    for (const auto& [mono, c] : id.fixed.terms()) {
      if (!reach.count(mono)) {
        throw DegreeError("degree deficit in identity '" + id.name + "': monomial " +
                          Polynomial::monomial(mono).to_string(spec.names()) + " is unreachable");
      }
    }
  }

  for (const auto& id : prog.identities) {
    int lhs = 0, rhs = -1;
    for (const auto& p : id.lhs_u) lhs = std::max(lhs, p.degree());
    for (auto gi : id.grams) {
      const auto& g = prog.gram_vars[gi];
      rhs = std::max(rhs, 2 * g.basis.back().degree() + g.factor.degree());
    }
    if (rhs < lhs) {
      prog.warnings.push_back("identity '" + id.name + "' has multiplier degree " + std::to_string(rhs) +
                              " below its u-dependent degree " + std::to_string(lhs) +
                              "; high-degree coefficients of u are forced");
    }
  }

  prog.objective = objective_vector(prog.u_basis, spec.R, spec.seed, spec.n, mopts);
  return prog;
}

inline LoweredProgram lower_to_sdp(const SosProgram& prog) {
  LoweredProgram out;
  SdpProblem& sdp = out.sdp;
  for (const auto& g : prog.gram_vars) sdp.psd_blocks.push_back(g.basis.size());
  sdp.free_dim = prog.u_basis.size();

  for (std::size_t idx = 0; idx < prog.identities.size(); ++idx) {
    const auto& id = prog.identities[idx];
    std::map<Monomial, SdpRow, GradedLex> rows;
    for (const auto& [mono, c] : id.fixed.terms()) rows[mono].rhs = -c;
    for (std::size_t k = 0; k < id.lhs_u.size(); ++k) {
      for (const auto& [mono, c] : id.lhs_u[k].terms()) rows[mono].form.free_terms.push_back({k, c});
    }
    for (auto gi : id.grams) {
      const auto& g = prog.gram_vars[gi];
      for (std::size_t a = 0; a < g.basis.size(); ++a) {
        for (std::size_t b = a; b < g.basis.size(); ++b) {
          const Monomial zz = g.basis[a] * g.basis[b];
          for (const auto& [t, c] : g.factor.terms()) {
            rows[zz * t].form.block_terms.push_back({g.block_index, a, b, -c});
          }
        }
      }
    }
    for (auto& [mono, row] : rows) {
      row.form.canonicalize();
      if (row.form.empty() && row.rhs == 0.0) continue;
      sdp.rows.push_back(std::move(row));
      out.row_origin.push_back({idx, mono});
    }
  }
  for (std::size_t k = 0; k < prog.u_basis.size(); ++k) {
    sdp.objective.free_terms.push_back({k, prog.objective.at(prog.u_basis[k])});
  }
  sdp.objective.canonicalize();
  return out;
}

// Residual polynomial (lhs - rhs) of an identity for given decision values.
inline Polynomial identity_residual(const SosProgram& prog, std::size_t idx, const Polynomial& u,
                                    const std::vector<Polynomial>& gram_polys) {
  const auto& id = prog.identities[idx];
  Polynomial lhs = id.fixed;
  for (std::size_t k = 0; k < prog.u_basis.size(); ++k) {
    const double c = u.coeff(prog.u_basis[k]);
    if (c != 0.0) lhs += c * id.lhs_u[k];
  }
  for (auto gi : id.grams) lhs -= prog.gram_vars[gi].factor * gram_polys[gi];
  return lhs;
}

}  // namespace roa
