// Problem instance and degree configuration shared by assembly, synthesis
// and verification.

#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "roa/moments.hpp"
#include "roa/poly.hpp"

namespace roa {

// Perturbed polynomial system  x' = f(x, d),  d in D,  constrained to X.
//
// All polynomials share the universe [x_1..x_n, d_1..d_m].
//   X = { x : h_j(x) < 1 for all j }      (state_constraints)
//   D = { d : g_i(d) <= 1 for all i }     (perturb_constraints)
//   B(0,R) = { x : ||x||^2 <= R }         (R is the squared radius)
struct SystemSpec {
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<std::string> state_names;
  std::vector<std::string> perturb_names;
  std::vector<Polynomial> f;
  std::vector<Polynomial> state_constraints;
  std::vector<Polynomial> perturb_constraints;
  SeedSet seed;
  double R = 0.0;
  int delta = 1;

  std::size_t nvars() const { return n + m; }

  std::vector<std::string> names() const {
    std::vector<std::string> v = state_names;
    v.insert(v.end(), perturb_names.begin(), perturb_names.end());
    while (v.size() < nvars()) v.push_back("v" + std::to_string(v.size() + 1));
    return v;
  }

  // R - ||x||^2
  Polynomial ball_polynomial() const {
    Polynomial h = Polynomial::constant(nvars(), R);
    for (std::size_t i = 0; i < n; ++i) h.add_term(Monomial::unit(nvars(), i, 2), -1.0);
    return h;
  }
};

// Product: d_s bounds deg(s * factor), so each multiplier gets
// even_floor(d_s - deg factor). Multiplier: d_s is the degree of every s
// itself.
enum class DegreeUnit { Product, Multiplier };

inline const char* to_string(DegreeUnit u) { return u == DegreeUnit::Product ? "product" : "multiplier"; }

// k: degree of u. d_s: degree budget in the decrease identity.
// d_s_prime: degree budget in the two containment identities.
struct DegreeConfig {
  int k = 0;
  int d_s = 0;
  int d_s_prime = 0;
  DegreeUnit unit = DegreeUnit::Product;

  bool operator==(const DegreeConfig&) const = default;
};

inline int even_ceil(int v) { return v % 2 == 0 ? v : v + 1; }
inline int even_floor(int v) { return v >= 0 ? v - (v % 2) : -even_ceil(-v); }

// Smallest even product degrees that leave every left-hand side monomial
// reachable.
inline DegreeConfig default_degrees(const SystemSpec& s, int k) {
  int deg_f = 0;
  for (const auto& fi : s.f) deg_f = std::max(deg_f, fi.degree());
  int deg_h = 0;
  for (const auto& h : s.state_constraints) deg_h = std::max(deg_h, h.degree());
  const int deg_q = std::max(0, s.seed.q.degree());
  DegreeConfig c;
  c.k = k;
  c.d_s = even_ceil(std::max(k - 1 + deg_f, k + deg_q));
  c.d_s_prime = even_ceil(std::max({k, s.delta * deg_h, deg_q}));
  return c;
}

}  // namespace roa
