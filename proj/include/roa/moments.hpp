// Lebesgue moments of monomials over balls and over B(0,R) minus a seed set.

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <vector>

#include "roa/poly.hpp"

namespace roa {

// X_inf = {x : q(x) < alpha}.
struct SeedSet {
  Polynomial q;
  double alpha = 0.0;
};

struct MomentVector {
  std::map<Monomial, double, GradedLex> entries;
  // Monte-Carlo standard error per entry; zero on the closed-form path.
  std::map<Monomial, double, GradedLex> std_errors;

  double at(const Monomial& m) const { return entries.at(m); }
};

// Integral of prod x_i^kappa_i over {||x||^2 <= radius_sq} in R^n, n = kappa.size().
inline double ball_moment(const std::vector<int>& kappa, double radius_sq) {
  if (!(radius_sq > 0.0)) throw std::invalid_argument("ball radius must be positive");
  if (kappa.empty()) throw std::invalid_argument("ball moment needs at least one dimension");
  int total = 0;
  double log_num = 0.0;
  for (int k : kappa) {
    if (k < 0) throw std::invalid_argument("negative exponent");
    if (k % 2 != 0) return 0.0;
    total += k;
    log_num += std::lgamma(0.5 * (k + 1));
  }
  const double n = static_cast<double>(kappa.size());
  const double s = 0.5 * (n + total);
  return std::exp(log_num - std::lgamma(s + 1.0) + s * std::log(radius_sq));
}

// Moment of the first n exponents of `kappa` (the state block).
inline double ball_moment(const Monomial& kappa, double radius_sq, std::size_t n) {
  if (!kappa.supported_on_first(n)) {
    throw std::invalid_argument("moment monomial involves non-state variables");
  }
  std::vector<int> k(kappa.exponents().begin(), kappa.exponents().begin() + n);
  return ball_moment(k, radius_sq);
}

// q == x_1^2 + ... + x_n^2 exactly.
inline bool is_ball_seed(const Polynomial& q, std::size_t n) {
  Polynomial ref(q.nvars());
  for (std::size_t i = 0; i < n; ++i) ref.add_term(Monomial::unit(q.nvars(), i, 2), 1.0);
  return q == ref;
}

// Uniform point in {||x||^2 <= radius_sq}, written into the first n slots.
template <class Rng>
void sample_ball(Rng& rng, std::size_t n, double radius_sq, double* out) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = gauss(rng);
      norm2 += out[i] * out[i];
    }
  } while (norm2 == 0.0);
  const double r = std::sqrt(radius_sq) * std::pow(unif(rng), 1.0 / static_cast<double>(n));
  const double scale = r / std::sqrt(norm2);
  for (std::size_t i = 0; i < n; ++i) out[i] *= scale;
}

struct MomentOptions {
  std::size_t mc_samples = 1000000;
  std::uint64_t seed = 1;
};

// l_kappa = integral of x^kappa over B(0,R) \ X_inf, for every basis monomial.
// basis monomials live in the full universe but may only involve the first n
// (state) variables.
inline MomentVector objective_vector(const std::vector<Monomial>& basis, double R,
                                     const SeedSet& seed, std::size_t n,
                                     const MomentOptions& opts = {}) {
  MomentVector out;
  if (is_ball_seed(seed.q, n)) {
    if (!(seed.alpha < R)) throw std::invalid_argument("seed ball is not inside B(0,R)");
    for (const auto& m : basis) {
      out.entries[m] = ball_moment(m, R, n) - ball_moment(m, seed.alpha, n);
      out.std_errors[m] = 0.0;
    }
    return out;
  }

  const std::size_t N = opts.mc_samples;
  if (N == 0) throw std::invalid_argument("Monte-Carlo moments need samples");
  std::mt19937_64 rng(opts.seed);
  CompiledPolynomial q(seed.q);
  std::vector<double> pt(seed.q.nvars(), 0.0);
  std::vector<double> scratch;

  // Seed points found in a shell outside the ball mean X_inf is not contained.
  const std::size_t probe = std::max<std::size_t>(N / 10, 1000);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t s = 0; s < probe; ++s) {
    sample_ball(rng, n, 4.0 * R, pt.data());
    double r2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) r2 += pt[i] * pt[i];
    if (r2 > R && q(pt.data(), scratch) < seed.alpha) {
      throw std::invalid_argument("seed set is not contained in B(0,R)");
    }
  }

  const double vol = ball_moment(std::vector<int>(n, 0), R);
  std::vector<double> sum(basis.size(), 0.0), sum2(basis.size(), 0.0);
  for (std::size_t s = 0; s < N; ++s) {
    sample_ball(rng, n, R, pt.data());
    if (!(q(pt.data(), scratch) < seed.alpha)) continue;
    for (std::size_t b = 0; b < basis.size(); ++b) {
      double v = 1.0;
      for (std::size_t i = 0; i < n; ++i) {
        for (int e = 0; e < basis[b][i]; ++e) v *= pt[i];
      }
      sum[b] += v;
      sum2[b] += v * v;
    }
  }
  const double dn = static_cast<double>(N);
  for (std::size_t b = 0; b < basis.size(); ++b) {
    const double mean = sum[b] / dn;
    const double var = std::max(0.0, sum2[b] / dn - mean * mean);
    out.entries[basis[b]] = ball_moment(basis[b], R, n) - vol * mean;
    out.std_errors[basis[b]] = vol * std::sqrt(var / dn);
  }
  return out;
}

}  // namespace roa
