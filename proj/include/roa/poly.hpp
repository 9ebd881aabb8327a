// Sparse multivariate polynomials over a fixed, ordered variable universe.
//
// The universe is [x_1..x_n, d_1..d_m]: state variables first, then
// perturbation variables. A state-only polynomial simply carries zero
// exponents on the d-variables. Terms are kept in graded-lex order so that
// coefficient vectors built from them are reproducible.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace roa {

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Exponent tuple, one entry per variable of the ambient universe.
class Monomial {
 public:
  Monomial() = default;
  explicit Monomial(std::size_t nvars) : exps_(nvars, 0) {}
  // Monomial({2}) is x^2, not the unit monomial in two variables.
  explicit Monomial(std::initializer_list<int> exps) : Monomial(std::vector<int>(exps)) {}
  explicit Monomial(std::vector<int> exps) : exps_(std::move(exps)) {
    for (int e : exps_) {
      if (e < 0) throw std::invalid_argument("negative exponent in monomial");
    }
  }

  static Monomial unit(std::size_t nvars, std::size_t var, int power = 1) {
    Monomial m(nvars);
    m.exps_.at(var) = power;
    return m;
  }

  std::size_t nvars() const { return exps_.size(); }
  int degree() const { return std::accumulate(exps_.begin(), exps_.end(), 0); }
  int operator[](std::size_t i) const { return exps_[i]; }
  const std::vector<int>& exponents() const { return exps_; }

  bool is_constant() const {
    for (int e : exps_) {
      if (e != 0) return false;
    }
    return true;
  }

  Monomial operator*(const Monomial& o) const {
    if (o.nvars() != nvars()) throw DimensionError("monomial dimension mismatch");
    Monomial r = *this;
    for (std::size_t i = 0; i < exps_.size(); ++i) r.exps_[i] += o.exps_[i];
    return r;
  }

  // True when every exponent of `o` is <= the matching exponent here.
  bool divisible_by(const Monomial& o) const {
    for (std::size_t i = 0; i < exps_.size(); ++i) {
      if (o.exps_[i] > exps_[i]) return false;
    }
    return true;
  }

  Monomial operator/(const Monomial& o) const {
    Monomial r = *this;
    for (std::size_t i = 0; i < exps_.size(); ++i) {
      r.exps_[i] -= o.exps_[i];
      if (r.exps_[i] < 0) throw std::invalid_argument("monomial not divisible");
    }
    return r;
  }

  // Only the first `k` variables carry non-zero exponents.
  bool supported_on_first(std::size_t k) const {
    for (std::size_t i = k; i < exps_.size(); ++i) {
      if (exps_[i] != 0) return false;
    }
    return true;
  }

  bool operator==(const Monomial& o) const { return exps_ == o.exps_; }
  bool operator!=(const Monomial& o) const { return exps_ != o.exps_; }

 private:
  std::vector<int> exps_;
};

// Graded lexicographic order: lower total degree first; within a degree,
// x1^2 precedes x1*x2 precedes x2^2.
struct GradedLex {
  bool operator()(const Monomial& a, const Monomial& b) const {
    const int da = a.degree();
    const int db = b.degree();
    if (da != db) return da < db;
    const auto& ea = a.exponents();
    const auto& eb = b.exponents();
    for (std::size_t i = 0; i < ea.size() && i < eb.size(); ++i) {
      if (ea[i] != eb[i]) return ea[i] > eb[i];
    }
    return ea.size() < eb.size();
  }
};

class Polynomial {
 public:
  using TermMap = std::map<Monomial, double, GradedLex>;

  Polynomial() = default;
  explicit Polynomial(std::size_t nvars) : nvars_(nvars) {}

  static Polynomial constant(std::size_t nvars, double c) {
    Polynomial p(nvars);
    p.add_term(Monomial(nvars), c);
    return p;
  }

  static Polynomial variable(std::size_t nvars, std::size_t var) {
    if (var >= nvars) throw DimensionError("variable index out of range");
    Polynomial p(nvars);
    p.add_term(Monomial::unit(nvars, var), 1.0);
    return p;
  }

  static Polynomial monomial(const Monomial& m, double c = 1.0) {
    Polynomial p(m.nvars());
    p.add_term(m, c);
    return p;
  }

  std::size_t nvars() const { return nvars_; }
  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  // Adds c to the coefficient of m; exact zeros are removed.
  void add_term(const Monomial& m, double c) {
    if (m.nvars() != nvars_) throw DimensionError("monomial dimension mismatch");
    if (c == 0.0) return;
    auto [it, inserted] = terms_.try_emplace(m, c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0.0) terms_.erase(it);
    }
  }

  double coeff(const Monomial& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? 0.0 : it->second;
  }

  // -1 for the zero polynomial.
  int degree() const {
    int d = -1;
    for (const auto& [m, c] : terms_) d = std::max(d, m.degree());
    return d;
  }

  // Degree counted over the variable index range [begin, end).
  int degree_in(std::size_t begin, std::size_t end) const {
    int d = -1;
    for (const auto& [m, c] : terms_) {
      int s = 0;
      for (std::size_t i = begin; i < end && i < nvars_; ++i) s += m[i];
      d = std::max(d, s);
    }
    return d;
  }

  bool supported_on_first(std::size_t k) const {
    for (const auto& [m, c] : terms_) {
      if (!m.supported_on_first(k)) return false;
    }
    return true;
  }

  Polynomial operator-() const {
    Polynomial r = *this;
    for (auto& [m, c] : r.terms_) c = -c;
    return r;
  }

  Polynomial& operator+=(const Polynomial& o) {
    check_dims(o);
    for (const auto& [m, c] : o.terms_) add_term(m, c);
    return *this;
  }

  Polynomial& operator-=(const Polynomial& o) {
    check_dims(o);
    for (const auto& [m, c] : o.terms_) add_term(m, -c);
    return *this;
  }

  Polynomial& operator*=(double s) {
    if (s == 0.0) {
      terms_.clear();
      return *this;
    }
    for (auto it = terms_.begin(); it != terms_.end();) {
      it->second *= s;
      if (it->second == 0.0) {
        it = terms_.erase(it);
      } else {
        ++it;
      }
    }
    return *this;
  }

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
  friend Polynomial operator*(double s, Polynomial a) { return a *= s; }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    a.check_dims(b);
    Polynomial r(a.nvars_);
    for (const auto& [ma, ca] : a.terms_) {
      for (const auto& [mb, cb] : b.terms_) r.add_term(ma * mb, ca * cb);
    }
    return r;
  }

  bool operator==(const Polynomial& o) const {
    return nvars_ == o.nvars_ && terms_ == o.terms_;
  }
  bool operator!=(const Polynomial& o) const { return !(*this == o); }

  // Direct term summation in graded order.
  double eval(const std::vector<double>& point) const {
    if (point.size() != nvars_) throw DimensionError("evaluation point has wrong length");
    double s = 0.0;
    for (const auto& [m, c] : terms_) {
      double t = c;
      for (std::size_t i = 0; i < nvars_; ++i) {
        for (int e = 0; e < m[i]; ++e) t *= point[i];
      }
      s += t;
    }
    return s;
  }

  // Largest absolute coefficient; 0 for the zero polynomial.
  double max_abs_coeff() const {
    double r = 0.0;
    for (const auto& [m, c] : terms_) r = std::max(r, std::abs(c));
    return r;
  }

  // Re-embeds into a universe of `nvars` variables; variable i maps to
  // index map[i]. Used to lift state-only polynomials into (x, d).
  Polynomial remap(std::size_t nvars, const std::vector<std::size_t>& map) const {
    if (map.size() != nvars_) throw DimensionError("remap table has wrong length");
    Polynomial r(nvars);
    for (const auto& [m, c] : terms_) {
      std::vector<int> e(nvars, 0);
      for (std::size_t i = 0; i < nvars_; ++i) e.at(map[i]) += m[i];
      r.add_term(Monomial(std::move(e)), c);
    }
    return r;
  }

  std::string to_string(const std::vector<std::string>& names = {}) const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    os.precision(17);
    bool first = true;
    for (const auto& [m, c] : terms_) {
      if (!first) os << " + ";
      first = false;
      os << c;
      for (std::size_t i = 0; i < nvars_; ++i) {
        if (m[i] == 0) continue;
        os << " * " << (i < names.size() ? names[i] : "v" + std::to_string(i + 1));
        if (m[i] != 1) os << '^' << m[i];
      }
    }
    return os.str();
  }

 private:
  void check_dims(const Polynomial& o) const {
    if (o.nvars_ != nvars_) throw DimensionError("polynomial dimension mismatch");
  }

  std::size_t nvars_ = 0;
  TermMap terms_;
};

inline Polynomial add(const Polynomial& p, const Polynomial& q) { return p + q; }
inline Polynomial mul(const Polynomial& p, const Polynomial& q) { return p * q; }
inline double eval(const Polynomial& p, const std::vector<double>& point) {
  return p.eval(point);
}

inline Polynomial pow(const Polynomial& p, int e) {
  if (e < 0) throw std::invalid_argument("negative polynomial power");
  Polynomial result = Polynomial::constant(p.nvars(), 1.0);
  Polynomial base = p;
  while (e > 0) {
    if (e & 1) result = result * base;
    e >>= 1;
    if (e > 0) base = base * base;
  }
  return result;
}

inline Polynomial diff(const Polynomial& p, std::size_t var) {
  if (var >= p.nvars()) throw DimensionError("differentiation index out of range");
  Polynomial r(p.nvars());
  for (const auto& [m, c] : p.terms()) {
    if (m[var] == 0) continue;
    std::vector<int> e = m.exponents();
    const int k = e[var]--;
    r.add_term(Monomial(std::move(e)), c * k);
  }
  return r;
}

// sum_i (du/dx_i) f_i over the first f.size() variables.
inline Polynomial lie_derivative(const Polynomial& u, const std::vector<Polynomial>& f) {
  if (f.size() > u.nvars()) throw DimensionError("more vector field components than variables");
  Polynomial r(u.nvars());
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i].nvars() != u.nvars()) throw DimensionError("vector field dimension mismatch");
    r += diff(u, i) * f[i];
  }
  return r;
}

// Substitutes value for variable `var`; the variable stays in the universe
// with exponent zero.
inline Polynomial substitute(const Polynomial& p, std::size_t var, double value) {
  if (var >= p.nvars()) throw DimensionError("substitution index out of range");
  Polynomial r(p.nvars());
  for (const auto& [m, c] : p.terms()) {
    std::vector<int> e = m.exponents();
    double s = c;
    for (int k = 0; k < e[var]; ++k) s *= value;
    e[var] = 0;
    r.add_term(Monomial(std::move(e)), s);
  }
  return r;
}

// Flattened polynomial for hot evaluation loops (simulation, sampling).
class CompiledPolynomial {
 public:
  CompiledPolynomial() = default;
  explicit CompiledPolynomial(const Polynomial& p) : nvars_(p.nvars()) {
    max_exp_.assign(nvars_, 0);
    for (const auto& [m, c] : p.terms()) {
      for (std::size_t i = 0; i < nvars_; ++i) max_exp_[i] = std::max(max_exp_[i], m[i]);
    }
    offsets_.resize(nvars_);
    std::size_t off = 0;
    for (std::size_t i = 0; i < nvars_; ++i) {
      offsets_[i] = off;
      off += static_cast<std::size_t>(max_exp_[i]) + 1;
    }
    table_size_ = off;
    for (const auto& [m, c] : p.terms()) {
      coeffs_.push_back(c);
      for (std::size_t i = 0; i < nvars_; ++i) {
        if (m[i] > 0) index_.push_back(static_cast<std::uint32_t>(offsets_[i] + m[i]));
      }
      term_end_.push_back(static_cast<std::uint32_t>(index_.size()));
    }
  }

  std::size_t nvars() const { return nvars_; }

  // `powers` is caller-owned scratch space reused across calls.
  double operator()(const double* point, std::vector<double>& powers) const {
    powers.resize(table_size_);
    for (std::size_t i = 0; i < nvars_; ++i) {
      double* t = powers.data() + offsets_[i];
      t[0] = 1.0;
      for (int e = 1; e <= max_exp_[i]; ++e) t[e] = t[e - 1] * point[i];
    }
    double s = 0.0;
    std::uint32_t start = 0;
    for (std::size_t k = 0; k < coeffs_.size(); ++k) {
      double t = coeffs_[k];
      for (std::uint32_t j = start; j < term_end_[k]; ++j) t *= powers[index_[j]];
      start = term_end_[k];
      s += t;
    }
    return s;
  }

  double operator()(const std::vector<double>& point) const {
    if (point.size() != nvars_) throw DimensionError("evaluation point has wrong length");
    std::vector<double> scratch;
    return (*this)(point.data(), scratch);
  }

 private:
  std::size_t nvars_ = 0;
  std::vector<int> max_exp_;
  std::vector<std::size_t> offsets_;
  std::size_t table_size_ = 0;
  std::vector<double> coeffs_;
  std::vector<std::uint32_t> index_;
  std::vector<std::uint32_t> term_end_;
};

}  // namespace roa
