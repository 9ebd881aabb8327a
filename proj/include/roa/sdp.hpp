// Numeric conic problem: PSD blocks plus free scalars, linear equalities,
// linear minimization objective. Also the SDPA sparse text bridge.
//
//   minimize    sum_b <C_b, X_b> + c_f . x_f
//   subject to  sum_b <A_ib, X_b> + a_if . x_f = b_i,   X_b PSD,  x_f free.
//
// Block coefficients are symmetric matrices stored as upper-triangle
// entries (i <= j); an off-diagonal entry v contributes 2 v X_ij to the
// inner product, as in the SDPA convention.

#pragma once

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace roa {

struct BlockEntry {
  std::size_t block = 0;
  std::size_t i = 0;  // i <= j, zero-based
  std::size_t j = 0;
  double value = 0.0;

  bool operator==(const BlockEntry&) const = default;
};

struct FreeEntry {
  std::size_t index = 0;
  double value = 0.0;

  bool operator==(const FreeEntry&) const = default;
};

struct LinearForm {
  std::vector<BlockEntry> block_terms;
  std::vector<FreeEntry> free_terms;

  bool empty() const { return block_terms.empty() && free_terms.empty(); }

  // Sorts entries and merges duplicates; exact zeros are dropped.
  void canonicalize() {
    std::map<std::tuple<std::size_t, std::size_t, std::size_t>, double> bm;
    for (const auto& e : block_terms) {
      auto key = std::make_tuple(e.block, std::min(e.i, e.j), std::max(e.i, e.j));
      bm[key] += e.value;
    }
    block_terms.clear();
    for (const auto& [k, v] : bm) {
      if (v != 0.0) block_terms.push_back({std::get<0>(k), std::get<1>(k), std::get<2>(k), v});
    }
    std::map<std::size_t, double> fm;
    for (const auto& e : free_terms) fm[e.index] += e.value;
    free_terms.clear();
    for (const auto& [k, v] : fm) {
      if (v != 0.0) free_terms.push_back({k, v});
    }
  }

  bool operator==(const LinearForm&) const = default;
};

struct SdpRow {
  LinearForm form;
  double rhs = 0.0;

  bool operator==(const SdpRow&) const = default;
};

struct SdpProblem {
  std::vector<std::size_t> psd_blocks;
  std::size_t free_dim = 0;
  std::vector<SdpRow> rows;
  LinearForm objective;

  void canonicalize() {
    for (auto& r : rows) r.form.canonicalize();
    objective.canonicalize();
  }

  // Throws when an index is out of range.
  void validate() const {
    auto check = [&](const LinearForm& f) {
      for (const auto& e : f.block_terms) {
        if (e.block >= psd_blocks.size() || e.i > e.j || e.j >= psd_blocks[e.block]) {
          throw std::out_of_range("SDP block entry out of range");
        }
      }
      for (const auto& e : f.free_terms) {
        if (e.index >= free_dim) throw std::out_of_range("SDP free variable out of range");
      }
    };
    for (const auto& r : rows) check(r.form);
    check(objective);
  }

  bool operator==(const SdpProblem&) const = default;
};

enum class SdpStatus { Optimal, PrimalInfeasible, DualInfeasible, NumericalTrouble, IterationLimit };

inline const char* to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::Optimal: return "Optimal";
    case SdpStatus::PrimalInfeasible: return "PrimalInfeasible";
    case SdpStatus::DualInfeasible: return "DualInfeasible";
    case SdpStatus::NumericalTrouble: return "NumericalTrouble";
    case SdpStatus::IterationLimit: return "IterationLimit";
  }
  return "Unknown";
}

struct SdpResiduals {
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
};

struct SdpSolution {
  std::vector<Eigen::MatrixXd> block_values;
  Eigen::VectorXd free_values;
  Eigen::VectorXd dual_values;  // one multiplier per row of the input problem
  std::vector<Eigen::MatrixXd> dual_slacks;
  double objective_value = 0.0;
  double dual_objective_value = 0.0;
  SdpStatus status = SdpStatus::NumericalTrouble;
  SdpResiduals residuals;
  int iterations = 0;
  std::vector<std::string> warnings;
};

// <form, (X, x_f)>
inline double apply_form(const LinearForm& f, const std::vector<Eigen::MatrixXd>& X,
                         const Eigen::VectorXd& xf) {
  double s = 0.0;
  for (const auto& e : f.block_terms) {
    s += e.i == e.j ? e.value * X[e.block](e.i, e.i) : 2.0 * e.value * X[e.block](e.i, e.j);
  }
  for (const auto& e : f.free_terms) s += e.value * xf(static_cast<Eigen::Index>(e.index));
  return s;
}

// ---------------------------------------------------------------------------
// SDPA sparse format.
//
// SDPA's equality-form problem is  max <F0, Y>  s.t.  <Fi, Y> = c_i,  Y PSD,
// so the objective matrix is written negated. Free variables are split as
// x = x+ - x- into a final diagonal block of size 2*free_dim: x+_k sits at
// diagonal position k, x-_k at free_dim + k (1-based).

class SdpaParseError : public std::runtime_error {
 public:
  SdpaParseError(std::size_t line, const std::string& what)
      : std::runtime_error("SDPA line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

namespace detail {

inline std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline void export_sdpa(const SdpProblem& p, std::ostream& out) {
  const std::size_t m = p.rows.size();
  const bool has_free = p.free_dim > 0;
  const std::size_t nblocks = p.psd_blocks.size() + (has_free ? 1 : 0);
  out << m << "\n" << nblocks << "\n";
  for (std::size_t b = 0; b < p.psd_blocks.size(); ++b) {
    if (b) out << ' ';
    out << p.psd_blocks[b];
  }
  if (has_free) {
    if (!p.psd_blocks.empty()) out << ' ';
    out << '-' << 2 * p.free_dim;
  }
  out << "\n";
  for (std::size_t i = 0; i < m; ++i) {
    if (i) out << ' ';
    out << detail::fmt17(p.rows[i].rhs);
  }
  out << "\n";

  const std::size_t free_block = p.psd_blocks.size() + 1;
  auto emit = [&](std::size_t matno, const LinearForm& f, double sign) {
    LinearForm c = f;
    c.canonicalize();
    for (const auto& e : c.block_terms) {
      out << matno << ' ' << e.block + 1 << ' ' << e.i + 1 << ' ' << e.j + 1 << ' '
          << detail::fmt17(sign * e.value) << "\n";
    }
    for (const auto& e : c.free_terms) {
      out << matno << ' ' << free_block << ' ' << e.index + 1 << ' ' << e.index + 1 << ' '
          << detail::fmt17(sign * e.value) << "\n";
    }
    for (const auto& e : c.free_terms) {
      const std::size_t k = p.free_dim + e.index + 1;
      out << matno << ' ' << free_block << ' ' << k << ' ' << k << ' '
          << detail::fmt17(-sign * e.value) << "\n";
    }
  };
  emit(0, p.objective, -1.0);
  for (std::size_t i = 0; i < m; ++i) emit(i + 1, p.rows[i].form, 1.0);
  if (!out) throw std::runtime_error("failed writing SDPA stream");
}

inline SdpProblem import_sdpa(std::istream& in) {
  struct Token {
    std::string text;
    std::size_t line;
  };
  std::vector<Token> tokens;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t first = line.find_first_not_of(" \t\r");
    if (first != std::string::npos && (line[first] == '"' || line[first] == '*')) continue;
    for (char& ch : line) {
      if (ch == ',' || ch == '{' || ch == '}' || ch == '(' || ch == ')' || ch == '\r') ch = ' ';
    }
    std::istringstream ls(line);
    std::string t;
    while (ls >> t) tokens.push_back({t, lineno});
  }

  std::size_t pos = 0;
  auto next = [&](const char* what) -> const Token& {
    if (pos >= tokens.size()) {
      throw SdpaParseError(std::max<std::size_t>(lineno, 1), std::string("unexpected end of input, expected ") + what);
    }
    return tokens[pos++];
  };
  auto to_long = [](const Token& t, const char* what) {
    char* end = nullptr;
    errno = 0;
    long v = std::strtol(t.text.c_str(), &end, 10);
    if (errno != 0 || end == t.text.c_str() || *end != '\0') {
      throw SdpaParseError(t.line, std::string("expected integer ") + what + ", got '" + t.text + "'");
    }
    return v;
  };
  auto to_double = [](const Token& t, const char* what) {
    char* end = nullptr;
    errno = 0;
    double v = std::strtod(t.text.c_str(), &end);
    if (end == t.text.c_str() || *end != '\0') {
      throw SdpaParseError(t.line, std::string("expected number ") + what + ", got '" + t.text + "'");
    }
    return v;
  };

  const Token& tm = next("constraint count");
  const long m = to_long(tm, "constraint count");
  if (m < 0) throw SdpaParseError(tm.line, "negative constraint count");
  const Token& tb = next("block count");
  const long nb = to_long(tb, "block count");
  if (nb < 0) throw SdpaParseError(tb.line, "negative block count");
  std::vector<long> sizes;
  for (long b = 0; b < nb; ++b) {
    const Token& t = next("block size");
    long s = to_long(t, "block size");
    if (s == 0) throw SdpaParseError(t.line, "zero block size");
    sizes.push_back(s);
  }
  std::vector<double> rhs;
  for (long i = 0; i < m; ++i) rhs.push_back(to_double(next("right-hand side"), "right-hand side"));

  struct Raw {
    long matno, block, i, j;
    double v;
  };
  std::vector<Raw> raws;
  while (pos < tokens.size()) {
    const Token& t0 = next("matrix number");
    Raw r{};
    r.matno = to_long(t0, "matrix number");
    r.block = to_long(next("block number"), "block number");
    const Token& ti = next("row index");
    r.i = to_long(ti, "row index");
    r.j = to_long(next("column index"), "column index");
    r.v = to_double(next("value"), "value");
    if (r.matno < 0 || r.matno > m) throw SdpaParseError(t0.line, "matrix number out of range");
    if (r.block < 1 || r.block > nb) throw SdpaParseError(t0.line, "block number out of range");
    const long bs = std::labs(sizes[static_cast<std::size_t>(r.block - 1)]);
    if (r.i < 1 || r.j < 1 || r.i > bs || r.j > bs) throw SdpaParseError(ti.line, "index out of range");
    if (sizes[static_cast<std::size_t>(r.block - 1)] < 0 && r.i != r.j) {
      throw SdpaParseError(ti.line, "off-diagonal entry in diagonal block");
    }
    raws.push_back(r);
  }

  // A final diagonal block holding exactly negated (+,-) pairs is a split
  // free-variable block.
  bool free_split = false;
  long free_dim = 0;
  if (nb > 0 && sizes.back() < 0 && (-sizes.back()) % 2 == 0) {
    free_dim = -sizes.back() / 2;
    std::map<std::pair<long, long>, double> plus, minus;
    for (const auto& r : raws) {
      if (r.block != nb) continue;
      if (r.i <= free_dim) {
        plus[{r.matno, r.i}] += r.v;
      } else {
        minus[{r.matno, r.i - free_dim}] += r.v;
      }
    }
    free_split = plus.size() == minus.size();
    for (const auto& [k, v] : plus) {
      auto it = minus.find(k);
      if (it == minus.end() || it->second != -v) {
        free_split = false;
        break;
      }
    }
  }

  SdpProblem p;
  p.rows.resize(static_cast<std::size_t>(m));
  for (long i = 0; i < m; ++i) p.rows[static_cast<std::size_t>(i)].rhs = rhs[static_cast<std::size_t>(i)];
  // Map file blocks to PSD blocks; ordinary diagonal blocks become 1x1 blocks.
  std::vector<std::size_t> first_index(static_cast<std::size_t>(nb), 0);
  for (long b = 0; b < nb; ++b) {
    const bool is_free_block = free_split && b == nb - 1;
    first_index[static_cast<std::size_t>(b)] = p.psd_blocks.size();
    if (is_free_block) continue;
    const long s = sizes[static_cast<std::size_t>(b)];
    if (s > 0) {
      p.psd_blocks.push_back(static_cast<std::size_t>(s));
    } else {
      for (long k = 0; k < -s; ++k) p.psd_blocks.push_back(1);
    }
  }
  if (free_split) p.free_dim = static_cast<std::size_t>(free_dim);

  for (const auto& r : raws) {
    LinearForm& f = r.matno == 0 ? p.objective : p.rows[static_cast<std::size_t>(r.matno - 1)].form;
    const double sign = r.matno == 0 ? -1.0 : 1.0;
    const auto bi = static_cast<std::size_t>(r.block - 1);
    if (free_split && r.block == nb) {
      if (r.i <= free_dim) f.free_terms.push_back({static_cast<std::size_t>(r.i - 1), sign * r.v});
      continue;
    }
    if (sizes[bi] < 0) {
      f.block_terms.push_back({first_index[bi] + static_cast<std::size_t>(r.i - 1), 0, 0, sign * r.v});
    } else {
      const auto a = static_cast<std::size_t>(std::min(r.i, r.j) - 1);
      const auto c = static_cast<std::size_t>(std::max(r.i, r.j) - 1);
      f.block_terms.push_back({first_index[bi], a, c, sign * r.v});
    }
  }
  p.canonicalize();
  return p;
}

}  // namespace roa
