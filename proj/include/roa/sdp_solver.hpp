// Primal-dual path-following interior-point method for SdpProblem.
//
// Nesterov-Todd scaling with a Mehrotra predictor-corrector step. Free
// variables stay in the Newton system
//
//   [ M     A_f ] [dy ]   [r_1]
//   [ A_f^T  0  ] [dxf] = [r_2],     M_ij = <A_i, W A_j W>.
//
// M is never formed. With W = G G^T, M = S^T S where column i of S is
// svec(G^T A_i G); a QR of S gives M = R^T R at half the condition number
// of M itself, which matters on SOS programs whose Gram blocks grow large
// near the optimum. Directions are refined against the primal equations.
// Dense linear algebra throughout; intended for blocks up to ~100 and a few
// thousand rows. Single-threaded and deterministic.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "roa/sdp.hpp"

namespace roa {

struct SdpOptions {
  double tol = 1e-7;
  int max_iter = 200;
  // Relative pivot threshold for dropping dependent rows.
  double rank_tol = 1e-10;
  // Certificates of infeasibility are accepted below this normalized residual.
  double infeas_tol = 1e-8;
  bool verbose = false;
};

namespace detail {

struct RowBlock {
  std::size_t row = 0;  // index into the reduced row set
  std::vector<BlockEntry> entries;
  std::vector<Eigen::Index> support;
  Eigen::MatrixXd dense;  // full symmetric matrix restricted to support
};

struct Prepared {
  std::vector<Eigen::Index> dims;
  Eigen::Index m = 0;
  Eigen::Index nf = 0;
  std::vector<std::vector<RowBlock>> by_block;
  Eigen::MatrixXd free_coeffs;  // m x nf
  Eigen::VectorXd b;
  std::vector<Eigen::MatrixXd> C;
  Eigen::VectorXd cf;
  std::vector<std::size_t> kept;  // original row index per reduced row
  Eigen::VectorXd row_scale;      // reduced row = scale * original row
};

// (M + M^T) / 2 through a temporary; in place it would read overwritten entries.
inline Eigen::MatrixXd sym(const Eigen::MatrixXd& M) { return (0.5 * (M + M.transpose())).eval(); }

inline Eigen::MatrixXd dense_of(const std::vector<BlockEntry>& entries, Eigen::Index n) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : entries) {
    const auto i = static_cast<Eigen::Index>(e.i), j = static_cast<Eigen::Index>(e.j);
    A(i, j) += e.value;
    if (i != j) A(j, i) += e.value;
  }
  return A;
}

// Steplength to the boundary of the PSD cone along dX from X = L L^T.
inline double max_step(const Eigen::LLT<Eigen::MatrixXd>& chol, const Eigen::MatrixXd& dX) {
  Eigen::MatrixXd T = chol.matrixL().solve(dX);
  T = Eigen::MatrixXd(chol.matrixL().solve(T.transpose())).transpose().eval();
  T = detail::sym(T);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin >= 0.0) return std::numeric_limits<double>::infinity();
  return -1.0 / lmin;
}

struct NtScaling {
  Eigen::MatrixXd G;     // W = G G^T
  Eigen::MatrixXd Ginv;  // G^{-1}
  Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic> W;  // extended precision
  Eigen::VectorXd v;     // G^{-1} X G^{-T} = G^T Z G = diag(v)
};

inline bool nt_scaling(const Eigen::LLT<Eigen::MatrixXd>& cx, const Eigen::MatrixXd& Z, NtScaling& out) {
  const Eigen::MatrixXd L = cx.matrixL();
  Eigen::MatrixXd S = L.transpose() * Z * L;
  S = detail::sym(S);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.info() != Eigen::Success) return false;
  const Eigen::VectorXd d = es.eigenvalues();
  if (!(d.minCoeff() > 0.0)) return false;
  const Eigen::VectorXd d4 = d.array().sqrt().sqrt();
  out.G = L * es.eigenvectors() * d4.cwiseInverse().asDiagonal();
  Eigen::MatrixXd Linv = cx.matrixL().solve(Eigen::MatrixXd::Identity(L.rows(), L.cols()));
  out.Ginv = d4.asDiagonal() * es.eigenvectors().transpose() * Linv;
  const Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic> GL = out.G.cast<long double>();
  out.W = GL * GL.transpose();
  out.W = (0.5L * (out.W + out.W.transpose())).eval();
  out.v = d.array().sqrt();
  return true;
}

}  // namespace detail

class SdpSolver {
 public:
  explicit SdpSolver(SdpOptions opts = {}) : opts_(opts) {}

  SdpSolution solve(const SdpProblem& problem) const {
    problem.validate();
    SdpSolution sol;
    detail::Prepared P;
    if (!prepare(problem, P, sol)) return sol;
    if (P.nf > P.m) {
      fill_empty(problem, sol);
      sol.status = SdpStatus::NumericalTrouble;
      sol.warnings.push_back("free variables outnumber independent equality rows");
      return sol;
    }
    run(problem, P, sol);
    return sol;
  }

 private:
  using Mat = Eigen::MatrixXd;
  using Vec = Eigen::VectorXd;
  using Blocks = std::vector<Mat>;

  // Row scaling, dependent-row removal, dense free-variable matrix.
  bool prepare(const SdpProblem& p, detail::Prepared& P, SdpSolution& sol) const {
    const std::size_t m0 = p.rows.size();
    for (auto d : p.psd_blocks) P.dims.push_back(static_cast<Eigen::Index>(d));
    P.nf = static_cast<Eigen::Index>(p.free_dim);

    std::vector<std::size_t> offset(p.psd_blocks.size() + 1, 0);
    for (std::size_t b = 0; b < p.psd_blocks.size(); ++b) {
      offset[b + 1] = offset[b] + p.psd_blocks[b] * (p.psd_blocks[b] + 1) / 2;
    }
    const std::size_t ncols = offset.back() + p.free_dim;
    auto svec_index = [&](const BlockEntry& e) {
      const std::size_t n = p.psd_blocks[e.block];
      // column-major upper triangle
      (void)n;
      return offset[e.block] + e.j * (e.j + 1) / 2 + e.i;
    };

    std::vector<double> scale(m0, 1.0);
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < m0; ++i) {
      double mx = 0.0;
      for (const auto& e : p.rows[i].form.block_terms) mx = std::max(mx, std::abs(e.value));
      for (const auto& e : p.rows[i].form.free_terms) mx = std::max(mx, std::abs(e.value));
      if (mx == 0.0) {
        if (p.rows[i].rhs != 0.0) {
          sol.status = SdpStatus::PrimalInfeasible;
          sol.warnings.push_back("row " + std::to_string(i) + " reads 0 = " + std::to_string(p.rows[i].rhs));
          fill_empty(p, sol);
          return false;
        }
        sol.warnings.push_back("dropped empty row " + std::to_string(i));
        continue;
      }
      scale[i] = 1.0 / mx;
      candidates.push_back(i);
    }

    // Rank-revealing QR on the transposed constraint matrix.
    std::vector<std::size_t> kept = candidates;
    if (!candidates.empty()) {
      Mat At = Mat::Zero(static_cast<Eigen::Index>(ncols), static_cast<Eigen::Index>(candidates.size()));
      for (std::size_t c = 0; c < candidates.size(); ++c) {
        const auto& f = p.rows[candidates[c]].form;
        const double s = scale[candidates[c]];
        for (const auto& e : f.block_terms) {
          At(static_cast<Eigen::Index>(svec_index(e)), static_cast<Eigen::Index>(c)) +=
              s * e.value * (e.i == e.j ? 1.0 : 2.0);
        }
        for (const auto& e : f.free_terms) {
          At(static_cast<Eigen::Index>(offset.back() + e.index), static_cast<Eigen::Index>(c)) += s * e.value;
        }
      }
      Eigen::ColPivHouseholderQR<Mat> qr(At);
      qr.setThreshold(opts_.rank_tol);
      const Eigen::Index rank = qr.rank();
      if (rank < static_cast<Eigen::Index>(candidates.size())) {
        std::vector<Eigen::Index> keep_cols;
        for (Eigen::Index r = 0; r < rank; ++r) keep_cols.push_back(qr.colsPermutation().indices()(r));
        std::sort(keep_cols.begin(), keep_cols.end());
        kept.clear();
        for (auto c : keep_cols) kept.push_back(candidates[static_cast<std::size_t>(c)]);

        // Dropped rows must be consistent with the kept ones.
        Mat Ak(At.rows(), rank);
        Vec bk(rank);
        for (Eigen::Index r = 0; r < rank; ++r) {
          Ak.col(r) = At.col(keep_cols[static_cast<std::size_t>(r)]);
          const std::size_t orig = candidates[static_cast<std::size_t>(keep_cols[static_cast<std::size_t>(r)])];
          bk(r) = scale[orig] * p.rows[orig].rhs;
        }
        Eigen::HouseholderQR<Mat> kqr(Ak);
        std::vector<bool> is_kept(candidates.size(), false);
        for (auto c : keep_cols) is_kept[static_cast<std::size_t>(c)] = true;
        std::size_t ndropped = 0;
        for (std::size_t c = 0; c < candidates.size(); ++c) {
          if (is_kept[c]) continue;
          ++ndropped;
          const std::size_t orig = candidates[c];
          Vec lambda = kqr.solve(At.col(static_cast<Eigen::Index>(c)));
          const double bd = scale[orig] * p.rows[orig].rhs;
          const double pred = lambda.dot(bk);
          if (std::abs(bd - pred) > 1e-8 * (1.0 + std::abs(bd) + lambda.cwiseAbs().dot(bk.cwiseAbs()))) {
            sol.status = SdpStatus::PrimalInfeasible;
            sol.warnings.push_back("dependent row " + std::to_string(orig) + " is inconsistent");
            fill_empty(p, sol);
            return false;
          }
        }
        sol.warnings.push_back("presolve dropped " + std::to_string(ndropped) + " dependent rows");
      }
    }

    P.kept = kept;
    P.m = static_cast<Eigen::Index>(kept.size());
    P.row_scale.resize(P.m);
    P.b.resize(P.m);
    P.free_coeffs = Mat::Zero(P.m, P.nf);
    P.by_block.assign(p.psd_blocks.size(), {});
    for (Eigen::Index r = 0; r < P.m; ++r) {
      const std::size_t orig = kept[static_cast<std::size_t>(r)];
      const double s = scale[orig];
      P.row_scale(r) = s;
      P.b(r) = s * p.rows[orig].rhs;
      std::vector<std::vector<BlockEntry>> per_block(p.psd_blocks.size());
      for (auto e : p.rows[orig].form.block_terms) {
        e.value *= s;
        per_block[e.block].push_back(e);
      }
      for (const auto& e : p.rows[orig].form.free_terms) {
        P.free_coeffs(r, static_cast<Eigen::Index>(e.index)) += s * e.value;
      }
      for (std::size_t b = 0; b < per_block.size(); ++b) {
        if (per_block[b].empty()) continue;
        detail::RowBlock rb;
        rb.row = static_cast<std::size_t>(r);
        rb.entries = std::move(per_block[b]);
        std::vector<Eigen::Index> sup;
        for (const auto& e : rb.entries) {
          sup.push_back(static_cast<Eigen::Index>(e.i));
          sup.push_back(static_cast<Eigen::Index>(e.j));
        }
        std::sort(sup.begin(), sup.end());
        sup.erase(std::unique(sup.begin(), sup.end()), sup.end());
        rb.support = sup;
        rb.dense = Mat::Zero(static_cast<Eigen::Index>(sup.size()), static_cast<Eigen::Index>(sup.size()));
        auto pos = [&](std::size_t idx) {
          return static_cast<Eigen::Index>(
              std::lower_bound(sup.begin(), sup.end(), static_cast<Eigen::Index>(idx)) - sup.begin());
        };
        for (const auto& e : rb.entries) {
          const auto a = pos(e.i), c = pos(e.j);
          rb.dense(a, c) += e.value;
          if (a != c) rb.dense(c, a) += e.value;
        }
        P.by_block[b].push_back(std::move(rb));
      }
    }

    P.C.clear();
    std::vector<std::vector<BlockEntry>> cpb(p.psd_blocks.size());
    for (const auto& e : p.objective.block_terms) cpb[e.block].push_back(e);
    for (std::size_t b = 0; b < p.psd_blocks.size(); ++b) P.C.push_back(detail::dense_of(cpb[b], P.dims[b]));
    P.cf = Vec::Zero(P.nf);
    for (const auto& e : p.objective.free_terms) P.cf(static_cast<Eigen::Index>(e.index)) += e.value;
    return true;
  }

  static void fill_empty(const SdpProblem& p, SdpSolution& sol) {
    sol.block_values.clear();
    for (auto d : p.psd_blocks) {
      sol.block_values.push_back(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)));
      sol.dual_slacks.push_back(sol.block_values.back());
    }
    sol.free_values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.free_dim));
    sol.dual_values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.rows.size()));
  }

  Vec apply_A(const detail::Prepared& P, const Blocks& X, const Vec& xf) const {
    Vec r = P.free_coeffs * xf;
    for (std::size_t b = 0; b < P.by_block.size(); ++b) {
      for (const auto& rb : P.by_block[b]) {
        double s = 0.0;
        for (const auto& e : rb.entries) {
          s += e.i == e.j ? e.value * X[b](static_cast<Eigen::Index>(e.i), static_cast<Eigen::Index>(e.i))
                          : 2.0 * e.value * X[b](static_cast<Eigen::Index>(e.i), static_cast<Eigen::Index>(e.j));
        }
        r(static_cast<Eigen::Index>(rb.row)) += s;
      }
    }
    return r;
  }

  Blocks apply_At(const detail::Prepared& P, const Vec& y) const {
    Blocks out;
    for (std::size_t b = 0; b < P.by_block.size(); ++b) {
      Mat S = Mat::Zero(P.dims[b], P.dims[b]);
      for (const auto& rb : P.by_block[b]) {
        const double yi = y(static_cast<Eigen::Index>(rb.row));
        if (yi == 0.0) continue;
        for (const auto& e : rb.entries) {
          const auto i = static_cast<Eigen::Index>(e.i), j = static_cast<Eigen::Index>(e.j);
          S(i, j) += yi * e.value;
          if (i != j) S(j, i) += yi * e.value;
        }
      }
      out.push_back(std::move(S));
    }
    return out;
  }

  static double inner(const Blocks& A, const Blocks& B) {
    double s = 0.0;
    for (std::size_t b = 0; b < A.size(); ++b) s += A[b].cwiseProduct(B[b]).sum();
    return s;
  }

  using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

  // W S W in extended precision, symmetrized.
  static Mat wsw(const detail::NtScaling& s, const Mat& S) {
    const MatL t = s.W * S.cast<long double>() * s.W;
    return (0.5L * (t + t.transpose())).cast<double>();
  }

  struct Direction {
    Blocks dX, dZ;
    Vec dy, dxf;
    double residual = 0.0;  // of the linearized primal and free equations
    double primal_error = 0.0;  // primal part in the caller's row scaling
  };

  // Newton system through the scaled operator, never forming M. Free
  // variables are then eliminated through a second QR of B = R^{-T} A_f.
  // M = S^T S, column i of S being svec(G^T A_i G). When free variables are
  // present the block part alone may be rank deficient, so the factored
  // matrix is [S; sqrt(rho) A_f^T], i.e. M + rho A_f A_f^T; the first KKT row
  // gains rho A_f (A_f^T dy - r_2) = 0 and the solution is unchanged.
  struct Kkt {
    Eigen::ColPivHouseholderQR<Mat> qr;
    Mat R;
    Eigen::HouseholderQR<Mat> bqr;
    Mat RB;
    const Mat* Af = nullptr;
    double rho = 0.0;
    Eigen::Index m = 0, nf = 0, sv = 0;
    std::vector<Eigen::Index> off;

    Kkt(const detail::Prepared& P, const std::vector<detail::NtScaling>& nt) : m(P.m), nf(P.nf) {
      off.assign(P.dims.size() + 1, 0);
      for (std::size_t b = 0; b < P.dims.size(); ++b) off[b + 1] = off[b] + P.dims[b] * (P.dims[b] + 1) / 2;
      sv = off.back();
      Mat At = Mat::Zero(sv + nf, P.m);
      const double r2 = std::sqrt(2.0);
      for (std::size_t b = 0; b < P.by_block.size(); ++b) {
        const Mat& G = nt[b].G;
        const Eigen::Index n = P.dims[b];
        for (const auto& rb : P.by_block[b]) {
          const Mat Gs = G(rb.support, Eigen::all);
          const Mat S = Gs.transpose() * rb.dense * Gs;
          auto col = At.col(static_cast<Eigen::Index>(rb.row));
          Eigen::Index k = off[b];
          for (Eigen::Index j = 0; j < n; ++j) {
            for (Eigen::Index i = 0; i <= j; ++i) col(k++) = i == j ? S(i, i) : r2 * 0.5 * (S(i, j) + S(j, i));
          }
        }
      }
      if (nf > 0) {
        Af = &P.free_coeffs;
        const double fs = P.free_coeffs.norm();
        const double ss = At.topRows(sv).norm();
        rho = fs > 0.0 ? (ss / fs) * (ss / fs) : 0.0;
        At.bottomRows(nf) = std::sqrt(rho) * P.free_coeffs.transpose();
      }
      if (P.m == 0) return;
      qr.compute(At);
      R = qr.matrixQR().topRows(std::min(At.rows(), At.cols())).template triangularView<Eigen::Upper>();
      if (R.rows() < P.m) {
        Mat Rp = Mat::Zero(P.m, P.m);
        Rp.topRows(R.rows()) = R;
        R = Rp;
      }
      // guard exact zeros on the diagonal
      const double rmax = R.rows() ? R.diagonal().cwiseAbs().maxCoeff() : 0.0;
      for (Eigen::Index i = 0; i < R.rows(); ++i) {
        if (std::abs(R(i, i)) < 1e-300 + 1e-30 * rmax) R(i, i) = 1e-30 * rmax + 1e-300;
      }
      if (nf > 0) {
        Mat B = qr.colsPermutation().transpose() * P.free_coeffs;
        B = R.transpose().template triangularView<Eigen::Lower>().solve(B);
        bqr.compute(B);
        RB = bqr.matrixQR().topRows(nf).template triangularView<Eigen::Upper>();
      }
    }

    Vec solve(const Vec& rhs) const {
      if (m == 0) return Vec::Zero(nf);
      Vec r1 = rhs.head(m);
      if (nf > 0) r1 += rho * (*Af * rhs.tail(nf));
      Vec t = qr.colsPermutation().transpose() * r1;
      t = R.transpose().template triangularView<Eigen::Lower>().solve(t);
      return finish(t, rhs.tail(nf));
    }

    // Right-hand side r - S^T svec(V) with V given block by block in the
    // scaled frame. R^{-T} P^T S^T is the leading part of Q^T, so only r goes
    // through a triangular solve.
    Vec solve_scaled(const Vec& r, const Blocks& V, const Vec& rf) const {
      if (m == 0) return Vec::Zero(nf);
      Vec vh = Vec::Zero(sv + nf);
      const double r2 = std::sqrt(2.0);
      for (std::size_t b = 0; b < V.size(); ++b) {
        Eigen::Index k = off[b];
        for (Eigen::Index j = 0; j < V[b].cols(); ++j) {
          for (Eigen::Index i = 0; i <= j; ++i) vh(k++) = -(i == j ? V[b](i, i) : r2 * 0.5 * (V[b](i, j) + V[b](j, i)));
        }
      }
      if (nf > 0) vh.tail(nf) = std::sqrt(rho) * rf;
      const Vec qv = qr.householderQ().adjoint() * vh;
      Vec t = qr.colsPermutation().transpose() * r;
      t = R.transpose().template triangularView<Eigen::Lower>().solve(t);
      const Eigen::Index k = std::min<Eigen::Index>(m, qv.size());
      t.head(k) += qv.head(k);
      return finish(t, rf);
    }

    Vec finish(Vec t, const Vec& rf) const {
      Vec dxf = Vec::Zero(nf);
      if (nf > 0) {
        Vec qt = bqr.householderQ().adjoint() * t;
        Vec w = RB.transpose().template triangularView<Eigen::Lower>().solve(rf);
        dxf = RB.template triangularView<Eigen::Upper>().solve(Vec(qt.head(nf) - w));
        // t - B dxf with B = Q_B R_B
        Vec rbx = Vec::Zero(m);
        rbx.head(nf) = RB * dxf;
        t -= bqr.householderQ() * rbx;
      }
      Vec dy = R.template triangularView<Eigen::Upper>().solve(t);
      dy = qr.colsPermutation() * dy;
      Vec out(m + nf);
      out.head(m) = dy;
      out.tail(nf) = dxf;
      return out;
    }
  };

  // Rcs is Rc in the scaled frame, G^{-1} Rc G^{-T}.
  Direction solve_direction(const detail::Prepared& P, const Kkt& kkt,
                            const std::vector<detail::NtScaling>& nt, const Blocks& Rc, const Blocks& Rcs,
                            const Blocks& Rd, const Vec& rp, const Vec& rf) const {
    Blocks V;
    for (std::size_t b = 0; b < Rc.size(); ++b) V.push_back(Rcs[b] - nt[b].G.transpose() * Rd[b] * nt[b].G);
    Direction d;
    const Vec sol = kkt.solve_scaled(rp, V, rf);
    d.dy = sol.head(P.m);
    d.dxf = sol.tail(P.nf);
    const Blocks Aty = apply_At(P, d.dy);
    for (std::size_t b = 0; b < Rc.size(); ++b) {
      Mat dZ = Rd[b] - Aty[b];
      dZ = detail::sym(dZ);
      d.dX.push_back(Rc[b] - wsw(nt[b], dZ));
      d.dZ.push_back(std::move(dZ));
    }
    // Iterative refinement on the primal and free-variable equations, with
    // corrections applied incrementally so W dZ W is never recomputed whole.
    double prev = std::numeric_limits<double>::infinity();
    Direction kept;
    for (int it = 0; it <= 5; ++it) {
      Vec e(P.m + P.nf);
      e.head(P.m) = rp - apply_A(P, d.dX, d.dxf);
      e.tail(P.nf) = rf - P.free_coeffs.transpose() * d.dy;
      const double en = e.norm();
      if (!(en < prev)) {
        // the last correction made things worse
        d = std::move(kept);
        break;
      }
      d.residual = en;
      d.primal_error = (e.head(P.m).array() / P.row_scale.array()).matrix().norm();
      if (it == 5 || !(en < 0.5 * prev) || en <= 1e-15 * (1.0 + rp.norm())) break;
      prev = en;
      kept = d;
      const Vec c = kkt.solve(e);
      const Blocks Atc = apply_At(P, c.head(P.m));
      for (std::size_t b = 0; b < Rc.size(); ++b) {
        d.dZ[b] -= Atc[b];
        d.dX[b] += wsw(nt[b], Atc[b]);
      }
      d.dy += c.head(P.m);
      d.dxf += c.tail(P.nf);
    }
    return d;
  }

  struct Metrics {
    double relp = 0, reld = 0, gap = 0, pobj = 0, dobj = 0;
    double worst() const { return std::max({relp, reld, gap}); }
  };

  // Residuals measured on the caller's (unscaled, unreduced) problem.
  Metrics metrics(const SdpProblem& p, const detail::Prepared& P, const Blocks& X, const Vec& xf,
                  const Blocks& Z, const Vec& y) const {
    Metrics mt;
    double rp2 = 0.0, b2 = 0.0;
    for (const auto& r : p.rows) {
      const double res = apply_form(r.form, X, xf) - r.rhs;
      rp2 += res * res;
      b2 += r.rhs * r.rhs;
    }
    mt.relp = std::sqrt(rp2) / (1.0 + std::sqrt(b2));
    Blocks Aty = apply_At(P, y);
    double rd2 = 0.0, c2 = 0.0;
    for (std::size_t b = 0; b < X.size(); ++b) {
      rd2 += (P.C[b] - Z[b] - Aty[b]).squaredNorm();
      c2 += P.C[b].squaredNorm();
    }
    rd2 += (P.cf - P.free_coeffs.transpose() * y).squaredNorm();
    c2 += P.cf.squaredNorm();
    mt.reld = std::sqrt(rd2) / (1.0 + std::sqrt(c2));
    mt.pobj = inner(P.C, X) + P.cf.dot(xf);
    mt.dobj = P.b.dot(y);
    const double xz = inner(X, Z);
    mt.gap = std::max(std::abs(mt.pobj - mt.dobj), xz) / (1.0 + std::abs(mt.pobj) + std::abs(mt.dobj));
    return mt;
  }

  void run(const SdpProblem& p, const detail::Prepared& P, SdpSolution& sol) const {
    const std::size_t nb = P.dims.size();
    Eigen::Index ntot = 0;
    for (auto d : P.dims) ntot += d;

    // Unit primal start; dual scaled to the objective.
    Blocks X, Z;
    for (std::size_t b = 0; b < nb; ++b) {
      const double n = static_cast<double>(P.dims[b]);
      const double eta = std::max(1.0, P.C[b].norm() / std::sqrt(n));
      X.push_back(Mat::Identity(P.dims[b], P.dims[b]));
      Z.push_back(eta * Mat::Identity(P.dims[b], P.dims[b]));
    }
    Vec y = Vec::Zero(P.m), xf = Vec::Zero(P.nf);

    Blocks bestX = X, bestZ = Z;
    Vec besty = y, bestxf = xf;
    Metrics best;
    double best_score = std::numeric_limits<double>::infinity();
    int small_steps = 0, frozen = 0;
    double b_norm = 0.0;
    for (const auto& r : p.rows) b_norm += r.rhs * r.rhs;
    b_norm = std::sqrt(b_norm);
    SdpStatus status = SdpStatus::IterationLimit;
    int iter = 0;

    auto record_best = [&](const Metrics& mt) {
      if (mt.worst() < best_score) {
        best_score = mt.worst();
        best = mt;
        bestX = X;
        bestZ = Z;
        besty = y;
        bestxf = xf;
      }
    };

    for (iter = 0; iter <= opts_.max_iter; ++iter) {
      const Metrics mt = metrics(p, P, X, xf, Z, y);
      record_best(mt);
      if (opts_.verbose) {
        std::fprintf(stderr, "iter %3d  pobj % .8e  dobj % .8e  relp %.2e  reld %.2e  gap %.2e\n", iter,
                     mt.pobj, mt.dobj, mt.relp, mt.reld, mt.gap);
      }
      if (mt.relp <= opts_.tol && mt.reld <= opts_.tol && mt.gap <= opts_.tol) {
        status = SdpStatus::Optimal;
        break;
      }
      if (infeasibility(P, X, xf, Z, y, status)) break;
      if (iter == opts_.max_iter) break;

      // Residuals of the scaled, reduced system.
      const Vec rp = P.b - apply_A(P, X, xf);
      Blocks Aty = apply_At(P, y);
      Blocks Rd;
      for (std::size_t b = 0; b < nb; ++b) Rd.push_back(P.C[b] - Z[b] - Aty[b]);
      const Vec rf = P.cf - P.free_coeffs.transpose() * y;
      const double mu = inner(X, Z) / static_cast<double>(std::max<Eigen::Index>(ntot, 1));

      std::vector<Eigen::LLT<Mat>> cx(nb), cz(nb);
      std::vector<detail::NtScaling> nt(nb);
      bool ok = true;
      for (std::size_t b = 0; b < nb && ok; ++b) {
        cx[b].compute(X[b]);
        cz[b].compute(Z[b]);
        ok = cx[b].info() == Eigen::Success && cz[b].info() == Eigen::Success && detail::nt_scaling(cx[b], Z[b], nt[b]);
      }
      if (!ok) {
        status = SdpStatus::NumericalTrouble;
        sol.warnings.push_back("lost positive definiteness at iteration " + std::to_string(iter));
        break;
      }

      const Kkt kkt(P, nt);

      // Predictor (affine scaling).
      Blocks Rc, Rcs;
      for (std::size_t b = 0; b < nb; ++b) {
        Rc.push_back(-X[b]);
        Rcs.push_back(-Mat(nt[b].v.asDiagonal()));
      }
      Direction pred = solve_direction(P, kkt, nt, Rc, Rcs, Rd, rp, rf);
      if (!finite(pred)) {
        status = SdpStatus::NumericalTrouble;
        sol.warnings.push_back("non-finite Newton direction at iteration " + std::to_string(iter));
        break;
      }
      double ap = 1.0, ad = 1.0;
      for (std::size_t b = 0; b < nb; ++b) {
        ap = std::min(ap, detail::max_step(cx[b], pred.dX[b]));
        ad = std::min(ad, detail::max_step(cz[b], pred.dZ[b]));
      }
      double mu_aff = 0.0;
      for (std::size_t b = 0; b < nb; ++b) {
        mu_aff += (X[b] + ap * pred.dX[b]).cwiseProduct(Z[b] + ad * pred.dZ[b]).sum();
      }
      mu_aff /= static_cast<double>(std::max<Eigen::Index>(ntot, 1));
      const double expon = std::max(1.0, 3.0 * std::min(ap, ad) * std::min(ap, ad));
      double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, expon), 0.0, 1.0);
      // No need to go much below the stopping gap; the Newton systems only
      // get worse from there.
      const double mu_floor = 0.2 * opts_.tol * (1.0 + std::abs(mt.pobj) + std::abs(mt.dobj)) /
                              static_cast<double>(std::max<Eigen::Index>(ntot, 1));
      sigma = std::max(sigma, std::min(1.0, mu_floor / mu));

      // Corrector in the NT-scaled frame where X and Z are both diag(v).
      for (std::size_t b = 0; b < nb; ++b) {
        const auto& s = nt[b];
        const Mat dXs = s.Ginv * pred.dX[b] * s.Ginv.transpose();
        const Mat dZs = s.G.transpose() * pred.dZ[b] * s.G;
        Mat H = -(dXs * dZs + dZs * dXs);
        for (Eigen::Index i = 0; i < H.rows(); ++i) H(i, i) += 2.0 * sigma * mu - 2.0 * s.v(i) * s.v(i);
        for (Eigen::Index i = 0; i < H.rows(); ++i) {
          for (Eigen::Index j = 0; j < H.cols(); ++j) H(i, j) /= (s.v(i) + s.v(j));
        }
        H = detail::sym(H);
        Rc[b] = detail::sym(s.G * H * s.G.transpose());
        Rcs[b] = std::move(H);
      }
      Direction dir = solve_direction(P, kkt, nt, Rc, Rcs, Rd, rp, rf);
      if (!finite(dir)) {
        status = SdpStatus::NumericalTrouble;
        sol.warnings.push_back("non-finite corrector at iteration " + std::to_string(iter));
        break;
      }
      // Near the end the corrector right-hand side can exceed what the
      // factorization resolves; the affine direction is then the safer step.
      if (dir.residual > 0.1 * opts_.tol * (1.0 + P.b.norm()) && dir.residual > 100.0 * pred.residual) {
        dir = std::move(pred);
      }
      double mp = std::numeric_limits<double>::infinity(), md = mp;
      for (std::size_t b = 0; b < nb; ++b) {
        mp = std::min(mp, detail::max_step(cx[b], dir.dX[b]));
        md = std::min(md, detail::max_step(cz[b], dir.dZ[b]));
      }
      const double gamma = 0.9 + 0.09 * std::min(ap, ad);
      double step_p = std::min(1.0, gamma * mp);
      const double step_d = std::min(1.0, gamma * md);
      // When the solve is too inaccurate for the primal equations, take a
      // dual-only step; dZ = Rd - A^T dy keeps the dual equations exact.
      const double allowed = std::max(mt.relp, 0.5 * opts_.tol) * (1.0 + b_norm);
      if (step_p * dir.primal_error > allowed) {
        step_p = 0.0;
        if (++frozen > 5) {
          status = SdpStatus::NumericalTrouble;
          sol.warnings.push_back("Newton systems too inaccurate to move the primal iterate");
          break;
        }
      } else {
        frozen = 0;
      }
      for (std::size_t b = 0; b < nb; ++b) {
        X[b] += step_p * dir.dX[b];
        Z[b] += step_d * dir.dZ[b];
        X[b] = detail::sym(X[b]);
        Z[b] = detail::sym(Z[b]);
      }
      xf += step_p * dir.dxf;
      y += step_d * dir.dy;

      if (std::max(step_p, step_d) < 1e-8) {
        if (++small_steps >= 3) {
          status = SdpStatus::NumericalTrouble;
          sol.warnings.push_back("step length collapsed");
          break;
        }
      } else {
        small_steps = 0;
      }
    }

    if (status != SdpStatus::Optimal && status != SdpStatus::PrimalInfeasible &&
        status != SdpStatus::DualInfeasible) {
      X = bestX;
      Z = bestZ;
      y = besty;
      xf = bestxf;
    }
    const Metrics fin = metrics(p, P, X, xf, Z, y);
    sol.block_values = X;
    sol.dual_slacks = Z;
    sol.free_values = xf;
    sol.dual_values = Vec::Zero(static_cast<Eigen::Index>(p.rows.size()));
    for (Eigen::Index r = 0; r < P.m; ++r) {
      sol.dual_values(static_cast<Eigen::Index>(P.kept[static_cast<std::size_t>(r)])) = P.row_scale(r) * y(r);
    }
    sol.objective_value = fin.pobj;
    sol.dual_objective_value = fin.dobj;
    sol.residuals = {fin.relp, fin.reld, fin.gap};
    sol.iterations = iter;
    sol.status = status;
  }

  static bool finite(const Direction& d) {
    if (!d.dy.allFinite() || !d.dxf.allFinite()) return false;
    for (const auto& m : d.dX) {
      if (!m.allFinite()) return false;
    }
    for (const auto& m : d.dZ) {
      if (!m.allFinite()) return false;
    }
    return true;
  }

  // Normalized Farkas-type tests on the current iterate.
  bool infeasibility(const detail::Prepared& P, const Blocks& X, const Vec& xf, const Blocks& Z, const Vec& y,
                     SdpStatus& status) const {
    const double by = P.b.dot(y);
    if (by > 0.0) {
      Blocks Aty = apply_At(P, y);
      double r2 = 0.0;
      for (std::size_t b = 0; b < Aty.size(); ++b) r2 += (Aty[b] + Z[b]).squaredNorm();
      r2 += (P.free_coeffs.transpose() * y).squaredNorm();
      if (std::sqrt(r2) / by < opts_.infeas_tol) {
        status = SdpStatus::PrimalInfeasible;
        return true;
      }
    }
    const double cx = inner(P.C, X) + P.cf.dot(xf);
    if (cx < 0.0) {
      const double r = apply_A(P, X, xf).norm();
      if (r / -cx < opts_.infeas_tol) {
        status = SdpStatus::DualInfeasible;
        return true;
      }
    }
    return false;
  }

  SdpOptions opts_;
};

inline SdpSolution solve(const SdpProblem& p, double tol = 1e-7, int max_iter = 200) {
  SdpOptions o;
  o.tol = tol;
  o.max_iter = max_iter;
  return SdpSolver(o).solve(p);
}

}  // namespace roa
