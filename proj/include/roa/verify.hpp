// Sampling-based validation of certificates, trajectory simulation under
// perturbations, simulated maximal-ROA grids and Monte-Carlo volume error.
//
// Nothing here is a proof. Margins are minima over random samples and the
// trajectory suite is a probabilistic restatement of the certified property.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "roa/moments.hpp"
#include "roa/poly.hpp"
#include "roa/sos.hpp"
#include "roa/system.hpp"
#include "roa/zubov.hpp"

namespace roa {

class VerificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kVerifyTolerance = 1e-6;
inline constexpr double kSeedEntryFactor = 0.95;

struct SampleTelemetry {
  std::string domain;
  std::size_t accepted = 0;
  std::size_t attempts = 0;
  double acceptance_rate() const { return attempts ? double(accepted) / double(attempts) : 0.0; }
};

struct SampledMargins {
  double decrease = std::numeric_limits<double>::infinity();
  std::vector<double> inside;  // one per state constraint
  double outside = std::numeric_limits<double>::infinity();
  std::vector<SampleTelemetry> telemetry;

  double min_margin() const {
    double m = std::min(decrease, outside);
    for (double v : inside) m = std::min(m, v);
    return m;
  }
};

struct TrajectorySummary {
  std::size_t start_points = 0;  // certified points found; 0 for an empty set
  std::size_t converged = 0;
  std::size_t left_X = 0;
  std::size_t timeout = 0;
  std::size_t total() const { return converged + left_X + timeout; }
};

struct VolumeError {
  bool defined = false;
  double percent = 0.0;
  double std_error = 0.0;
  std::size_t roa_samples = 0;
  std::size_t missed = 0;
};

struct VerificationReport {
  SampledMargins margins;
  double min_gram_eigenvalue = 0.0;
  double reconstruction_residual = 0.0;
  std::size_t containment_violations = 0;
  std::optional<TrajectorySummary> trajectories;
  std::optional<VolumeError> volume_error;
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;

  bool passed(double tol = kVerifyTolerance) const {
    if (margins.min_margin() < -tol) return false;
    if (min_gram_eigenvalue < -tol) return false;
    if (!(reconstruction_residual <= tol)) return false;
    if (trajectories && trajectories->left_X != 0) return false;
    return true;
  }
};

namespace detail {

// splitmix64 finaliser; turns (seed, counter) into independent stream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return mix64(mix64(mix64(seed) ^ a) ^ b);
}

// Uniform draws from D by rejection inside its ball constraint.
class PerturbationSampler {
 public:
  PerturbationSampler() = default;
  explicit PerturbationSampler(const SystemSpec& s) : n_(s.n), m_(s.m) {
    if (m_ == 0) return;
    double c = 0.0;
    for (const auto& g : s.perturb_constraints) {
      if (is_perturbation_ball(g, s.n, s.m)) c = std::max(c, g.terms().begin()->second);
      gs_.emplace_back(g);
    }
    if (!(c > 0.0)) throw VerificationError("perturbation set needs a ball constraint for sampling");
    radius_sq_ = 1.0 / c;
  }

  // Writes d into point[n .. n+m).
  template <class Rng>
  void sample(Rng& rng, double* point, std::vector<double>& scratch) const {
    if (m_ == 0) return;
    std::vector<double> d(m_);
    for (int tries = 0; tries < 100000; ++tries) {
      sample_ball(rng, m_, radius_sq_, d.data());
      for (std::size_t i = 0; i < m_; ++i) point[n_ + i] = d[i];
      bool ok = true;
      for (const auto& g : gs_) ok = ok && g(point, scratch) <= 1.0;
      if (ok) return;
    }
    throw VerificationError("perturbation set D looks empty");
  }

 private:
  std::size_t n_ = 0, m_ = 0;
  double radius_sq_ = 0.0;
  std::vector<CompiledPolynomial> gs_;
};

struct CompiledSystem {
  std::size_t n = 0, N = 0;
  std::vector<CompiledPolynomial> f, h;
  CompiledPolynomial q;
  double alpha = 0.0;
  double R = 0.0;
  PerturbationSampler dsampler;

  explicit CompiledSystem(const SystemSpec& s) : n(s.n), N(s.nvars()), q(s.seed.q), alpha(s.seed.alpha), R(s.R), dsampler(s) {
    for (const auto& p : s.f) f.emplace_back(p);
    for (const auto& p : s.state_constraints) h.emplace_back(p);
  }

  bool in_X(const double* pt, std::vector<double>& scratch) const {
    for (const auto& hj : h) {
      if (!(hj(pt, scratch) < 1.0)) return false;
    }
    return true;
  }
  bool in_seed(const double* pt, std::vector<double>& scratch) const {
    return q(pt, scratch) <= kSeedEntryFactor * alpha;
  }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Sampled constraint margins

// Minimum of each inequality of the relaxed constraint system over uniform
// samples of its domain:
//   decrease: -grad u . f - delta q (1 - u)      on (B \ X_inf) x D
//   inside_j: u + (1 - h_j)^delta - 1            on closure(X) \ X_inf
//   outside:  u - 1                              on B \ X
inline SampledMargins sampled_margins(const Polynomial& u, const SystemSpec& spec, std::size_t n_samples,
                                      std::uint64_t seed) {
  if (n_samples == 0) throw VerificationError("need at least one sample");
  const detail::CompiledSystem sys(spec);
  const CompiledPolynomial cu(u);
  const CompiledPolynomial lie(lie_derivative(u, spec.f));
  // give up early only if nothing is accepted; thin domains just take longer
  const std::size_t probe = 100 * n_samples, limit = 10000 * n_samples;
  std::vector<double> pt(spec.nvars(), 0.0), scratch;
  SampledMargins out;
  out.inside.assign(spec.state_constraints.size(), std::numeric_limits<double>::infinity());

  auto run = [&](const std::string& name, std::uint64_t stream, auto accept, auto record) {
    std::mt19937_64 rng(detail::stream_seed(seed, stream));
    SampleTelemetry t{name, 0, 0};
    while (t.accepted < n_samples && t.attempts < limit) {
      if (t.accepted == 0 && t.attempts >= probe) break;
      ++t.attempts;
      std::fill(pt.begin(), pt.end(), 0.0);
      sample_ball(rng, spec.n, spec.R, pt.data());
      if (!accept()) continue;
      ++t.accepted;
      record(rng);
    }
    if (t.accepted == 0) {
      throw VerificationError("sampling domain " + name + " is empty after " + std::to_string(t.attempts) + " attempts");
    }
    out.telemetry.push_back(t);
  };

  run("ball_minus_seed_x_D", 1, [&] { return !(sys.q(pt.data(), scratch) < spec.seed.alpha); },
      [&](std::mt19937_64& rng) {
        sys.dsampler.sample(rng, pt.data(), scratch);
        const double uv = cu(pt.data(), scratch);
        const double v = -lie(pt.data(), scratch) - spec.delta * sys.q(pt.data(), scratch) * (1.0 - uv);
        out.decrease = std::min(out.decrease, v);
      });

  std::vector<double> hv(sys.h.size());
  run("closed_X_minus_seed", 2,
      [&] {
        if (sys.q(pt.data(), scratch) < spec.seed.alpha) return false;
        for (std::size_t j = 0; j < sys.h.size(); ++j) {
          hv[j] = sys.h[j](pt.data(), scratch);
          if (hv[j] > 1.0) return false;
        }
        return true;
      },
      [&](std::mt19937_64&) {
        const double uv = cu(pt.data(), scratch);
        for (std::size_t j = 0; j < hv.size(); ++j) {
          const double v = uv + std::pow(1.0 - hv[j], spec.delta) - 1.0;
          out.inside[j] = std::min(out.inside[j], v);
        }
      });

  run("ball_minus_X", 3, [&] { return !sys.in_X(pt.data(), scratch); },
      [&](std::mt19937_64&) { out.outside = std::min(out.outside, cu(pt.data(), scratch) - 1.0); });
  return out;
}

// Points of the certified set that fall outside X.
inline std::size_t containment_violations(const Certificate& cert, const SystemSpec& spec, std::size_t n_samples,
                                          std::uint64_t seed) {
  const detail::CompiledSystem sys(spec);
  std::mt19937_64 rng(detail::stream_seed(seed, 4));
  std::vector<double> pt(spec.nvars(), 0.0), scratch;
  std::size_t bad = 0;
  for (std::size_t k = 0; k < n_samples; ++k) {
    sample_ball(rng, spec.n, spec.R, pt.data());
    if (contains(cert, spec, pt) && !sys.in_X(pt.data(), scratch)) ++bad;
  }
  return bad;
}

// Identity residuals recomputed from the Gram blocks stored in the
// certificate, against a freshly assembled program.
inline std::pair<double, double> recheck_identities(const Certificate& cert, const SystemSpec& spec) {
  MomentOptions mo;
  mo.mc_samples = 1000;  // the objective plays no part here
  const SosProgram prog = assemble_program(spec, cert.degrees, mo);
  if (prog.gram_vars.size() != cert.grams.size()) {
    throw VerificationError("certificate has " + std::to_string(cert.grams.size()) + " Gram blocks, system needs " +
                            std::to_string(prog.gram_vars.size()));
  }
  std::vector<Polynomial> gp;
  double min_eig = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < prog.gram_vars.size(); ++i) {
    const auto& g = prog.gram_vars[i];
    const auto& b = cert.grams[i];
    if (g.name != b.name || g.basis != b.basis) {
      throw VerificationError("Gram block " + std::to_string(i) + " (" + b.name + ") does not match the system");
    }
    if (b.Q.rows() != static_cast<Eigen::Index>(b.basis.size()) || b.Q.cols() != b.Q.rows()) {
      throw VerificationError("Gram block " + b.name + " has the wrong shape");
    }
    gp.push_back(gram_polynomial(b.basis, b.Q));
    if (b.Q.rows() > 0) {
      const Eigen::MatrixXd S = 0.5 * (b.Q + b.Q.transpose());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
      // An asymmetric Q represents something other than what was solved, so
      // its asymmetry counts against the margin.
      const double asym = (b.Q - b.Q.transpose()).cwiseAbs().maxCoeff();
      min_eig = std::min(min_eig, es.eigenvalues().minCoeff() - asym);
    }
  }
  double res = 0.0;
  for (std::size_t i = 0; i < prog.identities.size(); ++i) {
    res = std::max(res, identity_residual(prog, i, cert.u, gp).max_abs_coeff());
  }
  if (!std::isfinite(min_eig)) min_eig = 0.0;
  return {res, min_eig};
}

// ---------------------------------------------------------------------------
// Simulation

enum class Integrator { Euler, RK4 };

struct PerturbationPolicy {
  enum class Kind { Uniform, Constant };
  Kind kind = Kind::Uniform;
  std::vector<double> value;  // Constant only
  std::uint64_t seed = 0;     // Uniform only

  static PerturbationPolicy uniform(std::uint64_t seed) { return {Kind::Uniform, {}, seed}; }
  static PerturbationPolicy constant(std::vector<double> d) { return {Kind::Constant, std::move(d), 0}; }
};

enum class TrajectoryOutcome { Converged, LeftX, Timeout, Diverged };

inline const char* to_string(TrajectoryOutcome o) {
  switch (o) {
    case TrajectoryOutcome::Converged: return "converged";
    case TrajectoryOutcome::LeftX: return "left_X";
    case TrajectoryOutcome::Timeout: return "timeout";
    case TrajectoryOutcome::Diverged: return "diverged";
  }
  return "?";
}

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> states;
  std::vector<std::vector<double>> perturbation_trace;  // d held on [t_k, t_k+1)
  TrajectoryOutcome outcome = TrajectoryOutcome::Timeout;
  double seed_entry_time = -1.0;
};

struct SimulationOptions {
  double T = 50.0;
  double dt = 0.01;
  Integrator method = Integrator::Euler;
  bool stop_at_seed = false;
  bool stop_at_exit = false;
  bool record = true;
};

namespace detail {

class Stepper {
 public:
  explicit Stepper(const CompiledSystem& sys) : sys_(sys), k_(4, std::vector<double>(sys.n)), tmp_(sys.N) {}

  // Advances pt[0..n) by one step with pt[n..N) held fixed.
  void step(double* pt, double dt, Integrator method) {
    const std::size_t n = sys_.n;
    if (method == Integrator::Euler) {
      for (std::size_t i = 0; i < n; ++i) k_[0][i] = sys_.f[i](pt, scratch_);
      for (std::size_t i = 0; i < n; ++i) pt[i] += dt * k_[0][i];
      return;
    }
    std::copy(pt, pt + sys_.N, tmp_.begin());
    static constexpr double c[4] = {0.0, 0.5, 0.5, 1.0};
    for (int s = 0; s < 4; ++s) {
      if (s > 0) {
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = pt[i] + c[s] * dt * k_[s - 1][i];
      }
      for (std::size_t i = 0; i < n; ++i) k_[s][i] = sys_.f[i](tmp_.data(), scratch_);
    }
    for (std::size_t i = 0; i < n; ++i) pt[i] += dt / 6.0 * (k_[0][i] + 2.0 * k_[1][i] + 2.0 * k_[2][i] + k_[3][i]);
  }

  std::vector<double>& scratch() { return scratch_; }

 private:
  const CompiledSystem& sys_;
  std::vector<std::vector<double>> k_;
  std::vector<double> tmp_;
  std::vector<double> scratch_;
};

// Shared core for simulate() and the grid/suite loops that do not record.
template <class Rng>
TrajectoryOutcome run_trajectory(const CompiledSystem& sys, Stepper& st, double* pt, const PerturbationPolicy& pol,
                                 Rng& rng, const SimulationOptions& o, Trajectory* rec) {
  auto& scratch = st.scratch();
  const double bound2 = 100.0 * sys.R;
  const auto steps = static_cast<std::size_t>(std::llround(o.T / o.dt));
  bool entered = false, left = false;
  auto observe = [&](double t) {
    if (!sys.in_X(pt, scratch)) left = true;
    if (!entered && sys.in_seed(pt, scratch)) {
      entered = true;
      if (rec) rec->seed_entry_time = t;
    }
  };
  auto push_state = [&](double t) {
    if (!rec) return;
    rec->times.push_back(t);
    rec->states.emplace_back(pt, pt + sys.n);
  };
  push_state(0.0);
  observe(0.0);
  for (std::size_t k = 0; k < steps; ++k) {
    if ((o.stop_at_exit && left) || (o.stop_at_seed && entered)) break;
    if (pol.kind == PerturbationPolicy::Kind::Uniform) {
      sys.dsampler.sample(rng, pt, scratch);
    } else {
      for (std::size_t i = 0; i < sys.N - sys.n; ++i) pt[sys.n + i] = pol.value[i];
    }
    if (rec) rec->perturbation_trace.emplace_back(pt + sys.n, pt + sys.N);
    st.step(pt, o.dt, o.method);
    const double t = double(k + 1) * o.dt;
    push_state(t);
    double r2 = 0.0;
    for (std::size_t i = 0; i < sys.n; ++i) r2 += pt[i] * pt[i];
    if (!(r2 <= bound2)) return TrajectoryOutcome::Diverged;
    observe(t);
  }
  if (left) return TrajectoryOutcome::LeftX;
  return entered ? TrajectoryOutcome::Converged : TrajectoryOutcome::Timeout;
}

}  // namespace detail

inline Trajectory simulate(const SystemSpec& spec, const std::vector<double>& x0, const PerturbationPolicy& policy,
                           const SimulationOptions& opts = {}) {
  if (!(opts.dt > 0.0) || !(opts.T >= opts.dt)) throw VerificationError("need dt > 0 and T >= dt");
  if (x0.size() != spec.n) throw DimensionError("initial state must have one entry per state variable");
  if (policy.kind == PerturbationPolicy::Kind::Constant && policy.value.size() != spec.m) {
    throw DimensionError("constant perturbation must have one entry per perturbation variable");
  }
  const detail::CompiledSystem sys(spec);
  detail::Stepper st(sys);
  std::vector<double> pt(spec.nvars(), 0.0);
  std::copy(x0.begin(), x0.end(), pt.begin());
  std::mt19937_64 rng(detail::stream_seed(policy.seed, 0));
  Trajectory tr;
  tr.outcome = detail::run_trajectory(sys, st, pt.data(), policy, rng, opts, opts.record ? &tr : nullptr);
  return tr;
}

// ---------------------------------------------------------------------------
// Simulated maximal ROA

// Cell-centred grid over [-sqrt(R), sqrt(R)] along `axes`; other state
// coordinates are fixed at `base`.
struct RoaGrid {
  std::vector<std::size_t> axes;
  std::vector<double> base;
  double half_width = 0.0;
  std::size_t resolution = 0;
  std::vector<std::uint8_t> inside;  // row-major, last axis fastest

  double coord(std::size_t i) const {
    const double h = 2.0 * half_width / double(resolution);
    return -half_width + (double(i) + 0.5) * h;
  }
  std::size_t cells() const { return inside.size(); }
  std::size_t count_inside() const {
    std::size_t c = 0;
    for (auto v : inside) c += v;
    return c;
  }
  // Flat index of the cell containing the slice point, or npos.
  std::size_t locate(const std::vector<double>& slice_point) const {
    const double h = 2.0 * half_width / double(resolution);
    std::size_t idx = 0;
    for (double v : slice_point) {
      const double f = std::floor((v + half_width) / h);
      if (f < 0.0 || f >= double(resolution)) return static_cast<std::size_t>(-1);
      idx = idx * resolution + static_cast<std::size_t>(f);
    }
    return idx;
  }
};

struct RoaGridOptions {
  std::size_t resolution = 400;
  std::size_t n_policies = 20;
  double T = 50.0;
  double dt = 0.01;
  std::uint64_t seed = 1;
  std::vector<std::size_t> axes;  // empty: every state axis (n <= 3)
  std::vector<double> base;       // empty: origin
};

// A cell is inside iff all sampled perturbation traces keep the Euler
// trajectory from its centre in X until it reaches the seed set.
inline RoaGrid estimate_max_roa(const SystemSpec& spec, const RoaGridOptions& o = {}) {
  if (o.resolution == 0) throw VerificationError("grid resolution must be positive");
  if (o.n_policies == 0) throw VerificationError("need at least one perturbation policy");
  RoaGrid g;
  g.axes = o.axes;
  if (g.axes.empty()) {
    if (spec.n > 3) throw VerificationError("full grids need n <= 3; choose a 2-D slice");
    for (std::size_t i = 0; i < spec.n; ++i) g.axes.push_back(i);
  }
  for (auto a : g.axes) {
    if (a >= spec.n) throw VerificationError("slice axis out of range");
  }
  g.base = o.base.empty() ? std::vector<double>(spec.n, 0.0) : o.base;
  if (g.base.size() != spec.n) throw DimensionError("slice base point must have n entries");
  g.half_width = std::sqrt(spec.R);
  g.resolution = o.resolution;
  std::size_t total = 1;
  for (std::size_t k = 0; k < g.axes.size(); ++k) total *= o.resolution;
  g.inside.assign(total, 0);

  const detail::CompiledSystem sys(spec);
  detail::Stepper st(sys);
  SimulationOptions so;
  so.T = o.T;
  so.dt = o.dt;
  so.stop_at_exit = true;
  so.stop_at_seed = true;
  so.record = false;
  // Without perturbations every trace is the same.
  const std::size_t npol = spec.m == 0 ? 1 : o.n_policies;
  std::vector<double> pt(spec.nvars(), 0.0);
  for (std::size_t cell = 0; cell < total; ++cell) {
    std::fill(pt.begin(), pt.end(), 0.0);
    std::copy(g.base.begin(), g.base.end(), pt.begin());
    std::size_t rem = cell;
    for (std::size_t k = g.axes.size(); k-- > 0;) {
      pt[g.axes[k]] = g.coord(rem % o.resolution);
      rem /= o.resolution;
    }
    const std::vector<double> x0(pt.begin(), pt.begin() + spec.n);
    if (!sys.in_X(pt.data(), st.scratch())) continue;
    bool ok = true;
    for (std::size_t p = 0; p < npol && ok; ++p) {
      std::copy(x0.begin(), x0.end(), pt.begin());
      std::mt19937_64 rng(detail::stream_seed(o.seed, cell, p));
      const auto out = detail::run_trajectory(sys, st, pt.data(), PerturbationPolicy::uniform(0), rng, so, nullptr);
      ok = out == TrajectoryOutcome::Converged;
    }
    g.inside[cell] = ok ? 1 : 0;
  }
  return g;
}

// Percentage of the simulated ROA (restricted to the grid's slice) that the
// certified set misses, with its binomial standard error.
inline VolumeError relative_volume_error(const Certificate& cert, const SystemSpec& spec, const RoaGrid& grid,
                                         std::size_t n_mc, std::uint64_t seed) {
  if (n_mc == 0) throw VerificationError("need at least one Monte-Carlo sample");
  if (grid.base.size() != spec.n) throw DimensionError("grid does not match the system");
  std::mt19937_64 rng(detail::stream_seed(seed, 5));
  std::uniform_real_distribution<double> unif(-grid.half_width, grid.half_width);
  std::vector<double> sp(grid.axes.size()), x = grid.base;
  VolumeError out;
  for (std::size_t k = 0; k < n_mc; ++k) {
    for (std::size_t a = 0; a < sp.size(); ++a) {
      sp[a] = unif(rng);
      x[grid.axes[a]] = sp[a];
    }
    const std::size_t idx = grid.locate(sp);
    if (idx == static_cast<std::size_t>(-1) || !grid.inside[idx]) continue;
    ++out.roa_samples;
    if (!contains(cert, spec, x)) ++out.missed;
  }
  if (out.roa_samples == 0) return out;
  out.defined = true;
  const double p = double(out.missed) / double(out.roa_samples);
  out.percent = 100.0 * p;
  out.std_error = 100.0 * std::sqrt(p * (1.0 - p) / double(out.roa_samples));
  return out;
}

// ---------------------------------------------------------------------------
// Trajectory soundness

struct TrajectorySuiteOptions {
  std::size_t n_points = 200;
  std::size_t n_traces = 10;
  double T = 50.0;
  double dt = 0.01;
  Integrator method = Integrator::Euler;
  std::uint64_t seed = 1;
};

// Random points of the certified set, each driven by random perturbation
// traces; every run must stay in X and reach the seed set.
inline TrajectorySummary trajectory_suite(const Certificate& cert, const SystemSpec& spec,
                                          const TrajectorySuiteOptions& o = {}) {
  const detail::CompiledSystem sys(spec);
  detail::Stepper st(sys);
  std::mt19937_64 rng(detail::stream_seed(o.seed, 6));
  std::vector<std::vector<double>> starts;
  std::vector<double> pt(spec.nvars(), 0.0);
  std::size_t attempts = 0;
  while (starts.size() < o.n_points && attempts < 100 * std::max<std::size_t>(o.n_points, 1)) {
    ++attempts;
    sample_ball(rng, spec.n, spec.R, pt.data());
    std::vector<double> x(pt.begin(), pt.begin() + spec.n);
    if (contains(cert, spec, x)) starts.push_back(std::move(x));
  }
  SimulationOptions so;
  so.T = o.T;
  so.dt = o.dt;
  so.method = o.method;
  so.stop_at_exit = true;
  so.stop_at_seed = true;
  so.record = false;
  TrajectorySummary s;
  s.start_points = starts.size();
  for (std::size_t i = 0; i < starts.size(); ++i) {
    for (std::size_t t = 0; t < o.n_traces; ++t) {
      std::fill(pt.begin(), pt.end(), 0.0);
      std::copy(starts[i].begin(), starts[i].end(), pt.begin());
      std::mt19937_64 r(detail::stream_seed(o.seed, 1000 + i, t));
      switch (detail::run_trajectory(sys, st, pt.data(), PerturbationPolicy::uniform(0), r, so, nullptr)) {
        case TrajectoryOutcome::Converged: ++s.converged; break;
        case TrajectoryOutcome::Timeout: ++s.timeout; break;
        default: ++s.left_X; break;
      }
    }
  }
  return s;
}

// ---------------------------------------------------------------------------

struct VerifyOptions {
  std::size_t n_samples = 100000;
  std::uint64_t seed = 1;
  bool trajectories = true;
  TrajectorySuiteOptions suite;
};

inline VerificationReport check_certificate(const Certificate& cert, const SystemSpec& spec, const VerifyOptions& o = {}) {
  if (o.n_samples == 0) throw VerificationError("need at least one sample");
  if (cert.u.nvars() != spec.nvars()) throw VerificationError("certificate and system have different variable counts");
  VerificationReport r;
  r.n_samples = o.n_samples;
  r.seed = o.seed;
  auto [res, eig] = recheck_identities(cert, spec);
  r.reconstruction_residual = res;
  r.min_gram_eigenvalue = eig;
  r.margins = sampled_margins(cert.u, spec, o.n_samples, o.seed);
  r.containment_violations = containment_violations(cert, spec, o.n_samples, o.seed);
  if (o.trajectories) {
    TrajectorySuiteOptions so = o.suite;
    so.seed = o.seed;
    r.trajectories = trajectory_suite(cert, spec, so);
  }
  return r;
}

}  // namespace roa
