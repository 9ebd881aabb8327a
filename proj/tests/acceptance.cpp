// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails. Optional arguments select criteria, e.g. `acceptance 6 7`.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ball_quadrature.hpp"
#include "random_sdp.hpp"
#include "roa/io.hpp"
#include "roa/moments.hpp"
#include "roa/sdp.hpp"
#include "roa/sdp_solver.hpp"
#include "roa/sos.hpp"
#include "roa/verify.hpp"
#include "roa/zubov.hpp"

using namespace roa;

namespace {

constexpr double kTol = 1e-6;
constexpr std::size_t kSamples = 100000;
constexpr std::size_t kMc = 1000000;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SystemFile load(const std::string& name) { return load_system(std::string(ROA_SYSTEMS_DIR) + "/" + name); }

struct Run {
  std::string label;
  const SystemSpec* spec = nullptr;
  std::optional<Certificate> cert;
  double wall = 0.0;
  std::string failure;
};

Run synth(const std::string& label, const SystemSpec& spec, DegreeConfig cfg) {
  Run r;
  r.label = label;
  r.spec = &spec;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    r.cert = synthesize(spec, cfg);
  } catch (const SynthesisFailure& e) {
    r.failure = to_string(e.status());
  }
  r.wall = seconds_since(t0);
  std::cout << "  " << label << " (" << cfg.k << "," << cfg.d_s << "," << cfg.d_s_prime << "): "
            << (r.cert ? "Optimal" : r.failure) << " in " << std::fixed << std::setprecision(1) << r.wall << " s";
  if (r.cert) std::cout << std::defaultfloat << std::setprecision(6) << ", objective " << r.cert->objective_value;
  std::cout << std::defaultfloat << std::setprecision(6) << "\n";
  return r;
}

bool report(int id, bool ok, const std::string& what) {
  std::cout << "criterion " << id << ": " << (ok ? "PASS" : "FAIL") << "  " << what << std::endl;
  return ok;
}

std::string fmt(double v, int prec = 3) {
  std::ostringstream o;
  o << std::setprecision(prec) << v;
  return o.str();
}

void write_u_slice(const Certificate& c, const SystemSpec& spec, std::size_t res, const std::string& path) {
  Grid g;
  const auto names = spec.names();
  const double hw = std::sqrt(spec.R);
  for (std::size_t i = 0; i < spec.n; ++i) {
    g.axes.push_back(names[i]);
    g.coords.push_back({0.0});
  }
  for (std::size_t a : {0, 1}) {
    g.coords[a].clear();
    for (std::size_t i = 0; i < res; ++i) g.coords[a].push_back(-hw + 2.0 * hw * double(i) / double(res - 1));
  }
  const CompiledPolynomial u(c.u);
  std::vector<double> pt(spec.nvars(), 0.0), scratch;
  for (std::size_t i = 0; i < res; ++i) {
    for (std::size_t j = 0; j < res; ++j) {
      pt[0] = g.coords[0][i];
      pt[1] = g.coords[1][j];
      g.values.push_back(u(pt.data(), scratch));
    }
  }
  std::ofstream out(path);
  write_grid_csv(g, out);
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  auto want = [&](int c) { return only.empty() || only.count(c) > 0; };
  // 4 and 5 check the certificates produced by 1-3
  const bool need1 = want(1) || want(4) || want(5);
  const bool need2 = want(2) || want(4) || want(5);
  const bool need3 = want(3) || want(4);

  const SystemFile vdp = load("vdp.json");
  const SystemFile p2d = load("perturbed2d.json");
  const SystemFile seven = load("seven_dim.json");
  std::vector<Run> runs;
  std::map<int, bool> result;

  // 1
  if (need1) {
    std::cout << "example 1\n";
    const std::vector<std::pair<DegreeConfig, double>> rows = {
        {{6, 12, 10}, 12.5}, {{8, 14, 12}, 6.98}, {{10, 20, 18}, 4.60}};
    RoaGridOptions go;
    go.resolution = 400;
    const auto t0 = std::chrono::steady_clock::now();
    const RoaGrid g = estimate_max_roa(vdp.spec, go);
    std::cout << "  simulated ROA: " << g.count_inside() << " of " << g.cells() << " cells (" << fmt(seconds_since(t0))
              << " s)\n";
    bool ok = true;
    std::string line;
    for (const auto& [cfg, target] : rows) {
      Run r = synth("vdp k=" + std::to_string(cfg.k), vdp.spec, cfg);
      if (!r.cert || r.wall > 300.0) {
        ok = false;
        line += " k=" + std::to_string(cfg.k) + " " + (r.cert ? "too slow" : r.failure) + ";";
      } else {
        const VolumeError ve = relative_volume_error(*r.cert, vdp.spec, g, kMc, 3);
        const bool within = ve.defined && std::abs(ve.percent - target) <= 8.0;
        ok = ok && within;
        line += " k=" + std::to_string(cfg.k) + " " + fmt(ve.percent) + "% (target " + fmt(target) + "%, " +
                fmt(r.wall) + " s);";
      }
      runs.push_back(std::move(r));
    }
    if (want(1)) result[1] = report(1, ok, "example 1 volume errors:" + line);
  }

  // 2
  if (need2) {
    std::cout << "example 2\n";
    RoaGridOptions go;
    go.resolution = 400;
    go.n_policies = 20;
    const auto t0 = std::chrono::steady_clock::now();
    const RoaGrid g = estimate_max_roa(p2d.spec, go);
    std::cout << "  simulated ROA: " << g.count_inside() << " of " << g.cells() << " cells (" << fmt(seconds_since(t0))
              << " s)\n";
    std::vector<double> err;
    bool ok = true;
    std::string line;
    for (int k = 2; k <= 10; k += 2) {
      Run r = synth("perturbed2d k=" + std::to_string(k), p2d.spec, {k, k + 2, k});
      if (!r.cert) {
        ok = false;
        line += " k=" + std::to_string(k) + " " + r.failure + ";";
        err.push_back(NAN);
      } else {
        const VolumeError ve = relative_volume_error(*r.cert, p2d.spec, g, kMc, 3);
        err.push_back(ve.defined ? ve.percent : NAN);
        line += " k=" + std::to_string(k) + " " + fmt(err.back()) + "%;";
      }
      runs.push_back(std::move(r));
    }
    ok = ok && err.front() > 25.0 && err.back() < 10.0;
    for (std::size_t i = 1; i < err.size(); ++i) ok = ok && err[i] <= err[i - 1] + 2.0;
    if (want(2)) result[2] = report(2, ok, "example 2 volume errors:" + line);
  }

  // 3
  if (need3) {
    std::cout << "example 3\n";
    Run r = synth("seven_dim k=3", seven.spec, {3, 4, 2});
    bool ok = r.cert.has_value() && r.wall <= 1800.0;
    std::string line = r.cert ? "Optimal in " + fmt(r.wall) + " s" : r.failure;
    if (r.cert) {
      const SampledMargins m = sampled_margins(r.cert->u, seven.spec, kSamples, 1);
      ok = ok && m.min_margin() >= -kTol;
      line += ", min sampled margin " + fmt(m.min_margin());
      for (const auto& t : m.telemetry) {
        std::cout << "  sampling " << t.domain << ": " << t.accepted << "/" << t.attempts << "\n";
      }
      RoaGridOptions go;
      go.resolution = 100;
      go.n_policies = 20;
      go.axes = {0, 1};
      const auto t0 = std::chrono::steady_clock::now();
      const RoaGrid g = estimate_max_roa(seven.spec, go);
      {
        std::ofstream out("ex3_slice_roa.csv");
        write_grid_csv(to_grid(g, seven.spec), out);
      }
      write_u_slice(*r.cert, seven.spec, 100, "ex3_slice_u.csv");
      std::size_t certified = 0;
      for (std::size_t i = 0; i < g.cells(); ++i) {
        std::vector<double> x(seven.spec.n, 0.0);
        x[0] = g.coord(i / g.resolution);
        x[1] = g.coord(i % g.resolution);
        certified += contains(*r.cert, seven.spec, x) ? 1 : 0;
      }
      std::cout << "  x1-x2 slice: " << g.count_inside() << " simulated, " << certified << " certified of "
                << g.cells() << " cells (" << fmt(seconds_since(t0)) << " s); wrote ex3_slice_roa.csv, ex3_slice_u.csv\n";
      line += ", slice grids written (" + std::to_string(certified) + " certified cells)";
    }
    runs.push_back(std::move(r));
    if (want(3)) result[3] = report(3, ok, "example 3: " + line);
  }

  // 4
  if (want(4)) {
    bool ok = true;
    std::size_t n = 0;
    double worst_res = 0.0, worst_eig = INFINITY, worst_margin = INFINITY;
    std::size_t contain = 0;
    for (const auto& r : runs) {
      if (!r.cert) continue;
      ++n;
      const auto [res, eig] = recheck_identities(*r.cert, *r.spec);
      const SampledMargins m = sampled_margins(r.cert->u, *r.spec, kSamples, 11);
      const std::size_t bad = containment_violations(*r.cert, *r.spec, kSamples, 11);
      const bool pass = res <= kTol && eig >= -kTol && m.min_margin() >= -kTol && bad == 0;
      std::cout << "  " << r.label << ": residual " << fmt(res) << ", min eig " << fmt(eig) << ", min margin "
                << fmt(m.min_margin()) << ", containment violations " << bad << (pass ? "" : "  <-- fails") << "\n";
      ok = ok && pass;
      worst_res = std::max(worst_res, res);
      worst_eig = std::min(worst_eig, eig);
      worst_margin = std::min(worst_margin, m.min_margin());
      contain += bad;
    }
    ok = ok && n > 0;
    result[4] = report(4, ok, std::to_string(n) + " certificates; worst residual " + fmt(worst_res) + ", min eig " +
                                  fmt(worst_eig) + ", min margin " + fmt(worst_margin) + ", containment violations " +
                                  std::to_string(contain));
  }

  // 5
  if (want(5)) {
    bool ok = true;
    std::size_t runs_total = 0, bad_total = 0, n = 0;
    for (const auto& r : runs) {
      if (!r.cert || r.spec == &seven.spec) continue;
      ++n;
      TrajectorySuiteOptions o;
      o.n_points = 200;
      o.n_traces = 10;
      o.T = 50.0;
      const TrajectorySummary s = trajectory_suite(*r.cert, *r.spec, o);
      const std::size_t total = s.start_points * o.n_traces;
      // An empty certified set has no points to simulate and nothing to violate.
      const bool empty = s.start_points == 0 && !contains(*r.cert, *r.spec, std::vector<double>(r.spec->n, 0.0));
      const bool pass = empty || (s.start_points == o.n_points && s.converged == total);
      std::cout << "  " << r.label << ": " << s.start_points << " points, " << s.converged << "/" << total
                << " converged, " << s.left_X << " left X, " << s.timeout << " timed out"
                << (empty ? " (empty certified set)" : "") << (pass ? "" : "  <-- fails") << "\n";
      ok = ok && pass;
      runs_total += total;
      bad_total += total - s.converged;
    }
    ok = ok && n > 0;
    result[5] = report(5, ok, std::to_string(n) + " certificates, " + std::to_string(runs_total) +
                                  " perturbed trajectories, " + std::to_string(bad_total) + " failures");
  }

  // 6
  if (want(6)) {
    double worst = 0.0;
    std::size_t count = 0;
    for (std::size_t n = 1; n <= 3; ++n) {
      for (double r2 : {1.01, 1.3}) {
        for (const auto& m : monomial_basis(n, 10)) {
          const double exact = ball_moment(m.exponents(), r2);
          const double quad = testing::ball_quadrature(m.exponents(), r2);
          // odd moments vanish; compare against the scale of the ball volume
          const double scale = exact != 0.0 ? std::abs(exact) : ball_moment(std::vector<int>(n, 0), r2);
          worst = std::max(worst, std::abs(exact - quad) / scale);
          ++count;
        }
      }
    }
    result[6] = report(6, worst <= kTol, std::to_string(count) + " moments, worst relative deviation " + fmt(worst));
  }

  // 7
  if (want(7)) {
    std::mt19937_64 rng(20240601);
    double worst = 0.0;
    bool all_optimal = true, round_trip = true;
    for (int t = 0; t < 20; ++t) {
      const SdpProblem p = testing::random_feasible_sdp(rng, 20, 200);
      const SdpSolution s = solve(p);
      all_optimal = all_optimal && s.status == SdpStatus::Optimal;
      const auto k = testing::kkt_residuals(p, s);
      worst = std::max({worst, k.primal, k.dual, k.gap, -k.min_eig_x, -k.min_eig_z});
      std::stringstream a;
      export_sdpa(p, a);
      SdpProblem q = import_sdpa(a);
      std::stringstream b;
      export_sdpa(q, b);
      SdpProblem pc = p;
      pc.canonicalize();
      q.canonicalize();
      round_trip = round_trip && a.str() == b.str() && pc.psd_blocks == q.psd_blocks && pc.free_dim == q.free_dim &&
                   pc.rows.size() == q.rows.size();
    }

    const LoweredProgram low = lower_to_sdp(assemble_program(vdp.spec, {6, 12, 10}));
    const SdpSolution ours = solve(low.sdp);
    const std::string path = (std::filesystem::temp_directory_path() / "roa_acceptance_ex1_k6.dat-s").string();
    {
      std::ofstream out(path);
      export_sdpa(low.sdp, out);
    }
    std::stringstream a;
    export_sdpa(low.sdp, a);
    std::stringstream b;
    export_sdpa(import_sdpa(a), b);
    round_trip = round_trip && a.str() == b.str();

    double theirs = NAN;
    const std::string cmd = std::string("python3 ") + ROA_CROSSCHECK_SCRIPT + " " + path + " 2>/dev/null";
    if (FILE* pipe = popen(cmd.c_str(), "r")) {
      std::string out;
      char buf[512];
      while (fgets(buf, sizeof buf, pipe)) out += buf;
      pclose(pipe);
      try {
        const auto j = nlohmann::json::parse(out);
        if (j.value("status", "") == "optimal") theirs = j["min_objective"].get<double>();
      } catch (const std::exception&) {
      }
    }
    std::filesystem::remove(path);
    const double rel = std::abs(ours.objective_value - theirs) / std::max(1.0, std::abs(theirs));
    const bool cross = ours.status == SdpStatus::Optimal && std::isfinite(theirs) && rel <= 1e-4;
    std::cout << "  example 1 k=6: embedded " << std::setprecision(10) << ours.objective_value << ", Clarabel "
              << theirs << std::setprecision(6) << "\n";
    result[7] = report(7, all_optimal && worst <= 1e-7 && round_trip && cross,
                       "20 random SDPs worst KKT residual " + fmt(worst) + (all_optimal ? "" : " (not all Optimal)") +
                           ", SDPA round-trip " + (round_trip ? "exact" : "differs") + ", cross-check relative gap " +
                           fmt(rel));
  }

  // 8
  if (want(8)) {
    bool ok = true;
    std::string line;
    for (const auto* sf : {&vdp, &p2d, &seven}) {
      if (sf->spec.delta != 1) continue;
      const Polynomial one = Polynomial::constant(sf->spec.nvars(), 1.0);
      const SampledMargins m = sampled_margins(one, sf->spec, kSamples, 5);
      ok = ok && m.min_margin() >= 0.0;
      line += " " + fmt(m.min_margin() + 0.0);
    }
    result[8] = report(8, ok, "u = 1 min sampled margins:" + line);
  }

  bool all = true;
  for (const auto& [c, ok] : result) all = all && ok;
  std::cout << (all ? "all selected criteria pass" : "some criteria FAIL") << "\n";
  return all ? 0 : 1;
}
