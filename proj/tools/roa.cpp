// roa: synthesize and check robust domain-of-attraction certificates.
//
// Exit codes: 0 success, 1 input error, 2 infeasible, 3 numerical trouble,
// 4 verification failed.

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "roa/io.hpp"
#include "roa/sdp.hpp"
#include "roa/sos.hpp"
#include "roa/verify.hpp"
#include "roa/zubov.hpp"

namespace {

using namespace roa;

enum Exit { kOk = 0, kInput = 1, kInfeasible = 2, kNumerical = 3, kVerifyFailed = 4 };

struct DegreeFlags {
  std::optional<int> k, ds, dsp;
  std::string unit;
};

void add_degree_flags(CLI::App* c, DegreeFlags& d) {
  c->add_option("--k", d.k, "degree of u");
  c->add_option("--ds", d.ds, "degree budget of the decrease identity");
  c->add_option("--dsprime", d.dsp, "degree budget of the containment identities");
  c->add_option("--unit", d.unit, "degree unit: product (default) or multiplier")->check(CLI::IsMember({"product", "multiplier"}));
}

DegreeConfig resolve_degrees(const SystemFile& sf, const DegreeFlags& d) {
  DegreeConfig c;
  if (d.k) {
    c = default_degrees(sf.spec, *d.k);
    if (sf.degrees && sf.degrees->k == *d.k) c = *sf.degrees;
  } else if (sf.degrees) {
    c = *sf.degrees;
  } else {
    throw InputError("no degrees: pass --k or add \"degrees\" to the system file");
  }
  if (d.ds) c.d_s = *d.ds;
  if (d.dsp) c.d_s_prime = *d.dsp;
  if (!d.unit.empty()) c.unit = d.unit == "multiplier" ? DegreeUnit::Multiplier : DegreeUnit::Product;
  return c;
}

void check_valid(const SystemSpec& s) {
  for (const auto& v : validate(s)) {
    if (v.hard) throw InputError(v.message);
  }
}

template <class Fn>
void write_to(const std::string& path, Fn fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  fn(out);
  if (!out) throw InputError("write failed: " + path);
}

struct SliceFlags {
  std::string slice;
  std::vector<std::string> at;
};

void add_slice_flags(CLI::App* c, SliceFlags& s) {
  c->add_option("--slice", s.slice, "two state variables spanning the plane, e.g. x1,x2");
  c->add_option("--at", s.at, "fixed value of an off-slice variable, name=value (default 0)");
}

std::pair<std::vector<std::size_t>, std::vector<double>> resolve_slice(const SystemSpec& spec, const SliceFlags& f) {
  const auto names = spec.names();
  auto index_of = [&](const std::string& nm) {
    for (std::size_t i = 0; i < spec.n; ++i) {
      if (names[i] == nm) return i;
    }
    throw InputError("unknown state variable '" + nm + "'");
  };
  std::vector<std::size_t> axes;
  std::vector<double> base(spec.n, 0.0);
  if (f.slice.empty()) {
    if (spec.n > 2) throw InputError("--slice is required for systems with more than two states");
  } else {
    std::stringstream ss(f.slice);
    std::string nm;
    while (std::getline(ss, nm, ',')) axes.push_back(index_of(nm));
    if (axes.size() != 2 || axes[0] == axes[1]) throw InputError("--slice needs two distinct state variables");
  }
  for (const auto& a : f.at) {
    const auto eq = a.find('=');
    if (eq == std::string::npos) throw InputError("--at expects name=value");
    const auto i = index_of(a.substr(0, eq));
    try {
      base[i] = std::stod(a.substr(eq + 1));
    } catch (const std::exception&) {
      throw InputError("--at " + a + ": bad number");
    }
  }
  if (axes.empty()) {
    for (std::size_t i = 0; i < spec.n; ++i) axes.push_back(i);
  }
  for (auto i : axes) base[i] = 0.0;
  return {axes, base};
}

int exit_for(SdpStatus s) {
  switch (s) {
    case SdpStatus::Optimal: return kOk;
    case SdpStatus::PrimalInfeasible:
    case SdpStatus::DualInfeasible: return kInfeasible;
    default: return kNumerical;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust domain-of-attraction certificates for perturbed polynomial systems"};
  app.require_subcommand(1);

  std::string system_path, cert_path, out_path;
  DegreeFlags deg;
  std::optional<int> delta;
  double tol = 1e-7;
  int max_iter = 200;
  bool verbose = false;

  auto* syn = app.add_subcommand("synthesize", "solve the SOS program and write a certificate");
  syn->add_option("system", system_path, "system JSON file")->required();
  add_degree_flags(syn, deg);
  syn->add_option("--delta", delta, "odd exponent delta (overrides the file)");
  syn->add_option("--tol", tol, "solver tolerance")->check(CLI::PositiveNumber);
  syn->add_option("--max-iter", max_iter, "solver iteration limit")->check(CLI::PositiveNumber);
  syn->add_option("--out", out_path, "certificate JSON (default stdout)");
  syn->add_flag("--verbose", verbose, "print solver iterations");

  std::size_t samples = 100000;
  std::uint64_t seed = 1;
  bool no_traj = false;
  std::size_t traj_points = 200, traj_traces = 10;
  std::string roa_grid_path;
  std::size_t n_mc = 1000000;
  auto* ver = app.add_subcommand("verify", "check a certificate by sampling and simulation");
  ver->add_option("system", system_path, "system JSON file")->required();
  ver->add_option("certificate", cert_path, "certificate JSON file")->required();
  ver->add_option("--samples", samples, "samples per constraint domain");
  ver->add_option("--seed", seed, "random seed");
  ver->add_flag("--no-trajectories", no_traj, "skip the trajectory suite");
  ver->add_option("--traj-points", traj_points, "certified start points for the trajectory suite");
  ver->add_option("--traj-traces", traj_traces, "perturbation traces per start point");
  ver->add_option("--roa-grid", roa_grid_path, "simulated ROA grid (from roa-sim) for the volume error");
  ver->add_option("--mc", n_mc, "Monte-Carlo samples for the volume error");
  ver->add_option("--out", out_path, "report JSON (default stdout)");

  std::size_t res = 200;
  SliceFlags slice;
  auto* con = app.add_subcommand("contour", "grid of u values for plotting the u = 1 level set");
  con->add_option("system", system_path, "system JSON file")->required();
  con->add_option("certificate", cert_path, "certificate JSON file")->required();
  con->add_option("--res", res, "points per axis")->check(CLI::PositiveNumber);
  add_slice_flags(con, slice);
  con->add_option("--out", out_path, "grid CSV (default stdout)");

  std::size_t policies = 20;
  double T = 50.0, dt = 0.01;
  auto* sim = app.add_subcommand("roa-sim", "simulated maximal robust ROA on a grid (Euler, uniform perturbations)");
  sim->add_option("system", system_path, "system JSON file")->required();
  sim->add_option("--res", res, "cells per axis")->check(CLI::PositiveNumber);
  sim->add_option("--policies", policies, "perturbation traces per cell")->check(CLI::PositiveNumber);
  sim->add_option("--T", T, "horizon")->check(CLI::PositiveNumber);
  sim->add_option("--dt", dt, "Euler step")->check(CLI::PositiveNumber);
  sim->add_option("--seed", seed, "random seed");
  add_slice_flags(sim, slice);
  sim->add_option("--out", out_path, "grid CSV (default stdout)");

  auto* exp = app.add_subcommand("export-sdpa", "write the SDP in SDPA sparse format");
  exp->add_option("system", system_path, "system JSON file")->required();
  add_degree_flags(exp, deg);
  exp->add_option("--out", out_path, "SDPA file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInput;
  }

  try {
    SystemFile sf = load_system(system_path);
    if (delta) sf.spec.delta = *delta;

    if (*syn) {
      check_valid(sf.spec);
      const DegreeConfig cfg = resolve_degrees(sf, deg);
      SynthesisOptions so;
      so.tol = tol;
      so.max_iter = max_iter;
      so.verbose = verbose;
      std::cerr << "synthesize k=" << cfg.k << " d_s=" << cfg.d_s << " d_s'=" << cfg.d_s_prime << " ("
                << to_string(cfg.unit) << " degrees)\n";
      try {
        const Certificate c = synthesize(sf.spec, cfg, so);
        for (const auto& w : c.warnings) std::cerr << "warning: " << w << "\n";
        std::cerr << "optimal: objective " << c.objective_value << ", " << c.iterations << " iterations, "
                  << c.solve_seconds << " s, reconstruction residual " << c.reconstruction_residual << "\n";
        write_to(out_path, [&](std::ostream& o) { o << certificate_to_json(c, sf.hash).dump(1) << "\n"; });
        return kOk;
      } catch (const SynthesisFailure& e) {
        std::cerr << "synthesis failed: " << e.what() << "\n";
        return exit_for(e.status()) == kOk ? kNumerical : exit_for(e.status());
      }
    }

    if (*exp) {
      const DegreeConfig cfg = resolve_degrees(sf, deg);
      const SosProgram prog = assemble_program(sf.spec, cfg);
      const LoweredProgram low = lower_to_sdp(prog);
      write_to(out_path, [&](std::ostream& o) { export_sdpa(low.sdp, o); });
      return kOk;
    }

    if (*sim) {
      check_valid(sf.spec);
      auto [axes, base] = resolve_slice(sf.spec, slice);
      RoaGridOptions go;
      go.resolution = res;
      go.n_policies = policies;
      go.T = T;
      go.dt = dt;
      go.seed = seed;
      go.axes = axes;
      go.base = base;
      const auto t0 = std::chrono::steady_clock::now();
      const RoaGrid g = estimate_max_roa(sf.spec, go);
      std::cerr << "roa-sim: " << g.count_inside() << " of " << g.cells() << " cells inside ("
                << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s)\n";
      write_to(out_path, [&](std::ostream& o) { write_grid_csv(to_grid(g, sf.spec), o); });
      return kOk;
    }

    const CertificateFile cf = certificate_from_json(parse_json_text(read_text(cert_path), cert_path), sf.spec.nvars(), cert_path);
    if (cf.system_hash != sf.hash) {
      throw InputError("certificate was produced for a different system (hash " + cf.system_hash.substr(0, 12) +
                       "..., system " + sf.hash.substr(0, 12) + "...)");
    }

    if (*con) {
      auto [axes, base] = resolve_slice(sf.spec, slice);
      Grid g;
      const auto names = sf.spec.names();
      const double hw = std::sqrt(sf.spec.R);
      for (std::size_t i = 0; i < sf.spec.n; ++i) {
        g.axes.push_back(names[i]);
        g.coords.push_back({base[i]});
      }
      for (auto a : axes) {
        g.coords[a].clear();
        for (std::size_t i = 0; i < res; ++i) g.coords[a].push_back(res == 1 ? 0.0 : -hw + 2.0 * hw * double(i) / double(res - 1));
      }
      const CompiledPolynomial u(cf.cert.u);
      std::vector<double> pt(sf.spec.nvars(), 0.0), scratch;
      std::vector<std::size_t> idx(sf.spec.n, 0);
      for (std::size_t k = 0; k < g.size(); ++k) {
        for (std::size_t a = 0; a < sf.spec.n; ++a) pt[a] = g.coords[a][idx[a]];
        g.values.push_back(u(pt.data(), scratch));
        for (std::size_t a = sf.spec.n; a-- > 0;) {
          if (++idx[a] < g.coords[a].size()) break;
          idx[a] = 0;
        }
      }
      write_to(out_path, [&](std::ostream& o) { write_grid_csv(g, o); });
      return kOk;
    }

    // verify
    if (samples == 0) throw InputError("--samples must be positive");
    check_valid(sf.spec);
    VerifyOptions vo;
    vo.n_samples = samples;
    vo.seed = seed;
    vo.trajectories = !no_traj;
    vo.suite.n_points = traj_points;
    vo.suite.n_traces = traj_traces;
    VerificationReport r;
    try {
      r = check_certificate(cf.cert, sf.spec, vo);
      if (!roa_grid_path.empty()) {
        std::ifstream gin(roa_grid_path);
        if (!gin) throw InputError("cannot open " + roa_grid_path);
        const RoaGrid g = roa_grid_from(read_grid_csv(gin, roa_grid_path), sf.spec, roa_grid_path);
        r.volume_error = relative_volume_error(cf.cert, sf.spec, g, n_mc, seed);
      }
    } catch (const VerificationError& e) {
      throw InputError(e.what());
    } catch (const DegreeError& e) {
      throw InputError(std::string("certificate degrees do not fit the system: ") + e.what());
    }
    json rep = to_json(r);
    rep["stored"] = {{"reconstruction_residual", cf.cert.reconstruction_residual},
                     {"min_gram_eigenvalue", cf.cert.min_gram_eigenvalue}};
    write_to(out_path, [&](std::ostream& o) { o << rep.dump(1) << "\n"; });
    std::cerr << (r.passed() ? "certificate passes" : "certificate FAILS") << ": min margin " << r.margins.min_margin()
              << ", min Gram eigenvalue " << r.min_gram_eigenvalue << ", reconstruction residual "
              << r.reconstruction_residual << "\n";
    return r.passed() ? kOk : kVerifyFailed;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  } catch (const DegreeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  }
}
