// els2: command-line driver.
//
//   els2 validate <config>
//   els2 run <config> [-o DIR]
//   els2 resume <config> <checkpoint> [-o DIR]
//   els2 analyze <diagnostics.csv> [--eps0 X] [-o DIR]
//   els2 steady-check <map> [--Lmax L] [--dt DT] [--config FILE] [--checkpoint FILE]
//
// Exit status: 0 success, 1 validation failure (config or coefficients),
// 2 runtime error. Failures print one "els2-error:<kind>: ..." line to stderr.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "els2/analysis.hpp"
#include "els2/run.hpp"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

struct Failure {
  int code;
  els2::Error error;
};

void report(const els2::Error& e) {
  std::string msg = e.what();
  const auto nl = msg.find('\n');
  std::cerr << "els2-error:" << els2::to_string(e.kind()) << ": " << msg.substr(0, nl) << '\n';
  if (nl != std::string::npos) std::cerr << msg.substr(nl + 1) << '\n';
}

/// Runs `f`; any els2::Error escapes as a validation failure.
template <typename F>
auto validated(F&& f) {
  try {
    return f();
  } catch (const els2::Error& e) {
    throw Failure{kExitValidation, e};
  }
}

// Transforms are single-threaded; the cap is checked and otherwise has nothing to limit.
void check_thread_env() {
  const char* v = std::getenv("ELS2_THREADS");
  if (!v) return;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (end == v || *end != '\0' || n < 1) {
    throw Failure{kExitValidation,
                  els2::Error(els2::ErrorKind::configuration, std::string("ELS2_THREADS must be a positive integer, got '") + v + "'")};
  }
}

void print_validation(const els2::Viscosities& mu) {
  const auto r = els2::validate_coefficients(mu);
  std::printf("weak_ok=%s strong_ok=%s\n", r.weak_ok ? "true" : "false", r.strong_ok ? "true" : "false");
  std::cout << r.describe() << '\n';
  if (r.weak_ok) {
    const auto d = els2::derived_constants(mu);
    std::printf("lambda1=%.17g\nlambda2=%.17g\ndelta0=%.17g\ngamma1=%.17g\nalpha0=%.17g\n", d.lambda1, d.lambda2,
                d.delta0, d.gamma1, d.alpha0);
  }
}

int cmd_validate(const std::string& path) {
  const auto cfg = validated([&] { return els2::load_config(path, els2::ConfigScope::coefficients); });
  print_validation(cfg.mu);
  return els2::validate_coefficients(cfg.mu).weak_ok ? 0 : kExitValidation;
}

int cmd_run(const std::string& path, const std::optional<std::string>& checkpoint, const std::string& out_dir) {
  auto cfg = validated([&] {
    auto c = els2::load_config(path);
    els2::admissible_coefficients(c.mu);
    return c;
  });
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  std::optional<std::filesystem::path> from;
  if (checkpoint) from = *checkpoint;
  const auto art = els2::run(cfg, from);
  const auto& o = art.outcome;
  std::printf("stop_reason=%s t_final=%.17g steps=%zu reports=%zu converged=%s\n", els2::to_string(o.reason).c_str(),
              o.state.t, o.steps, o.trajectory.size(), o.convergence ? "true" : "false");
  std::printf("output_dir=%s\n", cfg.output_dir.string().c_str());
  return 0;
}

int cmd_analyze(const std::string& csv, double eps0, const std::string& out_dir) {
  const std::filesystem::path p(csv);
  const auto dir = out_dir.empty() ? (p.has_parent_path() ? p.parent_path() : std::filesystem::path(".")) : std::filesystem::path(out_dir);
  const auto a = els2::analyze_file(p, eps0, dir);
  std::ifstream in(dir / "analysis.txt");
  std::cout << in.rdbuf();
  return a.fit ? 0 : kExitRuntime;
}

els2::DirectorField named_map(const std::string& name, const els2::GridPtr& g, double angle) {
  if (name == "identity") return els2::identity_map(g);
  if (name == "antipodal") return els2::antipodal_map(g);
  if (name == "rotated-identity") {
    const els2::Vec3 axis = els2::Vec3(1.0, 1.0, 1.0).normalized();
    return els2::rotated_identity(g, Eigen::AngleAxisd(angle, axis).toRotationMatrix());
  }
  if (name.rfind("degree-", 0) == 0) {
    try {
      std::size_t used = 0;
      const int m = std::stoi(name.substr(7), &used);
      if (used == name.size() - 7 && m != 0) return els2::degree_map(g, m);
    } catch (const std::exception&) {
    }
  }
  throw els2::Error(els2::ErrorKind::usage,
                    "unknown map '" + name + "' (identity, antipodal, rotated-identity, degree-<m> with m != 0)");
}

int cmd_steady_check(const std::string& map, int lmax, double dt, double angle, const std::string& config,
                     const std::string& checkpoint) {
  els2::Viscosities mu{0.0, -1.0, 1.0, 2.0, 0.0, 0.0};
  if (!config.empty()) mu = validated([&] { return els2::load_config(config, els2::ConfigScope::coefficients).mu; });
  const auto coeffs = validated([&] { return els2::admissible_coefficients(mu); });
  if (lmax < 4) throw Failure{kExitValidation, els2::Error(els2::ErrorKind::configuration, "Lmax must be >= 4")};

  els2::State s;
  if (!checkpoint.empty()) {
    auto cp = els2::read_checkpoint(checkpoint);
    s = {cp.t, std::move(cp.psi), els2::normalize_director(cp.d)};
  } else {
    const auto g = els2::build_grid(lmax);
    s = {0.0, els2::ScalarField(g), named_map(map, g, angle)};
  }
  const auto k = els2::kinematics(s, coeffs.mu);
  const auto r = els2::step(s, coeffs, dt);
  const auto u1 = els2::flow_kinematics(r.state.psi).u;
  const auto deg = els2::degree(s.d);
  std::printf("map=%s Lmax=%d\n", checkpoint.empty() ? map.c_str() : checkpoint.c_str(), s.grid()->lmax());
  std::printf("energy=%.17g\nenergy_minus_4pi_deg=%.17g\n", els2::dirichlet_energy(k.director),
              els2::dirichlet_energy(k.director) - els2::kFourPi * std::abs(deg.value));
  std::printf("degree=%d degree_raw=%.17g\n", deg.value, deg.raw);
  std::printf("residual=%.17g\n", els2::harmonic_residual(k.director));
  std::printf("dt=%.17g\nstep_director_drift=%.17g\nstep_velocity_l2=%.17g\n", dt, els2::l2_distance(r.state.d, s.d),
              els2::l2_norm(u1));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ericksen-Leslie nematic flow on the unit sphere"};
  app.require_subcommand(1);

  std::string config, checkpoint, csv, out_dir, map, sc_config, sc_checkpoint;
  double eps0 = 0.3, dt = 1e-3, angle = 0.7;
  int lmax = 31;

  auto* v = app.add_subcommand("validate", "check Leslie coefficients and print derived constants");
  v->add_option("config", config, "config file (only mu1..mu6 are needed)")->required();

  auto* r = app.add_subcommand("run", "integrate from the configured initial data");
  r->add_option("config", config, "config file")->required();
  r->add_option("-o,--output-dir", out_dir, "override output_dir");

  auto* rs = app.add_subcommand("resume", "continue a run from a checkpoint");
  rs->add_option("config", config, "config file")->required();
  rs->add_option("checkpoint", checkpoint, "checkpoint file")->required();
  rs->add_option("-o,--output-dir", out_dir, "override output_dir");

  auto* an = app.add_subcommand("analyze", "decay fit and quantization from a diagnostics CSV");
  an->add_option("csv", csv, "diagnostics.csv")->required();
  an->add_option("--eps0", eps0, "smallness threshold");
  an->add_option("-o,--output-dir", out_dir, "where analysis.txt and fit.csv go (default: next to the CSV)");

  auto* sc = app.add_subcommand("steady-check", "tension residual and one-step drift of a harmonic map");
  sc->add_option("map", map, "identity | antipodal | rotated-identity | degree-<m>")->required();
  sc->add_option("--Lmax", lmax, "truncation degree");
  sc->add_option("--dt", dt, "step size");
  sc->add_option("--angle", angle, "rotation angle about (1,1,1) for rotated-identity");
  sc->add_option("--config", sc_config, "take mu1..mu6 from this config");
  sc->add_option("--checkpoint", sc_checkpoint, "use the director of this checkpoint instead of a named map");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "els2-error:usage: " << e.what() << '\n';
    return kExitValidation;
  }

  try {
    check_thread_env();
    if (*v) return cmd_validate(config);
    if (*r) return cmd_run(config, std::nullopt, out_dir);
    if (*rs) return cmd_run(config, checkpoint, out_dir);
    if (*an) return cmd_analyze(csv, eps0, out_dir);
    if (*sc) return cmd_steady_check(map, lmax, dt, angle, sc_config, sc_checkpoint);
  } catch (const Failure& f) {
    report(f.error);
    return f.code;
  } catch (const els2::Error& e) {
    report(e);
    return e.kind() == els2::ErrorKind::usage ? kExitValidation : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "els2-error:internal: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
