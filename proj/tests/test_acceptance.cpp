// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.
//
//   1  coefficient algebra on the two reference sets
//   2  pointwise dissipation positivity and lower bound, randomized
//   3  operator suite at L = 31
//   4  identity map stays a steady state for 1000 steps
//   5  energy-law residual is first order in dt; energy nonincreasing
//   6  mean velocity stays at zero through every run below
//   7  d-energy / dbar-energy identities on every emitted report
//   8  small data converge exponentially with no energy lost to bubbles
//   9  whole-sphere cap on the identity map holds 8 pi
//  10  checkpoint round trip, resume equivalence, deterministic reruns

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "els2/run.hpp"

namespace {

using namespace els2;
namespace fs = std::filesystem;
constexpr double kPi = std::numbers::pi;

const Viscosities kIsotropic{0.0, -1.0, 1.0, 2.0, 0.0, 0.0};
const Viscosities kWeakOnly{0.0, -1.5, 0.5, 1.0, 0.5, -0.5};
const Viscosities kFastSettling{0.0, -4.0, 4.0, 2.0, 0.0, 0.0};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Reports and drift from every run, for criteria 6 and 7.
std::vector<EnergyReport> g_reports;
double g_max_drift = 0.0;
std::vector<std::string> g_runs;

void record(const std::string& name, const RunOutcome& o) {
  for (const auto& s : o.trajectory) {
    g_reports.push_back(s.report);
    g_max_drift = std::max(g_max_drift, s.report.mean_u.norm());
  }
  g_max_drift = std::max(g_max_drift, o.max_mean_drift);
  g_runs.push_back(name);
}

State perturbed(const GridPtr& g, double amplitude, double flow, std::uint64_t seed) {
  InitialData init;
  init.kind = InitialKind::perturbed_constant;
  init.amplitude = amplitude;
  init.flow_amplitude = flow;
  init.flow_l = 2;
  init.flow_m = 1;
  init.seed = seed;
  auto f = make_initial(init, g);
  return {0.0, std::move(f.psi), std::move(f.d)};
}

Outcome criterion1() {
  const auto a = derived_constants(kIsotropic);
  const auto b = derived_constants(kWeakOnly);
  const auto vb = validate_coefficients(kWeakOnly);
  const bool ok = a.lambda1 == 2 && a.lambda2 == 0 && a.delta0 == 4 && a.gamma1 == 2 && a.alpha0 == 0.125 &&
                  b.lambda1 == 2 && b.lambda2 == -1 && b.delta0 == 2 && b.gamma1 == 1 && b.alpha0 == 0.0625 &&
                  vb.weak_ok && !vb.strong_ok;
  return {ok, fmt("set A (%g,%g,%g,%g,%g) set B (%g,%g,%g,%g,%g) weak_ok=%d strong_ok=%d", a.lambda1, a.lambda2,
                  a.delta0, a.gamma1, a.alpha0, b.lambda1, b.lambda2, b.delta0, b.gamma1, b.alpha0, vb.weak_ok,
                  vb.strong_ok)};
}

Outcome criterion2() {
  std::mt19937_64 rng(20240601);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> u(-3.0, 3.0), pos(0.05, 3.0), mag(0.0, 1.0);
  constexpr int kSets = 1000, kPerSet = 100;
  double worst_q = std::numeric_limits<double>::infinity(), worst_gap = worst_q;
  int sets = 0;
  long samples = 0;
  while (sets < kSets) {
    // Parodi holds by construction; admissibility by rejection.
    const double l1 = pos(rng), l2 = u(rng), mu5 = u(rng);
    const Viscosities mu{u(rng), (l2 - l1) / 2, (l2 + l1) / 2, u(rng), mu5, mu5 + l2};
    if (!validate_coefficients(mu).weak_ok) continue;
    const LeslieCoefficients c(mu);
    ++sets;
    for (int k = 0; k < kPerSet; ++k) {
      const Vec3 d = Vec3(nd(rng), nd(rng), nd(rng)).normalized();
      Vec3 N(nd(rng), nd(rng), nd(rng));
      N = mag(rng) * (N - N.dot(d) * d);
      Mat3 A;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) A(i, j) = nd(rng);
      A = (0.5 * (A + A.transpose())).eval();
      A -= (A.trace() / 3.0) * Mat3::Identity();
      A *= mag(rng);
      const double q = dissipation_density(d, N, A, c);
      worst_q = std::min(worst_q, q);
      worst_gap = std::min(worst_gap, q - dissipation_lower_bound(d, N, A, c));
      ++samples;
    }
  }
  return {worst_q >= -1e-12 && worst_gap >= -1e-10,
          fmt("%ld samples over %d sets: min Q = %.3e, min (Q - bound) = %.3e", samples, sets, worst_q, worst_gap)};
}

Outcome criterion3() {
  const auto g = build_grid(31);
  double eig = 0.0;
  for (int l = 0; l <= g->lmax() - 1; ++l) {
    for (int m = -l; m <= l; ++m) {
      const auto y = sample_sh(g, l, m);
      const auto ly = laplacian(y);
      for (std::size_t k = 0; k < g->size(); ++k) eig = std::max(eig, std::abs(ly[k] + l * (l + 1) * y[k]));
    }
  }
  std::mt19937_64 rng(99);
  std::normal_distribution<double> nd;
  auto field = [&](int band) {
    SpectralCoeffs a(g->lmax());
    for (int l = 1; l <= band; ++l)
      for (int m = -l; m <= l; ++m) a(l, m) = nd(rng) / (l * l);
    return sh_synthesis(g, a);
  };
  double adj = 0.0, ident = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const auto f = field(15), p = field(15), q = field(15);
    const auto gp = gradient(p), rq = rot(q);
    TangentField v(g);
    for (std::size_t k = 0; k < g->size(); ++k) v[k] = gp[k] + rq[k];
    // <grad f, v> = -<f, div v>
    const auto gf = gradient(f);
    const auto dv = divergence(v);
    const double lhs = integrate_nodes(*g, [&](std::size_t k) { return gf[k].dot(v[k]); });
    const double rhs = -integrate_nodes(*g, [&](std::size_t k) { return f[k] * dv[k]; });
    adj = std::max(adj, std::abs(lhs - rhs));
    // <rot f, v> = -<f, curl v> with curl v = div(v x n)
    const auto rf = rot(f);
    const auto cv = curl_s(v);
    const double l2 = integrate_nodes(*g, [&](std::size_t k) { return rf[k].dot(v[k]); });
    const double r2 = -integrate_nodes(*g, [&](std::size_t k) { return f[k] * cv[k]; });
    adj = std::max(adj, std::abs(l2 - r2));
    // curl rot = lap, div rot = 0, curl grad = 0
    const auto cr = curl_s(rot(p)), lp = laplacian(p), drot = divergence(rot(p)), cg = curl_s(gradient(p));
    for (std::size_t k = 0; k < g->size(); ++k) {
      ident = std::max({ident, std::abs(cr[k] - lp[k]), std::abs(drot[k]), std::abs(cg[k])});
    }
  }
  return {eig < 1e-9 && adj < 1e-10 && ident < 1e-10,
          fmt("eigen err %.2e (l <= 30), adjointness %.2e, curl/rot identities %.2e", eig, adj, ident)};
}

Outcome criterion4() {
  const auto g = build_grid(31);
  const LeslieCoefficients c(kIsotropic);
  RunParams p;
  p.t_end = 1.0;
  p.control = {1e-3, 0.5};
  p.out_every = 10;
  p.stop_on_convergence = false;
  const auto o = integrate({0.0, ScalarField(g), identity_map(g)}, c, p);
  record("identity-steady", o);
  const double dd = l2_distance(o.state.d, identity_map(g));
  const double uu = l2_norm(rot(o.state.psi));
  bool deg_ok = true;
  double e_dev = 0.0;
  for (const auto& s : o.trajectory) {
    deg_ok = deg_ok && s.report.deg == 1;
    e_dev = std::max(e_dev, std::abs(s.report.E - 4 * kPi));
  }
  return {o.steps == 1000 && dd < 1e-5 && uu < 1e-7 && deg_ok && e_dev < 1e-6,
          fmt("%zu steps: |d - id| = %.2e, |u| = %.2e, degree 1 throughout = %s, max |E - 4pi| = %.2e", o.steps, dd,
              uu, deg_ok ? "yes" : "no", e_dev)};
}

Outcome criterion5() {
  const auto g = build_grid(31);
  bool ok = true;
  std::string detail;
  for (const auto& [name, mu] : {std::pair{"isotropic", kIsotropic}, {"weak-only", kWeakOnly}}) {
    double mean_r[2];
    double rise = 0.0;
    for (int pass = 0; pass < 2; ++pass) {
      const double dt = pass == 0 ? 2e-3 : 1e-3;
      RunParams p;
      p.t_end = 0.2;
      p.control = {dt, 0.5};
      p.out_every = 1;
      p.stop_on_convergence = false;
      const auto o = integrate(perturbed(g, 0.1, 0.05, 11), LeslieCoefficients(mu), p);
      record(std::string("energy-law ") + name, o);
      if (o.steps != static_cast<std::size_t>(std::lround(0.2 / dt))) ok = false;  // dt must not be CFL-clipped
      mean_r[pass] = o.mean_abs_energy_residual;
      for (std::size_t j = 1; j < o.trajectory.size(); ++j) {
        const auto& a = o.trajectory[j - 1].report;
        const auto& b = o.trajectory[j].report;
        rise = std::max(rise, (b.KE + b.E) - (a.KE + a.E));
      }
    }
    const double ratio = mean_r[0] / mean_r[1];
    ok = ok && ratio >= 1.6 && ratio <= 2.4 && rise <= 1e-8;
    detail += fmt("%s: <|r|> %.3e -> %.3e ratio %.3f, max energy rise %.2e; ", name, mean_r[0], mean_r[1], ratio, rise);
  }
  return {ok, detail};
}

Outcome criterion8() {
  const auto g = build_grid(31);
  const auto s0 = perturbed(g, 0.05, 0.05, 7);
  const LeslieCoefficients c(kFastSettling);
  const auto small = smallness_check(energy_report(s0, c, 0.5), 0.3);
  RunParams p;
  p.t_end = 30.0;
  p.control = {1e-2, 0.5};
  p.out_every = 10;
  p.conv_tol = 1e-4;
  p.eps0 = 0.3;
  const auto o = integrate(s0, c, p);
  record("small-data", o);
  if (!o.convergence) {
    return {false, fmt("smallness S0 = %.3e (ok=%d); no convergence by t = %.2f", small.S, small.ok, o.state.t)};
  }
  const auto& cv = *o.convergence;
  const bool fit_ok = cv.l2_fit && cv.l2_fit->C2 > 0.0 && cv.l2_fit->rms_log_residual < 0.2;
  const bool ok = small.ok && fit_ok && cv.M0 == 0 && cv.quant_residual < 1e-3;
  return {ok, fmt("S0 = %.3e <= 0.3: %s; fired at t = %.2f; C2 = %.3f rms = %.3f; M0 = %d residual = %.2e", small.S,
                  small.ok ? "yes" : "no", cv.t, cv.l2_fit ? cv.l2_fit->C2 : NAN,
                  cv.l2_fit ? cv.l2_fit->rms_log_residual : NAN, cv.M0, cv.quant_residual)};
}

Outcome criterion9() {
  const auto g = build_grid(31);
  const double v = local_energy_max(VectorField(g), identity_map(g), kPi);
  return {std::abs(v - 8 * kPi) < 1e-6, fmt("r = pi cap on identity: %.15f vs 8 pi = %.15f", v, 8 * kPi)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion10() {
  const auto root = fs::temp_directory_path() / "els2_acceptance";
  fs::remove_all(root);

  // Round trip of an evolved state.
  const auto g = build_grid(31);
  State s = perturbed(g, 0.1, 0.05, 3);
  for (int n = 0; n < 5; ++n) s = step(s, LeslieCoefficients(kWeakOnly), 1e-3).state;
  fs::create_directories(root);
  write_checkpoint({s.t, s.psi, s.d}, root / "rt.ckpt");
  const auto back = read_checkpoint(root / "rt.ckpt", g);
  const bool bits = back.t == s.t &&
                    std::memcmp(back.psi.values.data(), s.psi.values.data(), s.psi.size() * sizeof(double)) == 0 &&
                    std::memcmp(back.d.values.data(), s.d.values.data(), s.d.size() * sizeof(Vec3)) == 0;

  Config cfg;
  cfg.Lmax = 21;
  cfg.mu = kWeakOnly;
  cfg.t_end = 0.5;
  cfg.out_every = 5;
  cfg.checkpoint_every = 20;
  cfg.initial.kind = InitialKind::perturbed_constant;
  cfg.initial.amplitude = 0.1;
  cfg.initial.flow_amplitude = 0.05;
  cfg.initial.seed = 12;
  cfg.output_dir = root / "a";
  const auto a = run(cfg);
  record("io run a", a.outcome);
  cfg.output_dir = root / "b";
  const auto b = run(cfg);
  record("io run b", b.outcome);
  bool same = true;
  for (const char* f : {"diagnostics.csv", "final.ckpt", "summary.txt", "checkpoint_00000020.ckpt"}) {
    same = same && slurp(root / "a" / f) == slurp(root / "b" / f);
  }

  cfg.output_dir = root / "resumed";
  const auto r = run(cfg, root / "a" / "checkpoint_00000020.ckpt");
  record("io resumed", r.outcome);
  const auto g21 = build_grid(21);
  const auto x = read_checkpoint(a.final_checkpoint, g21);
  const auto y = read_checkpoint(r.final_checkpoint, g21);
  double diff = std::abs(x.t - y.t);
  for (std::size_t k = 0; k < g21->size(); ++k) {
    diff = std::max({diff, std::abs(x.psi[k] - y.psi[k]), (x.d[k] - y.d[k]).cwiseAbs().maxCoeff()});
  }
  return {bits && same && diff <= 1e-13 && r.outcome.steps + 20 == a.outcome.steps,
          fmt("checkpoint bit-exact = %s, reruns byte-identical = %s, resume max diff = %.2e, steps %zu + %zu",
              bits ? "yes" : "no", same ? "yes" : "no", diff, a.outcome.steps, r.outcome.steps)};
}

// These two read what the runs above recorded.
Outcome criterion6() {
  return {g_max_drift <= 1e-6, fmt("max |integral of u| = %.2e over %zu runs", g_max_drift, g_runs.size())};
}

Outcome criterion7() {
  double sum = 0.0, diff = 0.0, integral = 0.0;
  for (const auto& r : g_reports) {
    sum = std::max(sum, std::abs(r.E_partial + r.E_antipartial - r.E));
    diff = std::max(diff, std::abs(r.E_partial - r.E_antipartial - 4 * kPi * r.deg_raw));
    integral = std::max(integral, std::abs(r.deg_raw - std::round(r.deg_raw)));
  }
  return {sum < 1e-9 && diff < 1e-9 && integral < 1e-6,
          fmt("%zu reports: |Ep + Ea - E| <= %.2e, |Ep - Ea - 4pi deg| <= %.2e, |deg - round| <= %.2e",
              g_reports.size(), sum, diff, integral)};
}

}  // namespace

int main() {
  struct Item {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  // 6 and 7 run last: they audit the trajectories produced by the others.
  const std::vector<Item> items{
      {1, "coefficient algebra", criterion1},    {2, "dissipation claims", criterion2},
      {3, "operator suite", criterion3},         {4, "harmonic-map steady state", criterion4},
      {5, "discrete energy law", criterion5},    {8, "small-data convergence", criterion8},
      {9, "blow-up monitor threshold", criterion9}, {10, "checkpoint and determinism", criterion10},
      {6, "mean velocity drift", criterion6},    {7, "energy split identities", criterion7},
  };
  std::vector<std::pair<int, std::string>> lines;
  int failures = 0;
  for (const auto& it : items) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = it.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    lines.emplace_back(it.id, fmt("criterion %2d %s  %-28s %s (%.1f s)", it.id, o.pass ? "PASS" : "FAIL", it.name,
                                  o.detail.c_str(), secs));
  }
  std::sort(lines.begin(), lines.end());
  for (const auto& l : lines) std::puts(l.second.c_str());
  std::printf("%d of %zu criteria passed\n", static_cast<int>(items.size()) - failures, items.size());
  return failures == 0 ? 0 : 1;
}
