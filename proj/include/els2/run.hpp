#pragma once

// Integration loop with periodic reports, the blow-up monitor and
// convergence stop; plus the file-backed run/resume used by the CLI.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>

#include "els2/config.hpp"
#include "els2/diagnostics.hpp"
#include "els2/dynamics.hpp"
#include "els2/longtime.hpp"

namespace els2 {

struct RunParams {
  double t_end = 0.0;
  StepControl control;
  int out_every = 10;
  double cap_radius = 0.5;
  double blowup_delta = 0.05;
  double conv_tol = 1e-6;
  double eps0 = 0.3;
  bool stop_on_convergence = true;
  std::size_t max_steps = 0;  // 0 = no limit
};

enum class StopReason { t_end, converged, blowup_monitor, step_limit };

inline std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::t_end: return "t_end";
    case StopReason::converged: return "converged";
    case StopReason::blowup_monitor: return "blowup_monitor";
    case StopReason::step_limit: return "step_limit";
  }
  return "unknown";
}

struct RunOutcome {
  State state;
  Trajectory trajectory;
  std::optional<ConvergenceResult> convergence;
  StopReason reason = StopReason::t_end;
  std::size_t steps = 0;
  double max_mean_drift = 0.0;
  double max_norm_deviation = 0.0;
  double max_abs_energy_residual = 0.0;
  double mean_abs_energy_residual = 0.0;
};

struct RunCallbacks {
  std::function<void(const TrajectorySample&)> on_report;
  std::function<void(const State&, std::size_t step)> on_step;
  std::function<void(const State&, const std::string& why)> on_halt;  // last good state
};

inline RunOutcome integrate(State s, const LeslieCoefficients& c, const RunParams& p, const RunCallbacks& cb = {}) {
  if (!(p.t_end >= s.t)) throw Error(ErrorKind::configuration, "t_end lies before the initial time");
  if (p.out_every < 1) throw Error(ErrorKind::configuration, "out_every must be >= 1");
  const CapIntegrator caps(s.grid(), p.cap_radius);
  const double blowup_level = 2.0 * kFourPi * (1.0 - p.blowup_delta);

  RunOutcome out;
  Kinematics k = kinematics(s, c.mu);
  std::size_t quiet = 0;
  double sum_abs_r = 0.0;
  bool stop = false;

  auto emit = [&](const EnergyReport& rep) {
    out.trajectory.push_back(make_sample(s, k, rep));
    const auto& cur = out.trajectory.back();
    if (cb.on_report) cb.on_report(cur);
    if (rep.local_max >= blowup_level) {
      out.reason = StopReason::blowup_monitor;
      if (cb.on_halt) cb.on_halt(s, "blowup_monitor");
      stop = true;
      return;
    }
    const std::size_t n = out.trajectory.size();
    const double succ = n > 1 ? l2_distance(cur.d, out.trajectory[n - 2].d) : 0.0;
    quiet = (rep.KE < p.conv_tol && rep.residual < p.conv_tol && succ < p.conv_tol) ? quiet + 1 : 0;
    if (!out.convergence && quiet >= kConvergenceWindow && n >= kMinConvergenceReports) {
      out.convergence = convergence_detect(out.trajectory, p.conv_tol, p.eps0);
      if (out.convergence && p.stop_on_convergence) {
        out.reason = StopReason::converged;
        stop = true;
      }
    }
  };

  emit(energy_report(s, k, c, caps));
  const double t_tol = 1e-12 * std::max(1.0, std::abs(p.t_end));
  std::size_t last_reported = 0;
  while (!stop) {
    const double remaining = p.t_end - s.t;
    if (remaining <= t_tol) {
      out.reason = StopReason::t_end;
      break;
    }
    if (p.max_steps && out.steps >= p.max_steps) {
      out.reason = StopReason::step_limit;
      break;
    }
    double dt = cfl_dt(s, k, c, p.control);
    if (dt >= remaining - t_tol) dt = remaining;

    StepResult r;
    try {
      r = step(s, k, c, dt);
    } catch (const Error& e) {
      if (cb.on_halt && (e.kind() == ErrorKind::degeneracy || e.kind() == ErrorKind::numerical_blowup)) {
        cb.on_halt(s, std::string(to_string(e.kind())));
      }
      throw;
    }
    s = std::move(r.state);
    ++out.steps;
    k = kinematics(s, c.mu);
    out.max_mean_drift = std::max(out.max_mean_drift, r.report.mean_velocity_drift);
    out.max_norm_deviation = std::max(out.max_norm_deviation, r.report.max_norm_deviation);
    out.max_abs_energy_residual = std::max(out.max_abs_energy_residual, std::abs(r.report.energy_residual));
    sum_abs_r += std::abs(r.report.energy_residual);
    if (cb.on_step) cb.on_step(s, out.steps);

    const bool at_end = p.t_end - s.t <= t_tol;
    if (out.steps % static_cast<std::size_t>(p.out_every) == 0 || at_end) {
      auto rep = energy_report(s, k, c, caps);
      rep.dt = r.report.dt;
      rep.energy_residual = r.report.energy_residual;
      emit(rep);
      last_reported = out.steps;
    }
  }
  if (last_reported != out.steps && out.reason == StopReason::step_limit) {
    emit(energy_report(s, k, c, caps));
  }
  out.mean_abs_energy_residual = out.steps ? sum_abs_r / static_cast<double>(out.steps) : 0.0;
  out.state = std::move(s);
  return out;
}

inline RunParams run_params(const Config& cfg) {
  RunParams p;
  p.t_end = cfg.t_end;
  p.control = {cfg.dt_max, cfg.cfl};
  p.out_every = cfg.out_every;
  p.cap_radius = cfg.cap_radius;
  p.blowup_delta = cfg.blowup_delta;
  p.conv_tol = cfg.conv_tol;
  p.eps0 = cfg.eps0;
  p.stop_on_convergence = cfg.stop_on_convergence;
  return p;
}

/// Coefficients for a run; inadmissible sets are a domain error carrying the margin report.
inline LeslieCoefficients admissible_coefficients(const Viscosities& mu) {
  const auto report = validate_coefficients(mu);
  if (!report.weak_ok) throw Error(ErrorKind::domain, "inadmissible Leslie coefficients\n" + report.describe());
  return LeslieCoefficients(mu);
}

/// Exclusive use of an output directory for the lifetime of the object.
class OutputLock {
 public:
  explicit OutputLock(const std::filesystem::path& dir) : path_(dir / ".els2.lock") {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::io, "cannot create output directory " + dir.string() + ": " + ec.message());
    std::FILE* f = std::fopen(path_.string().c_str(), "wx");
    if (!f) throw Error(ErrorKind::io, "output directory is locked or unwritable: " + path_.string());
    std::fclose(f);
  }
  ~OutputLock() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  std::filesystem::path path_;
};

namespace detail {

inline void write_convergence_csv(const std::filesystem::path& path, const Trajectory& tr,
                                  const ConvergenceResult& c) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << kConvergenceHeader << '\n';
  std::size_t next_fit = 0;
  for (std::size_t j = 0; j <= c.index; ++j) {
    const double t = tr[j].report.t;
    const bool in_fit = next_fit < c.fit_times.size() && c.fit_times[next_fit] == t;
    if (in_fit) ++next_fit;
    out << format_double(t) << ',' << format_double(tr[j].u_l2) << ',' << format_double(c.cauchy_diffs[j]) << ','
        << format_double(tr[j].grad_u_l2) << ',' << (in_fit ? 1 : 0) << '\n';
  }
  if (!out) throw Error(ErrorKind::io, "write failed for " + path.string());
}

inline void put_fit(std::ostream& out, const std::string& name, const std::optional<DecayFit>& f) {
  if (!f) {
    out << name << "_fit: absent\n";
    return;
  }
  out << name << "_C1: " << format_double(f->C1) << '\n'
      << name << "_C2: " << format_double(f->C2) << '\n'
      << name << "_rms_log_residual: " << format_double(f->rms_log_residual) << '\n'
      << name << "_window: " << format_double(f->t_a) << ' ' << format_double(f->t_b) << '\n'
      << name << "_samples: " << f->samples << '\n';
}

inline void write_run_summary(const std::filesystem::path& path, const RunOutcome& o, const RunParams& p) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  const auto& first = o.trajectory.front().report;
  const auto& last = o.trajectory.back().report;
  const auto small = smallness_check(first, p.eps0);
  out << "stop_reason: " << to_string(o.reason) << '\n'
      << "t_final: " << format_double(o.state.t) << '\n'
      << "steps: " << o.steps << '\n'
      << "reports: " << o.trajectory.size() << '\n'
      << "degree_initial: " << first.deg << '\n'
      << "degree_final: " << last.deg << '\n'
      << "energy_initial: " << format_double(first.KE + first.E) << '\n'
      << "energy_final: " << format_double(last.KE + last.E) << '\n'
      << "smallness_S0: " << format_double(small.S) << '\n'
      << "smallness_ok: " << (small.ok ? "true" : "false") << '\n'
      << "below_8pi: " << (small.below_8pi ? "true" : "false") << '\n'
      << "max_mean_velocity_drift: " << format_double(o.max_mean_drift) << '\n'
      << "max_norm_deviation: " << format_double(o.max_norm_deviation) << '\n'
      << "mean_abs_energy_residual: " << format_double(o.mean_abs_energy_residual) << '\n'
      << "converged: " << (o.convergence ? "true" : "false") << '\n';
  if (o.convergence) {
    const auto& c = *o.convergence;
    out << "convergence_t: " << format_double(c.t) << '\n'
        << "T0: " << (c.T0 ? format_double(*c.T0) : std::string("absent")) << '\n'
        << "eps0_margin: " << format_double(c.eps0_margin) << '\n'
        << "M0: " << c.M0 << '\n'
        << "quant_residual: " << format_double(c.quant_residual) << '\n';
    put_fit(out, "l2", c.l2_fit);
    put_fit(out, "h1", c.h1_fit);
  }
  if (!out) throw Error(ErrorKind::io, "write failed for " + path.string());
}

}  // namespace detail

struct RunArtifacts {
  RunOutcome outcome;
  std::filesystem::path diagnostics;
  std::filesystem::path final_checkpoint;
};

/// Runs from the configured initial data, or from `resume_from` when given.
/// Writes diagnostics.csv, checkpoints, summary.txt and (on convergence) convergence.csv.
inline RunArtifacts run(const Config& cfg, const std::optional<std::filesystem::path>& resume_from = std::nullopt) {
  const auto coeffs = admissible_coefficients(cfg.mu);
  const auto grid = build_grid(cfg.Lmax);

  State s;
  if (resume_from) {
    // No renormalization: the stored director is already the post-step one,
    // and touching it would break bitwise resume equivalence.
    auto cp = read_checkpoint(*resume_from, grid);
    s = {cp.t, std::move(cp.psi), DirectorField(grid, std::move(cp.d.values))};
  } else {
    auto init = make_initial(cfg.initial, grid);
    s = {init.t, std::move(init.psi), std::move(init.d)};
  }

  const auto& dir = cfg.output_dir;
  OutputLock lock(dir);
  RunArtifacts art;
  art.diagnostics = dir / "diagnostics.csv";
  art.final_checkpoint = dir / "final.ckpt";

  const bool append = resume_from && std::filesystem::exists(art.diagnostics);
  std::ofstream csv(art.diagnostics, append ? std::ios::app : std::ios::trunc);
  if (!csv) throw Error(ErrorKind::io, "cannot open " + art.diagnostics.string());
  if (!append) write_diagnostics_header(csv);

  const auto params = run_params(cfg);
  RunCallbacks cb;
  bool first = true;
  cb.on_report = [&](const TrajectorySample& smp) {
    // A resumed run's first report duplicates the row already written.
    if (!(append && first)) {
      write_diagnostics_row(smp.report, csv);
      csv.flush();
    }
    first = false;
  };
  cb.on_step = [&](const State& st, std::size_t n) {
    if (cfg.checkpoint_every > 0 && n % static_cast<std::size_t>(cfg.checkpoint_every) == 0) {
      char name[40];
      std::snprintf(name, sizeof name, "checkpoint_%08zu.ckpt", n);
      write_checkpoint({st.t, st.psi, st.d}, dir / name);
    }
  };
  cb.on_halt = [&](const State& st, const std::string&) { write_checkpoint({st.t, st.psi, st.d}, dir / "halt.ckpt"); };

  art.outcome = integrate(std::move(s), coeffs, params, cb);
  const auto& fin = art.outcome.state;
  write_checkpoint({fin.t, fin.psi, fin.d}, art.final_checkpoint);
  if (art.outcome.convergence) {
    detail::write_convergence_csv(dir / "convergence.csv", art.outcome.trajectory, *art.outcome.convergence);
  }
  detail::write_run_summary(dir / "summary.txt", art.outcome, params);
  return art;
}

}  // namespace els2
