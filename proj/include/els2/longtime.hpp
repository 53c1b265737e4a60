#pragma once

// Long-time diagnostics over a trajectory of reports: smallness of the
// initial energy, exponential decay fits, energy quantization, the Topping
// ratio and convergence detection.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "els2/energy.hpp"

namespace els2 {

struct Smallness {
  bool ok = false;
  double margin = 0.0;  // eps0 - S
  double S = 0.0;       // KE + 2 min(E_partial, E_antipartial)
  bool below_8pi = false;
};

inline Smallness smallness_check(const EnergyReport& r, double eps0) {
  Smallness s;
  s.S = r.KE + 2.0 * std::min(r.E_partial, r.E_antipartial);
  s.margin = eps0 - s.S;
  s.ok = s.S <= eps0;
  s.below_8pi = s.S < 2.0 * kFourPi;
  return s;
}

struct DecayFit {
  double C1 = 0.0;
  double C2 = 0.0;
  double rms_log_residual = 0.0;
  double t_a = 0.0;
  double t_b = 0.0;
  std::size_t samples = 0;
};

inline constexpr std::size_t kMinFitSamples = 10;

/// Least-squares line through log y on t in [t_a, t_b].
inline DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& y, double t_a, double t_b) {
  if (t.size() != y.size()) throw Error(ErrorKind::usage, "fit_decay: series lengths differ");
  std::vector<double> xs, ls;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_a || t[i] > t_b) continue;
    if (!(y[i] > 0.0) || !std::isfinite(y[i])) {
      throw Error(ErrorKind::domain, "fit_decay: nonpositive value at t=" + std::to_string(t[i]));
    }
    xs.push_back(t[i]);
    ls.push_back(std::log(y[i]));
  }
  if (xs.size() < kMinFitSamples) {
    throw Error(ErrorKind::insufficient_data, "fit_decay: " + std::to_string(xs.size()) + " samples in window, need " +
                                                  std::to_string(kMinFitSamples));
  }
  const double n = static_cast<double>(xs.size());
  const double xm = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double lm = std::accumulate(ls.begin(), ls.end(), 0.0) / n;
  double sxx = 0.0, sxl = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - xm) * (xs[i] - xm);
    sxl += (xs[i] - xm) * (ls[i] - lm);
  }
  if (!(sxx > 0.0)) throw Error(ErrorKind::insufficient_data, "fit_decay: window has a single time");
  const double slope = sxl / sxx;
  const double intercept = lm - slope * xm;
  double ss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ls[i] - (intercept + slope * xs[i]);
    ss += r * r;
  }
  return {std::exp(intercept), -slope, std::sqrt(ss / n), xs.front(), xs.back(), xs.size()};
}

inline DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& y) {
  if (t.empty()) throw Error(ErrorKind::insufficient_data, "fit_decay: empty series");
  return fit_decay(t, y, t.front(), t.back());
}

struct Quantization {
  int M0 = 0;
  double residual = 0.0;
  double E_tail = 0.0;
};

/// Tail = last quarter of the series; it must have settled (spread at most
/// 10% of its mean, or 1e-6 absolute for tails decaying to zero energy).
inline Quantization quantization_check(const std::vector<double>& E_series, double E_ref) {
  if (E_series.size() < 4) throw Error(ErrorKind::insufficient_data, "quantization_check: need at least 4 samples");
  const std::size_t start = E_series.size() - E_series.size() / 4;
  const auto first = E_series.begin() + static_cast<std::ptrdiff_t>(start);
  const double n = static_cast<double>(E_series.end() - first);
  const double mean = std::accumulate(first, E_series.end(), 0.0) / n;
  const auto [lo, hi] = std::minmax_element(first, E_series.end());
  if (*hi - *lo > std::max(0.1 * std::abs(mean), 1e-6)) {
    throw Error(ErrorKind::not_converged, "energy tail has not settled (spread " + std::to_string(*hi - *lo) +
                                              ", mean " + std::to_string(mean) + ")");
  }
  Quantization q;
  q.E_tail = mean;
  q.M0 = static_cast<int>(std::lround((mean - E_ref) / kFourPi));
  q.residual = std::abs(mean - E_ref - kFourPi * q.M0);
  return q;
}

inline constexpr double kToppingFloor = 1e-12;

/// min(E_partial, E_antipartial) / residual^2 when below eps0. Absent when
/// either side is at round-off level: on harmonic maps both are, and their
/// quotient is noise.
inline std::optional<double> topping_ratio(const EnergyReport& r, double eps0) {
  const double e = std::min(r.E_partial, r.E_antipartial);
  if (!(e < eps0) || !(e > kToppingFloor) || !(r.residual > kToppingFloor)) return std::nullopt;
  return e / (r.residual * r.residual);
}

inline std::optional<double> topping_ratio(const VectorField& d, double eps0) {
  const auto dk = director_kinematics(d);
  EnergyReport r;
  r.E = dirichlet_energy(dk);
  const auto split = energy_split(r.E, integrate(jacobian_density(d, dk.grad)));
  r.E_partial = split.partial;
  r.E_antipartial = split.antipartial;
  r.residual = harmonic_residual(dk);
  return topping_ratio(r, eps0);
}

struct TrajectorySample {
  EnergyReport report;
  DirectorField d;
  double u_l2 = 0.0;       // ||u||
  double grad_u_l2 = 0.0;  // ||grad u||, H^1 proxy
};

using Trajectory = std::vector<TrajectorySample>;

inline TrajectorySample make_sample(const State& s, const Kinematics& k, const EnergyReport& r) {
  TrajectorySample out;
  out.report = r;
  out.d = s.d;
  out.u_l2 = l2_norm(k.flow.u);
  out.grad_u_l2 = std::sqrt(integrate_nodes(*s.grid(), [&](std::size_t n) { return k.flow.jacobian[n].squaredNorm(); }));
  return out;
}

struct ConvergenceResult {
  std::size_t index = 0;  // report at which detection fired
  double t = 0.0;
  DirectorField d_inf;
  std::vector<double> times;
  std::vector<double> cauchy_diffs;  // ||d(t_j) - d_inf||
  int M0 = 0;
  double quant_residual = 0.0;
  std::optional<double> T0;  // first report time passing smallness_check
  double eps0_margin = 0.0;  // smallness margin at T0 (at t = 0 if never small)
  std::optional<DecayFit> l2_fit;  // ||u|| + ||d - d_inf||
  std::optional<DecayFit> h1_fit;  // ||grad u||
  std::vector<double> fit_times;   // samples actually used by l2_fit
  std::vector<double> fit_values;
};

inline constexpr std::size_t kMinConvergenceReports = 50;
inline constexpr std::size_t kConvergenceWindow = 10;

namespace detail {

inline std::optional<DecayFit> try_fit(const std::vector<double>& t, const std::vector<double>& y, double t_a,
                                       double t_b) {
  try {
    return fit_decay(t, y, t_a, t_b);
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace detail

/// Fires at the first report k >= 49 such that KE, residual and the
/// successive director difference stay below tol for the 10 reports ending at k.
inline std::optional<ConvergenceResult> convergence_detect(const Trajectory& tr, double tol, double eps0) {
  if (tr.size() < kMinConvergenceReports) return std::nullopt;
  std::vector<double> succ(tr.size(), 0.0);
  for (std::size_t j = 1; j < tr.size(); ++j) succ[j] = l2_distance(tr[j].d, tr[j - 1].d);

  auto quiet = [&](std::size_t j) {
    return tr[j].report.KE < tol && tr[j].report.residual < tol && (j == 0 || succ[j] < tol);
  };
  std::size_t run = 0, fired = tr.size();
  for (std::size_t j = 0; j < tr.size(); ++j) {
    run = quiet(j) ? run + 1 : 0;
    if (run >= kConvergenceWindow && j + 1 >= kMinConvergenceReports) {
      fired = j;
      break;
    }
  }
  if (fired == tr.size()) return std::nullopt;

  ConvergenceResult c;
  c.index = fired;
  c.t = tr[fired].report.t;
  c.d_inf = tr[fired].d;
  for (std::size_t j = 0; j <= fired; ++j) {
    c.times.push_back(tr[j].report.t);
    c.cauchy_diffs.push_back(l2_distance(tr[j].d, c.d_inf));
  }

  std::vector<double> E;
  for (std::size_t j = 0; j <= fired; ++j) E.push_back(tr[j].report.E);
  const auto q = quantization_check(E, tr[fired].report.E);
  c.M0 = q.M0;
  c.quant_residual = q.residual;

  c.eps0_margin = smallness_check(tr.front().report, eps0).margin;
  for (std::size_t j = 0; j <= fired; ++j) {
    const auto s = smallness_check(tr[j].report, eps0);
    if (s.ok) {
      c.T0 = tr[j].report.t;
      c.eps0_margin = s.margin;
      break;
    }
  }

  // Window: the later of T0 and 20% of the run, up to detection.
  const double t_a = std::max(c.T0.value_or(tr.front().report.t), 0.2 * c.t);
  // Near detection the stand-in d_inf biases ||d - d_inf|| low. For geometric
  // approach the missing tail of sample j is about ||d_j - d_inf|| * succ_k / succ_j;
  // samples where that bias exceeds 10% of y are left out.
  const double succ_k = succ[fired];
  std::vector<double> h1_t, h1_y;
  for (std::size_t j = 0; j <= fired; ++j) {
    const double t = tr[j].report.t;
    if (t < t_a) continue;
    const double y = tr[j].u_l2 + c.cauchy_diffs[j];
    double bias = 0.0;
    if (c.cauchy_diffs[j] > 0.0) {
      bias = succ[j] > 0.0 ? c.cauchy_diffs[j] * succ_k / succ[j] : std::numeric_limits<double>::infinity();
    }
    if (y > 0.0 && bias <= 0.1 * y) {
      c.fit_times.push_back(t);
      c.fit_values.push_back(y);
    }
    if (tr[j].grad_u_l2 > 0.0) {
      h1_t.push_back(t);
      h1_y.push_back(tr[j].grad_u_l2);
    }
  }
  if (!c.fit_times.empty()) c.l2_fit = detail::try_fit(c.fit_times, c.fit_values, t_a, c.t);
  if (!h1_t.empty()) c.h1_fit = detail::try_fit(h1_t, h1_y, t_a, c.t);
  return c;
}

}  // namespace els2
