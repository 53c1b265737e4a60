#pragma once

// Semi-implicit time stepping in vorticity/stream-function form.
//
// Vorticity: omega_t = (mu4/2) lap omega + f, with f the curl of the full
// discrete momentum forcing minus (mu4/2) lap omega, so only the diagonal
// spectral part is implicit and the split is exact by subtraction.
// Director: d_t = lap d / lambda1 + R(d, u), implicit in lap / lambda1, then
// renormalized pointwise.

#include <cmath>
#include <limits>
#include <numbers>

#include "els2/energy.hpp"

namespace els2 {

/// F_el = -(grad d)^T (lap d + |grad d|^2 d); the gradient part of
/// -div(grad d (.) grad d) is absorbed into pressure.
inline TangentField elastic_force(const VectorField& d, const DirectorKinematics& dk) {
  TangentField f(d.grid);
  for (std::size_t k = 0; k < d.size(); ++k) f[k] = -(dk.grad[k] * dk.tension[k]);
  return f;
}

inline TangentField elastic_force(const VectorField& d) { return elastic_force(d, director_kinematics(d)); }

/// Tangential divergence of sigma, assembled as the quadrature adjoint of
/// u -> (A(u), Omega(u)): tau = P sym(sigma) P + skew(sigma), F_i = div(row_i(tau P)).
inline TangentField leslie_force(const State& s, const Kinematics& k, const Viscosities& mu) {
  const GridPtr& g = s.grid();
  std::array<VectorField, 3> rows{VectorField(g), VectorField(g), VectorField(g)};
  for (std::size_t n = 0; n < g->size(); ++n) {
    const Mat3 sigma = leslie_stress(s.d[n], k.N[n], k.flow.A[n], mu);
    const Mat3 P = tangent_projector(g->normal(n));
    const Mat3 tau = (P * (0.5 * (sigma + sigma.transpose())) * P + 0.5 * (sigma - sigma.transpose())) * P;
    for (int i = 0; i < 3; ++i) rows[i][n] = tau.row(i).transpose();
  }
  VectorField raw(g);
  for (int i = 0; i < 3; ++i) {
    const auto div = divergence(rows[i]);
    for (std::size_t n = 0; n < g->size(); ++n) raw[n][i] = div[n];
  }
  return project_tangent(raw);
}

/// (u . grad) u, tangentially projected.
inline TangentField advection(const FlowKinematics& f) {
  VectorField a(f.u.grid);
  for (std::size_t n = 0; n < a.size(); ++n) a[n] = f.jacobian[n] * f.u[n];
  return project_tangent(a);
}

/// Spectral coefficients of the explicit vorticity forcing (implicit part excluded).
inline SpectralCoeffs vorticity_forcing_coeffs(const State& s, const Kinematics& k, const Viscosities& mu) {
  const auto fl = leslie_force(s, k, mu);
  const auto fe = elastic_force(s.d, k.director);
  const auto adv = advection(k.flow);
  TangentField total(s.grid());
  for (std::size_t n = 0; n < total.size(); ++n) total[n] = fl[n] + fe[n] - adv[n];
  auto f = curl_coeffs(total);
  for (int l = 1; l <= f.lmax; ++l) {
    const double lap2 = static_cast<double>(l) * (l + 1) * static_cast<double>(l) * (l + 1);
    // omega = lap psi, so (mu4/2) lap omega = (mu4/2) l^2 (l+1)^2 psi.
    for (int m = -l; m <= l; ++m) f(l, m) -= 0.5 * mu.mu4 * lap2 * k.flow.psi_coeffs(l, m);
  }
  return f;
}

inline ScalarField total_vorticity_forcing(const State& s, const Viscosities& mu) {
  return sh_synthesis(s.grid(), vorticity_forcing_coeffs(s, kinematics(s, mu), mu));
}

struct StepControl {
  double dt_max = 1e-2;
  double cfl = 0.5;
};

inline double cfl_dt(const State& s, const Kinematics& k, const LeslieCoefficients& c, const StepControl& ctl) {
  const auto& g = *s.grid();
  const double h = 2.0 * std::numbers::pi / g.n_lon();
  double umax = 0.0, gmax = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    umax = std::max(umax, k.flow.u[n].norm());
    gmax = std::max(gmax, k.director.grad_sq[n]);
  }
  const auto& mu = c.mu;
  const double l1 = c.lambda1(), l2 = c.lambda2();
  const double nu_x = std::abs(mu.mu1) + std::abs(mu.mu5) + std::abs(mu.mu6) + std::abs(l2) + l2 * l2 / l1;
  const double stiff = h * h * gmax + l1 * std::max(0.0, nu_x - mu.mu4);
  constexpr double inf = std::numeric_limits<double>::infinity();
  const double adv = umax > 0.0 ? h / umax : inf;
  const double dif = stiff > 0.0 ? h * h * l1 / stiff : inf;
  return std::min(ctl.dt_max, ctl.cfl * std::min(adv, dif));
}

inline double cfl_dt(const State& s, const LeslieCoefficients& c, const StepControl& ctl = {}) {
  return cfl_dt(s, kinematics(s, c.mu), c, ctl);
}

struct StepReport {
  double dt = 0.0;
  double energy_before = 0.0;
  double energy_after = 0.0;
  double dissipation = 0.0;       // integral of Q at the old state
  double energy_residual = 0.0;   // (E_after - E_before)/dt + dissipation
  double max_norm_deviation = 0.0;  // max ||d_raw| - 1| before renormalization
  double mean_velocity_drift = 0.0; // |integral of u| at the new state
};

struct StepResult {
  State state;
  StepReport report;
};

namespace detail {

inline void require_finite(const SpectralCoeffs& a, const char* what) {
  for (double v : a.a) {
    if (!std::isfinite(v)) throw Error(ErrorKind::numerical_blowup, std::string("non-finite ") + what);
  }
}

inline double total_energy(const VectorField& u, const DirectorKinematics& dk) {
  return kinetic_energy(u) + dirichlet_energy(dk);
}

}  // namespace detail

/// One step from precomputed kinematics of `s`.
inline StepResult step(const State& s, const Kinematics& k, const LeslieCoefficients& c, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorKind::usage, "time step must be positive and finite");
  const GridPtr& g = s.grid();
  const auto& mu = c.mu;
  const double l1 = c.lambda1(), l2 = c.lambda2();

  // Vorticity.
  auto f = vorticity_forcing_coeffs(s, k, mu);
  detail::require_finite(f, "vorticity forcing");
  SpectralCoeffs psi_new(g->lmax());
  const int band = dynamic_band(*g);
  for (int l = 1; l <= band; ++l) {
    const double ev = static_cast<double>(l) * (l + 1);
    for (int m = -l; m <= l; ++m) {
      const double omega = -ev * k.flow.psi_coeffs(l, m);
      const double omega_new = (omega + dt * f(l, m)) / (1.0 + dt * 0.5 * mu.mu4 * ev);
      psi_new(l, m) = -omega_new / ev;
    }
  }

  // Director: explicit rate without the lap d / lambda1 part.
  VectorField rate(g);
  for (std::size_t n = 0; n < g->size(); ++n) {
    const Vec3& d = s.d[n];
    const Vec3 Ad = k.flow.A[n] * d;
    rate[n] = (k.director.grad_sq[n] * d + l2 * d.dot(Ad) * d - l2 * Ad) / l1 -
              k.director.grad[n].transpose() * k.flow.u[n] + k.flow.Omega[n] * d;
  }
  VectorField raw = s.d;
  for (int c3 = 0; c3 < 3; ++c3) {
    auto delta = sh_analysis(component(rate, c3));
    const auto& dc = k.director.coeffs[c3];
    for (int l = 0; l <= g->lmax(); ++l) {
      const double ev = static_cast<double>(l) * (l + 1) / l1;
      for (int m = -l; m <= l; ++m) delta(l, m) = dt * (delta(l, m) - ev * dc(l, m)) / (1.0 + dt * ev);
    }
    detail::require_finite(delta, "director increment");
    const auto inc = sh_synthesis(g, delta);
    for (std::size_t n = 0; n < g->size(); ++n) raw[n][c3] += inc[n];
  }

  StepResult out;
  out.report.dt = dt;
  out.report.max_norm_deviation = max_norm_deviation(raw);
  out.state.t = s.t + dt;
  out.state.psi = sh_synthesis(g, psi_new);
  out.state.d = normalize_director(raw);

  const auto u_new = rot_from_coeffs(g, psi_new);
  out.report.energy_before = detail::total_energy(k.flow.u, k.director);
  out.report.energy_after = detail::total_energy(u_new, director_kinematics(out.state.d));
  out.report.dissipation = dissipation_integral(s, k, c);
  out.report.energy_residual =
      (out.report.energy_after - out.report.energy_before) / dt + out.report.dissipation;
  out.report.mean_velocity_drift = integrate(u_new).norm();
  if (!std::isfinite(out.report.energy_after)) throw Error(ErrorKind::numerical_blowup, "non-finite energy");
  return out;
}

/// One step; dt must not exceed the stability bound (cfl_dt without the dt_max cap).
inline StepResult step(const State& s, const LeslieCoefficients& c, double dt) {
  const auto k = kinematics(s, c.mu);
  const double bound = cfl_dt(s, k, c, {std::numeric_limits<double>::infinity(), 1.0});
  if (dt > bound * (1.0 + 1e-12)) {
    throw Error(ErrorKind::usage, "dt " + std::to_string(dt) + " exceeds the stability bound " + std::to_string(bound));
  }
  return step(s, k, c, dt);
}

}  // namespace els2
