#pragma once

// Scalar functionals of a state: kinetic and Dirichlet energy, the
// holomorphic/anti-holomorphic split, degree, tension residual, dissipation
// and the local (cap) concentration monitor.

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "els2/kinematics.hpp"

namespace els2 {

inline constexpr double kFourPi = 4.0 * std::numbers::pi;

inline double kinetic_energy(const VectorField& u) {
  return 0.5 * integrate_nodes(*u.grid, [&](std::size_t k) { return u[k].squaredNorm(); });
}

inline double dirichlet_energy(const DirectorKinematics& dk) { return 0.5 * integrate(dk.grad_sq); }

inline double dirichlet_energy(const VectorField& d) { return dirichlet_energy(director_kinematics(d)); }

inline ScalarField jacobian_density(const VectorField& d) {
  return jacobian_density(d, director_kinematics(d).grad);
}

struct EnergySplit {
  double partial = 0.0;      // E_del
  double antipartial = 0.0;  // E_delbar
};

inline EnergySplit energy_split(double E, double jacobian_integral) {
  return {0.5 * (E + jacobian_integral), 0.5 * (E - jacobian_integral)};
}

inline EnergySplit energy_split(const VectorField& d) {
  const auto dk = director_kinematics(d);
  return energy_split(dirichlet_energy(dk), integrate(jacobian_density(d, dk.grad)));
}

struct Degree {
  int value = 0;
  double raw = 0.0;
  bool under_resolved = false;  // |raw - value| > 0.1
};

inline constexpr double kDegreeWarning = 0.1;

inline Degree degree_from_jacobian(double jacobian_integral) {
  Degree d;
  d.raw = jacobian_integral / kFourPi;
  d.value = static_cast<int>(std::lround(d.raw));
  d.under_resolved = std::abs(d.raw - d.value) > kDegreeWarning;
  return d;
}

inline Degree degree(const VectorField& d) { return degree_from_jacobian(integrate(jacobian_density(d))); }

inline double harmonic_residual(const DirectorKinematics& dk) { return l2_norm(dk.tension); }

inline double harmonic_residual(const VectorField& d) { return harmonic_residual(director_kinematics(d)); }

/// Geodesic cap integrals for one radius. Membership of node (i', j') in the
/// cap around (i, j) depends only on (i, i', |j - j'|) and is a longitude
/// window, so each cap sum reduces to ring prefix sums.
class CapIntegrator {
 public:
  CapIntegrator(GridPtr grid, double radius) : grid_(std::move(grid)), radius_(radius) {
    if (!(radius > 0.0 && radius <= std::numbers::pi)) {
      throw Error(ErrorKind::usage, "cap radius must lie in (0, pi]");
    }
    const auto& g = *grid_;
    const int nl = g.n_lat(), np = g.n_lon();
    const double cos_r = std::cos(radius) - 1e-12;
    half_width_.assign(static_cast<std::size_t>(nl) * nl, -1);
    for (int i = 0; i < nl; ++i) {
      for (int ip = 0; ip < nl; ++ip) {
        const double cc = g.cos_theta(i) * g.cos_theta(ip), ss = g.sin_theta(i) * g.sin_theta(ip);
        int w = -1;
        for (int dj = 0; dj <= np / 2; ++dj) {
          if (cc + ss * std::cos(2.0 * std::numbers::pi * dj / np) >= cos_r) {
            w = dj;
          } else {
            break;
          }
        }
        half_width_[static_cast<std::size_t>(i) * nl + ip] = w;
      }
    }
  }

  double radius() const { return radius_; }

  /// Maximum over node-centred caps of the integral of `density`.
  double max_cap_integral(const ScalarField& density) const {
    const auto& g = *grid_;
    const int nl = g.n_lat(), np = g.n_lon();
    // prefix[i][j] = sum of density over ring i, longitudes [0, j).
    std::vector<double> prefix(static_cast<std::size_t>(nl) * (np + 1), 0.0);
    for (int i = 0; i < nl; ++i) {
      double* p = prefix.data() + static_cast<std::size_t>(i) * (np + 1);
      for (int j = 0; j < np; ++j) p[j + 1] = p[j] + density[g.node(i, j)];
    }
    auto window = [&](int ring, int lo, int hi) {  // inclusive, may wrap
      const double* p = prefix.data() + static_cast<std::size_t>(ring) * (np + 1);
      if (lo < 0) return (p[np] - p[lo + np]) + p[hi + 1];
      if (hi >= np) return (p[np] - p[lo]) + p[hi - np + 1];
      return p[hi + 1] - p[lo];
    };
    double best = 0.0;
    for (int i = 0; i < nl; ++i) {
      for (int j = 0; j < np; ++j) {
        double total = 0.0;
        for (int ip = 0; ip < nl; ++ip) {
          const int w = half_width_[static_cast<std::size_t>(i) * nl + ip];
          if (w < 0) continue;
          const double* p = prefix.data() + static_cast<std::size_t>(ip) * (np + 1);
          const double ring = 2 * w + 1 >= np ? p[np] : window(ip, j - w, j + w);
          total += g.ring_weight(ip) * ring;
        }
        best = std::max(best, total);
      }
    }
    return best;
  }

 private:
  GridPtr grid_;
  double radius_;
  std::vector<int> half_width_;
};

inline ScalarField concentration_density(const VectorField& u, const DirectorKinematics& dk) {
  ScalarField e(u.grid);
  for (std::size_t k = 0; k < u.size(); ++k) e[k] = u[k].squaredNorm() + dk.grad_sq[k];
  return e;
}

/// max over caps B_r(x) of the integral of |u|^2 + |grad d|^2 (no factor 1/2).
inline double local_energy_max(const VectorField& u, const VectorField& d, double r) {
  return CapIntegrator(u.grid, r).max_cap_integral(concentration_density(u, director_kinematics(d)));
}

inline double dissipation_integral(const State& s, const Kinematics& k, const LeslieCoefficients& c) {
  return integrate_nodes(*s.grid(), [&](std::size_t n) {
    return dissipation_density(s.d[n], k.N[n], k.flow.A[n], c);
  });
}

struct EnergyReport {
  double t = 0.0;
  double KE = 0.0;
  double E = 0.0;
  double E_partial = 0.0;
  double E_antipartial = 0.0;
  double deg_raw = 0.0;
  int deg = 0;
  double residual = 0.0;
  double dissipation = 0.0;
  Vec3 mean_u = Vec3::Zero();
  double local_max = 0.0;
  double dt = 0.0;               // step that produced this state (0 at start)
  double energy_residual = 0.0;  // energy-law residual of that step
  bool degree_warning = false;
};

inline EnergyReport energy_report(const State& s, const Kinematics& k, const LeslieCoefficients& c,
                                  const CapIntegrator& caps) {
  EnergyReport r;
  r.t = s.t;
  r.KE = kinetic_energy(k.flow.u);
  r.E = dirichlet_energy(k.director);
  const double jint = integrate(jacobian_density(s.d, k.director.grad));
  const auto split = energy_split(r.E, jint);
  r.E_partial = split.partial;
  r.E_antipartial = split.antipartial;
  const auto deg = degree_from_jacobian(jint);
  r.deg_raw = deg.raw;
  r.deg = deg.value;
  r.degree_warning = deg.under_resolved;
  r.residual = harmonic_residual(k.director);
  r.dissipation = dissipation_integral(s, k, c);
  r.mean_u = integrate(k.flow.u);
  r.local_max = caps.max_cap_integral(concentration_density(k.flow.u, k.director));
  return r;
}

inline EnergyReport energy_report(const State& s, const LeslieCoefficients& c, double r0) {
  return energy_report(s, kinematics(s, c.mu), c, CapIntegrator(s.grid(), r0));
}

}  // namespace els2
