#pragma once

// Everything a single state determines pointwise: velocity, its Jacobian,
// strain/rotation, director gradients, the tension field and the on-shell
// corotational rate N. Energy diagnostics and the stepper both start here.

#include <array>
#include <cmath>

#include "els2/fields.hpp"
#include "els2/leslie.hpp"
#include "els2/sphere.hpp"

namespace els2 {

struct State {
  double t = 0.0;
  ScalarField psi;  // stream function, u = rot psi
  DirectorField d;

  const GridPtr& grid() const { return psi.grid; }
};

/// Band kept for psi and omega; the quadratic terms alias above it.
inline int dynamic_band(const SphereGrid& g) { return (2 * g.lmax()) / 3; }

struct DirectorKinematics {
  std::array<SpectralCoeffs, 3> coeffs;
  TensorField grad;      // column k is the tangential gradient of d_k
  VectorField lap;       // componentwise Laplace-Beltrami of d
  ScalarField grad_sq;   // |grad d|^2
  VectorField tension;   // lap d + |grad d|^2 d
};

inline DirectorKinematics director_kinematics(const VectorField& d) {
  const GridPtr& g = d.grid;
  DirectorKinematics k{{}, TensorField(g), VectorField(g), ScalarField(g), VectorField(g)};
  for (int c = 0; c < 3; ++c) {
    k.coeffs[c] = sh_analysis(component(d, c));
    const auto grad = gradient_from_coeffs(g, k.coeffs[c]);
    auto lap_c = k.coeffs[c];
    apply_laplacian(lap_c);
    const auto lap = sh_synthesis(g, lap_c);
    for (std::size_t n = 0; n < g->size(); ++n) {
      k.grad[n].col(c) = grad[n];
      k.lap[n][c] = lap[n];
    }
  }
  for (std::size_t n = 0; n < g->size(); ++n) {
    k.grad_sq[n] = k.grad[n].squaredNorm();
    k.tension[n] = k.lap[n] + k.grad_sq[n] * d[n];
  }
  return k;
}

struct FlowKinematics {
  SpectralCoeffs psi_coeffs;  // truncated to the dynamic band
  TangentField u;
  TensorField jacobian;  // J_ij = d_j u_i
  TensorField A;
  TensorField Omega;
};

inline FlowKinematics flow_kinematics(const ScalarField& psi) {
  const GridPtr& g = psi.grid;
  FlowKinematics k;
  k.psi_coeffs = sh_analysis(psi);
  truncate(k.psi_coeffs, dynamic_band(*g));
  k.u = rot_from_coeffs(g, k.psi_coeffs);
  k.jacobian = surface_velocity_gradient(k.u);
  auto sr = strain_rotation(k.jacobian);
  k.A = std::move(sr.A);
  k.Omega = std::move(sr.Omega);
  return k;
}

/// On-shell N from the director equation,
/// lambda1 N = (lap d + |grad d|^2 d) + lambda2 (d.Ad) d - lambda2 Ad, projected off d.
/// Without rotational viscosity (lambda1 = 0) N is undefined; it is then set to
/// zero, which is only meaningful when mu2 = mu3 = 0 so that N never enters the stress.
inline VectorField corotational_rate(const VectorField& d, const DirectorKinematics& dk, const TensorField& A,
                                     const Viscosities& mu) {
  VectorField N(d.grid);
  const double l1 = mu.lambda1(), l2 = mu.lambda2();
  if (!(l1 > 0.0)) {
    if (mu.mu2 != 0.0 || mu.mu3 != 0.0) {
      throw Error(ErrorKind::domain, "lambda1 must be positive when mu2 or mu3 is nonzero");
    }
    return N;
  }
  for (std::size_t k = 0; k < d.size(); ++k) {
    const Vec3 Ad = A[k] * d[k];
    Vec3 v = (dk.tension[k] + l2 * d[k].dot(Ad) * d[k] - l2 * Ad) / l1;
    N[k] = v - v.dot(d[k]) * d[k];
  }
  return N;
}

struct Kinematics {
  FlowKinematics flow;
  DirectorKinematics director;
  VectorField N;
};

inline Kinematics kinematics(const State& s, const Viscosities& mu) {
  detail::require_same(*s.psi.grid, *s.d.grid);
  Kinematics k{flow_kinematics(s.psi), director_kinematics(s.d), {}};
  k.N = corotational_rate(s.d, k.director, k.flow.A, mu);
  return k;
}

/// J = (1/2) eps_abc d_a n.(grad d_b x grad d_c); integrates to 4 pi deg d.
inline ScalarField jacobian_density(const VectorField& d, const TensorField& grad_d) {
  ScalarField J(d.grid);
  for (std::size_t k = 0; k < d.size(); ++k) {
    const Vec3 n = d.grid->normal(k);
    const Mat3& G = grad_d[k];
    double s = 0.0;
    for (int a = 0; a < 3; ++a) s += d[k][a] * n.dot(G.col((a + 1) % 3).cross(G.col((a + 2) % 3)));
    J[k] = s;
  }
  return J;
}

}  // namespace els2
