#pragma once

// Leslie viscosity algebra: admissibility of (mu1..mu6), the derived
// dissipation constants, the viscous stress, and the pointwise dissipation
// quadratic form together with its lower bound.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "els2/error.hpp"
#include "els2/sphere.hpp"

namespace els2 {

/// The six Leslie viscosities, unvalidated.
struct Viscosities {
  double mu1 = 0, mu2 = 0, mu3 = 0, mu4 = 0, mu5 = 0, mu6 = 0;

  static Viscosities from_array(const std::array<double, 6>& m) { return {m[0], m[1], m[2], m[3], m[4], m[5]}; }
  std::array<double, 6> as_array() const { return {mu1, mu2, mu3, mu4, mu5, mu6}; }

  double lambda1() const { return mu3 - mu2; }
  double lambda2() const { return mu6 - mu5; }

  Viscosities scaled(double c) const { return {c * mu1, c * mu2, c * mu3, c * mu4, c * mu5, c * mu6}; }
};

struct ValidationReport {
  bool parodi_ok = false;
  bool compat_ok = false;
  bool weak_ok = false;    // Parodi + lambda1 > 0 + the three strict inequalities
  bool strong_ok = false;  // the classical, more restrictive set

  // Signed distances to each constraint boundary (positive = satisfied).
  double parodi_residual = 0;  // |mu2 + mu3 - (mu6 - mu5)|
  double lambda1 = 0;
  double mu4 = 0;
  double weak_sum = 0;         // 2mu1 + 3mu4 + 2mu5 + 2mu6
  double weak_stretch = 0;     // 2mu4 + mu5 + mu6 - lambda2^2/lambda1
  double strong_mu1 = 0;       // mu1 + lambda2^2/lambda1
  double strong_stretch = 0;   // mu5 + mu6 - lambda2^2/lambda1

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    os << "parodi_ok=" << std::boolalpha << parodi_ok << " (residual " << parodi_residual << ")\n"
       << "compat_ok=" << compat_ok << " (lambda1 " << lambda1 << ")\n"
       << "weak_ok=" << weak_ok << " (mu4 " << mu4 << ", 2mu1+3mu4+2mu5+2mu6 " << weak_sum
       << ", 2mu4+mu5+mu6-lambda2^2/lambda1 " << weak_stretch << ")\n"
       << "strong_ok=" << strong_ok << " (mu1+lambda2^2/lambda1 " << strong_mu1
       << ", mu5+mu6-lambda2^2/lambda1 " << strong_stretch << ")";
    return os.str();
  }
};

inline constexpr double kParodiTolerance = 1e-12;

inline ValidationReport validate_coefficients(const Viscosities& mu) {
  for (double v : mu.as_array()) {
    if (!std::isfinite(v)) throw Error(ErrorKind::input, "Leslie coefficients must be finite");
  }
  ValidationReport r;
  double scale = 1.0;
  for (double v : mu.as_array()) scale = std::max(scale, std::abs(v));

  r.parodi_residual = std::abs((mu.mu2 + mu.mu3) - (mu.mu6 - mu.mu5));
  r.parodi_ok = r.parodi_residual <= kParodiTolerance * scale;
  r.lambda1 = mu.lambda1();
  r.compat_ok = r.lambda1 > 0.0;
  r.mu4 = mu.mu4;
  r.weak_sum = 2 * mu.mu1 + 3 * mu.mu4 + 2 * mu.mu5 + 2 * mu.mu6;

  if (r.compat_ok) {
    const double stretch = mu.lambda2() * mu.lambda2() / r.lambda1;
    r.weak_stretch = 2 * mu.mu4 + mu.mu5 + mu.mu6 - stretch;
    r.strong_mu1 = mu.mu1 + stretch;
    r.strong_stretch = mu.mu5 + mu.mu6 - stretch;
  } else {
    r.weak_stretch = r.strong_mu1 = r.strong_stretch = -std::numeric_limits<double>::infinity();
  }

  const bool base = r.parodi_ok && r.compat_ok;
  r.weak_ok = base && r.mu4 > 0 && r.weak_sum > 0 && r.weak_stretch > 0;
  r.strong_ok = base && r.strong_mu1 >= 0 && r.mu4 > 0 && r.strong_stretch >= 0;
  return r;
}

struct DerivedConstants {
  double lambda1 = 0;
  double lambda2 = 0;
  double delta0 = 0;
  double gamma1 = 0;  // smaller eigenvalue of the diagonal-block quadratic form
  double alpha0 = 0;  // coercivity constant of the dissipation lower bound
};

inline DerivedConstants derived_constants(const Viscosities& mu) {
  const auto report = validate_coefficients(mu);
  if (!report.weak_ok) {
    throw Error(ErrorKind::domain, "inadmissible Leslie coefficients: " + report.describe());
  }
  DerivedConstants c;
  c.lambda1 = mu.lambda1();
  c.lambda2 = mu.lambda2();
  const double s = mu.mu1 + mu.mu5 + mu.mu6;
  c.delta0 = std::sqrt(s * s + 4 * mu.mu4 * mu.mu4);
  const double trace = mu.mu1 + 4 * mu.mu4 + mu.mu5 + mu.mu6;
  c.gamma1 = (trace - c.delta0) / 2;
  c.alpha0 = 0.25 * std::min({2 * mu.mu4 + mu.mu5 + mu.mu6 - c.lambda2 * c.lambda2 / c.lambda1, 2 * mu.mu4,
                              (trace - c.delta0) / 8});
  return c;
}

/// Admissible coefficients with their derived constants; construction validates.
struct LeslieCoefficients {
  Viscosities mu;
  DerivedConstants derived;

  explicit LeslieCoefficients(const Viscosities& m) : mu(m), derived(derived_constants(m)) {}

  double lambda1() const { return derived.lambda1; }
  double lambda2() const { return derived.lambda2; }
  double alpha0() const { return derived.alpha0; }
};

struct StrainRotation {
  Mat3 A;      // rate of strain, tangentially projected
  Mat3 Omega;  // vorticity tensor, Omega_ij = (d_j u_i - d_i u_j)/2
};

/// Splits the velocity Jacobian G (G_ij = d_j u_i) at a node with unit normal n.
inline StrainRotation strain_rotation(const Mat3& G, const Vec3& n) {
  const Mat3 P = tangent_projector(n);
  return {P * (0.5 * (G + G.transpose())) * P, 0.5 * (G - G.transpose())};
}

struct StrainRotationField {
  TensorField A;
  TensorField Omega;
};

inline StrainRotationField strain_rotation(const TensorField& G) {
  StrainRotationField out{TensorField(G.grid, Mat3::Zero()), TensorField(G.grid, Mat3::Zero())};
  for (std::size_t k = 0; k < G.size(); ++k) {
    const auto sr = strain_rotation(G[k], G.grid->normal(k));
    out.A[k] = sr.A;
    out.Omega[k] = sr.Omega;
  }
  return out;
}

/// N = d_t + (u . grad) d - Omega d at one node; grad_d has columns grad d_k.
inline Vec3 corotational_N(const Vec3& d_t, const Vec3& u, const Mat3& grad_d, const Vec3& d, const Mat3& Omega) {
  return d_t + grad_d.transpose() * u - Omega * d;
}

inline Mat3 leslie_stress(const Vec3& d, const Vec3& N, const Mat3& A, const Viscosities& mu) {
  const Vec3 Ad = A * d;
  const double dAd = d.dot(Ad);
  return mu.mu1 * dAd * (d * d.transpose()) + mu.mu2 * (N * d.transpose()) + mu.mu3 * (d * N.transpose()) +
         mu.mu4 * A + mu.mu5 * (Ad * d.transpose()) + mu.mu6 * (d * Ad.transpose());
}

inline constexpr double kConstraintTolerance = 1e-8;

namespace detail {

inline void check_dissipation_args(const Vec3& d, const Vec3& N, const Mat3& A) {
  const double nscale = std::max(1.0, N.norm());
  const double ascale = std::max(1.0, A.norm());
  if (std::abs(d.norm() - 1.0) > kConstraintTolerance) {
    throw Error(ErrorKind::domain, "director is not unit length");
  }
  if (std::abs(N.dot(d)) > kConstraintTolerance * nscale) {
    throw Error(ErrorKind::domain, "N is not perpendicular to d");
  }
  if ((A - A.transpose()).norm() > kConstraintTolerance * ascale) {
    throw Error(ErrorKind::domain, "strain tensor is not symmetric");
  }
  if (std::abs(A.trace()) > kConstraintTolerance * ascale) {
    throw Error(ErrorKind::domain, "strain tensor is not traceless");
  }
}

}  // namespace detail

/// Pointwise dissipation mu1 (d.Ad)^2 + mu4|A|^2 + (mu5+mu6)|Ad|^2 + lambda1|N|^2 + 2 lambda2 N.Ad.
inline double dissipation_density(const Vec3& d, const Vec3& N, const Mat3& A, const LeslieCoefficients& c) {
  detail::check_dissipation_args(d, N, A);
  const Vec3 Ad = A * d;
  const double dAd = d.dot(Ad);
  const auto& mu = c.mu;
  return mu.mu1 * dAd * dAd + mu.mu4 * A.squaredNorm() + (mu.mu5 + mu.mu6) * Ad.squaredNorm() +
         c.lambda1() * N.squaredNorm() + 2 * c.lambda2() * N.dot(Ad);
}

/// (1/lambda1)|lambda1 N + lambda2 (Ad - (d.Ad) d)|^2 + 2 alpha0 |A|^2, never above the dissipation.
inline double dissipation_lower_bound(const Vec3& d, const Vec3& N, const Mat3& A, const LeslieCoefficients& c) {
  detail::check_dissipation_args(d, N, A);
  const Vec3 Ad = A * d;
  const Vec3 F = c.lambda1() * N + c.lambda2() * (Ad - d.dot(Ad) * d);
  return F.squaredNorm() / c.lambda1() + 2 * c.alpha0() * A.squaredNorm();
}

}  // namespace els2
