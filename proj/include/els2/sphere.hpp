#pragma once

// Discretization of the unit sphere: Gauss-Legendre colatitudes times uniform
// longitudes, real orthonormal spherical harmonics, and the extrinsic surface
// calculus (gradient, divergence, rot, curl_s, Laplace-Beltrami) built on them.
//
// Vector fields are stored with Cartesian R^3 components at each node. The
// tangential operators work on the projection onto the tangent plane.

#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "els2/error.hpp"

namespace els2 {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

class SphereGrid;
using GridPtr = std::shared_ptr<const SphereGrid>;

/// Immutable quadrature grid plus the Legendre and Fourier tables of the
/// spectral transform. Nodes are stored latitude-major (north to south), each
/// ring ordered by increasing longitude.
class SphereGrid {
 public:
  static GridPtr build(int lmax);

  int lmax() const { return lmax_; }
  int n_lat() const { return n_lat_; }
  int n_lon() const { return n_lon_; }
  std::size_t size() const { return static_cast<std::size_t>(n_lat_) * n_lon_; }
  /// Number of real spherical-harmonic coefficients, (lmax+1)^2.
  int n_coeffs() const { return (lmax_ + 1) * (lmax_ + 1); }

  std::size_t node(int ring, int j) const { return static_cast<std::size_t>(ring) * n_lon_ + j; }
  const Vec3& normal(std::size_t k) const { return normals_[k]; }
  const Vec3& e_theta(std::size_t k) const { return e_theta_[k]; }
  const Vec3& e_phi(std::size_t k) const { return e_phi_[k]; }
  double weight(std::size_t k) const { return ring_weight_[k / n_lon_]; }
  double ring_weight(int ring) const { return ring_weight_[ring]; }
  double cos_theta(int ring) const { return cos_theta_[ring]; }
  double sin_theta(int ring) const { return sin_theta_[ring]; }
  double phi(int j) const { return 2.0 * std::numbers::pi * j / n_lon_; }

  /// Normalized associated Legendre value (Condon-Shortley phase) at a ring, m >= 0.
  double plm(int ring, int l, int m) const { return plm_[ring * n_tri_ + tri(l, m)]; }
  /// d/dtheta of plm.
  double dplm(int ring, int l, int m) const { return dplm_[ring * n_tri_ + tri(l, m)]; }
  double cos_m(int m, int j) const { return cos_tab_[m * n_lon_ + j]; }
  double sin_m(int m, int j) const { return sin_tab_[m * n_lon_ + j]; }

  /// Spacing used by the CFL heuristic: longitude step at the equator.
  double equator_spacing() const { return 2.0 * std::numbers::pi / n_lon_; }

  bool same_as(const SphereGrid& other) const { return lmax_ == other.lmax_; }

  static int tri(int l, int m) { return l * (l + 1) / 2 + m; }

 private:
  explicit SphereGrid(int lmax);

  int lmax_;
  int n_lat_;
  int n_lon_;
  int n_tri_;
  std::vector<double> cos_theta_, sin_theta_, ring_weight_;
  std::vector<Vec3> normals_, e_theta_, e_phi_;
  std::vector<double> plm_, dplm_;
  std::vector<double> cos_tab_, sin_tab_;
};

/// Real spherical-harmonic coefficients indexed by (l, m), -l <= m <= l.
/// m > 0 pairs with cos(m phi), m < 0 with sin(|m| phi).
struct SpectralCoeffs {
  int lmax = 0;
  std::vector<double> a;

  SpectralCoeffs() = default;
  explicit SpectralCoeffs(int l_max) : lmax(l_max), a(static_cast<std::size_t>((l_max + 1) * (l_max + 1)), 0.0) {}

  static int index(int l, int m) { return l * l + l + m; }
  double& operator()(int l, int m) { return a[index(l, m)]; }
  double operator()(int l, int m) const { return a[index(l, m)]; }
};

namespace detail {

// Eigen's default constructors leave storage uninitialized.
template <typename T>
T zero_value() {
  if constexpr (std::is_arithmetic_v<T>) {
    return T{0};
  } else {
    return T::Zero();
  }
}

}  // namespace detail

template <typename T>
struct NodalField {
  GridPtr grid;
  std::vector<T> values;

  NodalField() = default;
  explicit NodalField(GridPtr g, T fill = detail::zero_value<T>()) : grid(std::move(g)), values(grid->size(), fill) {}
  NodalField(GridPtr g, std::vector<T> v) : grid(std::move(g)), values(std::move(v)) {
    if (values.size() != grid->size()) {
      throw Error(ErrorKind::usage, "field length " + std::to_string(values.size()) +
                                        " does not match grid size " + std::to_string(grid->size()));
    }
  }

  std::size_t size() const { return values.size(); }
  T& operator[](std::size_t k) { return values[k]; }
  const T& operator[](std::size_t k) const { return values[k]; }
};

using ScalarField = NodalField<double>;
/// Arbitrary R^3 value per node (director candidates, forces before projection).
using VectorField = NodalField<Vec3>;
using TensorField = NodalField<Mat3>;

/// R^3 field whose values lie in the tangent plane of the node.
struct TangentField : VectorField {
  using VectorField::VectorField;
};

namespace detail {

inline void require_same(const SphereGrid& a, const SphereGrid& b) {
  if (!a.same_as(b)) {
    throw Error(ErrorKind::usage, "grid mismatch: Lmax " + std::to_string(a.lmax()) + " vs " +
                                      std::to_string(b.lmax()));
  }
}

/// Gauss-Legendre nodes (descending) and weights on [-1, 1].
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    double p0 = 1.0, p1 = z;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (z * p1 - p0) / (z * z - 1.0);
    x[i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

/// Fully normalized associated Legendre values for one colatitude, m >= 0,
/// including the Condon-Shortley phase, stored at SphereGrid::tri(l, m).
inline std::vector<double> normalized_legendre(int lmax, double x, double s) {
  std::vector<double> p(static_cast<std::size_t>((lmax + 1) * (lmax + 2) / 2), 0.0);
  double pmm = 1.0 / std::sqrt(4.0 * std::numbers::pi);
  for (int m = 0; m <= lmax; ++m) {
    if (m > 0) pmm *= -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s;
    p[SphereGrid::tri(m, m)] = pmm;
    if (m + 1 <= lmax) p[SphereGrid::tri(m + 1, m)] = std::sqrt(2.0 * m + 3.0) * x * pmm;
    for (int l = m + 2; l <= lmax; ++l) {
      const double a = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - static_cast<double>(m) * m));
      const double b = std::sqrt(((l - 1.0) * (l - 1.0) - static_cast<double>(m) * m) /
                                 (4.0 * (l - 1.0) * (l - 1.0) - 1.0));
      p[SphereGrid::tri(l, m)] = a * (x * p[SphereGrid::tri(l - 1, m)] - b * p[SphereGrid::tri(l - 2, m)]);
    }
  }
  return p;
}

}  // namespace detail

inline SphereGrid::SphereGrid(int lmax)
    : lmax_(lmax), n_lat_(lmax + 1), n_lon_(2 * lmax + 2), n_tri_((lmax + 1) * (lmax + 2) / 2) {
  std::vector<double> x, w;
  detail::gauss_legendre(n_lat_, x, w);
  const double dphi = 2.0 * std::numbers::pi / n_lon_;
  cos_theta_ = x;
  sin_theta_.resize(n_lat_);
  ring_weight_.resize(n_lat_);
  for (int i = 0; i < n_lat_; ++i) {
    sin_theta_[i] = std::sqrt((1.0 - x[i]) * (1.0 + x[i]));
    ring_weight_[i] = w[i] * dphi;
  }

  normals_.resize(size());
  e_theta_.resize(size());
  e_phi_.resize(size());
  for (int i = 0; i < n_lat_; ++i) {
    for (int j = 0; j < n_lon_; ++j) {
      const double ph = phi(j);
      const double c = cos_theta_[i], s = sin_theta_[i];
      const std::size_t k = node(i, j);
      normals_[k] = Vec3(s * std::cos(ph), s * std::sin(ph), c);
      e_theta_[k] = Vec3(c * std::cos(ph), c * std::sin(ph), -s);
      e_phi_[k] = Vec3(-std::sin(ph), std::cos(ph), 0.0);
    }
  }

  plm_.resize(static_cast<std::size_t>(n_lat_) * n_tri_);
  dplm_.resize(plm_.size());
  for (int i = 0; i < n_lat_; ++i) {
    // One extra degree so that P_l^{m+1} is available for the derivative.
    const auto p = detail::normalized_legendre(lmax_ + 1, cos_theta_[i], sin_theta_[i]);
    auto at = [&](int l, int m) -> double {
      if (m > l) return 0.0;
      if (m < 0) return ((-m) % 2 == 0 ? 1.0 : -1.0) * p[tri(l, -m)];
      return p[tri(l, m)];
    };
    for (int l = 0; l <= lmax_; ++l) {
      for (int m = 0; m <= l; ++m) {
        plm_[i * n_tri_ + tri(l, m)] = at(l, m);
        const double up = std::sqrt(static_cast<double>(l - m) * (l + m + 1));
        const double dn = std::sqrt(static_cast<double>(l + m) * (l - m + 1));
        dplm_[i * n_tri_ + tri(l, m)] = 0.5 * (up * at(l, m + 1) - dn * at(l, m - 1));
      }
    }
  }

  cos_tab_.resize(static_cast<std::size_t>(lmax_ + 1) * n_lon_);
  sin_tab_.resize(cos_tab_.size());
  for (int m = 0; m <= lmax_; ++m) {
    for (int j = 0; j < n_lon_; ++j) {
      cos_tab_[m * n_lon_ + j] = std::cos(m * phi(j));
      sin_tab_[m * n_lon_ + j] = std::sin(m * phi(j));
    }
  }
}

inline GridPtr SphereGrid::build(int lmax) {
  if (lmax < 4) {
    throw Error(ErrorKind::configuration, "Lmax must be >= 4, got " + std::to_string(lmax));
  }
  return GridPtr(new SphereGrid(lmax));
}

inline GridPtr build_grid(int lmax) { return SphereGrid::build(lmax); }

/// Real orthonormal spherical harmonic evaluated pointwise (same convention
/// as the transforms).
inline double real_sh(int l, int m, double theta, double phi) {
  const auto p = detail::normalized_legendre(l, std::cos(theta), std::sin(theta));
  const int am = m < 0 ? -m : m;
  const double plm = p[SphereGrid::tri(l, am)];
  if (m == 0) return plm;
  if (m > 0) return std::numbers::sqrt2 * plm * std::cos(am * phi);
  return std::numbers::sqrt2 * plm * std::sin(am * phi);
}

/// Samples Y_l^m on the grid nodes.
inline ScalarField sample_sh(const GridPtr& grid, int l, int m) {
  ScalarField f(grid);
  for (int i = 0; i < grid->n_lat(); ++i) {
    const double th = std::acos(grid->cos_theta(i));
    for (int j = 0; j < grid->n_lon(); ++j) f[grid->node(i, j)] = real_sh(l, m, th, grid->phi(j));
  }
  return f;
}

namespace detail {

/// Per-ring cos/sin sums of a nodal scalar, m = 0..lmax.
inline void ring_fourier(const SphereGrid& g, const double* ring, std::vector<double>& c, std::vector<double>& s) {
  const int n = g.n_lon();
  c.assign(g.lmax() + 1, 0.0);
  s.assign(g.lmax() + 1, 0.0);
  for (int m = 0; m <= g.lmax(); ++m) {
    double cc = 0.0, ss = 0.0;
    for (int j = 0; j < n; ++j) {
      cc += ring[j] * g.cos_m(m, j);
      ss += ring[j] * g.sin_m(m, j);
    }
    c[m] = cc;
    s[m] = ss;
  }
}

inline void ring_synth(const SphereGrid& g, const std::vector<double>& c, const std::vector<double>& s, double* ring) {
  const int n = g.n_lon();
  for (int j = 0; j < n; ++j) {
    double v = 0.0;
    for (int m = 0; m <= g.lmax(); ++m) v += c[m] * g.cos_m(m, j) + s[m] * g.sin_m(m, j);
    ring[j] = v;
  }
}

enum class Synth { value, d_theta, d_phi_over_sin };

/// Synthesis of f, df/dtheta or (1/sin theta) df/dphi from coefficients.
inline std::vector<double> synthesize(const SphereGrid& g, const SpectralCoeffs& a, Synth what) {
  const int L = std::min(g.lmax(), a.lmax);
  std::vector<double> out(g.size());
  std::vector<double> c(g.lmax() + 1), s(g.lmax() + 1);
  for (int i = 0; i < g.n_lat(); ++i) {
    std::fill(c.begin(), c.end(), 0.0);
    std::fill(s.begin(), s.end(), 0.0);
    for (int m = 0; m <= L; ++m) {
      const double fac = m == 0 ? 1.0 : std::numbers::sqrt2;
      double cm = 0.0, sm = 0.0;
      for (int l = m; l <= L; ++l) {
        const double p = what == Synth::d_theta ? g.dplm(i, l, m) : g.plm(i, l, m);
        cm += a(l, m) * p;
        if (m > 0) sm += a(l, -m) * p;
      }
      cm *= fac;
      sm *= fac;
      if (what == Synth::d_phi_over_sin) {
        const double k = m / g.sin_theta(i);
        c[m] = k * sm;
        s[m] = -k * cm;
      } else {
        c[m] = cm;
        s[m] = sm;
      }
    }
    ring_synth(g, c, s, out.data() + g.node(i, 0));
  }
  return out;
}

/// Coefficients of the tangential divergence of the field with components
/// (v_theta, v_phi): (div v)_lm = -sum_k w_k v(x_k) . grad Y_lm(x_k).
inline SpectralCoeffs divergence_coeffs(const SphereGrid& g, const std::vector<double>& vt,
                                        const std::vector<double>& vp) {
  SpectralCoeffs out(g.lmax());
  std::vector<double> ct, st, cp, sp;
  for (int i = 0; i < g.n_lat(); ++i) {
    ring_fourier(g, vt.data() + g.node(i, 0), ct, st);
    ring_fourier(g, vp.data() + g.node(i, 0), cp, sp);
    const double w = g.ring_weight(i);
    const double inv_s = 1.0 / g.sin_theta(i);
    for (int m = 0; m <= g.lmax(); ++m) {
      for (int l = m; l <= g.lmax(); ++l) {
        const double p = g.plm(i, l, m), dp = g.dplm(i, l, m);
        if (m == 0) {
          out(l, 0) -= w * dp * ct[0];
        } else {
          const double f = w * std::numbers::sqrt2;
          out(l, m) -= f * (dp * ct[m] - m * inv_s * p * sp[m]);
          out(l, -m) -= f * (dp * st[m] + m * inv_s * p * cp[m]);
        }
      }
    }
  }
  return out;
}

}  // namespace detail

/// Quadrature projection onto the resolved spherical harmonics.
inline SpectralCoeffs sh_analysis(const ScalarField& f) {
  const SphereGrid& g = *f.grid;
  SpectralCoeffs out(g.lmax());
  std::vector<double> c, s;
  for (int i = 0; i < g.n_lat(); ++i) {
    detail::ring_fourier(g, f.values.data() + g.node(i, 0), c, s);
    const double w = g.ring_weight(i);
    for (int m = 0; m <= g.lmax(); ++m) {
      for (int l = m; l <= g.lmax(); ++l) {
        const double p = g.plm(i, l, m);
        if (m == 0) {
          out(l, 0) += w * p * c[0];
        } else {
          out(l, m) += w * std::numbers::sqrt2 * p * c[m];
          out(l, -m) += w * std::numbers::sqrt2 * p * s[m];
        }
      }
    }
  }
  return out;
}

inline ScalarField sh_synthesis(const GridPtr& grid, const SpectralCoeffs& a) {
  if (a.lmax > grid->lmax()) {
    throw Error(ErrorKind::usage, "coefficients of degree " + std::to_string(a.lmax) +
                                      " exceed grid Lmax " + std::to_string(grid->lmax()));
  }
  return ScalarField(grid, detail::synthesize(*grid, a, detail::Synth::value));
}

/// Zeroes every coefficient with l > lcut.
inline void truncate(SpectralCoeffs& a, int lcut) {
  for (int l = lcut + 1; l <= a.lmax; ++l)
    for (int m = -l; m <= l; ++m) a(l, m) = 0.0;
}

inline void apply_laplacian(SpectralCoeffs& a) {
  for (int l = 0; l <= a.lmax; ++l)
    for (int m = -l; m <= l; ++m) a(l, m) *= -static_cast<double>(l) * (l + 1);
}

/// Inverse Laplacian with the l = 0 mode set to zero (zero-mean gauge).
inline void apply_inverse_laplacian(SpectralCoeffs& a) {
  a(0, 0) = 0.0;
  for (int l = 1; l <= a.lmax; ++l)
    for (int m = -l; m <= l; ++m) a(l, m) /= -static_cast<double>(l) * (l + 1);
}

inline ScalarField laplacian(const ScalarField& f) {
  auto a = sh_analysis(f);
  apply_laplacian(a);
  return sh_synthesis(f.grid, a);
}

inline TangentField gradient_from_coeffs(const GridPtr& grid, const SpectralCoeffs& a) {
  const auto ft = detail::synthesize(*grid, a, detail::Synth::d_theta);
  const auto fp = detail::synthesize(*grid, a, detail::Synth::d_phi_over_sin);
  TangentField out(grid);
  for (std::size_t k = 0; k < grid->size(); ++k) out[k] = ft[k] * grid->e_theta(k) + fp[k] * grid->e_phi(k);
  return out;
}

inline TangentField gradient(const ScalarField& f) { return gradient_from_coeffs(f.grid, sh_analysis(f)); }

/// rot psi = n x grad psi, built directly from stream-function coefficients.
inline TangentField rot_from_coeffs(const GridPtr& grid, const SpectralCoeffs& a) {
  const auto ft = detail::synthesize(*grid, a, detail::Synth::d_theta);
  const auto fp = detail::synthesize(*grid, a, detail::Synth::d_phi_over_sin);
  TangentField out(grid);
  for (std::size_t k = 0; k < grid->size(); ++k) out[k] = -fp[k] * grid->e_theta(k) + ft[k] * grid->e_phi(k);
  return out;
}

inline TangentField rot(const ScalarField& psi) { return rot_from_coeffs(psi.grid, sh_analysis(psi)); }

/// Spectral coefficients of the tangential divergence of v (normal part ignored).
inline SpectralCoeffs divergence_coeffs(const VectorField& v) {
  const SphereGrid& g = *v.grid;
  std::vector<double> vt(g.size()), vp(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    vt[k] = v[k].dot(g.e_theta(k));
    vp[k] = v[k].dot(g.e_phi(k));
  }
  return detail::divergence_coeffs(g, vt, vp);
}

inline ScalarField divergence(const VectorField& v) { return sh_synthesis(v.grid, divergence_coeffs(v)); }

/// Spectral coefficients of curl_s v = div(v x n).
inline SpectralCoeffs curl_coeffs(const VectorField& v) {
  const SphereGrid& g = *v.grid;
  std::vector<double> vt(g.size()), vp(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    vt[k] = v[k].dot(g.e_phi(k));
    vp[k] = -v[k].dot(g.e_theta(k));
  }
  return detail::divergence_coeffs(g, vt, vp);
}

inline ScalarField curl_s(const VectorField& v) { return sh_synthesis(v.grid, curl_coeffs(v)); }

inline double integrate(const ScalarField& f) {
  const SphereGrid& g = *f.grid;
  double total = 0.0;
  for (int i = 0; i < g.n_lat(); ++i) {
    double ring = 0.0;
    for (int j = 0; j < g.n_lon(); ++j) ring += f[g.node(i, j)];
    total += g.ring_weight(i) * ring;
  }
  return total;
}

template <typename F>
double integrate_nodes(const SphereGrid& g, F&& density) {
  double total = 0.0;
  for (int i = 0; i < g.n_lat(); ++i) {
    double ring = 0.0;
    for (int j = 0; j < g.n_lon(); ++j) ring += density(g.node(i, j));
    total += g.ring_weight(i) * ring;
  }
  return total;
}

inline Vec3 integrate(const VectorField& v) {
  Vec3 total = Vec3::Zero();
  for (int c = 0; c < 3; ++c) total[c] = integrate_nodes(*v.grid, [&](std::size_t k) { return v[k][c]; });
  return total;
}

inline ScalarField component(const VectorField& v, int c) {
  ScalarField f(v.grid);
  for (std::size_t k = 0; k < v.size(); ++k) f[k] = v[k][c];
  return f;
}

/// G_ij = i-th component of the surface gradient of the j-th Cartesian
/// component of v. Column j is grad v_j, so every column is tangent.
inline TensorField surface_gradient(const VectorField& v) {
  TensorField g(v.grid, Mat3::Zero());
  for (int c = 0; c < 3; ++c) {
    const auto grad = gradient(component(v, c));
    for (std::size_t k = 0; k < v.size(); ++k) g[k].col(c) = grad[k];
  }
  return g;
}

/// Velocity Jacobian J_ij = d_j u_i (row i is grad u_i), the transpose of surface_gradient.
inline TensorField surface_velocity_gradient(const TangentField& u) {
  auto g = surface_gradient(u);
  for (auto& m : g.values) m.transposeInPlace();
  return g;
}

inline double l2_norm(const ScalarField& f) {
  return std::sqrt(integrate_nodes(*f.grid, [&](std::size_t k) { return f[k] * f[k]; }));
}

inline double l2_norm(const VectorField& v) {
  return std::sqrt(integrate_nodes(*v.grid, [&](std::size_t k) { return v[k].squaredNorm(); }));
}

inline Mat3 tangent_projector(const Vec3& n) { return Mat3::Identity() - n * n.transpose(); }

}  // namespace els2
