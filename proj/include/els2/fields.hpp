#pragma once

// Constrained fields (unit director, tangent velocity), named harmonic maps,
// and the initial-data menu.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "els2/checkpoint.hpp"
#include "els2/error.hpp"
#include "els2/sphere.hpp"

namespace els2 {

/// R^3 field of unit vectors (after normalize_director).
struct DirectorField : VectorField {
  using VectorField::VectorField;
};

inline constexpr double kDegeneracyThreshold = 0.1;

inline TangentField project_tangent(const VectorField& v) {
  TangentField out(v.grid);
  for (std::size_t k = 0; k < v.size(); ++k) {
    const Vec3 n = v.grid->normal(k);
    out[k] = v[k] - n.dot(v[k]) * n;
  }
  return out;
}

inline DirectorField normalize_director(const VectorField& raw) {
  DirectorField d(raw.grid);
  for (std::size_t k = 0; k < raw.size(); ++k) {
    const double r = raw[k].norm();
    if (!(r >= kDegeneracyThreshold)) {
      throw Error(ErrorKind::degeneracy, "director magnitude " + std::to_string(r) + " below " +
                                             std::to_string(kDegeneracyThreshold) + " at node " + std::to_string(k));
    }
    d[k] = raw[k] / r;
  }
  return d;
}

inline double max_norm_deviation(const VectorField& v) {
  double m = 0.0;
  for (const auto& x : v.values) m = std::max(m, std::abs(x.norm() - 1.0));
  return m;
}

inline double l2_distance(const VectorField& a, const VectorField& b) {
  detail::require_same(*a.grid, *b.grid);
  return std::sqrt(integrate_nodes(*a.grid, [&](std::size_t k) { return (a[k] - b[k]).squaredNorm(); }));
}

// Named harmonic maps S^2 -> S^2.

inline DirectorField constant_director(const GridPtr& g, const Vec3& e) {
  if (!(e.norm() > 0.0) || !e.allFinite()) throw Error(ErrorKind::configuration, "constant director must be nonzero");
  return DirectorField(g, Vec3(e.normalized()));
}

inline DirectorField rotated_identity(const GridPtr& g, const Mat3& R) {
  DirectorField d(g);
  for (std::size_t k = 0; k < g->size(); ++k) d[k] = R * g->normal(k);
  return d;
}

inline DirectorField identity_map(const GridPtr& g) { return rotated_identity(g, Mat3::Identity()); }

inline DirectorField antipodal_map(const GridPtr& g) { return rotated_identity(g, -Mat3::Identity()); }

/// z -> z^m in stereographic coordinates (z-bar^|m| for m < 0); degree m, energy 4 pi |m|.
inline DirectorField degree_map(const GridPtr& g, int m) {
  if (m == 0) throw Error(ErrorKind::configuration, "degree map needs m != 0");
  const int am = std::abs(m);
  DirectorField d(g);
  for (int i = 0; i < g->n_lat(); ++i) {
    const double c = g->cos_theta(i), s = g->sin_theta(i);
    const double t = std::pow(s / (1.0 + c), am);  // tan(theta/2)^|m|
    const double cos_big = (1.0 - t * t) / (1.0 + t * t);
    const double sin_big = 2.0 * t / (1.0 + t * t);
    for (int j = 0; j < g->n_lon(); ++j) {
      const double ph = m * g->phi(j);
      d[g->node(i, j)] = Vec3(sin_big * std::cos(ph), sin_big * std::sin(ph), cos_big);
    }
  }
  return d;
}

// Initial data.

enum class InitialKind { constant_director, identity_map, perturbed_constant, rossby_flow, checkpoint };

inline InitialKind parse_initial_kind(const std::string& s) {
  if (s == "constant-director") return InitialKind::constant_director;
  if (s == "identity-map") return InitialKind::identity_map;
  if (s == "perturbed-constant") return InitialKind::perturbed_constant;
  if (s == "rossby-flow") return InitialKind::rossby_flow;
  if (s == "checkpoint") return InitialKind::checkpoint;
  throw Error(ErrorKind::configuration, "unknown initial kind '" + s + "'");
}

inline std::string to_string(InitialKind k) {
  switch (k) {
    case InitialKind::constant_director: return "constant-director";
    case InitialKind::identity_map: return "identity-map";
    case InitialKind::perturbed_constant: return "perturbed-constant";
    case InitialKind::rossby_flow: return "rossby-flow";
    case InitialKind::checkpoint: return "checkpoint";
  }
  return "unknown";
}

struct InitialData {
  InitialKind kind = InitialKind::constant_director;
  Vec3 director = Vec3::UnitZ();
  double amplitude = 0.05;  // max pointwise size of the perturbed-constant bump
  std::uint64_t seed = 1;
  // Flow: psi = flow_amplitude * Y_{flow_l}^{flow_m}; rossby-flow requires a nonzero amplitude.
  double flow_amplitude = 0.0;
  int flow_l = 2;
  int flow_m = 1;
  std::string path;  // checkpoint file
};

struct InitialFields {
  double t = 0.0;
  ScalarField psi;
  TangentField u;
  DirectorField d;
};

namespace detail {

/// Smooth random bump with harmonics of degree 1..2 and max |p| = 1.
inline VectorField random_bump(const GridPtr& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  VectorField p(g);
  for (int c = 0; c < 3; ++c) {
    SpectralCoeffs a(g->lmax());
    for (int l = 1; l <= 2; ++l)
      for (int m = -l; m <= l; ++m) a(l, m) = nd(rng);
    const auto f = sh_synthesis(g, a);
    for (std::size_t k = 0; k < g->size(); ++k) p[k][c] = f[k];
  }
  double mx = 0.0;
  for (const auto& v : p.values) mx = std::max(mx, v.norm());
  for (auto& v : p.values) v /= mx;
  return p;
}

}  // namespace detail

inline InitialFields make_initial(const InitialData& init, const GridPtr& g) {
  InitialFields out;
  out.psi = ScalarField(g);

  if (init.kind == InitialKind::checkpoint) {
    if (init.path.empty()) throw Error(ErrorKind::configuration, "initial.kind = checkpoint needs initial.path");
    auto cp = read_checkpoint(init.path, g);
    out.t = cp.t;
    out.psi = std::move(cp.psi);
    out.d = normalize_director(cp.d);
    out.u = rot(out.psi);
    return out;
  }

  switch (init.kind) {
    case InitialKind::constant_director:
    case InitialKind::rossby_flow: out.d = constant_director(g, init.director); break;
    case InitialKind::identity_map: out.d = identity_map(g); break;
    case InitialKind::perturbed_constant: {
      if (!(init.amplitude >= 0.0 && init.amplitude < 1.0 - kDegeneracyThreshold)) {
        throw Error(ErrorKind::configuration, "initial.amplitude must lie in [0, 0.9)");
      }
      const Vec3 e = constant_director(g, init.director)[0];
      const auto p = detail::random_bump(g, init.seed);
      VectorField raw(g);
      for (std::size_t k = 0; k < g->size(); ++k) raw[k] = e + init.amplitude * p[k];
      out.d = normalize_director(raw);
      break;
    }
    case InitialKind::checkpoint: break;
  }

  if (init.kind == InitialKind::rossby_flow && init.flow_amplitude == 0.0) {
    throw Error(ErrorKind::configuration, "rossby-flow needs a nonzero initial.flow_amplitude");
  }
  if (init.flow_amplitude != 0.0) {
    if (init.flow_l < 1 || init.flow_l > g->lmax() || std::abs(init.flow_m) > init.flow_l) {
      throw Error(ErrorKind::configuration, "flow mode (l=" + std::to_string(init.flow_l) +
                                                ", m=" + std::to_string(init.flow_m) + ") not resolved by the grid");
    }
    const auto y = sample_sh(g, init.flow_l, init.flow_m);
    for (std::size_t k = 0; k < g->size(); ++k) out.psi[k] = init.flow_amplitude * y[k];
  }
  out.u = rot(out.psi);
  return out;
}

}  // namespace els2
