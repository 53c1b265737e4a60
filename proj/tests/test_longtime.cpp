#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "els2/run.hpp"

namespace {

using namespace els2;
constexpr double kPi = std::numbers::pi;

const Viscosities kIsotropic{0.0, -1.0, 1.0, 2.0, 0.0, 0.0};
// Large lambda1 damps rigid-rotation modes quickly enough to settle in a desk-scale run.
const Viscosities kFastSettling{0.0, -4.0, 4.0, 2.0, 0.0, 0.0};

TEST(Smallness, Examples) {
  EnergyReport zero;
  auto s = smallness_check(zero, 1.0);
  EXPECT_TRUE(s.ok);
  EXPECT_DOUBLE_EQ(s.margin, 1.0);
  EXPECT_TRUE(s.below_8pi);

  auto g = build_grid(31);
  const State id{0.0, ScalarField(g), identity_map(g)};
  s = smallness_check(energy_report(id, LeslieCoefficients(kIsotropic), 0.5), 1.0);
  EXPECT_TRUE(s.ok);
  EXPECT_NEAR(s.margin, 1.0, 1e-9);

  EnergyReport r;
  r.KE = 1.0;
  r.E_partial = 2.0;
  r.E_antipartial = 2.0;
  s = smallness_check(r, 1.0);
  EXPECT_FALSE(s.ok);
  EXPECT_DOUBLE_EQ(s.S, 5.0);
  EXPECT_DOUBLE_EQ(s.margin, -4.0);

  r.E_partial = 20.0;
  r.E_antipartial = 20.0;
  EXPECT_FALSE(smallness_check(r, 1.0).below_8pi);
}

TEST(FitDecay, ExactExponential) {
  std::vector<double> t, y;
  for (int i = 0; i < 20; ++i) {
    t.push_back(0.5 * i);
    y.push_back(3.0 * std::exp(-0.7 * t.back()));
  }
  const auto f = fit_decay(t, y);
  EXPECT_NEAR(f.C1, 3.0, 1e-10);
  EXPECT_NEAR(f.C2, 0.7, 1e-10);
  EXPECT_LT(f.rms_log_residual, 1e-12);
  EXPECT_EQ(f.samples, 20u);
  EXPECT_DOUBLE_EQ(f.t_a, 0.0);
  EXPECT_DOUBLE_EQ(f.t_b, 9.5);
}

TEST(FitDecay, ConstantSeries) {
  std::vector<double> t, y(15, 2.0);
  for (int i = 0; i < 15; ++i) t.push_back(i);
  const auto f = fit_decay(t, y);
  EXPECT_NEAR(f.C2, 0.0, 1e-14);
  EXPECT_NEAR(f.C1, 2.0, 1e-14);
}

TEST(FitDecay, WindowSelectsSamples) {
  std::vector<double> t, y;
  for (int i = 0; i < 40; ++i) {
    t.push_back(i);
    // Transient before t = 10, clean exponential after.
    y.push_back(i < 10 ? 5.0 : std::exp(-0.2 * i));
  }
  const auto f = fit_decay(t, y, 10.0, 39.0);
  EXPECT_EQ(f.samples, 30u);
  EXPECT_NEAR(f.C2, 0.2, 1e-12);
}

TEST(FitDecay, Errors) {
  std::vector<double> t{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<double> y(11, 1.0);
  y[4] = 0.0;
  try {
    fit_decay(t, y);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::domain);
  }
  y[4] = 1.0;
  try {
    fit_decay(t, y, 0.0, 5.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::insufficient_data);
  }
}

TEST(Quantization, Examples) {
  auto q = quantization_check(std::vector<double>(8, 0.01), 0.0);
  EXPECT_EQ(q.M0, 0);
  EXPECT_NEAR(q.residual, 0.01, 1e-15);
  q = quantization_check(std::vector<double>(8, 4 * kPi + 0.02), 0.0);
  EXPECT_EQ(q.M0, 1);
  EXPECT_NEAR(q.residual, 0.02, 1e-14);
  q = quantization_check(std::vector<double>(8, 12 * kPi), 4 * kPi);
  EXPECT_EQ(q.M0, 2);
}

TEST(Quantization, UnsettledTail) {
  std::vector<double> e;
  for (int i = 0; i < 40; ++i) e.push_back(10.0 - 0.2 * i);
  try {
    quantization_check(e, 0.0);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::not_converged);
  }
}

TEST(Topping, GuardedCases) {
  auto g = build_grid(21);
  EXPECT_FALSE(topping_ratio(identity_map(g), 1.0).has_value());
  EXPECT_FALSE(topping_ratio(constant_director(g, Vec3::UnitZ()), 1.0).has_value());
}

TEST(Topping, StableUnderRefinement) {
  auto ratio = [](int lmax) {
    auto g = build_grid(lmax);
    VectorField raw(g);
    for (std::size_t k = 0; k < g->size(); ++k) raw[k] = g->normal(k) + 0.05 * Vec3::UnitX();
    return topping_ratio(normalize_director(raw), 1.0);
  };
  const auto coarse = ratio(21), fine = ratio(42);
  ASSERT_TRUE(coarse.has_value());
  ASSERT_TRUE(fine.has_value());
  EXPECT_GT(*coarse, 0.0);
  EXPECT_TRUE(std::isfinite(*coarse));
  EXPECT_LT(std::abs(*fine - *coarse), 0.2 * *coarse);
}

RunParams detection_params(double t_end, double tol) {
  RunParams p;
  p.t_end = t_end;
  p.out_every = 1;
  p.conv_tol = tol;
  p.control = {1e-2, 0.5};
  return p;
}

TEST(Convergence, NeedsFiftyReports) {
  auto g = build_grid(12);
  const auto o = integrate({0.0, ScalarField(g), constant_director(g, Vec3::UnitZ())},
                           LeslieCoefficients(kIsotropic), detection_params(0.3, 1e-6));
  EXPECT_EQ(o.trajectory.size(), 31u);
  EXPECT_FALSE(convergence_detect(o.trajectory, 1e-6, 0.3).has_value());
  EXPECT_FALSE(o.convergence.has_value());
}

TEST(Convergence, ConstantDirectorFiresAtFirstWindow) {
  auto g = build_grid(12);
  const auto d0 = constant_director(g, Vec3(1, 1, 0));
  const auto o = integrate({0.0, ScalarField(g), d0}, LeslieCoefficients(kIsotropic), detection_params(5.0, 1e-6));
  ASSERT_TRUE(o.convergence.has_value());
  EXPECT_EQ(o.reason, StopReason::converged);
  const auto& c = *o.convergence;
  EXPECT_EQ(c.index, kMinConvergenceReports - 1);
  EXPECT_LT(l2_distance(c.d_inf, d0), 1e-12);
  EXPECT_EQ(c.M0, 0);
  EXPECT_LT(c.quant_residual, 1e-12);
  ASSERT_TRUE(c.T0.has_value());
  EXPECT_EQ(*c.T0, 0.0);
}

TEST(Convergence, IdentityMapFires) {
  auto g = build_grid(21);
  const auto o = integrate({0.0, ScalarField(g), identity_map(g)}, LeslieCoefficients(kIsotropic),
                           detection_params(5.0, 1e-6));
  ASSERT_TRUE(o.convergence.has_value());
  const auto& c = *o.convergence;
  EXPECT_LT(l2_distance(c.d_inf, identity_map(g)), 1e-9);
  EXPECT_NEAR(dirichlet_energy(c.d_inf), 4 * kPi, 1e-9);
  EXPECT_EQ(degree(c.d_inf).value, 1);
  EXPECT_EQ(c.M0, 0);
}

TEST(Convergence, SmallDataDecaysExponentially) {
  auto g = build_grid(15);
  InitialData init;
  init.kind = InitialKind::perturbed_constant;
  init.amplitude = 0.05;
  init.flow_amplitude = 0.05;
  init.seed = 7;
  const auto f = make_initial(init, g);
  RunParams p;
  p.t_end = 40.0;
  p.out_every = 10;
  p.conv_tol = 1e-6;
  p.eps0 = 0.3;
  const auto o = integrate({0.0, f.psi, f.d}, LeslieCoefficients(kFastSettling), p);
  ASSERT_TRUE(o.convergence.has_value()) << "stopped at t=" << o.state.t;
  const auto& c = *o.convergence;
  ASSERT_TRUE(c.l2_fit.has_value());
  ASSERT_TRUE(c.h1_fit.has_value());
  EXPECT_GT(c.l2_fit->C2, 0.0);
  EXPECT_GT(c.h1_fit->C2, 0.0);
  EXPECT_LT(c.l2_fit->rms_log_residual, 0.1);
  EXPECT_EQ(c.M0, 0);
  EXPECT_LT(c.quant_residual, 10 * p.conv_tol);
  EXPECT_EQ(degree(c.d_inf).value, degree(f.d).value);
  ASSERT_TRUE(c.T0.has_value());
  EXPECT_GT(c.eps0_margin, 0.0);

  // S(t) nonincreasing after T0, per-step slack 1e-8.
  double prev = std::numeric_limits<double>::infinity();
  for (const auto& smp : o.trajectory) {
    if (smp.report.t < *c.T0) continue;
    const double s = smallness_check(smp.report, p.eps0).S;
    EXPECT_LE(s, prev + 1e-8 * p.out_every) << "t=" << smp.report.t;
    prev = s;
  }
}

}  // namespace
