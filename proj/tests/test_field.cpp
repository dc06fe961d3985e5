#include <gtest/gtest.h>

#include <cmath>

#include "nsreg/analytic.hpp"
#include "nsreg/field.hpp"
#include "nsreg/quadrature.hpp"

using namespace nsreg;

namespace {

GridSpec small_grid() { return GridSpec{32, 16.0 * kPi, 2.0 / 3.0}; }

double max_diff_on_grid(const SpectralField& v, const VectorFn& f) {
  PhysicalVector p = to_physical(v);
  double m = 0.0;
  for_each_node(v.grid, [&](std::size_t idx, const Vec3& x) {
    Vec3 e = f(x);
    for (int c = 0; c < 3; ++c) m = std::max(m, std::abs(p.data[c][idx] - e[c]));
  });
  return m;
}

}  // namespace

TEST(GridSpec, RejectsBadResolution) {
  EXPECT_THROW((GridSpec{12, 1.0, 0.5}.validate()), Error);
  EXPECT_THROW((GridSpec{4, 1.0, 0.5}.validate()), Error);
  EXPECT_THROW((GridSpec{16, -1.0, 0.5}.validate()), Error);
  EXPECT_NO_THROW((GridSpec{16, 1.0, 0.5}.validate()));
}

TEST(Leray, GradientProjectsToZero) {
  auto g = small_grid();
  auto v = spectral_from(g, [](const Vec3& x) { return Vec3{std::cos(x.x), 0, 0}; });
  EXPECT_LT(max_abs_coef(leray_project(v)), 1e-15);
}

TEST(Leray, DivergenceFreeUnchanged) {
  auto g = small_grid();
  auto v = spectral_from(g, shear_mode_data());
  EXPECT_LT(max_abs_diff(leray_project(v), v), 1e-15);
}

TEST(Leray, SplitsGradientFromShear) {
  auto g = small_grid();
  auto v = spectral_from(g, [](const Vec3& x) { return Vec3{std::sin(x.x) + std::sin(x.y), 0, 0}; });
  EXPECT_LT(max_diff_on_grid(leray_project(v), shear_mode_data()), 1e-13);
}

TEST(Leray, IdempotentAndOrthogonal) {
  auto g = small_grid();
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    SpectralField raw = to_spectral(sample_vector(g, [seed](const Vec3& x) {
      double s = double(seed);
      return Vec3{std::sin(x.x + s) * std::cos(0.5 * x.z), std::cos(x.y * 0.25 + s), std::sin(x.x - x.y + s)};
    }));
    SpectralField p = leray_project(raw);
    SpectralField pp = leray_project(p);
    EXPECT_LE(max_abs_diff(pp, p), 1e-14 * max_abs_coef(p));
    SpectralField rest = add(raw, p, -1.0);
    double ip = inner_product(p, rest);
    EXPECT_LE(std::abs(ip), 1e-12 * inner_product(raw, raw));
    EXPECT_LE(divergence_residual(p), 1e-12);
  }
}

TEST(Leray, MeanModeKept) {
  auto g = small_grid();
  auto v = spectral_from(g, [](const Vec3& x) { return Vec3{0.3 + std::sin(x.x), -0.2, 0.1}; });
  Vec3 m = mean_vector(leray_project(v));
  EXPECT_NEAR(m.x, 0.3, 1e-15);
  EXPECT_NEAR(m.y, -0.2, 1e-15);
  EXPECT_NEAR(m.z, 0.1, 1e-15);
}

TEST(Transform, RoundTripBandLimited) {
  auto g = small_grid();
  auto f = [](const Vec3& x) { return Vec3{std::sin(x.y) * std::cos(0.5 * x.z), std::cos(0.25 * x.x), std::sin(x.x + x.y)}; };
  PhysicalVector p = sample_vector(g, f);
  PhysicalVector q = to_physical(to_spectral(p));
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < p.data[c].size(); ++i) ASSERT_NEAR(q.data[c][i], p.data[c][i], 1e-12);
}

TEST(Transform, RandomFieldIsHermitianAndSolenoidal) {
  auto g = small_grid();
  SpectralField v = random_solenoidal(g, 7);
  SpectralField w = to_spectral(to_physical(v));
  EXPECT_LT(max_abs_diff(v, w), 1e-13 * max_abs_coef(v));
  EXPECT_LT(divergence_residual(v), 1e-12);
}

TEST(Transform, OffGridEvaluationMatchesClosedForm) {
  auto g = small_grid();
  auto v = spectral_from(g, taylor_green_data());
  for (Vec3 x : {Vec3{0.1, 0.2, 0.3}, Vec3{-3.3, 1.7, 5.0}}) {
    Vec3 e = taylor_green_data()(x);
    Vec3 a = evaluate_at(v, x);
    EXPECT_NEAR(a.x, e.x, 1e-12);
    EXPECT_NEAR(a.y, e.y, 1e-12);
  }
}

TEST(SampleOnBall, ConstantGivesBallVolume) {
  auto one = [](const Vec3&) { return 1.0; };
  EXPECT_NEAR(sample_on_ball(one, {}, 1.0).integral(), 4.0 * kPi / 3.0, 1e-12);
  auto g = GridSpec{64, 4.0 * kPi, 2.0 / 3.0};
  ScalarField f = scalar_from(g, one);
  BallSamples s = sample_on_ball(f, {0.3, 0.0, 0.0}, 1.0);
  EXPECT_NEAR(s.integral(), 4.0 * kPi / 3.0, 1e-6);
  EXPECT_LT(s.quad.volume_error, 0.05);
}

TEST(SampleOnBall, ZeroFieldGivesZero) {
  auto g = small_grid();
  EXPECT_EQ(sample_on_ball(zero_scalar(g), {}, 1.0).integral(), 0.0);
}

TEST(SampleOnBall, RadialSquare) {
  // 4 pi / 5 from the radial integral of r^2 * 4 pi r^2
  const double oracle = 2.5132741228718345;
  Vec3 c{0.5, -0.25, 1.0};
  auto f = [c](const Vec3& x) { return dot(x - c, x - c); };
  EXPECT_NEAR(sample_on_ball(f, c, 1.0).integral(), oracle, 1e-12);
  // grid version: band-limited interpolation of a non-periodic function is only local
  auto g = GridSpec{64, 4.0 * kPi, 2.0 / 3.0};
  auto cf = [](const Vec3& x) { return dot(x, x) * std::exp(-0.05 * dot(x, x) * dot(x, x)); };
  ScalarField s = scalar_from(g, cf);
  double v = sample_on_ball(s, {}, 1.0, 4).integral();
  double ref = sample_on_ball(cf, {}, 1.0, SphericalRule{32, 32, 64, 1}).integral();
  EXPECT_NEAR(v, ref, 2e-2 * ref);
}

TEST(SampleOnBall, TooLargeThrows) {
  auto g = GridSpec{32, 2.0, 2.0 / 3.0};
  try {
    sample_on_ball(zero_scalar(g), {}, 1.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BallTooLarge);
  }
}

TEST(ScaleField, IdentityAndSelfSimilar) {
  VectorFn v = [](const Vec3& x) { return x / dot(x, x); };
  VectorFn v1 = scale_field(v, 1.0), v2 = scale_field(v, 2.0);
  for (Vec3 x : {Vec3{1, 2, 3}, Vec3{-0.5, 0.1, 0.2}}) {
    EXPECT_NEAR(norm(v1(x) - v(x)), 0.0, 1e-15);
    EXPECT_NEAR(norm(v2(x) - v(x)), 0.0, 1e-15);
  }
}

TEST(ScaleField, DirectEvaluation) {
  VectorFn v = [](const Vec3& x) { return Vec3{0, std::sin(x.x), 0}; };
  Vec3 y = scale_field(v, 2.0)({kPi / 4, 0, 0});
  EXPECT_NEAR(y.y, 2.0, 1e-15);
}

TEST(ScaleField, Composes) {
  VectorFn v = taylor_green_data();
  VectorFn a = scale_field(scale_field(v, 1.5), 0.7), b = scale_field(v, 1.5 * 0.7);
  for (Vec3 x : {Vec3{0.3, 0.4, 0.5}, Vec3{2, -1, 0}})
    EXPECT_NEAR(norm(a(x) - b(x)), 0.0, 1e-14);
  AnalyticFlow f = taylor_green_flow();
  AnalyticFlow g = scale_flow(f, 2.0);
  Vec3 x{0.2, 0.1, 0.0};
  EXPECT_NEAR(norm(g.velocity(x, 0.3) - 2.0 * f.velocity(2.0 * x, 1.2)), 0.0, 1e-15);
}

TEST(ScaleField, SampledRescaleAndDomainCheck) {
  auto g = small_grid();
  auto v = spectral_from(g, [](const Vec3& x) { return Vec3{0, std::sin(x.x), 0}; });
  PhysicalVector s = scale_samples(v, 0.5);
  for_each_node(g, [&](std::size_t idx, const Vec3& x) { ASSERT_NEAR(s.data[1][idx], 0.5 * std::sin(0.5 * x.x), 1e-12); });
  try {
    scale_samples(v, 2.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DomainExceeded);
  }
}

TEST(Quadrature, GaussLegendreExactness) {
  const GaussRule& r = gauss_legendre(8);
  double s = 0.0;
  for (int i = 0; i < 8; ++i) s += r.w[i] * std::pow(r.x[i], 14);
  EXPECT_NEAR(s, 2.0 / 15.0, 1e-15);
}

TEST(Quadrature, SimpsonWeights) {
  auto w = simpson_weights(5, 0.25);
  double s = 0.0;
  for (int i = 0; i < 5; ++i) s += w[i] * std::pow(0.25 * i, 3);
  EXPECT_NEAR(s, 0.25, 1e-15);
}
