#include <gtest/gtest.h>

#include <cmath>

#include "nsreg/analytic.hpp"
#include "nsreg/norms.hpp"

using namespace nsreg;

namespace {

// frozen closed forms
constexpr double kUnitBallL3 = 1.6119919540164696;     // (4 pi / 3)^(1/3)
constexpr double kInvRadiusShell = 2.057524940946948;   // (4 pi ln 2)^(1/3)
constexpr double kIndicatorShell = 1.54181483760815;    // ((4 pi / 3)(7/8))^(1/3)
constexpr double kUnitBallL2 = 2.046653415892977;       // (4 pi / 3)^(1/2)
constexpr double kWeakInvRadius = 1.610941796094476;    // ((4 pi / 3)(511/512))^(1/3)

const SphericalRule kFine{24, 24, 48, 2};

ScalarFn inv_radius() {
  return [](const Vec3& x) { return 1.0 / norm(x); };
}

ScalarFn ball_indicator(double r) {
  return [r](const Vec3& x) { return norm(x) < r ? 1.0 : 0.0; };
}

/// A non-homogeneous radial test field.
ScalarFn bumpy() {
  return [](const Vec3& x) {
    double r = norm(x);
    return std::exp(-r * r) / (r + 0.3) + 0.2 * std::exp(-std::pow(r - 3.0, 2));
  };
}

ScalarFn scale_radial(ScalarFn f, double lam) { return scale_scalar(std::move(f), lam, 1.0); }

}  // namespace

TEST(Lp, ConstantOnUnitBall) {
  auto f = magnitude_of(ScalarFn([](const Vec3&) { return 1.0; }));
  EXPECT_NEAR(lp_norm(*f, {{}, 0, 1}, 3.0).value, kUnitBallL3, 1e-12);
}

TEST(Lp, ZeroField) {
  auto f = magnitude_of(ScalarFn([](const Vec3&) { return 0.0; }));
  EXPECT_EQ(lp_norm(*f, {{}, 0, 1}, 3.0).value, 0.0);
  EXPECT_EQ(weak_lp_norm(*f, {{}, 0, 1}, 3.0).value, 0.0);
}

TEST(Lp, InverseRadiusOnAnnulus) {
  auto f = magnitude_of(inv_radius());
  EXPECT_NEAR(lp_norm(*f, {{}, 0.5, 1.0}, 3.0).value, kInvRadiusShell, 1e-10);
}

TEST(Lp, InfinityIsMaxOverNodes) {
  auto f = magnitude_of(ScalarFn([](const Vec3& x) { return 2.0 - x.x; }));
  auto r = lp_norm(*f, {{}, 0, 1}, kInf);
  EXPECT_GT(r.value, 2.99);
  EXPECT_LE(r.value, 3.0);
}

TEST(Lp, RejectsExponentBelowOne) { EXPECT_THROW(lp_norm(*magnitude_of(inv_radius()), {{}, 0.5, 1}, 0.5), Error); }

TEST(WeakLp, ConstantCase) {
  auto f = magnitude_of(ScalarFn([](const Vec3&) { return 2.5; }));
  double m = 4.0 * kPi / 3.0;
  EXPECT_NEAR(weak_lp_norm(*f, {{}, 0, 1}, 3.0).value, 2.5 * std::cbrt(m), 1e-12);
}

TEST(WeakLp, InverseRadiusDistributionFunction) {
  // the sample rearrangement converges to the distribution-function value as the radial layers thin
  double prev = kInf;
  for (int panels : {4, 16, 64}) {
    AnalyticMagnitude f(inv_radius(), SphericalRule{48, 8, 16, panels});
    double err = std::abs(weak_lp_norm(f, {{}, 0.125, 1.0}, 3.0).value - kWeakInvRadius);
    EXPECT_LT(err, 0.5 * prev);
    prev = err;
  }
  EXPECT_LT(prev, 1e-3);
}

TEST(WeakLp, BoundedByStrong) {
  for (auto fn : {inv_radius(), bumpy(), ball_indicator(0.7)}) {
    AnalyticMagnitude f(fn);
    for (double p : {1.0, 2.0, 3.0, 6.0})
      for (Region set : {Region{{}, 0.25, 1.0}, Region{{0.3, 0, 0}, 0, 1.5}})
        EXPECT_LE(weak_lp_norm(f, set, p).value, lp_norm(f, set, p).value * (1 + 1e-12));
  }
}

TEST(Uloc, ConstantField) {
  auto f = magnitude_of(ScalarFn([](const Vec3&) { return 1.0; }));
  UlocOptions o;
  o.extent = 1.0;
  o.refine_levels = 0;
  EXPECT_NEAR(uloc_norm(*f, 2.0, 1.0, o).value, kUnitBallL2, 1e-12);
}

TEST(Uloc, IndicatorPeaksAtOrigin) {
  AnalyticMagnitude f(ball_indicator(1.0), kFine);
  UlocOptions o;
  o.extent = 1.5;
  auto r = uloc_norm(f, 2.0, 1.0, o);
  EXPECT_NEAR(r.value, kUnitBallL2, 1e-10);
  EXPECT_LT(norm(r.argmax), 1e-12);
  // lens volume at distance 1: pi (4 - d)^... for unit balls: 5 pi / 12
  double lens = lp_norm(f, {{1, 0, 0}, 0, 1}, 2.0).value;
  EXPECT_NEAR(lens * lens, 5.0 * kPi / 12.0, 2e-2);
  EXPECT_LT(lens, r.value);
}

TEST(Uloc, GridMatchesConstantAndIsShiftInvariant) {
  GridSpec g{32, 8.0 * kPi, 2.0 / 3.0};
  GridMagnitude c(sample_scalar(g, [](const Vec3&) { return 1.0; }));
  EXPECT_NEAR(uloc_norm(c, 2.0, 1.0).value, kUnitBallL2, 1e-12);

  auto bump = [](const Vec3& x) { return std::exp(-dot(x, x)) * (1.0 + 0.3 * x.x); };
  const double h = g.spacing();
  GridMagnitude a(sample_scalar(g, bump));
  GridMagnitude b(sample_scalar(g, [&](const Vec3& x) { return bump(x - Vec3{3 * h, -2 * h, 5 * h}); }));
  double va = uloc_norm(a, 3.0, 1.5).value, vb = uloc_norm(b, 3.0, 1.5).value;
  EXPECT_NEAR(va, vb, 1e-12 * va);
}

TEST(Herz, InverseRadiusShellsAllEqual) {
  auto f = magnitude_of(inv_radius());
  auto r = herz_norm(*f, HerzParams::critical(3.0), {-3, 4});
  EXPECT_NEAR(r.value, kInvRadiusShell, 1e-3);
  ASSERT_EQ(r.breakdown.size(), 8u);
  for (const auto& e : r.breakdown) EXPECT_NEAR(e.value, kInvRadiusShell, 1e-10);
}

TEST(Herz, ZeroField) {
  auto f = magnitude_of(ScalarFn([](const Vec3&) { return 0.0; }));
  EXPECT_EQ(herz_norm(*f, HerzParams::critical(3.0), {-2, 2}).value, 0.0);
}

TEST(Herz, IndicatorMaxAtShellZero) {
  auto f = magnitude_of(ball_indicator(1.0));
  auto r = herz_norm(*f, {0.0, 3.0}, {-3, 3});
  EXPECT_NEAR(r.value, kIndicatorShell, 1e-12);
  double best_k = 0, best = -1;
  for (const auto& e : r.breakdown)
    if (e.value > best) { best = e.value; best_k = e.key; }
  EXPECT_EQ(best_k, 0.0);
}

TEST(Herz, CriticalPresetScaleInvariant) {
  for (double p : {2.0, 3.0, 4.0}) {
    AnnulusDecomposition dec{-10, 10};
    double base = herz_norm(AnalyticMagnitude(bumpy()), HerzParams::critical(p), dec).value;
    for (double lam : {0.5, 2.0, 4.0}) {
      double v = herz_norm(AnalyticMagnitude(scale_radial(bumpy(), lam)), HerzParams::critical(p), dec).value;
      EXPECT_NEAR(v, base, 1e-3 * base) << "p=" << p << " lam=" << lam;
    }
  }
}

TEST(Herz, GeneralScalingExponent) {
  AnnulusDecomposition dec{-10, 10};
  for (auto [s, p] : {std::pair{0.5, 2.0}, std::pair{0.0, 4.0}, std::pair{-0.5, 3.0}}) {
    double n1 = herz_norm(AnalyticMagnitude(bumpy()), {s, p}, dec).value;
    double n2 = herz_norm(AnalyticMagnitude(scale_radial(bumpy(), 2.0)), {s, p}, dec).value;
    double measured = std::log(n2 / n1) / std::log(2.0);
    double expected = 1.0 - 3.0 / p - s;
    EXPECT_NEAR(measured, expected, 0.01 * std::max(1.0, std::abs(expected)));
  }
}

TEST(Herz, SingleShellSupport) {
  auto f = magnitude_of(ScalarFn([](const Vec3& x) {
    double r = norm(x);
    return (r >= 2.0 && r < 4.0) ? std::sin(r) * std::sin(r) + 0.1 : 0.0;
  }), kFine);
  double s = 0.7, p = 2.5;
  auto h = herz_norm(*f, {s, p}, {-1, 4});
  double direct = std::pow(2.0, 2 * s) * lp_norm(*f, {{}, 2.0, 4.0}, p).value;
  EXPECT_NEAR(h.value, direct, 1e-13 * direct);
}

TEST(Herz, ShellUnresolvedOnCoarseGrid) {
  GridSpec g{16, 16.0 * kPi, 2.0 / 3.0};
  GridMagnitude f(sample_scalar(g, [](const Vec3&) { return 1.0; }));
  try {
    herz_norm(f, HerzParams::critical(3.0), {-1, 2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ShellUnresolved);
  }
  auto d = AnnulusDecomposition::defaults_for(g);
  EXPECT_GE(std::ldexp(1.0, d.k_min - 1), 2.0 * g.spacing());
  EXPECT_LE(std::ldexp(1.0, d.k_max), 0.5 * g.length);
  EXPECT_NO_THROW(herz_norm(f, HerzParams::critical(3.0), d));
}

TEST(Herz, BallFlavorReportsRatio) {
  AnnulusDecomposition dec{-2, 2};
  double ratio = herz_equivalence_ratio(AnalyticMagnitude(inv_radius()), 0.0, 3.0, dec);
  EXPECT_GT(ratio, 0.0);
  EXPECT_TRUE(std::isfinite(ratio));
}

TEST(DataQuantity, ConstantField) {
  const double c = 1.7;
  auto f = magnitude_of(ScalarFn([c](const Vec3&) { return c; }));
  UlocOptions o;
  o.extent = 0.5;
  o.refine_levels = 0;
  EXPECT_NEAR(data_quantity_nr(*f, 1.0, o), 4.0 * kPi / 3.0 * c * c, 1e-12);
  for (double r : {0.5, 2.0, 3.0}) EXPECT_NEAR(data_quantity_nr(*f, r, o), 4.0 * kPi / 3.0 * c * c * r * r, 1e-11);
  GridSpec g{32, 8.0 * kPi, 2.0 / 3.0};
  GridMagnitude gm(sample_scalar(g, [c](const Vec3&) { return c; }));
  EXPECT_NEAR(data_quantity_nr(gm, 2.0), 4.0 * kPi / 3.0 * c * c * 4.0, 1e-10);
  EXPECT_EQ(data_quantity_nr(*magnitude_of(ScalarFn([](const Vec3&) { return 0.0; })), 1.0, o), 0.0);
}

TEST(Sigma, Schedule) {
  EXPECT_DOUBLE_EQ(sigma_schedule(1.0, 0.1), 0.1);
  EXPECT_DOUBLE_EQ(sigma_schedule(2.0, 0.1), 0.025);
  EXPECT_DOUBLE_EQ(sigma_schedule(0.0, 0.3), 0.3);
  EXPECT_DOUBLE_EQ(sigma_schedule(0.5, 0.3), 0.3);
}

namespace {

PhysicalScalar truncated_inverse_radius(const GridSpec& g) {
  return sample_scalar(g, [](const Vec3& x) {
    double r = norm(x);
    double core = 1.0 - radial_bump(r, 0.5, 1.0);
    return core * radial_bump(r, 8.0, 11.0) / std::max(r, 1e-12);
  });
}

}  // namespace

TEST(HerzNr, ZeroData) {
  GridSpec g{32, 8.0 * kPi, 2.0 / 3.0};
  GridMagnitude z(zero_physical_scalar(g));
  auto c = herz_controls_nr_check(z, 1.0, AnnulusDecomposition::defaults_for(g));
  EXPECT_EQ(c.ratio, 0.0);
  EXPECT_TRUE(c.within_budget);
}

TEST(HerzNr, StableUnderRefinement) {
  double ratios[2];
  int i = 0;
  for (int n : {32, 64}) {
    GridSpec g{n, 8.0 * kPi, 2.0 / 3.0};
    GridMagnitude f(truncated_inverse_radius(g));
    auto c = herz_controls_nr_check(f, 1.0, {1, 3});
    EXPECT_TRUE(std::isfinite(c.ratio));
    ratios[i++] = c.ratio;
  }
  EXPECT_NEAR(ratios[1], ratios[0], 0.2 * ratios[1]);
}

TEST(HerzNr, IndicatorTwoRadii) {
  AnalyticMagnitude f(ball_indicator(1.0), kFine);
  UlocOptions o;
  o.extent = 1.0;
  o.refine_levels = 1;
  auto c1 = herz_controls_nr_check(f, 1.0, {-4, 4}, 10.0, o);
  auto c2 = herz_controls_nr_check(f, 2.0, {-4, 4}, 10.0, o);
  EXPECT_TRUE(std::isfinite(c1.ratio) && c1.ratio > 0);
  EXPECT_TRUE(std::isfinite(c2.ratio) && c2.ratio > 0);
  // N_1 = 4 pi / 3, N_2 = (4 pi / 3) / 2, herz^2 = kIndicatorShell^2
  // quadrature of an indicator on off-center balls is only accurate to a few 1e-3
  EXPECT_NEAR(c1.ratio, (4.0 * kPi / 3.0) / (kIndicatorShell * kIndicatorShell), 5e-3);
  EXPECT_NEAR(c2.ratio, (4.0 * kPi / 3.0) / 4.0 / (kIndicatorShell * kIndicatorShell), 5e-3);
}

TEST(Decay, CompactSupportVanishesFar) {
  AnalyticMagnitude f(ball_indicator(2.0));
  auto prof = e2_decay_indicator(f, 2.0, {1.0, 2.0, 3.0, 4.0, 6.0});
  EXPECT_GT(prof.value[0], 0.0);
  for (std::size_t i = 2; i < prof.value.size(); ++i) EXPECT_EQ(prof.value[i], 0.0);
  EXPECT_TRUE(prof.decays);
}

TEST(Decay, ConstantDoesNotDecay) {
  GridSpec g{32, 16.0 * kPi, 2.0 / 3.0};
  GridMagnitude f(sample_scalar(g, [](const Vec3&) { return 1.0; }));
  auto prof = e2_decay_indicator(f, 2.0, decay_ladder(g, 2.0));
  for (double v : prof.value) EXPECT_NEAR(v, kUnitBallL2, 1e-10);
  EXPECT_FALSE(prof.decays);
}

TEST(Decay, DyadicBumpTrainHasSpikes) {
  GridSpec g{128, 16.0 * kPi, 2.0 / 3.0};
  auto zeta = [](const Vec3& y) { return radial_bump(norm(y), 0.25, 0.75); };
  GridMagnitude f(sample_scalar(g, [&](const Vec3& x) {
    double s = 0.0;
    for (int k = 1; k <= 4; ++k) s += zeta(x - Vec3{std::ldexp(1.0, k), 0, 0});
    return s;
  }));
  std::vector<double> ladder;
  for (double r = 1.0; r <= 0.5 * g.length - 1.0; r += 0.5) ladder.push_back(r);
  auto prof = e2_decay_indicator(f, 2.0, ladder);
  double spike2 = 0, spike16 = 0, gap = 0;
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (std::abs(ladder[i] - 2.0) < 0.3) spike2 = std::max(spike2, prof.value[i]);
    if (std::abs(ladder[i] - 16.0) < 0.3) spike16 = std::max(spike16, prof.value[i]);
    if (std::abs(ladder[i] - 12.0) < 0.3) gap = std::max(gap, prof.value[i]);
  }
  EXPECT_GT(spike16, 0.5 * spike2);
  EXPECT_LT(gap, 1e-3 * spike16);
  EXPECT_FALSE(prof.decays);
}
