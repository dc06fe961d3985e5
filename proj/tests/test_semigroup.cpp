#include <gtest/gtest.h>

#include <cmath>

#include "nsreg/analytic.hpp"
#include "nsreg/semigroup.hpp"

using namespace nsreg;

namespace {

// A sin(x1) e2, divergence free
SpectralField mode_e2(const GridSpec& g, double amp) {
  return spectral_from(g, [=](const Vec3& x) { return Vec3{0.0, amp * std::sin(x.x), 0.0}; });
}

// F_21 = -b cos(x1) so that (div F)_2 = b sin(x1)
TensorField flux_for_mode(const GridSpec& g, double b) {
  TensorField t = zero_tensor(g);
  ScalarField s = scalar_from(g, [=](const Vec3& x) { return -b * std::cos(x.x); });
  t.comp[3 * 1 + 0] = s.coef;
  return t;
}

template <class E>
ErrorKind kind_of(E&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST(HeatFlow, IdentityEigenmodeComposition) {
  GridSpec g{32, 2 * kPi};
  SpectralField f = random_solenoidal(g, 7);
  EXPECT_EQ(max_abs_diff(heat_flow(f, 0.0), f), 0.0);
  SpectralField s = spectral_from(g, [](const Vec3& x) { return Vec3{0.0, std::sin(x.x), 0.0}; });
  SpectralField h = heat_flow(s, 1.0);
  SpectralField ref = spectral_from(g, [](const Vec3& x) { return Vec3{0.0, 0.36787944117144233 * std::sin(x.x), 0.0}; });
  EXPECT_LT(max_abs_diff(h, ref), 1e-10);
  EXPECT_LT(max_abs_diff(heat_flow(heat_flow(f, 0.3), 0.45), heat_flow(f, 0.75)), 1e-13);
  EXPECT_EQ(kind_of([&] { heat_flow(f, -1e-3); }), ErrorKind::NegativeTime);
  ScalarField sc = scalar_from(g, [](const Vec3& x) { return std::cos(2 * x.z); });
  ScalarField sh = heat_flow(sc, 0.25);
  ScalarField sr = scalar_from(g, [](const Vec3& x) { return std::exp(-1.0) * std::cos(2 * x.z); });
  double d = 0;
  for (std::size_t i = 0; i < sh.coef.size(); ++i) d = std::max(d, std::abs(sh.coef[i] - sr.coef[i]));
  EXPECT_LT(d, 1e-15);
}

TEST(ExpWeights, SeriesMatchesClosedForm) {
  for (double z : {0.0999, 0.1001, 0.05, 1e-6}) {
    double p1, ps;
    detail::exp_weights(z, p1, ps);
    // reference with long double
    long double zl = z, e = std::exp(-zl);
    long double rp1 = z > 1e-4 ? (1 - e) / zl : 1 - zl / 2 + zl * zl / 6;
    long double rps = z > 1e-3 ? (1 - e * (1 + zl)) / (zl * zl) : 0.5L - zl / 3 + zl * zl / 8;
    EXPECT_NEAR(p1, double(rp1), 1e-12);
    EXPECT_NEAR(ps, double(rps), 1e-9);
  }
  double p1, ps;
  detail::exp_weights(0.0, p1, ps);
  EXPECT_EQ(p1, 1.0);
  EXPECT_EQ(ps, 0.5);
}

TEST(Duhamel, Phi0Eigenmode) {
  GridSpec g{16, 2 * kPi};
  const double A = 0.7, t = 1.0;
  FieldSeries f = constant_series(mode_e2(g, A), t, 64);
  DuhamelResult r = phi0(f, t);
  EXPECT_LT(max_abs_diff(r.value, mode_e2(g, (1 - std::exp(-t)) * A)), 1e-13);
  EXPECT_LT(r.quadrature_error, 1e-13);
  // intermediate mesh time
  EXPECT_LT(max_abs_diff(phi0(f, 0.5).value, mode_e2(g, (1 - std::exp(-0.5)) * A)), 1e-13);
}

TEST(Duhamel, Phi0ZeroAndGradient) {
  GridSpec g{16, 2 * kPi};
  FieldSeries z = constant_series(zero_field(g), 1.0, 8);
  EXPECT_EQ(max_abs_coef(phi0(z, 1.0).value), 0.0);
  ScalarField pot = scalar_from(g, [](const Vec3& x) { return std::sin(x.x) * std::cos(2 * x.y); });
  FieldSeries grad = constant_series(gradient(pot), 1.0, 8);
  EXPECT_LT(max_abs_coef(phi0(grad, 1.0).value), 1e-15);
}

TEST(Duhamel, Phi1Eigenmode) {
  GridSpec g{16, 2 * kPi};
  const double b = -0.4, t = 0.8;
  TensorSeries F = constant_series(flux_for_mode(g, b), t, 32);
  EXPECT_LT(max_abs_diff(phi1(F, t).value, mode_e2(g, (1 - std::exp(-t)) * b)), 1e-13);
  EXPECT_EQ(max_abs_coef(phi1(constant_series(zero_tensor(g), t, 8), t).value), 0.0);
  // F = q I has div F = grad q
  TensorField iso = zero_tensor(g);
  ScalarField q = scalar_from(g, [](const Vec3& x) { return std::cos(x.y + x.z); });
  for (int i = 0; i < 3; ++i) iso.comp[4 * i] = q.coef;
  EXPECT_LT(max_abs_coef(phi1(constant_series(iso, t, 8), t).value), 1e-15);
}

TEST(Duhamel, TimeDependentSecondOrder) {
  // f = s A sin(x1) e2 gives A (t - 1 + e^{-t}); error must scale like ds^2
  GridSpec g{16, 2 * kPi};
  SpectralField m = spectral_from(g, [](const Vec3& x) { return Vec3{0.0, std::sin(x.x), 0.0}; });
  const double t = 1.0;
  double err[2];
  int i = 0;
  for (int mesh : {4, 8}) {
    FieldSeries f;
    for (int n = 0; n <= mesh; ++n) {
      double s = t * n / mesh;
      f.times.push_back(s);
      f.values.push_back(scaled(m, s * s));
    }
    // int_0^t e^{-(t-s)} s^2 ds = t^2 - 2t + 2 - 2 e^{-t}
    double exact = t * t - 2 * t + 2 - 2 * std::exp(-t);
    DuhamelResult r = phi0(f, t);
    err[i++] = max_abs_diff(r.value, scaled(m, exact));
    EXPECT_GT(r.quadrature_error, 0.0);
  }
  EXPECT_NEAR(err[0] / err[1], 4.0, 0.3);
}

TEST(Duhamel, MeshTooCoarse) {
  GridSpec g{16, 2 * kPi};
  FieldSeries f = constant_series(zero_field(g), 1.0, 2);
  EXPECT_EQ(kind_of([&] { phi0(f, 1.0); }), ErrorKind::MeshTooCoarse);
  FieldSeries ok = constant_series(zero_field(g), 1.0, 8);
  EXPECT_EQ(kind_of([&] { phi0(ok, 0.25); }), ErrorKind::MeshTooCoarse);
}

TEST(Admissibility, ExamplesFromTheEstimates) {
  Admissibility a = admissibility_check({3.0, 3.0, PotentialTag::Phi1, 1.0});
  EXPECT_TRUE(a.accepted);
  EXPECT_NEAR(a.t_power, 0.5, 1e-15);
  // 1/m - 1/q = 1/5
  Admissibility c = admissibility_check({5.0, 2.5, PotentialTag::Phi1, 1.0});
  EXPECT_TRUE(c.accepted);
  EXPECT_NEAR(c.t_power, 0.0, 1e-14);
  // 1/m - 1/q = 1/4
  Admissibility r = admissibility_check({4.0, 2.0, PotentialTag::Phi1, 1.0});
  EXPECT_FALSE(r.accepted);
  EXPECT_FALSE(admissibility_check({2.0, 3.0, PotentialTag::Phi1, 1.0}).accepted);
  EXPECT_FALSE(admissibility_check({kInf, 3.0, PotentialTag::Phi1, 1.0}).accepted);
  // Phi0 from L^r with r = q = 3/2... use r = q = 2: power 5/2 (1/2 - 3/10 + 2/15) = 5/6
  Admissibility p0 = admissibility_check({2.0, 2.0, PotentialTag::Phi0, 1.0});
  EXPECT_TRUE(p0.accepted);
  EXPECT_NEAR(p0.t_power, 5.0 / 6.0, 1e-14);
  // grad Phi0 with r = q = 2: 1/2 >= 3/10 + 1/15, power 1/3
  Admissibility g0 = admissibility_check({2.0, 2.0, PotentialTag::GradPhi0, 1.0});
  EXPECT_TRUE(g0.accepted);
  EXPECT_NEAR(g0.t_power, 1.0 / 3.0, 1e-14);
  // grad Phi0 critical q: 1/q = 3/(5*2) + 1/15 = 11/30
  EXPECT_TRUE(admissibility_check({30.0 / 11.0, 2.0, PotentialTag::GradPhi0, 1.0}).accepted);
  EXPECT_FALSE(admissibility_check({3.0, 2.0, PotentialTag::GradPhi0, 1.0}).accepted);
}

TEST(KatoPicard, ZeroData) {
  GridSpec g{16, 2 * kPi};
  PicardOptions opt;
  opt.mesh = 16;
  KatoResult r = kato_picard(zero_field(g), 0.5, opt);
  EXPECT_TRUE(r.state.converged);
  EXPECT_EQ(r.state.history.size(), 1u);
  EXPECT_EQ(r.sup_sqrt_t_linf, 0.0);
}

TEST(KatoPicard, ShearFirstIterateIsHeatFlow) {
  GridSpec g{16, 2 * kPi};
  const double eps = 1e-3;
  SpectralField v0 = spectral_from(g, [=](const Vec3& x) { return Vec3{eps * std::sin(x.y), 0.0, 0.0}; });
  PicardOptions opt;
  opt.mesh = 16;
  opt.max_iter = 1;
  KatoResult r = kato_picard(v0, 1.0, opt);
  EXPECT_LT(max_abs_diff(r.state.solution.values.back(), scaled(v0, std::exp(-1.0))), 1e-16);
  // the quadratic term of a shear vanishes, so the next iterate repeats
  opt.max_iter = 5;
  r = kato_picard(v0, 1.0, opt);
  EXPECT_TRUE(r.state.converged);
  EXPECT_EQ(r.state.history.size(), 2u);
  EXPECT_EQ(r.state.history[1].diff, 0.0);
}

TEST(KatoPicard, ContractionAndLinearResponse) {
  GridSpec g{16, 2 * kPi};
  auto data = [&](double eps) {
    return spectral_from(g, [=](const Vec3& x) { return Vec3{eps * std::sin(x.y), eps * std::sin(x.x), 0.0}; });
  };
  PicardOptions opt;
  opt.mesh = 32;
  KatoResult a = kato_picard(data(1e-3), 1.0, opt);
  KatoResult b = kato_picard(data(5e-4), 1.0, opt);
  ASSERT_TRUE(a.state.converged);
  EXPECT_LT(a.state.ratio_at(2), 0.5);
  EXPECT_GT(a.sup_sqrt_t_linf, 0.0);
  EXPECT_NEAR(a.sup_sqrt_t_linf / b.sup_sqrt_t_linf, 2.0, 0.2);
  EXPECT_NEAR(a.l5_norm / b.l5_norm, 2.0, 0.2);
  for (const auto& h : a.state.history) EXPECT_TRUE(std::isfinite(h.diff));
}

TEST(KatoPicard, LargeDataFailsToContract) {
  GridSpec g{16, 2 * kPi};
  SpectralField v0 = random_solenoidal(g, 4, 3, 40.0);
  PicardOptions opt;
  opt.mesh = 16;
  EXPECT_EQ(kind_of([&] { kato_picard(v0, 2.0, opt); }), ErrorKind::NoContraction);
  opt.data_gate = 1e-3;
  EXPECT_EQ(kind_of([&] { kato_picard(v0, 2.0, opt); }), ErrorKind::GateViolation);
}

TEST(PerturbedStokes, PureHeatFlow) {
  GridSpec g{16, 2 * kPi};
  PerturbedStokesInput in;
  in.w0 = random_solenoidal(g, 2);
  in.horizon = 0.5;
  PicardOptions opt;
  opt.mesh = 16;
  PicardState s = perturbed_stokes_picard(in, opt);
  EXPECT_TRUE(s.converged);
  EXPECT_LT(max_abs_diff(s.solution.values.back(), heat_flow(in.w0, 0.5)), 1e-15);
}

TEST(PerturbedStokes, FluxOnlyReducesToPhi1) {
  GridSpec g{16, 2 * kPi};
  PerturbedStokesInput in;
  in.w0 = zero_field(g);
  in.horizon = 0.8;
  in.flux = constant_series(flux_for_mode(g, 0.3), 0.8, 16);
  PicardOptions opt;
  opt.mesh = 16;
  PicardState s = perturbed_stokes_picard(in, opt);
  EXPECT_LT(max_abs_diff(s.solution.values.back(), mode_e2(g, (1 - std::exp(-0.8)) * 0.3)), 1e-13);
}

TEST(PerturbedStokes, RatioScalesLikeRootT) {
  // w0 = sin(x1) e2, drift e1: the first correction is t e^{-t} cos(x1) e2, so the one-step
  // ratio is T e^{-T} for T <= 1 (exact); T = 1 -> 1/4 gives 1.89
  GridSpec g{16, 2 * kPi};
  SpectralField tiny = spectral_from(g, [](const Vec3& x) { return Vec3{1e-3 * std::sin(x.z), 0.0, 0.0}; });
  double ratio[2];
  int i = 0;
  for (double T : {1.0, 0.25}) {
    PerturbedStokesInput in;
    in.w0 = mode_e2(g, 1.0);
    in.drift = {1.0, 0.0, 0.0};
    in.background = constant_series(tiny, T, 64);
    in.horizon = T;
    PicardOptions opt;
    opt.mesh = 64;
    PicardState s = perturbed_stokes_picard(in, opt);
    ratio[i] = s.ratio_at(2);
    EXPECT_NEAR(ratio[i], T * std::exp(-T), 5e-3) << T;
    ++i;
  }
  EXPECT_NEAR(ratio[0] / ratio[1], 2.0, 0.6);
}

TEST(PerturbedStokes, Gates) {
  GridSpec g{16, 2 * kPi};
  PerturbedStokesInput in;
  in.w0 = zero_field(g);
  in.horizon = 0.5;
  in.drift = {1.0, 0.5, 0.0};
  EXPECT_EQ(kind_of([&] { perturbed_stokes_picard(in); }), ErrorKind::GateViolation);
  in.drift = {};
  PicardOptions opt;
  opt.horizon = 0.25;
  EXPECT_EQ(kind_of([&] { perturbed_stokes_picard(in, opt); }), ErrorKind::GateViolation);
  opt = {};
  opt.mesh = 8;
  opt.forcing_gate = 1e-3;
  in.background = constant_series(mode_e2(g, 1.0), 0.5, 8);
  EXPECT_EQ(kind_of([&] { perturbed_stokes_picard(in, opt); }), ErrorKind::GateViolation);
}

TEST(UlocSmoothing, BoundedRatios) {
  GridSpec g{32, 4 * kPi};
  SpectralField f = random_solenoidal(g, 9, 6);
  SmoothingProbe p = uloc_smoothing_probe(f, 4.0, 2.0, {0.01, 0.1, 1.0, 4.0});
  ASSERT_EQ(p.ratio_m0.size(), 4u);
  for (double r : p.ratio_m0) EXPECT_LE(r, 1.5);
  EXPECT_GT(p.max_ratio, 0.0);
  EXPECT_TRUE(std::isfinite(p.max_ratio));
  EXPECT_EQ(kind_of([&] { uloc_smoothing_probe(f, 2.0, 4.0, {0.1}); }), ErrorKind::ExponentOrder);
}

TEST(Oseen, GradientMatchesFiniteDifferenceOfKernel) {
  // S_ij from the same closed form, differentiated numerically
  auto S = [](const Vec3& x, double t) {
    double r = norm(x), rho = r / std::sqrt(t);
    auto h = detail::erf_over_r(rho);
    double f1 = h[1] / (t * 4 * kPi), f2 = h[2] / (t * std::sqrt(t) * 4 * kPi);
    double gam = std::pow(4 * kPi * t, -1.5) * std::exp(-r * r / (4 * t));
    Mat3 s{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        s[i][j] = (i == j) * gam + (f2 - f1 / r) * x[i] * x[j] / (r * r) + (i == j) * f1 / r;
    return s;
  };
  for (auto [x, t] : {std::pair{Vec3{0.3, -0.2, 0.5}, 0.7}, std::pair{Vec3{2.0, 1.0, -3.0}, 0.05},
                      std::pair{Vec3{0.05, 0.02, 0.01}, 1.3}}) {
    Tensor3 d = oseen_gradient(x, t);
    const double hx = 1e-5 * norm(x);
    for (int k = 0; k < 3; ++k) {
      Vec3 e{};
      e[k] = hx;
      Mat3 sp = S(x + e, t), sm = S(x - e, t);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          EXPECT_NEAR(d[k][i][j], (sp[i][j] - sm[i][j]) / (2 * hx), 1e-6 * tensor_norm(d) + 1e-14);
    }
  }
}

TEST(Oseen, ErfSeriesMatchesClosedFormAtSwitch) {
  auto a = detail::erf_over_r(2.0 - 1e-12), b = detail::erf_over_r(2.0 + 1e-12);
  for (int n = 0; n < 4; ++n) EXPECT_NEAR(a[n], b[n], 1e-10);
  EXPECT_NEAR(detail::erf_over_r(1e-3)[0], 1.0 / std::sqrt(kPi), 1e-6);
}

TEST(Oseen, ProductStableAndHomogeneous) {
  std::vector<double> xs, ts;
  for (double s = 0.125; s <= 512; s *= 2) xs.push_back(s);
  for (double t = 1.0 / 4096; t <= 256; t *= 4) ts.push_back(t);
  OseenProbe p = oseen_gradient_probe(xs, 1.0, ts, {1.0, 0.0, 0.0});
  EXPECT_LE(p.x_tail_growth, 0.1);
  EXPECT_LE(p.t_tail_growth, 0.1);
  EXPECT_TRUE(std::isfinite(p.sup));
  for (Vec3 x : {Vec3{0.3, 0.4, -0.1}, Vec3{2.0, -1.0, 0.5}}) {
    Tensor3 a = oseen_gradient(x, 0.6), b = oseen_gradient(2.0 * x, 2.4);
    EXPECT_NEAR(tensor_norm(b) / tensor_norm(a), 1.0 / 16.0, 1e-6 / 16.0);
  }
  EXPECT_EQ(kind_of([] { oseen_gradient({0, 0, 0}, 1.0); }), ErrorKind::SingularPoint);
}
