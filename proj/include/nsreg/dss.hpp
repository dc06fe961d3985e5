#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "nsreg/analytic.hpp"
#include "nsreg/norms.hpp"
#include "nsreg/quadrature.hpp"

namespace nsreg {

/// A field given on the fundamental annulus {1 <= |x| < lambda}. The function may be
/// defined beyond the annulus; only the seam check looks outside it.
struct DssProfile {
  double lambda = 2.0;
  VectorFn annulus_field;
  std::string smoothness = "analytic";
  double seam_tolerance = 1e-8;
};

namespace detail {

inline std::vector<Vec3> fibonacci_sphere(int count) {
  std::vector<Vec3> pts;
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < count; ++i) {
    double z = 1.0 - 2.0 * (i + 0.5) / count;
    double rr = std::sqrt(1.0 - z * z);
    pts.push_back({rr * std::cos(golden * i), rr * std::sin(golden * i), z});
  }
  return pts;
}

/// Integer m with 1 <= lambda^m |x| < lambda.
inline int annulus_exponent(double r, double lambda) {
  int m = -int(std::floor(std::log(r) / std::log(lambda)));
  double y = r * std::pow(lambda, m);
  if (y < 1.0) ++m;
  else if (y >= lambda) --m;
  return m;
}

}  // namespace detail

namespace detail {

/// max |a_i - b_i| / (max(|a_i|, |b_i|) + floor_fraction * scale); scale defaults to the
/// largest magnitude seen.
inline double relative_defect(const std::vector<Vec3>& a, const std::vector<Vec3>& b, double floor_fraction,
                              double scale = 0.0) {
  for (std::size_t i = 0; i < a.size(); ++i) scale = std::max({scale, norm(a[i]), norm(b[i])});
  if (scale == 0.0) return 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, norm(a[i] - b[i]) / (std::max(norm(a[i]), norm(b[i])) + floor_fraction * scale));
  return worst;
}

}  // namespace detail

/// Relative mismatch of f(x) and lambda f(lambda x) on unit-sphere samples. The floor is
/// scaled by the profile size across the annulus, since a profile may vanish on the seam.
inline double seam_defect(const DssProfile& p, int samples = 64, double floor_fraction = 1e-2) {
  std::vector<Vec3> a, b;
  const auto dirs = detail::fibonacci_sphere(samples);
  for (const Vec3& x : dirs) {
    a.push_back(p.annulus_field(x));
    b.push_back(p.lambda * p.annulus_field(p.lambda * x));
  }
  double scale = 0.0;
  for (double t : {0.25, 0.5, 0.75})
    for (const Vec3& x : dirs) scale = std::max(scale, norm(p.annulus_field(std::pow(p.lambda, t) * x)));
  return detail::relative_defect(a, b, floor_fraction, scale);
}

inline void check_profile(const DssProfile& p) {
  require(p.lambda > 1.0, ErrorKind::InvalidArgument, "DSS factor must exceed 1");
  require(bool(p.annulus_field), ErrorKind::InvalidArgument, "profile has no annulus field");
}

/// v0(x) = lambda^m f(lambda^m x) with lambda^m x in the fundamental annulus.
inline VectorFn extend_dss(const DssProfile& p) {
  check_profile(p);
  double d = seam_defect(p);
  require(d <= p.seam_tolerance, ErrorKind::SeamMismatch,
          "seam defect " + std::to_string(d) + " exceeds " + std::to_string(p.seam_tolerance));
  const double lam = p.lambda;
  VectorFn f = p.annulus_field;
  return [f, lam](const Vec3& x) {
    double r = norm(x);
    require(r > 0.0, ErrorKind::SingularPoint, "DSS extension is undefined at the origin");
    int m = detail::annulus_exponent(r, lam);
    double s = std::pow(lam, m);
    return s * f(s * x);
  };
}

struct DssSampling {
  int count = 200;
  double r_min = 0.25;
  double r_max = 4.0;
  double domain_radius = kInf;  // largest |x| where the field is represented
  std::uint64_t seed = 12345;
  double floor_fraction = 1e-2;  // of the largest sampled magnitude
};

/// Points with log-uniform radii in [r_min, r_max] and uniform directions.
inline std::vector<Vec3> dss_sample_points(const DssSampling& s) {
  std::mt19937_64 rng(s.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec3> pts;
  pts.reserve(s.count);
  for (int i = 0; i < s.count; ++i) {
    double r = s.r_min * std::pow(s.r_max / s.r_min, u(rng));
    double z = 2.0 * u(rng) - 1.0, ph = 2.0 * kPi * u(rng);
    double rr = std::sqrt(1.0 - z * z);
    pts.push_back(r * Vec3{rr * std::cos(ph), rr * std::sin(ph), z});
  }
  return pts;
}

/// max |v0(x) - lambda v0(lambda x)| / (max(|v0(x)|, |lambda v0(lambda x)|) + floor).
inline double verify_dss(const VectorFn& v0, double lambda, const DssSampling& s = {}) {
  require(lambda > 0, ErrorKind::InvalidArgument, "scale factor must be positive");
  require(s.r_min > 0 && s.r_max >= s.r_min, ErrorKind::DomainExceeded, "samples must avoid the origin");
  require(std::max(1.0, lambda) * s.r_max <= s.domain_radius, ErrorKind::DomainExceeded,
          "samples leave the represented domain");
  std::vector<Vec3> a, b;
  for (const Vec3& x : dss_sample_points(s)) {
    a.push_back(v0(x));
    b.push_back(lambda * v0(lambda * x));
  }
  return detail::relative_defect(a, b, s.floor_fraction);
}

/// Grid fields are evaluated by trigonometric interpolation inside the box.
inline double verify_dss(const SpectralField& v0, double lambda, DssSampling s = {}) {
  s.domain_radius = std::min(s.domain_radius, 0.5 * v0.grid.length);
  return verify_dss([&v0](const Vec3& x) { return evaluate_at(v0, x); }, lambda, s);
}

// ---- radial L^3 mass -------------------------------------------------------

struct RadialMassRule {
  int radial = 16;      // Gauss nodes per panel
  int panels_per_seam = 2;
  SphericalRule angular{1, 16, 32, 1};
};

/// integral of |v0|^3 over {a <= |x| <= b}, panels aligned with the seams lambda^m.
inline double radial_l3_mass(const VectorFn& v0, double lambda, double a, double b, const RadialMassRule& rule = {}) {
  if (b <= a) return 0.0;
  std::vector<double> cuts{a};
  int m = int(std::floor(std::log(a) / std::log(lambda))) + 1;
  for (double s = std::pow(lambda, m); s < b; s = std::pow(lambda, ++m))
    if (s > a) cuts.push_back(s);
  cuts.push_back(b);
  double total = 0.0;
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    SphericalRule sr = rule.angular;
    sr.radial = rule.radial;
    sr.radial_panels = rule.panels_per_seam;
    QuadSet q = spherical_region({}, cuts[c], cuts[c + 1], sr);
    for (std::size_t i = 0; i < q.nodes.size(); ++i) total += q.weights[i] * std::pow(norm(v0(q.nodes[i])), 3);
  }
  return total;
}

struct MuSelection {
  double epsilon0 = 0.0;
  double increment_cap = 0.0;  // the per-step mass allowance
  std::vector<double> breakpoints;
  std::vector<double> increments;
  double mu = 0.5;
  int steps = 0;
  std::string epsilon_reading = "eps0^3";
};

struct MuOptions {
  double mass_tolerance = 1e-8;
  double cap_factor = 64.0;   // bracket search stops at cap_factor * lambda
  bool cube_epsilon = true;   // read the recursion's epsilon as eps0^3
  RadialMassRule rule{};
};

/// Breakpoints r_{i+1} = sup{r : mass(r_i, r) <= eps/2} from r_0 = 1/2 until r_j >= (3/2) lambda;
/// mu = min(1/2, r_i / lambda over i = 0..j).
inline MuSelection compute_mu(const DssProfile& p, double epsilon0, const MuOptions& opt = {}) {
  check_profile(p);
  require(epsilon0 > 0, ErrorKind::InvalidArgument, "epsilon0 must be positive");
  const double lam = p.lambda;
  VectorFn v0 = extend_dss(p);
  const double stop = 1.5 * lam;

  // integrability on A = {1/2 <= |x| < 3 lambda / 2}: refinement must not move the mass
  RadialMassRule fine = opt.rule;
  fine.panels_per_seam *= 4;
  fine.angular.polar *= 2;
  fine.angular.azimuthal *= 2;
  double m1 = radial_l3_mass(v0, lam, 0.5, stop, opt.rule), m2 = radial_l3_mass(v0, lam, 0.5, stop, fine);
  require(std::isfinite(m2) && std::abs(m2 - m1) <= 0.05 * std::abs(m2) + 1e-14, ErrorKind::NonIntegrableProfile,
          "L^3 mass on the annulus changes under refinement: " + std::to_string(m1) + " -> " + std::to_string(m2));

  MuSelection sel;
  sel.epsilon0 = epsilon0;
  sel.increment_cap = 0.5 * (opt.cube_epsilon ? std::pow(epsilon0, 3) : epsilon0);
  sel.epsilon_reading = opt.cube_epsilon ? "eps0^3" : "eps0";
  double r = 0.5;
  sel.breakpoints.push_back(r);
  const double cap = opt.cap_factor * lam;
  while (r < stop) {
    auto mass = [&](double b) { return radial_l3_mass(v0, lam, r, b, opt.rule); };
    double lo = r, hi = r * 1.5, mlo = 0.0, mhi = mass(hi);
    while (hi < cap && mhi <= sel.increment_cap) {
      lo = hi;
      mlo = mhi;
      hi *= 1.5;
      mhi = mass(hi);
    }
    double next;
    if (mhi <= sel.increment_cap) {
      next = stop;  // nothing left to spend the allowance on
    } else {
      // bisection on the monotone cumulative mass
      while (mhi - mlo > opt.mass_tolerance && hi - lo > 1e-15 * hi) {
        double mid = 0.5 * (lo + hi), mm = mass(mid);
        if (mm <= sel.increment_cap) { lo = mid; mlo = mm; }
        else { hi = mid; mhi = mm; }
      }
      next = lo;
    }
    require(next > r, ErrorKind::NonIntegrableProfile, "breakpoint recursion stalled at r = " + std::to_string(r));
    sel.increments.push_back(mass(next));
    sel.breakpoints.push_back(next);
    r = next;
  }
  sel.steps = int(sel.breakpoints.size()) - 1;
  sel.mu = 0.5;
  for (double b : sel.breakpoints) sel.mu = std::min(sel.mu, b / lam);
  return sel;
}

struct SmallnessCheck {
  double max_ratio = 0.0;  // max of integral over B_{mu|x|}(x) of |v0|^3 divided by eps0^3
  Vec3 worst{};
  int samples = 0;
  bool holds = true;
};

/// Integrates the extension over B_{mu|x|}(x) at random x with 1 <= |x| <= lambda.
inline SmallnessCheck mu_smallness_check(const DssProfile& p, const MuSelection& sel, int samples = 50,
                                         std::uint64_t seed = 7, double slack = 0.05,
                                         const SphericalRule& rule = {16, 16, 32, 2}) {
  VectorFn v0 = extend_dss(p);
  DssSampling s;
  s.count = samples;
  s.r_min = 1.0;
  s.r_max = p.lambda;
  s.seed = seed;
  SmallnessCheck out;
  out.samples = samples;
  const double budget = std::pow(sel.epsilon0, 3);
  for (const Vec3& x : dss_sample_points(s)) {
    QuadSet q = spherical_ball(x, sel.mu * norm(x), rule);
    double m = 0.0;
    for (std::size_t i = 0; i < q.nodes.size(); ++i) m += q.weights[i] * std::pow(norm(v0(q.nodes[i])), 3);
    double ratio = m / budget;
    if (ratio > out.max_ratio) {
      out.max_ratio = ratio;
      out.worst = x;
    }
  }
  out.holds = out.max_ratio <= 1.0 + slack;
  return out;
}

struct L3WeakEquivalence {
  double annulus_l3 = 0.0;
  double global_weak_l3 = 0.0;
  double ratio = 0.0;
  int shells = 0;  // lambda^-shells <= |x| < lambda^shells truncation
};

inline L3WeakEquivalence l3_weak_equivalence_check(const DssProfile& p, int shells = 8,
                                                   const SphericalRule& rule = {16, 12, 24, 16}) {
  VectorFn v0 = extend_dss(p);
  auto mag = [v0](const Vec3& x) { return norm(v0(x)); };
  L3WeakEquivalence out;
  out.shells = shells;
  AnalyticMagnitude annulus(mag, rule);
  out.annulus_l3 = lp_norm(annulus, {{}, 1.0, p.lambda}, 3.0).value;
  // one product rule per seam shell, concatenated, then one global rearrangement
  BallSamples all;
  for (int m = -shells; m < shells; ++m) {
    BallSamples s = annulus.region({{}, std::pow(p.lambda, m), std::pow(p.lambda, m + 1)});
    all.quad.nodes.insert(all.quad.nodes.end(), s.quad.nodes.begin(), s.quad.nodes.end());
    all.quad.weights.insert(all.quad.weights.end(), s.quad.weights.begin(), s.quad.weights.end());
    all.values.insert(all.values.end(), s.values.begin(), s.values.end());
  }
  out.global_weak_l3 = weak_lp_of_samples(all, 3.0);
  out.ratio = out.annulus_l3 > 0 ? out.global_weak_l3 / out.annulus_l3 : 0.0;
  return out;
}

// ---- presets ---------------------------------------------------------------

inline DssProfile self_similar_profile(double lambda = 2.0, double amp = 1.0) {
  DssProfile p;
  p.lambda = lambda;
  p.annulus_field = [amp](const Vec3& x) { return amp * x / dot(x, x); };
  return p;
}

/// sin(2 pi log_lambda |x|) x / |x|^2: DSS for lambda, not self-similar.
inline DssProfile oscillating_profile(double lambda = 2.0, double amp = 1.0) {
  DssProfile p;
  p.lambda = lambda;
  p.annulus_field = [amp, lambda](const Vec3& x) {
    double r2 = dot(x, x);
    return amp * std::sin(2.0 * kPi * std::log(std::sqrt(r2)) / std::log(lambda)) * x / r2;
  };
  return p;
}

inline DssProfile zero_profile(double lambda = 2.0) {
  DssProfile p;
  p.lambda = lambda;
  p.annulus_field = [](const Vec3&) { return Vec3{}; };
  return p;
}

/// Divergence-free DSS data: amp * curl-free-of-origin swirl e_3 x x / |x|^2 modulated in
/// log-radius. Smooth away from the origin.
inline DssProfile swirl_profile(double lambda = 2.0, double amp = 1.0) {
  DssProfile p;
  p.lambda = lambda;
  p.annulus_field = [amp, lambda](const Vec3& x) {
    double r2 = dot(x, x);
    double mod = 1.0 + 0.5 * std::cos(2.0 * kPi * std::log(std::sqrt(r2)) / std::log(lambda));
    return amp * mod * Vec3{-x.y, x.x, 0.0} / r2;
  };
  return p;
}

}  // namespace nsreg
