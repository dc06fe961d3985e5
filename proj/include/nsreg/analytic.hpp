#pragma once

#include <cmath>
#include <functional>
#include <random>

#include "nsreg/error.hpp"
#include "nsreg/field.hpp"
#include "nsreg/grid.hpp"

namespace nsreg {

using VectorFn = std::function<Vec3(const Vec3&)>;
using ScalarFn = std::function<double(const Vec3&)>;

/// Velocity and pressure as functions of (x, t).
struct AnalyticFlow {
  std::function<Vec3(const Vec3&, double)> velocity;
  std::function<double(const Vec3&, double)> pressure;
};

/// v^lam(x) = lam * v(lam x)
inline VectorFn scale_field(VectorFn v, double lam) {
  require(lam > 0, ErrorKind::InvalidArgument, "scale factor must be positive");
  return [v = std::move(v), lam](const Vec3& x) { return lam * v(lam * x); };
}

/// Scalar data scaled with an explicit homogeneity: lam^degree * f(lam x).
inline ScalarFn scale_scalar(ScalarFn f, double lam, double degree) {
  require(lam > 0, ErrorKind::InvalidArgument, "scale factor must be positive");
  double pref = std::pow(lam, degree);
  return [f = std::move(f), lam, pref](const Vec3& x) { return pref * f(lam * x); };
}

/// v^lam(x,t) = lam v(lam x, lam^2 t), pi^lam = lam^2 pi(lam x, lam^2 t).
inline AnalyticFlow scale_flow(const AnalyticFlow& f, double lam) {
  require(lam > 0, ErrorKind::InvalidArgument, "scale factor must be positive");
  AnalyticFlow out;
  auto vel = f.velocity;
  auto pr = f.pressure;
  out.velocity = [vel, lam](const Vec3& x, double t) { return lam * vel(lam * x, lam * lam * t); };
  out.pressure = [pr, lam](const Vec3& x, double t) { return lam * lam * pr(lam * x, lam * lam * t); };
  return out;
}

/// Sampled-field rescaling: values of lam * v(lam x) at the grid nodes. Every rescaled
/// node must stay inside the box.
inline PhysicalVector scale_samples(const SpectralField& v, double lam) {
  require(lam > 0, ErrorKind::InvalidArgument, "scale factor must be positive");
  const GridSpec& g = v.grid;
  const double lo = -0.5 * g.length, hi = 0.5 * g.length;
  require(lam * lo >= lo - 1e-12 && lam * (hi - g.spacing()) < hi, ErrorKind::DomainExceeded,
          "rescaled nodes leave the sampled box");
  std::vector<double> ax(g.n);
  for (int j = 0; j < g.n; ++j) ax[j] = lam * g.coord(j);
  PhysicalVector out = zero_physical_vector(g);
  for (int c = 0; c < 3; ++c) {
    auto vals = evaluate_tensor(g, v.comp[c], ax, ax, ax);
    for (std::size_t i = 0; i < vals.size(); ++i) out.data[c][i] = lam * vals[i];
  }
  return out;
}

// ---- presets ----------------------------------------------------------------

/// Exact decaying vortex (sin x cos y, -cos x sin y, 0) e^{-2t}.
inline AnalyticFlow taylor_green_flow(double amp = 1.0) {
  AnalyticFlow f;
  f.velocity = [amp](const Vec3& x, double t) {
    double d = amp * std::exp(-2.0 * t);
    return Vec3{d * std::sin(x.x) * std::cos(x.y), -d * std::cos(x.x) * std::sin(x.y), 0.0};
  };
  f.pressure = [amp](const Vec3& x, double t) {
    return 0.25 * amp * amp * std::exp(-4.0 * t) * (std::cos(2.0 * x.x) + std::cos(2.0 * x.y));
  };
  return f;
}

/// Shear mode sin(x2) e1 decaying as e^{-t}; zero pressure.
inline AnalyticFlow shear_mode_flow(double amp = 1.0) {
  AnalyticFlow f;
  f.velocity = [amp](const Vec3& x, double t) { return Vec3{amp * std::exp(-t) * std::sin(x.y), 0.0, 0.0}; };
  f.pressure = [](const Vec3&, double) { return 0.0; };
  return f;
}

inline AnalyticFlow constant_flow(const Vec3& c) {
  AnalyticFlow f;
  f.velocity = [c](const Vec3&, double) { return c; };
  f.pressure = [](const Vec3&, double) { return 0.0; };
  return f;
}

inline VectorFn taylor_green_data(double amp = 1.0) {
  return [amp](const Vec3& x) { return Vec3{amp * std::sin(x.x) * std::cos(x.y), -amp * std::cos(x.x) * std::sin(x.y), 0.0}; };
}

inline VectorFn shear_mode_data(double amp = 1.0) {
  return [amp](const Vec3& x) { return Vec3{amp * std::sin(x.y), 0.0, 0.0}; };
}

/// sin(x2) e1 + sin(x3) e2: divergence free, with a nonlinearity that is not a gradient.
inline VectorFn shear_pair_data(double amp = 1.0) {
  return [amp](const Vec3& x) { return Vec3{amp * std::sin(x.y), amp * std::sin(x.z), 0.0}; };
}

/// Random real field with Gaussian coefficients on |n_i| <= max_mode, projected onto
/// divergence-free fields. Deterministic for a given seed.
inline SpectralField random_solenoidal(const GridSpec& g, std::uint64_t seed, int max_mode = 3, double amp = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  SpectralField v = zero_field(g);
  for_each_mode(g, [&](std::size_t idx, const Vec3&, int i, int j, int k) {
    if (std::abs(g.mode(i)) > max_mode || std::abs(g.mode(j)) > max_mode || k > max_mode) return;
    for (int c = 0; c < 3; ++c) v.comp[c][idx] = amp * cplx(gauss(rng), gauss(rng));
  });
  // round trip enforces Hermitian symmetry on the k = 0 and Nyquist planes
  v = to_spectral(to_physical(v));
  for (auto& c : v.comp) c[0] = 0.0;
  return leray_project(v);
}

/// C-infinity step: 1 for s <= 0, 0 for s >= 1.
inline double smooth_step_down(double s) {
  if (s <= 0) return 1.0;
  if (s >= 1) return 0.0;
  double a = std::exp(-1.0 / s), b = std::exp(-1.0 / (1.0 - s));
  return b / (a + b);
}

/// Compactly supported bump equal to 1 on B_inner, 0 outside B_outer.
inline double radial_bump(double r, double inner, double outer) {
  return smooth_step_down((r - inner) / (outer - inner));
}

}  // namespace nsreg
