#pragma once

#include <cmath>
#include <vector>

#include "nsreg/analytic.hpp"
#include "nsreg/error.hpp"
#include "nsreg/field.hpp"
#include "nsreg/quadrature.hpp"

namespace nsreg {

struct CutoffBounds {
  double first = 0.0;   // max |chi'|
  double second = 0.0;  // max |chi''|
};

/// Radial cutoff around `center`: 1 on B_inner, 0 beyond (inner + outer) / 2 plus one
/// mollification cell. The transition is an erfc taper whose tails are clamped; `taper`
/// is the half-width of the transition in units of the erfc scale.
struct CutoffSpec {
  Vec3 center{};
  double inner = 0.5;
  double outer = 1.0;
  double taper = 4.9;
  double cell = 0.0;  // mollification width, 0 means one grid spacing

  void validate() const {
    require(inner > 0 && inner < outer, ErrorKind::InvalidArgument,
            "cutoff needs 0 < r < R, got r=" + std::to_string(inner) + " R=" + std::to_string(outer));
    require(taper > 0, ErrorKind::InvalidArgument, "cutoff taper must be positive");
  }
  double support_radius() const { return 0.5 * (inner + outer); }
  double edge(double h) const { return support_radius() + (cell > 0 ? cell : h); }
  double scale(double h) const { return (edge(h) - inner) / (2.0 * taper); }
  double midpoint(double h) const { return 0.5 * (inner + edge(h)); }

  double value(double dist, double h) const {
    if (dist <= inner) return 1.0;
    if (dist >= edge(h)) return 0.0;
    return 0.5 * std::erfc((dist - midpoint(h)) / scale(h));
  }
  double radial_derivative(double dist, double h) const {
    if (dist <= inner || dist >= edge(h)) return 0.0;
    double u = (dist - midpoint(h)) / scale(h);
    return -std::exp(-u * u) / (std::sqrt(kPi) * scale(h));
  }
  Vec3 gradient(const Vec3& x, double h) const {
    Vec3 d = x - center;
    double rr = norm(d);
    if (rr == 0.0) return {};
    return (radial_derivative(rr, h) / rr) * d;
  }
  CutoffBounds bounds(double h) const {
    double s = scale(h);
    return {1.0 / (std::sqrt(kPi) * s), std::sqrt(2.0) * std::exp(-0.5) / (std::sqrt(kPi) * s * s)};
  }
};

struct LocalizedField {
  PhysicalVector a;        // localized field on the grid
  PhysicalVector b;        // annulus correction, a = chi v - b
  SpectralField spectral;  // transform of a
  CutoffBounds bounds;
  double p = 2.0;
  double norm_a = 0.0;          // L^p of a over the box
  double norm_v = 0.0;          // L^p of v over B_R
  double ratio = 0.0;           // norm_a / norm_v
  double div_residual = 0.0;    // spectral, relative to the largest coefficient
  double core_error = 0.0;      // max over B_r of |a - v|, relative to sup |v| on B_R
  double leakage = 0.0;         // max of |a| beyond the support edge, same scale
  double compatibility = 0.0;   // |sum grad chi . v| / sum |grad chi| |v| over the grid
};

namespace detail {

inline void check_cutoff_fits(const GridSpec& g, const CutoffSpec& cut) {
  cut.validate();
  require(2.0 * cut.outer <= g.length + 1e-12, ErrorKind::BallTooLarge,
          "outer radius " + std::to_string(cut.outer) + " does not fit in box " + std::to_string(g.length));
}

inline double lp_sum(double m, double p) { return std::isinf(p) ? m : std::pow(m, p); }

/// Shared assembly once v and the ray potential A are known at every node.
inline LocalizedField assemble_localized(const GridSpec& g, const CutoffSpec& cut, double p,
                                         const std::array<std::vector<double>, 3>& v,
                                         const std::array<std::vector<double>, 3>& pot, double compat_tol) {
  require(p >= 1.0, ErrorKind::InvalidArgument, "Lp exponent must be >= 1");
  const double h = g.spacing();
  const std::size_t total = std::size_t(g.n) * g.n * g.n;
  LocalizedField out;
  out.p = p;
  out.bounds = cut.bounds(h);
  out.a.grid = out.b.grid = g;
  for (int c = 0; c < 3; ++c) {
    out.a.data[c].assign(total, 0.0);
    out.b.data[c].assign(total, 0.0);
  }
  double flux = 0.0, flux_abs = 0.0, vsup = 0.0;
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      for (int k = 0; k < g.n; ++k) {
        std::size_t idx = g.rindex(i, j, k);
        Vec3 x = g.node(i, j, k);
        double dist = norm(x - cut.center);
        Vec3 vi{v[0][idx], v[1][idx], v[2][idx]};
        if (dist <= cut.outer) vsup = std::max(vsup, norm(vi));
        double chi = cut.value(dist, h);
        if (chi == 0.0) continue;
        Vec3 gc = cut.gradient(x, h);
        Vec3 ai{pot[0][idx], pot[1][idx], pot[2][idx]};
        Vec3 bi = -1.0 * cross(gc, ai);
        Vec3 av = chi * vi - bi;
        for (int c = 0; c < 3; ++c) {
          out.a.data[c][idx] = av[c];
          out.b.data[c][idx] = bi[c];
        }
        flux += dot(gc, vi);
        flux_abs += norm(gc) * norm(vi);
      }
  out.compatibility = flux_abs > 0 ? std::abs(flux) / flux_abs : 0.0;
  require(out.compatibility <= compat_tol, ErrorKind::CompatibilityViolation,
          "annulus flux of grad chi . v is " + std::to_string(out.compatibility) + " of its absolute size");

  double core = 0.0, leak = 0.0, sa = 0.0;
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      for (int k = 0; k < g.n; ++k) {
        std::size_t idx = g.rindex(i, j, k);
        double dist = norm(g.node(i, j, k) - cut.center);
        Vec3 av{out.a.data[0][idx], out.a.data[1][idx], out.a.data[2][idx]};
        Vec3 vi{v[0][idx], v[1][idx], v[2][idx]};
        if (dist <= cut.inner) core = std::max(core, norm(av - vi));
        if (dist > cut.edge(h)) leak = std::max(leak, norm(av));
        double m = norm(av);
        sa = std::isinf(p) ? std::max(sa, m) : sa + lp_sum(m, p) * g.cell_volume();
      }
  out.norm_a = std::isinf(p) ? sa : std::pow(sa, 1.0 / p);
  QuadSet ball = grid_region(g, cut.center, 0.0, cut.outer);
  double sv = 0.0;
  for (std::size_t q = 0; q < ball.nodes.size(); ++q) {
    std::size_t idx = ball.grid_index[q];
    double m = norm(Vec3{v[0][idx], v[1][idx], v[2][idx]});
    sv = std::isinf(p) ? std::max(sv, m) : sv + lp_sum(m, p) * ball.weights[q];
  }
  out.norm_v = std::isinf(p) ? sv : std::pow(sv, 1.0 / p);
  out.ratio = out.norm_v > 0 ? out.norm_a / out.norm_v : 0.0;
  out.core_error = vsup > 0 ? core / vsup : 0.0;
  out.leakage = vsup > 0 ? leak / vsup : 0.0;
  out.spectral = to_spectral(out.a);
  out.div_residual = divergence_residual(out.spectral);
  return out;
}

}  // namespace detail

/// Localizes a divergence-free field to the support of the cutoff. The annulus correction
/// is b = -grad chi x A with A the radial-homotopy potential of v about the cutoff center,
/// A(x) = int_0^1 t v(c + t(x - c)) dt x (x - c), so curl A = v on B_R and div b = grad chi . v.
inline LocalizedField bogovskii_correct(const VectorFn& v, const GridSpec& g, const CutoffSpec& cut, double p,
                                        int ray_nodes = 16, double compat_tol = 1e-6) {
  g.validate();
  detail::check_cutoff_fits(g, cut);
  const double h = g.spacing();
  const std::size_t total = std::size_t(g.n) * g.n * g.n;
  auto rays = gauss_on(0.0, 1.0, ray_nodes);
  std::array<std::vector<double>, 3> vals, pot;
  for (int c = 0; c < 3; ++c) {
    vals[c].assign(total, 0.0);
    pot[c].assign(total, 0.0);
  }
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      for (int k = 0; k < g.n; ++k) {
        std::size_t idx = g.rindex(i, j, k);
        Vec3 x = g.node(i, j, k);
        Vec3 vx = v(x);
        for (int c = 0; c < 3; ++c) vals[c][idx] = vx[c];
        Vec3 d = x - cut.center;
        if (norm(d) <= cut.inner || norm(d) >= cut.edge(h)) continue;
        Vec3 avg{};
        for (auto [t, w] : rays) avg = avg + (w * t) * v(cut.center + t * d);
        Vec3 A = cross(avg, d);
        for (int c = 0; c < 3; ++c) pot[c][idx] = A[c];
      }
  return detail::assemble_localized(g, cut, p, vals, pot, compat_tol);
}

/// Grid-field version; ray samples come from the trigonometric interpolant.
inline LocalizedField bogovskii_correct(const SpectralField& v, const CutoffSpec& cut, double p, int ray_nodes = 16,
                                        double compat_tol = 1e-6) {
  const GridSpec& g = v.grid;
  detail::check_cutoff_fits(g, cut);
  require(divergence_residual(v) <= 1e-8, ErrorKind::CompatibilityViolation,
          "input field is not divergence-free: residual " + std::to_string(divergence_residual(v)));
  const std::size_t total = std::size_t(g.n) * g.n * g.n;
  PhysicalVector phys = to_physical(v);
  std::array<std::vector<double>, 3> avg;
  for (auto& c : avg) c.assign(total, 0.0);
  std::vector<double> axis0(g.n);
  for (int j = 0; j < g.n; ++j) axis0[j] = g.coord(j);
  for (auto [t, w] : gauss_on(0.0, 1.0, ray_nodes)) {
    std::array<std::vector<double>, 3> ax;
    for (int d = 0; d < 3; ++d) {
      ax[d].resize(g.n);
      for (int j = 0; j < g.n; ++j) ax[d][j] = cut.center[d] + t * (axis0[j] - cut.center[d]);
    }
    for (int c = 0; c < 3; ++c) {
      auto s = evaluate_tensor(g, v.comp[c], ax[0], ax[1], ax[2]);
      for (std::size_t q = 0; q < total; ++q) avg[c][q] += w * t * s[q];
    }
  }
  std::array<std::vector<double>, 3> pot;
  for (auto& c : pot) c.assign(total, 0.0);
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      for (int k = 0; k < g.n; ++k) {
        std::size_t idx = g.rindex(i, j, k);
        Vec3 d = g.node(i, j, k) - cut.center;
        Vec3 A = cross(Vec3{avg[0][idx], avg[1][idx], avg[2][idx]}, d);
        for (int c = 0; c < 3; ++c) pot[c][idx] = A[c];
      }
  return detail::assemble_localized(g, cut, p, phys.data, pot, compat_tol);
}

struct NewtonianCorrection {
  SpectralField grad_eta;
  SpectralField w;               // u chi - grad eta
  double subtracted_mean = 0.0;  // box mean of u . grad chi removed before the solve
  double div_residual = 0.0;     // spectral residual of w
  double core_deviation = 0.0;   // max over B_r of |w - u| relative to sup |u|
};

/// Solves Laplace(eta) = u . grad chi - mean spectrally and returns grad eta with the corrected field.
inline NewtonianCorrection newtonian_correction(const SpectralField& u, const CutoffSpec& cut) {
  const GridSpec& g = u.grid;
  detail::check_cutoff_fits(g, cut);
  const double h = g.spacing();
  PhysicalVector up = to_physical(u);
  PhysicalScalar src = zero_physical_scalar(g);
  PhysicalVector uchi = up;
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      for (int k = 0; k < g.n; ++k) {
        std::size_t idx = g.rindex(i, j, k);
        Vec3 x = g.node(i, j, k);
        Vec3 ui{up.data[0][idx], up.data[1][idx], up.data[2][idx]};
        src.data[idx] = dot(ui, cut.gradient(x, h));
        double chi = cut.value(norm(x - cut.center), h);
        for (int c = 0; c < 3; ++c) uchi.data[c][idx] *= chi;
      }
  NewtonianCorrection out;
  ScalarField s = to_spectral(src);
  out.subtracted_mean = s.coef[0].real();
  s.coef[0] = 0.0;
  for_each_mode(g, [&](std::size_t idx, const Vec3& kv, int, int, int) {
    double k2 = dot(kv, kv);
    s.coef[idx] = k2 > 0 ? -s.coef[idx] / k2 : cplx(0.0);
  });
  out.grad_eta = gradient(s);
  out.w = add(to_spectral(uchi), out.grad_eta, -1.0);
  out.div_residual = divergence_residual(out.w);
  PhysicalVector wp = to_physical(out.w);
  double core = 0.0, usup = max_magnitude(up);
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      for (int k = 0; k < g.n; ++k) {
        std::size_t idx = g.rindex(i, j, k);
        if (norm(g.node(i, j, k) - cut.center) > cut.inner) continue;
        Vec3 d{wp.data[0][idx] - up.data[0][idx], wp.data[1][idx] - up.data[1][idx], wp.data[2][idx] - up.data[2][idx]};
        core = std::max(core, norm(d));
      }
  out.core_deviation = usup > 0 ? core / usup : 0.0;
  return out;
}

}  // namespace nsreg
