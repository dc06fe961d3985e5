#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include "nsreg/error.hpp"
#include "nsreg/field.hpp"
#include "nsreg/grid.hpp"

namespace nsreg {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
  std::vector<double> x, w;
};

inline const GaussRule& gauss_legendre(int n) {
  static std::map<int, GaussRule> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  GaussRule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it2 = 0; it2 < 100; ++it2) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    r.x[i] = -z;
    r.x[n - 1 - i] = z;
    r.w[i] = r.w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
  }
  return cache.emplace(n, std::move(r)).first->second;
}

/// Map the rule to [a, b].
inline std::vector<std::pair<double, double>> gauss_on(double a, double b, int n) {
  const GaussRule& g = gauss_legendre(n);
  std::vector<std::pair<double, double>> out(n);
  double h = 0.5 * (b - a), m = 0.5 * (b + a);
  for (int i = 0; i < n; ++i) out[i] = {m + h * g.x[i], h * g.w[i]};
  return out;
}

/// Resolution of the product rule used for analytic integrands.
struct SphericalRule {
  int radial = 24;
  int polar = 24;
  int azimuthal = 48;
  int radial_panels = 1;
};

/// Nodes and weights of a quadrature over some region.
struct QuadSet {
  std::vector<Vec3> nodes;
  std::vector<double> weights;
  std::vector<std::size_t> grid_index;  // filled for grid-based sets
  double volume_error = 0.0;            // relative defect of the raw weights against the exact volume
};

inline double ball_volume(double r) { return 4.0 / 3.0 * kPi * r * r * r; }
inline double shell_volume(double a, double b) { return ball_volume(b) - ball_volume(a); }

/// Product rule on {a <= |x - c| < b}: Gauss in radius and cos(polar), trapezoid in azimuth.
inline QuadSet spherical_region(const Vec3& c, double a, double b, const SphericalRule& rule = {}) {
  QuadSet q;
  const GaussRule& mu = gauss_legendre(rule.polar);
  const double dphi = 2.0 * kPi / rule.azimuthal;
  std::vector<std::pair<double, double>> radial;
  const int panels = std::max(1, rule.radial_panels);
  for (int p = 0; p < panels; ++p) {
    double ra = a + (b - a) * p / panels, rb = a + (b - a) * (p + 1) / panels;
    auto part = gauss_on(ra, rb, rule.radial);
    radial.insert(radial.end(), part.begin(), part.end());
  }
  q.nodes.reserve(radial.size() * rule.polar * rule.azimuthal);
  q.weights.reserve(q.nodes.capacity());
  for (auto [r, wr] : radial)
    for (int i = 0; i < rule.polar; ++i) {
      double ct = mu.x[i], st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
      for (int j = 0; j < rule.azimuthal; ++j) {
        double ph = (j + 0.5) * dphi;
        q.nodes.push_back(c + r * Vec3{st * std::cos(ph), st * std::sin(ph), ct});
        q.weights.push_back(r * r * wr * mu.w[i] * dphi);
      }
    }
  return q;
}

inline QuadSet spherical_ball(const Vec3& c, double r, const SphericalRule& rule = {}) {
  return spherical_region(c, 0.0, r, rule);
}

/// One-cell linear ramp around the sphere of radius r (1 inside, 0 outside).
inline double smoothed_indicator(double dist, double r, double h) {
  return std::clamp(0.5 - (dist - r) / h, 0.0, 1.0);
}

/// Grid nodes of {a <= |x - c| < b} with smoothed-indicator weights, rescaled so the
/// weights integrate 1 to the exact volume. The raw defect is kept in volume_error.
inline QuadSet grid_region(const GridSpec& g, const Vec3& c, double a, double b) {
  require(2.0 * b <= g.length + 1e-12, ErrorKind::BallTooLarge,
          "ball of radius " + std::to_string(b) + " does not fit in box " + std::to_string(g.length));
  QuadSet q;
  const double h = g.spacing(), dv = g.cell_volume();
  const double reach = b + h;
  const int span = int(std::ceil(reach / h)) + 1;
  const double L = g.length;
  // nearest node index to the center along each axis
  int ci[3];
  for (int d = 0; d < 3; ++d) ci[d] = int(std::floor((c[d] + 0.5 * L) / h + 0.5));
  for (int di = -span; di <= span; ++di)
    for (int dj = -span; dj <= span; ++dj)
      for (int dk = -span; dk <= span; ++dk) {
        int ii = ci[0] + di, jj = ci[1] + dj, kk = ci[2] + dk;
        Vec3 x = g.node(0, 0, 0) + h * Vec3{double(ii), double(jj), double(kk)};
        double dist = norm(x - c);
        double w = smoothed_indicator(dist, b, h);
        if (a > 0) w -= smoothed_indicator(dist, a, h);
        if (w <= 0.0) continue;
        auto wrap = [&](int m) { return ((m % g.n) + g.n) % g.n; };
        q.nodes.push_back(x);
        q.weights.push_back(w * dv);
        q.grid_index.push_back(g.rindex(wrap(ii), wrap(jj), wrap(kk)));
      }
  double raw = 0.0;
  for (double w : q.weights) raw += w;
  double exact = shell_volume(a, b);
  q.volume_error = exact > 0 ? std::abs(raw - exact) / exact : 0.0;
  if (raw > 0)
    for (double& w : q.weights) w *= exact / raw;
  return q;
}

/// Values of a grid or analytic field on the nodes of a region, with the weights.
struct BallSamples {
  QuadSet quad;
  std::vector<double> values;

  double integral() const {
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) s += quad.weights[i] * values[i];
    return s;
  }
};

/// Samples a scalar field on a ball. Grid fields use the grid rule; pass `refine` > 1 to
/// interpolate spectrally onto a finer sub-grid first.
inline BallSamples sample_on_ball(const ScalarField& f, const Vec3& c, double r, int refine = 1) {
  const GridSpec& g = f.grid;
  require(2.0 * r <= g.length, ErrorKind::BallTooLarge, "ball diameter exceeds box length");
  BallSamples s;
  if (refine <= 1) {
    PhysicalScalar p = to_physical(f);
    s.quad = grid_region(g, c, 0.0, r);
    s.values.reserve(s.quad.nodes.size());
    for (std::size_t idx : s.quad.grid_index) s.values.push_back(p.data[idx]);
    return s;
  }
  // finer local lattice aligned with the coarse grid
  const double h = g.spacing() / refine;
  const int half = int(std::ceil((r + h) / h)) + 1;
  std::vector<double> ax[3];
  for (int d = 0; d < 3; ++d) {
    double base = g.coord(0) + std::round((c[d] - g.coord(0)) / h) * h;
    for (int m = -half; m <= half; ++m) ax[d].push_back(base + m * h);
  }
  std::vector<double> vals = evaluate_tensor(g, f.coef, ax[0], ax[1], ax[2]);
  const std::size_t m = ax[0].size();
  double raw = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < m; ++k) {
        Vec3 x{ax[0][i], ax[1][j], ax[2][k]};
        double w = smoothed_indicator(norm(x - c), r, h) * h * h * h;
        if (w <= 0) continue;
        s.quad.nodes.push_back(x);
        s.quad.weights.push_back(w);
        s.values.push_back(vals[(i * m + j) * m + k]);
        raw += w;
      }
  double exact = ball_volume(r);
  s.quad.volume_error = std::abs(raw - exact) / exact;
  for (double& w : s.quad.weights) w *= exact / raw;
  return s;
}

inline BallSamples sample_on_ball(const std::function<double(const Vec3&)>& f, const Vec3& c, double r,
                                  const SphericalRule& rule = {}) {
  BallSamples s;
  s.quad = spherical_ball(c, r, rule);
  s.values.reserve(s.quad.nodes.size());
  for (const Vec3& x : s.quad.nodes) s.values.push_back(f(x));
  return s;
}

/// Trapezoid weights for a (possibly non-uniform) increasing list of times.
inline std::vector<double> trapezoid_weights(const std::vector<double>& t) {
  std::vector<double> w(t.size(), 0.0);
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    double d = 0.5 * (t[i + 1] - t[i]);
    w[i] += d;
    w[i + 1] += d;
  }
  return w;
}

/// Composite Simpson weights on a uniform mesh; falls back to trapezoid on the last
/// interval when the interval count is odd.
inline std::vector<double> simpson_weights(std::size_t count, double dt) {
  std::vector<double> w(count, 0.0);
  if (count < 2) return w;
  std::size_t intervals = count - 1;
  std::size_t even = intervals - (intervals % 2);
  for (std::size_t i = 0; i + 2 <= even; i += 2) {
    w[i] += dt / 3.0;
    w[i + 1] += 4.0 * dt / 3.0;
    w[i + 2] += dt / 3.0;
  }
  if (intervals % 2) {
    w[count - 2] += 0.5 * dt;
    w[count - 1] += 0.5 * dt;
  }
  return w;
}

}  // namespace nsreg
