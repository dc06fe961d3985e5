#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "nsreg/fft.hpp"
#include "nsreg/grid.hpp"

namespace nsreg {

enum class Gauge { MeanZero, BallAnchored };

/// One complex coefficient array in r2c layout.
struct ScalarField {
  GridSpec grid;
  std::vector<cplx> coef;
  double time = 0.0;
  Gauge gauge = Gauge::MeanZero;
  Vec3 anchor_center{};
  double anchor_radius = 0.0;
};

/// Three coefficient arrays; the k = 0 slot carries the mean (drift) vector.
struct SpectralField {
  GridSpec grid;
  std::array<std::vector<cplx>, 3> comp;
  double time = 0.0;
};

struct PhysicalScalar {
  GridSpec grid;
  std::vector<double> data;
};

struct PhysicalVector {
  GridSpec grid;
  std::array<std::vector<double>, 3> data;
};

inline ScalarField zero_scalar(const GridSpec& g) {
  g.validate();
  ScalarField s;
  s.grid = g;
  s.coef.assign(g.spectral_size(), cplx(0.0));
  return s;
}

inline SpectralField zero_field(const GridSpec& g) {
  g.validate();
  SpectralField v;
  v.grid = g;
  for (auto& c : v.comp) c.assign(g.spectral_size(), cplx(0.0));
  return v;
}

inline PhysicalScalar zero_physical_scalar(const GridSpec& g) {
  return PhysicalScalar{g, std::vector<double>(g.real_size(), 0.0)};
}

inline PhysicalVector zero_physical_vector(const GridSpec& g) {
  PhysicalVector p;
  p.grid = g;
  for (auto& c : p.data) c.assign(g.real_size(), 0.0);
  return p;
}

/// Calls fn(idx, kvec) for every r2c slot.
template <class Fn>
void for_each_mode(const GridSpec& g, Fn&& fn) {
  const int n = g.n, nz = g.nz();
  for (int i = 0; i < n; ++i) {
    double kx = g.wavenumber(i);
    for (int j = 0; j < n; ++j) {
      double ky = g.wavenumber(j);
      for (int k = 0; k < nz; ++k) {
        double kz = g.wavenumber(k);
        fn((std::size_t(i) * n + j) * nz + k, Vec3{kx, ky, kz}, i, j, k);
      }
    }
  }
}

/// Calls fn(idx, x) for every grid node.
template <class Fn>
void for_each_node(const GridSpec& g, Fn&& fn) {
  const int n = g.n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) fn((std::size_t(i) * n + j) * n + k, g.node(i, j, k));
}

inline ScalarField to_spectral(const PhysicalScalar& p) {
  ScalarField s = zero_scalar(p.grid);
  forward_fft(p.grid.n, p.data.data(), s.coef.data());
  s.gauge = Gauge::MeanZero;
  return s;
}

inline PhysicalScalar to_physical(const ScalarField& s) {
  PhysicalScalar p = zero_physical_scalar(s.grid);
  inverse_fft(s.grid.n, s.coef.data(), p.data.data());
  return p;
}

inline SpectralField to_spectral(const PhysicalVector& p) {
  SpectralField v = zero_field(p.grid);
  for (int c = 0; c < 3; ++c) forward_fft(p.grid.n, p.data[c].data(), v.comp[c].data());
  return v;
}

inline PhysicalVector to_physical(const SpectralField& v) {
  PhysicalVector p = zero_physical_vector(v.grid);
  for (int c = 0; c < 3; ++c) inverse_fft(v.grid.n, v.comp[c].data(), p.data[c].data());
  return p;
}

inline PhysicalScalar sample_scalar(const GridSpec& g, const std::function<double(const Vec3&)>& f) {
  PhysicalScalar p = zero_physical_scalar(g);
  for_each_node(g, [&](std::size_t idx, const Vec3& x) { p.data[idx] = f(x); });
  return p;
}

inline PhysicalVector sample_vector(const GridSpec& g, const std::function<Vec3(const Vec3&)>& f) {
  PhysicalVector p = zero_physical_vector(g);
  for_each_node(g, [&](std::size_t idx, const Vec3& x) {
    Vec3 v = f(x);
    p.data[0][idx] = v.x;
    p.data[1][idx] = v.y;
    p.data[2][idx] = v.z;
  });
  return p;
}

inline SpectralField spectral_from(const GridSpec& g, const std::function<Vec3(const Vec3&)>& f, double time = 0.0) {
  SpectralField v = to_spectral(sample_vector(g, f));
  v.time = time;
  return v;
}

inline ScalarField scalar_from(const GridSpec& g, const std::function<double(const Vec3&)>& f) {
  return to_spectral(sample_scalar(g, f));
}

// ---- spectral algebra ------------------------------------------------------

inline SpectralField leray_project(const SpectralField& v) {
  SpectralField out = v;
  for_each_mode(v.grid, [&](std::size_t idx, const Vec3& k, int, int, int) {
    double k2 = dot(k, k);
    if (k2 == 0.0) return;
    cplx kv = k.x * v.comp[0][idx] + k.y * v.comp[1][idx] + k.z * v.comp[2][idx];
    for (int c = 0; c < 3; ++c) out.comp[c][idx] = v.comp[c][idx] - k[c] * kv / k2;
  });
  return out;
}

inline ScalarField divergence(const SpectralField& v) {
  ScalarField d = zero_scalar(v.grid);
  const cplx I(0.0, 1.0);
  for_each_mode(v.grid, [&](std::size_t idx, const Vec3& k, int, int, int) {
    d.coef[idx] = I * (k.x * v.comp[0][idx] + k.y * v.comp[1][idx] + k.z * v.comp[2][idx]);
  });
  d.time = v.time;
  return d;
}

inline SpectralField gradient(const ScalarField& s) {
  SpectralField g = zero_field(s.grid);
  const cplx I(0.0, 1.0);
  for_each_mode(s.grid, [&](std::size_t idx, const Vec3& k, int, int, int) {
    for (int c = 0; c < 3; ++c) g.comp[c][idx] = I * k[c] * s.coef[idx];
  });
  g.time = s.time;
  return g;
}

inline SpectralField curl(const SpectralField& v) {
  SpectralField w = zero_field(v.grid);
  const cplx I(0.0, 1.0);
  for_each_mode(v.grid, [&](std::size_t idx, const Vec3& k, int, int, int) {
    const cplx a = v.comp[0][idx], b = v.comp[1][idx], c = v.comp[2][idx];
    w.comp[0][idx] = I * (k.y * c - k.z * b);
    w.comp[1][idx] = I * (k.z * a - k.x * c);
    w.comp[2][idx] = I * (k.x * b - k.y * a);
  });
  w.time = v.time;
  return w;
}

/// Partial derivative along axis `dir` of one component, returned as a scalar field.
inline ScalarField partial(const SpectralField& v, int comp, int dir) {
  ScalarField d = zero_scalar(v.grid);
  const cplx I(0.0, 1.0);
  for_each_mode(v.grid, [&](std::size_t idx, const Vec3& k, int, int, int) { d.coef[idx] = I * k[dir] * v.comp[comp][idx]; });
  return d;
}

inline void apply_heat(SpectralField& v, double t) {
  for_each_mode(v.grid, [&](std::size_t idx, const Vec3& k, int, int, int) {
    double f = std::exp(-dot(k, k) * t);
    for (int c = 0; c < 3; ++c) v.comp[c][idx] *= f;
  });
}

inline void apply_heat(ScalarField& s, double t) {
  for_each_mode(s.grid, [&](std::size_t idx, const Vec3& k, int, int, int) { s.coef[idx] *= std::exp(-dot(k, k) * t); });
}

inline void dealias(SpectralField& v) {
  for_each_mode(v.grid, [&](std::size_t idx, const Vec3&, int i, int j, int k) {
    if (!v.grid.dealias_keep(i, j, k))
      for (int c = 0; c < 3; ++c) v.comp[c][idx] = 0.0;
  });
}

inline void dealias(ScalarField& s) {
  for_each_mode(s.grid, [&](std::size_t idx, const Vec3&, int i, int j, int k) {
    if (!s.grid.dealias_keep(i, j, k)) s.coef[idx] = 0.0;
  });
}

inline SpectralField add(const SpectralField& a, const SpectralField& b, double sb = 1.0) {
  SpectralField out = a;
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < out.comp[c].size(); ++i) out.comp[c][i] += sb * b.comp[c][i];
  return out;
}

inline SpectralField scaled(const SpectralField& a, double s) {
  SpectralField out = a;
  for (auto& c : out.comp)
    for (auto& x : c) x *= s;
  return out;
}

inline ScalarField add(const ScalarField& a, const ScalarField& b, double sb = 1.0) {
  ScalarField out = a;
  for (std::size_t i = 0; i < out.coef.size(); ++i) out.coef[i] += sb * b.coef[i];
  return out;
}

/// Plancherel inner product: integral of u . v over the box.
inline double inner_product(const SpectralField& u, const SpectralField& v) {
  const GridSpec& g = u.grid;
  double s = 0.0;
  for_each_mode(g, [&](std::size_t idx, const Vec3&, int, int, int k) {
    double w = half_spectrum_weight(g, k);
    for (int c = 0; c < 3; ++c) s += w * std::real(u.comp[c][idx] * std::conj(v.comp[c][idx]));
  });
  return s * g.volume();
}

inline double inner_product(const ScalarField& u, const ScalarField& v) {
  const GridSpec& g = u.grid;
  double s = 0.0;
  for_each_mode(g, [&](std::size_t idx, const Vec3&, int, int, int k) {
    s += half_spectrum_weight(g, k) * std::real(u.coef[idx] * std::conj(v.coef[idx]));
  });
  return s * g.volume();
}

/// Half the squared L2 norm over the box.
inline double kinetic_energy(const SpectralField& v) { return 0.5 * inner_product(v, v); }

/// Squared L2 norm of the velocity gradient over the box.
inline double gradient_energy(const SpectralField& v) {
  const GridSpec& g = v.grid;
  double s = 0.0;
  for_each_mode(g, [&](std::size_t idx, const Vec3& kv, int, int, int k) {
    double w = half_spectrum_weight(g, k) * dot(kv, kv);
    for (int c = 0; c < 3; ++c) s += w * std::norm(v.comp[c][idx]);
  });
  return s * g.volume();
}

inline Vec3 mean_vector(const SpectralField& v) {
  return {v.comp[0][0].real(), v.comp[1][0].real(), v.comp[2][0].real()};
}

/// max_k |k . v(k)| / max_k |v(k)|, with wavevectors in units of the fundamental.
inline double divergence_residual(const SpectralField& v) {
  double num = 0.0, den = 0.0;
  const double k0 = 2.0 * kPi / v.grid.length;
  for_each_mode(v.grid, [&](std::size_t idx, const Vec3& k, int, int, int) {
    cplx kv = k.x * v.comp[0][idx] + k.y * v.comp[1][idx] + k.z * v.comp[2][idx];
    num = std::max(num, std::abs(kv) / k0);
    for (int c = 0; c < 3; ++c) den = std::max(den, std::abs(v.comp[c][idx]));
  });
  return den == 0.0 ? 0.0 : num / den;
}

inline double max_abs_coef(const SpectralField& v) {
  double m = 0.0;
  for (auto& c : v.comp)
    for (auto& x : c) m = std::max(m, std::abs(x));
  return m;
}

inline double max_abs_diff(const SpectralField& a, const SpectralField& b) {
  double m = 0.0;
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < a.comp[c].size(); ++i) m = std::max(m, std::abs(a.comp[c][i] - b.comp[c][i]));
  return m;
}

inline double max_abs(const PhysicalScalar& p) {
  double m = 0.0;
  for (double x : p.data) m = std::max(m, std::abs(x));
  return m;
}

inline PhysicalScalar magnitude(const PhysicalVector& p) {
  PhysicalScalar m = zero_physical_scalar(p.grid);
  for (std::size_t i = 0; i < m.data.size(); ++i)
    m.data[i] = std::sqrt(p.data[0][i] * p.data[0][i] + p.data[1][i] * p.data[1][i] + p.data[2][i] * p.data[2][i]);
  return m;
}

inline double max_magnitude(const PhysicalVector& p) { return max_abs(magnitude(p)); }

/// Frobenius magnitude of the velocity gradient at each node.
inline PhysicalScalar gradient_magnitude_sq(const SpectralField& v) {
  PhysicalScalar out = zero_physical_scalar(v.grid);
  for (int c = 0; c < 3; ++c)
    for (int d = 0; d < 3; ++d) {
      PhysicalScalar p = to_physical(partial(v, c, d));
      for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += p.data[i] * p.data[i];
    }
  return out;
}

/// Copies coefficients onto a grid with the same box and a different resolution; modes that
/// do not fit are dropped, new modes are zero.
inline std::vector<cplx> resample_coef(const GridSpec& from, const std::vector<cplx>& coef, const GridSpec& to) {
  std::vector<cplx> out(to.spectral_size(), cplx(0.0));
  const int half = std::min(from.n, to.n) / 2;
  auto slot = [](int m, int n) { return m < 0 ? m + n : m; };
  for (int a = -half + 1; a < half; ++a)
    for (int b = -half + 1; b < half; ++b)
      for (int c = 0; c < half; ++c)
        out[to.cindex(slot(a, to.n), slot(b, to.n), c)] = coef[from.cindex(slot(a, from.n), slot(b, from.n), c)];
  return out;
}

inline SpectralField resample(const SpectralField& v, int n) {
  GridSpec g = v.grid;
  g.n = n;
  SpectralField out = zero_field(g);
  for (int c = 0; c < 3; ++c) out.comp[c] = resample_coef(v.grid, v.comp[c], g);
  out.time = v.time;
  return out;
}

inline ScalarField resample(const ScalarField& s, int n) {
  GridSpec g = s.grid;
  g.n = n;
  ScalarField out = s;
  out.grid = g;
  out.coef = resample_coef(s.grid, s.coef, g);
  return out;
}

// ---- off-grid evaluation ---------------------------------------------------

namespace detail {

/// Phase table exp(i k (x + L/2)) for the slots of one axis at the given coordinates.
inline std::vector<cplx> axis_phases(const GridSpec& g, const std::vector<double>& xs, int slots) {
  std::vector<cplx> t(xs.size() * slots);
  for (std::size_t a = 0; a < xs.size(); ++a)
    for (int s = 0; s < slots; ++s) {
      double k = g.wavenumber(s);
      double ph = k * (xs[a] + 0.5 * g.length);
      t[a * slots + s] = cplx(std::cos(ph), std::sin(ph));
    }
  return t;
}

}  // namespace detail

/// Trigonometric interpolant of a coefficient array on the tensor product xs × ys × zs.
/// Values are returned in (x, y, z) row-major order.
inline std::vector<double> evaluate_tensor(const GridSpec& g, const std::vector<cplx>& coef, const std::vector<double>& xs,
                                           const std::vector<double>& ys, const std::vector<double>& zs) {
  const int n = g.n, nz = g.nz();
  const std::size_t mx = xs.size(), my = ys.size(), mz = zs.size();
  auto px = detail::axis_phases(g, xs, n);
  auto py = detail::axis_phases(g, ys, n);
  auto pz = detail::axis_phases(g, zs, nz);
  // contract z (half spectrum, Hermitian weights applied on the real part)
  std::vector<cplx> a(std::size_t(n) * n * mz);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const cplx* row = &coef[(std::size_t(i) * n + j) * nz];
      for (std::size_t c = 0; c < mz; ++c) {
        cplx s = 0.0;
        for (int k = 0; k < nz; ++k) s += half_spectrum_weight(g, k) * row[k] * pz[c * nz + k];
        a[(std::size_t(i) * n + j) * mz + c] = s;
      }
    }
  // contract y
  std::vector<cplx> b(std::size_t(n) * my * mz);
  for (int i = 0; i < n; ++i)
    for (std::size_t bj = 0; bj < my; ++bj) {
      cplx* out = &b[(std::size_t(i) * my + bj) * mz];
      for (std::size_t c = 0; c < mz; ++c) out[c] = 0.0;
      for (int j = 0; j < n; ++j) {
        cplx ph = py[bj * n + j];
        const cplx* in = &a[(std::size_t(i) * n + j) * mz];
        for (std::size_t c = 0; c < mz; ++c) out[c] += ph * in[c];
      }
    }
  // contract x; the real part recovers the Hermitian sum
  std::vector<double> vals(mx * my * mz, 0.0);
  for (std::size_t ai = 0; ai < mx; ++ai)
    for (int i = 0; i < n; ++i) {
      cplx ph = px[ai * n + i];
      const cplx* in = &b[std::size_t(i) * my * mz];
      double* out = &vals[ai * my * mz];
      for (std::size_t q = 0; q < my * mz; ++q) out[q] += std::real(ph * in[q]);
    }
  return vals;
}

inline double evaluate_at(const GridSpec& g, const std::vector<cplx>& coef, const Vec3& x) {
  return evaluate_tensor(g, coef, {x.x}, {x.y}, {x.z})[0];
}

inline Vec3 evaluate_at(const SpectralField& v, const Vec3& x) {
  return {evaluate_at(v.grid, v.comp[0], x), evaluate_at(v.grid, v.comp[1], x), evaluate_at(v.grid, v.comp[2], x)};
}

inline double evaluate_at(const ScalarField& s, const Vec3& x) { return evaluate_at(s.grid, s.coef, x); }

}  // namespace nsreg
