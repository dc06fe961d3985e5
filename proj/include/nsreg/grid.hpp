#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>

#include "nsreg/error.hpp"

namespace nsreg {

inline constexpr double kPi = std::numbers::pi;

struct Vec3 {
  double x = 0, y = 0, z = 0;

  double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }
};

inline Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
inline Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
inline Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
inline Vec3 operator*(double s, Vec3 a) { return a *= s; }
inline Vec3 operator*(Vec3 a, double s) { return a *= s; }
inline Vec3 operator/(Vec3 a, double s) { return a *= (1.0 / s); }
inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

using Mat3 = std::array<std::array<double, 3>, 3>;

/// Periodic box [-L/2, L/2)^3 sampled by N^3 nodes; node j sits at -L/2 + j*L/N.
struct GridSpec {
  int n = 32;
  double length = 16.0 * kPi;
  double dealias_fraction = 2.0 / 3.0;

  void validate() const {
    require(n >= 8 && (n & (n - 1)) == 0, ErrorKind::InvalidArgument,
            "grid resolution must be a power of two >= 8, got " + std::to_string(n));
    require(length > 0, ErrorKind::InvalidArgument, "box length must be positive");
    require(dealias_fraction > 0 && dealias_fraction <= 1, ErrorKind::InvalidArgument,
            "dealias fraction must lie in (0,1]");
  }

  double spacing() const { return length / n; }
  double cell_volume() const { double h = spacing(); return h * h * h; }
  double volume() const { return length * length * length; }
  std::size_t real_size() const { return std::size_t(n) * n * n; }
  int nz() const { return n / 2 + 1; }
  std::size_t spectral_size() const { return std::size_t(n) * n * nz(); }

  double coord(int j) const { return -0.5 * length + j * spacing(); }
  Vec3 node(int i, int j, int k) const { return {coord(i), coord(j), coord(k)}; }
  std::size_t rindex(int i, int j, int k) const { return (std::size_t(i) * n + j) * n + k; }
  std::size_t cindex(int i, int j, int k) const { return (std::size_t(i) * n + j) * nz() + k; }

  /// Signed integer wavenumber of FFT slot i.
  int mode(int i) const { return i < n / 2 ? i : i - n; }
  double wavenumber(int i) const { return 2.0 * kPi * mode(i) / length; }
  bool is_nyquist(int i) const { return i == n / 2; }

  /// Kept by the cubic dealiasing mask.
  bool dealias_keep(int i, int j, int k) const {
    double cut = dealias_fraction * n / 2.0;
    return std::abs(mode(i)) < cut && std::abs(mode(j)) < cut && k < cut;
  }

  /// Minimal-image displacement from a to b on the torus.
  Vec3 displacement(const Vec3& a, const Vec3& b) const {
    Vec3 d = b - a;
    for (int c = 0; c < 3; ++c) d[c] -= length * std::round(d[c] / length);
    return d;
  }

  bool operator==(const GridSpec& o) const {
    return n == o.n && length == o.length && dealias_fraction == o.dealias_fraction;
  }
};

/// Hermitian weight of an r2c slot for sums over the full spectrum.
inline double half_spectrum_weight(const GridSpec& g, int k) {
  return (k == 0 || k == g.n / 2) ? 1.0 : 2.0;
}

}  // namespace nsreg
