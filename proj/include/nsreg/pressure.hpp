#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "nsreg/analytic.hpp"
#include "nsreg/field.hpp"
#include "nsreg/norms.hpp"

namespace nsreg {

namespace detail {

/// The six products v_i v_j (i <= j) at the nodes, in the order 00 01 02 11 12 22.
inline std::array<PhysicalScalar, 6> velocity_products(const PhysicalVector& p) {
  std::array<PhysicalScalar, 6> out;
  int slot = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      out[slot] = zero_physical_scalar(p.grid);
      for (std::size_t a = 0; a < p.data[i].size(); ++a) out[slot].data[a] = p.data[i][a] * p.data[j][a];
      ++slot;
    }
  return out;
}

/// sum_ij -k_i k_j / |k|^2 of the product coefficients; the k = 0 slot is left at zero.
inline ScalarField riesz_contract(const GridSpec& g, const std::array<std::vector<cplx>, 6>& prod) {
  ScalarField p = zero_scalar(g);
  for_each_mode(g, [&](std::size_t idx, const Vec3& k, int, int, int) {
    double k2 = dot(k, k);
    if (k2 == 0.0) return;
    cplx s = k.x * k.x * prod[0][idx] + k.y * k.y * prod[3][idx] + k.z * k.z * prod[5][idx] +
             2.0 * (k.x * k.y * prod[1][idx] + k.x * k.z * prod[2][idx] + k.y * k.z * prod[4][idx]);
    p.coef[idx] = -s / k2;
  });
  return p;
}

inline ScalarField riesz_of_products(const PhysicalVector& v, const PhysicalScalar* weight, bool dealias_out) {
  const GridSpec& g = v.grid;
  auto prods = velocity_products(v);
  std::array<std::vector<cplx>, 6> coef;
  for (int s = 0; s < 6; ++s) {
    if (weight)
      for (std::size_t a = 0; a < prods[s].data.size(); ++a) prods[s].data[a] *= weight->data[a];
    coef[s].resize(g.spectral_size());
    forward_fft(g.n, prods[s].data.data(), coef[s].data());
  }
  ScalarField p = riesz_contract(g, coef);
  if (dealias_out) dealias(p);
  return p;
}

}  // namespace detail

/// Mean-zero pi = R_i R_j (v_i v_j) with the 2/3 rule on the product.
inline ScalarField global_pressure(const SpectralField& v) {
  SpectralField w = v;
  dealias(w);
  ScalarField p = detail::riesz_of_products(to_physical(w), nullptr, true);
  p.time = v.time;
  p.gauge = Gauge::MeanZero;
  return p;
}

/// Same operator evaluated without truncation: the field is prolonged to twice the
/// resolution so the product is represented exactly.
inline ScalarField exact_pressure(const SpectralField& v) {
  SpectralField fine = resample(v, 2 * v.grid.n);
  ScalarField p = detail::riesz_of_products(to_physical(fine), nullptr, false);
  p.time = v.time;
  return p;
}

/// K_ij(x) = (3 x_i x_j / |x|^2 - delta_ij) / (4 pi |x|^3).
inline Mat3 kernel_k(const Vec3& x) {
  double r2 = dot(x, x);
  require(r2 > 0.0, ErrorKind::SingularPoint, "pressure kernel is singular at the origin");
  double r = std::sqrt(r2);
  double pre = 1.0 / (4.0 * kPi * r2 * r);
  Mat3 k{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) k[i][j] = pre * (3.0 * x[i] * x[j] / r2 - (i == j ? 1.0 : 0.0));
  return k;
}

/// Upper bound for |grad K| at distance d.
inline double kernel_gradient_bound(double d) { return 6.0 / (kPi * d * d * d * d); }

struct PressureOptions {
  double transition_cells = 12.0;  // width of the cutoff ramp outside B_{2r}, in grid cells
  int near_subcells = 4;          // far-field cells near the cutoff are split to width <= r / near_subcells
  double point_spacing = 0.25;    // evaluation lattice on B_r, in units of r
  double resolution_tolerance = 1e-8;
};

struct PressureDecomposition {
  Vec3 center{};
  double radius = 0.0;
  double time = 0.0;
  double cutoff_inner = 0.0;
  double cutoff_outer = 0.0;
  std::vector<Vec3> points;
  std::vector<double> local;   // p_loc at the points
  std::vector<double> far;     // p_far at the points
  std::vector<double> global;  // the exact spectral pressure at the points
  double gauge_c = 0.0;
  double deviation = 0.0;      // max |global - local - far - c| over the points
  double tail_estimate = 0.0;
  double cutoff_tail = 0.0;    // spectral energy fraction of the cutoff above 2/3 of the band
  ScalarField p_loc;           // spectral on the refined grid; meaningful on B_r
};

namespace detail {

inline std::vector<Vec3> ball_lattice(const Vec3& c, double r, double step) {
  std::vector<Vec3> pts;
  int m = int(std::floor(1.0 / step + 1e-9));
  for (int i = -m; i <= m; ++i)
    for (int j = -m; j <= m; ++j)
      for (int k = -m; k <= m; ++k) {
        Vec3 d = r * step * Vec3{double(i), double(j), double(k)};
        if (norm(d) <= r * (1.0 + 1e-12)) pts.push_back(c + d);
      }
  return pts;
}

inline double contract(const Mat3& k, const double* vv) {
  // vv in the order 00 01 02 11 12 22
  return k[0][0] * vv[0] + k[1][1] * vv[3] + k[2][2] * vv[5] + 2.0 * (k[0][1] * vv[1] + k[0][2] * vv[2] + k[1][2] * vv[4]);
}

}  // namespace detail

/// p_loc = R_i R_j (psi v_i v_j) with psi = 1 on B_{2r}(x0); p_far is the cell sum of
/// (1 - psi) [K(x - y) - K(x0 - y)] : v v over the box centered at x0.
inline PressureDecomposition decompose_pressure(const SpectralField& v, const Vec3& x0, double r, double t = 0.0,
                                                const PressureOptions& opt = {}) {
  const GridSpec& g = v.grid;
  require(r > 0, ErrorKind::InvalidArgument, "radius must be positive");
  require(6.0 * r <= g.length, ErrorKind::BallTooLarge, "B_3r does not fit in the box");
  const double h = g.spacing();
  PressureDecomposition out;
  out.center = x0;
  out.radius = r;
  out.time = t;
  out.cutoff_inner = 2.0 * r;
  out.cutoff_outer = 2.0 * r + opt.transition_cells * h;
  require(out.cutoff_outer < 0.5 * g.length, ErrorKind::BallTooLarge, "cutoff ramp leaves the box");
  auto psi = [&](const Vec3& y) { return radial_bump(norm(g.displacement(x0, y)), out.cutoff_inner, out.cutoff_outer); };

  // local part on the doubled grid, where v v is exact
  SpectralField fine = resample(v, 2 * g.n);
  const GridSpec& gf = fine.grid;
  PhysicalVector vf = to_physical(fine);
  PhysicalScalar wpsi = sample_scalar(gf, psi);
  {
    ScalarField ps = to_spectral(wpsi);
    double tot = 0.0, hi = 0.0;
    const double cut = gf.n / 3.0;
    for_each_mode(gf, [&](std::size_t idx, const Vec3&, int i, int j, int k) {
      double e = half_spectrum_weight(gf, k) * std::norm(ps.coef[idx]);
      tot += e;
      if (std::abs(gf.mode(i)) > cut || std::abs(gf.mode(j)) > cut || k > cut) hi += e;
    });
    out.cutoff_tail = tot > 0 ? hi / tot : 0.0;
    require(out.cutoff_tail <= opt.resolution_tolerance, ErrorKind::SingularQuadrature,
            "cutoff is not resolved: spectral tail " + std::to_string(out.cutoff_tail));
  }
  out.p_loc = detail::riesz_of_products(vf, &wpsi, false);
  out.p_loc.time = t;
  ScalarField pg = detail::riesz_of_products(vf, nullptr, false);

  out.points = detail::ball_lattice(x0, r, opt.point_spacing);
  const std::size_t np = out.points.size();
  {
    // the points sit on a cubic lattice, so one tensor evaluation covers them all
    const int m = int(std::floor(1.0 / opt.point_spacing + 1e-9));
    std::vector<double> ax[3];
    for (int c = 0; c < 3; ++c)
      for (int i = -m; i <= m; ++i) ax[c].push_back(x0[c] + r * opt.point_spacing * i);
    auto loc = evaluate_tensor(gf, out.p_loc.coef, ax[0], ax[1], ax[2]);
    auto glo = evaluate_tensor(gf, pg.coef, ax[0], ax[1], ax[2]);
    const std::size_t w = 2 * m + 1;
    for (const Vec3& x : out.points) {
      std::size_t q[3];
      for (int c = 0; c < 3; ++c) q[c] = std::size_t(std::lround((x[c] - x0[c]) / (r * opt.point_spacing))) + m;
      std::size_t at = (q[0] * w + q[1]) * w + q[2];
      out.local.push_back(loc[at]);
      out.global.push_back(glo[at]);
    }
  }

  // far part: (weight, displacement from x0, v v) for every quadrature cell
  std::vector<double> wts;
  std::vector<Vec3> disp;
  std::vector<double> vvs;
  auto push = [&](double w, const Vec3& d, const double* u) {
    if (w == 0.0) return;
    wts.push_back(w);
    disp.push_back(d);
    double vv[6] = {u[0] * u[0], u[0] * u[1], u[0] * u[2], u[1] * u[1], u[1] * u[2], u[2] * u[2]};
    vvs.insert(vvs.end(), vv, vv + 6);
  };
  PhysicalVector vc = to_physical(v);
  const double half = 0.5 * g.length;
  // graded splitting: a cell at distance rho is cut into s^3 pieces with s the power of two
  // reaching width (rho - r) / near_subcells, capped at width r / near_subcells
  auto pow2ceil = [](double x) { int s = 1; while (s < x && s < 1024) s *= 2; return s; };
  const int smax = pow2ceil(opt.near_subcells * h / r);
  auto level_of = [&](double rho) {
    double gap = std::max(rho - r - h, r);
    return std::min(smax, pow2ceil(opt.near_subcells * h / gap));
  };
  Vec3 base;  // coarse node nearest to x0
  for (int c = 0; c < 3; ++c) base[c] = -half + std::round((x0[c] + half) / h) * h;
  std::map<int, std::vector<std::array<int, 3>>> split;  // level -> cell offsets from base
  for_each_node(g, [&](std::size_t idx, const Vec3& y) {
    Vec3 d = g.displacement(x0, y);
    double rho = norm(d);
    if (rho + h < out.cutoff_inner) return;  // psi = 1 on the whole cell
    int s = level_of(rho);
    if (s > 1) {
      std::array<int, 3> off;
      for (int c = 0; c < 3; ++c) off[c] = int(std::lround((x0[c] + d[c] - base[c]) / h));
      split[s].push_back(off);
      return;
    }
    double u[3] = {vc.data[0][idx], vc.data[1][idx], vc.data[2][idx]};
    // nodes on the cube boundary belong in equal parts to each face image
    int on_face[3];
    for (int c = 0; c < 3; ++c) on_face[c] = std::abs(std::abs(d[c]) - half) < 1e-9 * g.length;
    double w = (1.0 - radial_bump(rho, out.cutoff_inner, out.cutoff_outer)) * g.cell_volume() /
               (1 << (on_face[0] + on_face[1] + on_face[2]));
    for (int m = 0; m < 8; ++m) {
      bool skip = false;
      Vec3 dd = d;
      for (int c = 0; c < 3; ++c)
        if ((m >> c) & 1) {
          if (!on_face[c]) skip = true;
          dd[c] = -dd[c];
        }
      if (!skip) push(w, dd, u);
    }
  });
  for (const auto& [sub, cells] : split) {
    // one trigonometric interpolation on the sub-lattice of the cube holding this level
    int span = 0;
    for (const auto& o : cells) span = std::max({span, std::abs(o[0]), std::abs(o[1]), std::abs(o[2])});
    const double hs = h / sub;
    std::vector<double> sax[3];
    for (int c = 0; c < 3; ++c)
      for (int j = -span; j <= span; ++j)
        for (int q = 0; q < sub; ++q) sax[c].push_back(base[c] + j * h + (q + 0.5) * hs - 0.5 * h);
    std::array<std::vector<double>, 3> vals;
    for (int c = 0; c < 3; ++c) vals[c] = evaluate_tensor(g, v.comp[c], sax[0], sax[1], sax[2]);
    const std::size_t sw = sax[0].size();
    for (const auto& o : cells)
      for (int a = 0; a < sub; ++a)
        for (int b = 0; b < sub; ++b)
          for (int e = 0; e < sub; ++e) {
            std::size_t ia = std::size_t(o[0] + span) * sub + a, ib = std::size_t(o[1] + span) * sub + b,
                        ie = std::size_t(o[2] + span) * sub + e;
            Vec3 dd = Vec3{sax[0][ia], sax[1][ib], sax[2][ie]} - x0;
            double w = (1.0 - radial_bump(norm(dd), out.cutoff_inner, out.cutoff_outer)) * hs * hs * hs;
            std::size_t q = (ia * sw + ib) * sw + ie;
            double u[3] = {vals[0][q], vals[1][q], vals[2][q]};
            push(w, dd, u);
          }
  }
  double anchor = 0.0;
  for (std::size_t q = 0; q < wts.size(); ++q) anchor += wts[q] * detail::contract(kernel_k(-disp[q]), &vvs[6 * q]);
  out.far.assign(np, 0.0);
  for (std::size_t a = 0; a < np; ++a) {
    const Vec3 xr = out.points[a] - x0;
    double s = 0.0;
    for (std::size_t q = 0; q < wts.size(); ++q) s += wts[q] * detail::contract(kernel_k(xr - disp[q]), &vvs[6 * q]);
    out.far[a] = s - anchor;
  }

  // mean-square optimal constant over the points
  double mean = 0.0;
  for (std::size_t a = 0; a < np; ++a) mean += out.global[a] - out.local[a] - out.far[a];
  out.gauge_c = np ? mean / np : 0.0;
  for (std::size_t a = 0; a < np; ++a)
    out.deviation = std::max(out.deviation, std::abs(out.global[a] - out.local[a] - out.far[a] - out.gauge_c));

  // dropped far field beyond the box: sum of r |grad K| over unit balls outside the half-width
  GridMagnitude mag(magnitude(vc));
  double u2 = std::pow(uloc_norm(mag, 2.0, std::min(1.0, 0.25 * g.length)).value, 2);
  double R = 0.5 * g.length;
  out.tail_estimate = R > std::sqrt(3.0) ? 24.0 * r * u2 / (R - std::sqrt(3.0)) : kInf;
  return out;
}

/// Pressure gauge anchored on a ball: subtracts the ball mean.
inline ScalarField anchor_on_ball(const ScalarField& p, const Vec3& c, double r) {
  BallSamples s = sample_on_ball(p, c, r);
  ScalarField out = p;
  out.coef[0] -= s.integral() / ball_volume(r);
  out.gauge = Gauge::BallAnchored;
  out.anchor_center = c;
  out.anchor_radius = r;
  return out;
}

}  // namespace nsreg
