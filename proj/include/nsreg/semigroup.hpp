#pragma once

#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "nsreg/field.hpp"
#include "nsreg/norms.hpp"

namespace nsreg {

// ---- heat flow ---------------------------------------------------------------

inline SpectralField heat_flow(const SpectralField& f, double t) {
  require(t >= 0, ErrorKind::NegativeTime, "heat flow needs t >= 0, got " + std::to_string(t));
  SpectralField out = f;
  if (t > 0) apply_heat(out, t);
  out.time = f.time + t;
  return out;
}

inline ScalarField heat_flow(const ScalarField& f, double t) {
  require(t >= 0, ErrorKind::NegativeTime, "heat flow needs t >= 0, got " + std::to_string(t));
  ScalarField out = f;
  if (t > 0) apply_heat(out, t);
  out.time = f.time + t;
  return out;
}

// ---- time series and tensors -------------------------------------------------

/// Fields on a uniform time mesh starting at 0.
template <class F>
struct Series {
  std::vector<double> times;
  std::vector<F> values;

  double step() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
  std::size_t size() const { return times.size(); }
};

using FieldSeries = Series<SpectralField>;

/// F_ij stored at 3 i + j.
struct TensorField {
  GridSpec grid;
  std::array<std::vector<cplx>, 9> comp;
};

using TensorSeries = Series<TensorField>;

inline TensorField zero_tensor(const GridSpec& g) {
  TensorField t;
  t.grid = g;
  for (auto& c : t.comp) c.assign(g.spectral_size(), cplx(0.0));
  return t;
}

/// (div F)_i = d_j F_ij
inline SpectralField tensor_divergence(const TensorField& f) {
  SpectralField out = zero_field(f.grid);
  for_each_mode(f.grid, [&](std::size_t idx, const Vec3& k, int, int, int) {
    for (int i = 0; i < 3; ++i) {
      cplx s = 0.0;
      for (int j = 0; j < 3; ++j) s += cplx(0.0, k[j]) * f.comp[3 * i + j][idx];
      out.comp[i][idx] = s;
    }
  });
  return out;
}

/// a_i b_j with the 2/3 rule on the product.
inline TensorField outer_product(const SpectralField& a, const SpectralField& b) {
  SpectralField da = a, db = b;
  dealias(da);
  dealias(db);
  PhysicalVector pa = to_physical(da), pb = to_physical(db);
  TensorField t = zero_tensor(a.grid);
  PhysicalScalar prod = zero_physical_scalar(a.grid);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      for (std::size_t n = 0; n < prod.data.size(); ++n) prod.data[n] = pa.data[i][n] * pb.data[j][n];
      ScalarField s = to_spectral(prod);
      dealias(s);
      t.comp[3 * i + j] = std::move(s.coef);
    }
  return t;
}

inline TensorField tensor_add(const TensorField& a, const TensorField& b, double sb = 1.0) {
  TensorField out = a;
  for (int c = 0; c < 9; ++c)
    for (std::size_t i = 0; i < out.comp[c].size(); ++i) out.comp[c][i] += sb * b.comp[c][i];
  return out;
}

inline FieldSeries constant_series(const SpectralField& f, double T, int mesh) {
  FieldSeries s;
  for (int n = 0; n <= mesh; ++n) {
    s.times.push_back(T * n / mesh);
    s.values.push_back(f);
  }
  return s;
}

inline TensorSeries constant_series(const TensorField& f, double T, int mesh) {
  TensorSeries s;
  for (int n = 0; n <= mesh; ++n) {
    s.times.push_back(T * n / mesh);
    s.values.push_back(f);
  }
  return s;
}

// ---- Duhamel potentials --------------------------------------------------------

namespace detail {

/// phi1(z) = (1 - e^{-z}) / z and psi(z) = (1 - e^{-z}(1 + z)) / z^2, series near 0.
inline void exp_weights(double z, double& phi1, double& psi) {
  if (z < 0.1) {
    double term = 1.0, p1 = 0.0, ps = 0.0;
    // phi1 = sum (-z)^n / (n+1)!, psi = sum (-z)^n (n+1) / (n+2)!
    double fact = 1.0;  // n!
    for (int n = 0; n < 14; ++n) {
      p1 += term / (fact * (n + 1));
      ps += term * (n + 1) / (fact * (n + 1) * (n + 2));
      term *= -z;
      fact *= (n + 1);
    }
    phi1 = p1;
    psi = ps;
    return;
  }
  double e = std::exp(-z);
  phi1 = (1.0 - e) / z;
  psi = (1.0 - e * (1.0 + z)) / (z * z);
}

/// Phi(t_n) for n = 0..count-1 of int_0^t e^{(t-s) lap} g(s) ds with g linear on each
/// sub-interval (exponential trapezoid). g must already be projected.
inline std::vector<SpectralField> duhamel_path(const std::vector<SpectralField>& g, double ds, std::size_t count) {
  const GridSpec& grid = g.front().grid;
  std::vector<SpectralField> out;
  out.reserve(count);
  SpectralField cur = zero_field(grid);
  out.push_back(cur);
  // per-mode weights are reused for every interval
  std::vector<double> decay(grid.spectral_size()), w0(grid.spectral_size()), w1(grid.spectral_size());
  for_each_mode(grid, [&](std::size_t idx, const Vec3& k, int, int, int) {
    double z = dot(k, k) * ds, p1, ps;
    exp_weights(z, p1, ps);
    decay[idx] = std::exp(-z);
    w0[idx] = ds * ps;
    w1[idx] = ds * (p1 - ps);
  });
  for (std::size_t n = 0; n + 1 < count; ++n) {
    for (int c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < decay.size(); ++i)
        cur.comp[c][i] = decay[i] * cur.comp[c][i] + w0[i] * g[n].comp[c][i] + w1[i] * g[n + 1].comp[c][i];
    out.push_back(cur);
  }
  return out;
}

inline std::size_t mesh_index(const std::vector<double>& times, double t) {
  for (std::size_t i = 0; i < times.size(); ++i)
    if (std::abs(times[i] - t) <= 1e-12 * std::max(1.0, std::abs(t))) return i;
  throw Error(ErrorKind::InvalidArgument, "t = " + std::to_string(t) + " is not a mesh time");
}

inline SpectralField duhamel_with_estimate(const std::vector<SpectralField>& g, double ds, std::size_t last,
                                              double& err) {
  auto fine = duhamel_path(g, ds, last + 1);
  err = 0.0;
  if (last >= 4 && last % 2 == 0) {
    std::vector<SpectralField> coarse_g;
    for (std::size_t n = 0; n <= last; n += 2) coarse_g.push_back(g[n]);
    auto coarse = duhamel_path(coarse_g, 2 * ds, coarse_g.size());
    SpectralField d = add(fine.back(), coarse.back(), -1.0);
    err = std::sqrt(inner_product(d, d)) / 3.0;  // Richardson for a second-order rule
  }
  return fine.back();
}

}  // namespace detail

struct DuhamelResult {
  SpectralField value;
  double quadrature_error = 0.0;  // L2 estimate from halving the mesh; 0 when not available
};

/// int_0^t e^{(t-s) lap} P f(s) ds on the series mesh.
inline DuhamelResult phi0(const FieldSeries& f, double t) {
  require(f.size() >= 4, ErrorKind::MeshTooCoarse, "Duhamel integral needs at least 4 time samples");
  std::size_t last = detail::mesh_index(f.times, t);
  require(last + 1 >= 4, ErrorKind::MeshTooCoarse, "fewer than 4 samples in [0, t]");
  std::vector<SpectralField> g;
  for (std::size_t n = 0; n <= last; ++n) g.push_back(leray_project(f.values[n]));
  DuhamelResult r;
  r.value = detail::duhamel_with_estimate(g, f.step(), last, r.quadrature_error);
  r.value.time = t;
  return r;
}

/// int_0^t e^{(t-s) lap} P div F(s) ds.
inline DuhamelResult phi1(const TensorSeries& F, double t) {
  require(F.size() >= 4, ErrorKind::MeshTooCoarse, "Duhamel integral needs at least 4 time samples");
  std::size_t last = detail::mesh_index(F.times, t);
  require(last + 1 >= 4, ErrorKind::MeshTooCoarse, "fewer than 4 samples in [0, t]");
  std::vector<SpectralField> g;
  for (std::size_t n = 0; n <= last; ++n) g.push_back(leray_project(tensor_divergence(F.values[n])));
  DuhamelResult r;
  r.value = detail::duhamel_with_estimate(g, F.step(), last, r.quadrature_error);
  r.value.time = t;
  return r;
}

// ---- admissible exponents ------------------------------------------------------

enum class PotentialTag { Phi0, GradPhi0, Phi1 };

struct ExponentTriple {
  double q = 2.0;
  double r_or_m = 2.0;
  PotentialTag tag = PotentialTag::Phi1;
  double horizon = 1.0;
};

struct Admissibility {
  bool accepted = false;
  double t_power = 0.0;
  std::string reason;
};

/// Space-time potential bounds: Phi0 from L^{3/2} L^r, grad Phi0 likewise, Phi1 from L^m.
inline Admissibility admissibility_check(const ExponentTriple& e) {
  Admissibility a;
  const double iq = 1.0 / e.q, ir = 1.0 / e.r_or_m;
  double lower = 0.0, power = 0.0;
  switch (e.tag) {
    case PotentialTag::Phi0:
      lower = 0.6 * ir - 2.0 / 15.0;
      power = 2.5 * (iq - 0.6 * ir + 2.0 / 15.0);
      break;
    case PotentialTag::GradPhi0:
      lower = 0.6 * ir + 1.0 / 15.0;
      power = 2.5 * (iq - 0.6 * ir - 1.0 / 15.0);
      break;
    case PotentialTag::Phi1:
      lower = ir - 0.2;
      power = 2.5 * (iq - ir + 0.2);
      break;
  }
  a.t_power = power;
  if (!(e.r_or_m > 1.0 && e.r_or_m <= e.q && std::isfinite(e.q))) {
    a.reason = "need 1 < r <= q < inf";
    return a;
  }
  if (iq < lower - 1e-14) {
    a.reason = "1/q below the admissible bound " + std::to_string(lower);
    return a;
  }
  a.accepted = true;
  return a;
}

// ---- Picard iterations -----------------------------------------------------------

struct PicardIterate {
  int k = 0;
  double diff = 0.0;   // sup over mesh times of the box L3 norm of w_k - w_{k-1}
  double ratio = 0.0;  // diff_k / diff_{k-1}; 0 for k = 1
  double wall_time = 0.0;
};

struct PicardState {
  std::vector<PicardIterate> history;
  bool converged = false;
  double final_ratio = 0.0;
  FieldSeries solution;

  /// Ratio recorded at iteration k (1-based), 0 if absent.
  double ratio_at(int k) const {
    for (const auto& h : history)
      if (h.k == k) return h.ratio;
    return 0.0;
  }
};

struct PicardOptions {
  int mesh = 128;
  int max_iter = 40;
  double tol = 1e-12;        // relative to the first difference
  int stall_limit = 3;       // consecutive ratios above 1 before NoContraction
  double data_gate = 0.0;    // box L3 bound on the data; 0 disables the gate
  double forcing_gate = 0.0; // L5 space-time bound on the background; 0 disables
  double horizon = 0.0;      // largest admissible T; 0 disables
};

namespace detail {

inline double box_lp(const PhysicalVector& v, double p) {
  double s = 0.0, m = 0.0;
  for (std::size_t i = 0; i < v.data[0].size(); ++i) {
    double a = std::sqrt(v.data[0][i] * v.data[0][i] + v.data[1][i] * v.data[1][i] + v.data[2][i] * v.data[2][i]);
    if (std::isinf(p)) m = std::max(m, a);
    else s += std::pow(a, p);
  }
  return std::isinf(p) ? m : std::pow(s * v.grid.cell_volume(), 1.0 / p);
}

inline double sup_l3_difference(const FieldSeries& a, const FieldSeries& b) {
  double d = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) d = std::max(d, box_lp(to_physical(add(a.values[n], b.values[n], -1.0)), 3.0));
  return d;
}

template <class Update>
PicardState run_picard(const FieldSeries& first, const PicardOptions& opt, Update&& next) {
  PicardState st;
  FieldSeries cur = first;
  FieldSeries prev;
  prev.times = first.times;
  for (const auto& f : first.values) prev.values.push_back(zero_field(f.grid));
  double last_diff = 0.0, first_diff = 0.0;
  int stalls = 0;
  auto clock0 = std::chrono::steady_clock::now();
  for (int k = 1; k <= opt.max_iter; ++k) {
    if (k > 1) {
      prev = cur;
      cur = next(prev);
    }
    double diff = sup_l3_difference(cur, prev);
    PicardIterate it;
    it.k = k;
    it.diff = diff;
    it.ratio = (k > 1 && last_diff > 0) ? diff / last_diff : 0.0;
    it.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock0).count();
    st.history.push_back(it);
    if (k == 1) first_diff = diff;
    if (k > 1) st.final_ratio = it.ratio;
    if (diff == 0.0 || (k > 1 && diff <= opt.tol * first_diff)) {
      st.converged = true;
      break;
    }
    stalls = (k > 1 && it.ratio > 1.0) ? stalls + 1 : 0;
    require(stalls < opt.stall_limit, ErrorKind::NoContraction,
            "difference ratio above 1 for " + std::to_string(opt.stall_limit) + " iterations");
    last_diff = diff;
  }
  st.solution = std::move(cur);
  return st;
}

}  // namespace detail

struct KatoResult {
  PicardState state;
  double data_l3 = 0.0;
  double sup_sqrt_t_linf = 0.0;  // sup over mesh times of sqrt(t) |v(t)|_inf
  double l5_norm = 0.0;          // box L5 space-time norm (trapezoid in time)
};

/// Mild solution v = e^{t lap} v0 - Phi1(v (x) v) by Picard iteration from w_0 = 0.
inline KatoResult kato_picard(const SpectralField& v0, double T, const PicardOptions& opt = {}) {
  require(T > 0, ErrorKind::InvalidArgument, "horizon must be positive");
  require(divergence_residual(v0) <= 1e-10, ErrorKind::InvalidArgument, "data is not divergence free");
  KatoResult res;
  res.data_l3 = detail::box_lp(to_physical(v0), 3.0);
  if (opt.data_gate > 0)
    require(res.data_l3 <= opt.data_gate, ErrorKind::GateViolation,
            "data L3 norm " + std::to_string(res.data_l3) + " above gate " + std::to_string(opt.data_gate));
  const int m = opt.mesh;
  const double ds = T / m;
  FieldSeries lin;
  for (int n = 0; n <= m; ++n) {
    lin.times.push_back(n * ds);
    lin.values.push_back(heat_flow(v0, n * ds));
  }
  auto next = [&](const FieldSeries& w) {
    std::vector<SpectralField> g;
    for (const auto& f : w.values) g.push_back(leray_project(tensor_divergence(outer_product(f, f))));
    auto duh = detail::duhamel_path(g, ds, g.size());
    FieldSeries out = lin;
    for (std::size_t n = 0; n < out.size(); ++n) out.values[n] = add(lin.values[n], duh[n], -1.0);
    return out;
  };
  res.state = detail::run_picard(lin, opt, next);
  std::vector<double> w = trapezoid_weights(res.state.solution.times);
  double l5 = 0.0;
  for (std::size_t n = 0; n < res.state.solution.size(); ++n) {
    PhysicalVector pv = to_physical(res.state.solution.values[n]);
    res.sup_sqrt_t_linf = std::max(res.sup_sqrt_t_linf, std::sqrt(res.state.solution.times[n]) * detail::box_lp(pv, kInf));
    l5 += w[n] * std::pow(detail::box_lp(pv, 5.0), 5.0);
  }
  res.l5_norm = std::pow(l5, 0.2);
  return res;
}

/// Box L5 space-time norm of a series.
inline double series_l5(const FieldSeries& s) {
  std::vector<double> w = trapezoid_weights(s.times);
  double l5 = 0.0;
  for (std::size_t n = 0; n < s.size(); ++n) l5 += w[n] * std::pow(detail::box_lp(to_physical(s.values[n]), 5.0), 5.0);
  return std::pow(l5, 0.2);
}

struct PerturbedStokesInput {
  SpectralField w0;
  FieldSeries background;  // a on the mesh; empty means a = 0
  Vec3 drift{};            // xi
  FieldSeries forcing;     // f0; empty means 0
  TensorSeries flux;       // F; empty means 0
  double horizon = 1.0;    // T
};

/// Fixed point of w = w1 - Phi1(w (x) (a + xi) + a (x) w), w1 = e^{t lap} w0 + Phi1 F + Phi0 f0.
inline PicardState perturbed_stokes_picard(const PerturbedStokesInput& in, const PicardOptions& opt = {}) {
  const double T = in.horizon;
  require(T > 0, ErrorKind::InvalidArgument, "horizon must be positive");
  require(norm(in.drift) <= 1.0 + 1e-15, ErrorKind::GateViolation, "|xi| must be <= 1");
  if (opt.horizon > 0)
    require(T <= opt.horizon, ErrorKind::GateViolation,
            "T = " + std::to_string(T) + " beyond the contraction horizon " + std::to_string(opt.horizon));
  const int m = opt.mesh;
  const double ds = T / m;
  const GridSpec& g = in.w0.grid;
  auto check_mesh = [&](std::size_t size, const std::vector<double>& times) {
    require(size == std::size_t(m) + 1 && std::abs(times.back() - T) < 1e-12 * std::max(1.0, T),
            ErrorKind::InvalidArgument, "series must live on the Picard mesh");
  };
  bool has_a = !in.background.values.empty();
  if (has_a) {
    check_mesh(in.background.size(), in.background.times);
    if (opt.forcing_gate > 0) {
      double l5 = series_l5(in.background);
      require(l5 <= opt.forcing_gate, ErrorKind::GateViolation,
              "background L5 norm " + std::to_string(l5) + " above gate " + std::to_string(opt.forcing_gate));
    }
  }
  SpectralField xi_field = zero_field(g);
  for (int c = 0; c < 3; ++c) xi_field.comp[c][0] = in.drift[c];

  // w1 on the mesh
  std::vector<SpectralField> g_lin(m + 1, zero_field(g));
  bool has_source = false;
  if (!in.forcing.values.empty()) {
    check_mesh(in.forcing.size(), in.forcing.times);
    for (int n = 0; n <= m; ++n) g_lin[n] = leray_project(in.forcing.values[n]);
    has_source = true;
  }
  if (!in.flux.values.empty()) {
    check_mesh(in.flux.size(), in.flux.times);
    for (int n = 0; n <= m; ++n) g_lin[n] = add(g_lin[n], leray_project(tensor_divergence(in.flux.values[n])));
    has_source = true;
  }
  FieldSeries w1;
  std::vector<SpectralField> src;
  if (has_source) src = detail::duhamel_path(g_lin, ds, g_lin.size());
  for (int n = 0; n <= m; ++n) {
    w1.times.push_back(n * ds);
    SpectralField f = heat_flow(in.w0, n * ds);
    if (has_source) f = add(f, src[n]);
    w1.values.push_back(f);
  }
  auto next = [&](const FieldSeries& w) {
    std::vector<SpectralField> gg;
    for (int n = 0; n <= m; ++n) {
      SpectralField carrier = has_a ? add(in.background.values[n], xi_field) : xi_field;
      TensorField t = outer_product(w.values[n], carrier);
      if (has_a) t = tensor_add(t, outer_product(in.background.values[n], w.values[n]));
      gg.push_back(leray_project(tensor_divergence(t)));
    }
    auto duh = detail::duhamel_path(gg, ds, gg.size());
    FieldSeries out = w1;
    for (int n = 0; n <= m; ++n) out.values[n] = add(w1.values[n], duh[n], -1.0);
    return out;
  };
  return detail::run_picard(w1, opt, next);
}

// ---- appendix probes ---------------------------------------------------------------

struct SmoothingProbe {
  std::vector<double> times;
  std::vector<double> ratio_m0, ratio_m1;
  double max_ratio = 0.0;
};

/// |grad^m e^{t lap} f|_{uloc,p} / (t^{-m/2} (1 + t^{-3/2 (1/q - 1/p)}) |f|_{uloc,q}) on unit balls.
inline SmoothingProbe uloc_smoothing_probe(const SpectralField& f, double p, double q, const std::vector<double>& ladder,
                                           double rho = 1.0) {
  require(q <= p, ErrorKind::ExponentOrder, "smoothing probe needs q <= p");
  SmoothingProbe out;
  out.times = ladder;
  GridMagnitude base(magnitude(to_physical(f)));
  double fq = uloc_norm(base, q, rho).value;
  const double gap = (std::isinf(p) ? 1.0 / q : 1.0 / q - 1.0 / p);
  for (double t : ladder) {
    require(t > 0, ErrorKind::NegativeTime, "ladder times must be positive");
    SpectralField h = heat_flow(f, t);
    double den = (1.0 + std::pow(t, -1.5 * gap)) * fq;
    GridMagnitude m0(magnitude(to_physical(h)));
    PhysicalScalar g2 = gradient_magnitude_sq(h);
    for (auto& x : g2.data) x = std::sqrt(x);
    GridMagnitude m1(g2);
    double r0 = den > 0 ? uloc_norm(m0, p, rho).value / den : 0.0;
    double r1 = den > 0 ? uloc_norm(m1, p, rho).value * std::sqrt(t) / den : 0.0;
    out.ratio_m0.push_back(r0);
    out.ratio_m1.push_back(r1);
    out.max_ratio = std::max({out.max_ratio, r0, r1});
  }
  return out;
}

namespace detail {

/// Derivatives 0..3 of h(rho) = erf(rho / 2) / rho.
inline std::array<double, 4> erf_over_r(double rho) {
  std::array<double, 4> d{};
  if (rho < 2.0) {
    // h = (1/sqrt pi) sum c_n rho^{2n}, c_n = (-1)^n / (4^n n! (2n + 1))
    double c = 1.0;
    for (int n = 0; n < 40; ++n) {
      double cn = c / (2 * n + 1);
      int e = 2 * n;
      d[0] += cn * std::pow(rho, e);
      if (e >= 1) d[1] += cn * e * std::pow(rho, e - 1);
      if (e >= 2) d[2] += cn * e * (e - 1) * std::pow(rho, e - 2);
      if (e >= 3) d[3] += cn * e * (e - 1) * (e - 2) * std::pow(rho, e - 3);
      c *= -1.0 / (4.0 * (n + 1));
    }
    for (auto& x : d) x /= std::sqrt(kPi);
    return d;
  }
  double E = std::erf(rho / 2.0), E1 = std::exp(-rho * rho / 4.0) / std::sqrt(kPi);
  double E2 = -0.5 * rho * E1, E3 = (0.25 * rho * rho - 0.5) * E1;
  double r2 = rho * rho, r3 = r2 * rho, r4 = r3 * rho;
  d[0] = E / rho;
  d[1] = E1 / rho - E / r2;
  d[2] = E2 / rho - 2.0 * E1 / r2 + 2.0 * E / r3;
  d[3] = E3 / rho - 3.0 * E2 / r2 + 6.0 * E1 / r3 - 6.0 * E / r4;
  return d;
}

}  // namespace detail

using Tensor3 = std::array<std::array<std::array<double, 3>, 3>, 3>;

/// d_k S_ij of the kernel of e^{t lap} P on R^3, S = delta Gamma + d_i d_j G with
/// G = erf(|x| / 2 sqrt t) / (4 pi |x|). Index order [k][i][j].
inline Tensor3 oseen_gradient(const Vec3& x, double t) {
  require(t > 0, ErrorKind::NegativeTime, "Oseen kernel needs t > 0");
  double r = norm(x);
  require(r > 0, ErrorKind::SingularPoint, "Oseen gradient probe at the origin");
  const double st = std::sqrt(t), rho = r / st;
  auto h = detail::erf_over_r(rho);
  // radial derivatives of G: d^n G / dr^n = t^{-(1+n)/2} h^{(n)}(rho) / (4 pi)
  double f1 = h[1] / (t * 4.0 * kPi), f2 = h[2] / (t * st * 4.0 * kPi), f3 = h[3] / (t * t * 4.0 * kPi);
  double A = f2 - f1 / r;
  double dA = f3 - f2 / r + f1 / (r * r);
  Vec3 u = x / r;
  double gamma = std::pow(4.0 * kPi * t, -1.5) * std::exp(-r * r / (4.0 * t));
  Tensor3 out{};
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double v = (dA - 2.0 * A / r) * u[k] * u[i] * u[j] +
                   (A / r) * ((i == k) * u[j] + (j == k) * u[i] + (i == j) * u[k]);
        if (i == j) v += -x[k] / (2.0 * t) * gamma;
        out[k][i][j] = v;
      }
  return out;
}

inline double tensor_norm(const Tensor3& a) {
  double s = 0;
  for (const auto& b : a)
    for (const auto& c : b)
      for (double x : c) s += x * x;
  return std::sqrt(s);
}

struct OseenProbe {
  std::vector<double> x_ladder, t_ladder;
  std::vector<double> x_products, t_products;  // |grad S| (|x| + sqrt t)^4
  double sup = 0.0;
  double x_tail_growth = 0.0;  // relative increase over the last three ladder points
  double t_tail_growth = 0.0;
};

/// Product |grad S(x, t)| (|x| + sqrt t)^4 along |x| in x_ladder at t_fixed (direction dir)
/// and along t in t_ladder at x_fixed.
inline OseenProbe oseen_gradient_probe(const std::vector<double>& x_ladder, double t_fixed,
                                       const std::vector<double>& t_ladder, const Vec3& x_fixed,
                                       const Vec3& dir = {0.6, 0.0, 0.8}) {
  OseenProbe p;
  p.x_ladder = x_ladder;
  p.t_ladder = t_ladder;
  Vec3 e = dir / norm(dir);
  for (double s : x_ladder) {
    double v = tensor_norm(oseen_gradient(s * e, t_fixed)) * std::pow(s + std::sqrt(t_fixed), 4);
    p.x_products.push_back(v);
    p.sup = std::max(p.sup, v);
  }
  for (double t : t_ladder) {
    double v = tensor_norm(oseen_gradient(x_fixed, t)) * std::pow(norm(x_fixed) + std::sqrt(t), 4);
    p.t_products.push_back(v);
    p.sup = std::max(p.sup, v);
  }
  // largest increase over the last three points relative to the first of them; decay reads negative
  auto tail = [](const std::vector<double>& v) {
    if (v.size() < 3) return 0.0;
    std::size_t s = v.size() - 3;
    if (v[s] <= 0) return kInf;
    double g = -kInf;
    for (std::size_t i = s + 1; i < v.size(); ++i) g = std::max(g, v[i] / v[s] - 1.0);
    return g;
  };
  p.x_tail_growth = tail(p.x_products);
  p.t_tail_growth = tail(p.t_products);
  return p;
}

}  // namespace nsreg
