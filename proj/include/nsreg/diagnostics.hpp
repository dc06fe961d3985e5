#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "nsreg/analytic.hpp"
#include "nsreg/ledger.hpp"
#include "nsreg/norms.hpp"
#include "nsreg/quadrature.hpp"

namespace nsreg {

/// Q = B_r(x0) x (t0 - r^2, t0)
struct ParabolicCylinder {
  Vec3 center{};
  double t0 = 0.0;
  double radius = 1.0;
};

enum class PressureForm { Oscillation, Raw };

inline const char* to_string(PressureForm f) { return f == PressureForm::Raw ? "raw" : "oscillation"; }

struct CylinderOptions {
  int refine = 0;                      // sub-lattice factor for ledger sampling; 0 picks >= 8 sub-cells per radius
  int min_cells = 4;                   // r must span this many grid cells
  int min_time_samples = 4;
  PressureForm form = PressureForm::Oscillation;
  Gauge gauge = Gauge::MeanZero;       // BallAnchored subtracts the ball mean per time before use
  SphericalRule rule{12, 12, 24, 1};   // analytic flows
  int time_nodes = 12;                 // analytic flows, Gauss nodes in time
};

struct CylinderQuantities {
  ParabolicCylinder cylinder;
  double C = 0.0, D = 0.0, phi = 0.0, B = 0.0;
  double D_raw = 0.0, D_osc = 0.0;
  PressureForm form = PressureForm::Oscillation;
  Vec3 mean_velocity{};               // (u)_Q
  std::vector<double> pressure_means; // (p)_B(t) per time sample
  std::vector<double> sample_times;
  double sup_half = 0.0;              // max |v| over sampled points of Q_{r/2}
  double volume_error = 0.0;
  double time_error = 0.0;            // |C - C on every other sample| / 3; 0 when unavailable
};

namespace detail {

/// Weights w_i with sum w_i f_i = int_a^b of the piecewise linear interpolant of f.
inline std::vector<double> window_weights(const std::vector<double>& times, double a, double b, double tol = 1e-9) {
  require(!times.empty() && a >= times.front() - tol && b <= times.back() + tol, ErrorKind::CoverageGap,
          "window [" + std::to_string(a) + ", " + std::to_string(b) + "] not covered by the ledger");
  std::vector<double> w(times.size(), 0.0);
  a = std::max(a, times.front());
  b = std::min(b, times.back());
  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    double t0 = times[i], t1 = times[i + 1], lo = std::max(a, t0), hi = std::min(b, t1);
    if (hi <= lo) continue;
    double d = t1 - t0;
    // int_lo^hi (t1 - t)/d and (t - t0)/d
    w[i] += ((t1 - lo) * (t1 - lo) - (t1 - hi) * (t1 - hi)) / (2 * d);
    w[i + 1] += ((hi - t0) * (hi - t0) - (lo - t0) * (lo - t0)) / (2 * d);
  }
  return w;
}

inline std::vector<double> snapshot_times(const TrajectoryLedger& led) {
  std::vector<double> t;
  for (const auto& s : led.snapshots) t.push_back(s.time);
  return t;
}

struct CylinderSamples {
  std::vector<Vec3> nodes;
  std::vector<double> w_space;
  std::vector<double> times, w_time;
  std::vector<std::vector<Vec3>> v;
  std::vector<std::vector<double>> p;
  double volume_error = 0.0;
  double ta = 0.0, tb = 0.0;  // time window
};

/// Optional spatial clip to B_R(0), smoothed over width `width`.
struct SpatialClip {
  double radius = 0.0;  // 0 means no clip
  double width = 0.0;
};

inline CylinderSamples sample_cylinder(const TrajectoryLedger& led, const Vec3& c, double r, double ta, double tb,
                                       const CylinderOptions& opt, const SpatialClip& clip = {},
                                       bool with_pressure = true) {
  const GridSpec& g = led.grid;
  require(2.0 * r <= g.length, ErrorKind::BallTooLarge, "cylinder ball does not fit in the box");
  require(r >= opt.min_cells * g.spacing() - 1e-12, ErrorKind::UnresolvedCylinder,
          "radius " + std::to_string(r) + " spans fewer than " + std::to_string(opt.min_cells) + " cells");
  std::vector<double> all_t = snapshot_times(led);
  std::vector<double> w = window_weights(all_t, ta, tb);
  CylinderSamples s;
  s.ta = ta;
  s.tb = tb;
  std::vector<std::size_t> used;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] > 1e-12 * (tb - ta)) {
      used.push_back(i);
      s.times.push_back(all_t[i]);
      s.w_time.push_back(w[i]);
    }
  require(int(used.size()) >= opt.min_time_samples, ErrorKind::UnresolvedCylinder,
          "only " + std::to_string(used.size()) + " time samples in the cylinder");
  // spatial lattice
  const int refine = opt.refine > 0 ? opt.refine : std::max(1, int(std::ceil(8.0 * g.spacing() / r - 1e-12)));
  const double h = g.spacing() / refine;
  const int half = int(std::ceil((r + h) / h)) + 1;
  std::vector<double> ax[3];
  for (int d = 0; d < 3; ++d) {
    double base = g.coord(0) + std::round((c[d] - g.coord(0)) / h) * h;
    for (int m = -half; m <= half; ++m) ax[d].push_back(base + m * h);
  }
  const std::size_t m = ax[0].size();
  std::vector<std::size_t> flat;
  double raw = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < m; ++k) {
        Vec3 x{ax[0][i], ax[1][j], ax[2][k]};
        double ind = smoothed_indicator(norm(x - c), r, h);
        raw += ind * h * h * h;
        // intersection with the clip ball: min of the two ramps
        if (clip.radius > 0) ind = std::min(ind, smoothed_indicator(norm(x), clip.radius, clip.width > 0 ? clip.width : h));
        if (ind <= 0) continue;
        double wt = ind * h * h * h;
        s.nodes.push_back(x);
        s.w_space.push_back(wt);
        flat.push_back((i * m + j) * m + k);
      }
  const double exact = ball_volume(r);
  s.volume_error = std::abs(raw - exact) / exact;
  for (double& x : s.w_space) x *= exact / raw;
  for (std::size_t n : used) {
    const Snapshot& snap = led.snapshots[n];
    std::vector<double> comp[3];
    for (int d = 0; d < 3; ++d) comp[d] = evaluate_tensor(g, snap.v.comp[d], ax[0], ax[1], ax[2]);
    std::vector<double> pv;
    if (with_pressure) pv = evaluate_tensor(g, led.pressure(n).coef, ax[0], ax[1], ax[2]);
    std::vector<Vec3> vs;
    std::vector<double> ps;
    for (std::size_t f : flat) {
      vs.push_back({comp[0][f], comp[1][f], comp[2][f]});
      ps.push_back(with_pressure ? pv[f] : 0.0);
    }
    s.v.push_back(std::move(vs));
    s.p.push_back(std::move(ps));
  }
  return s;
}

inline CylinderSamples sample_cylinder(const AnalyticFlow& flow, const Vec3& c, double r, double ta, double tb,
                                       const CylinderOptions& opt, const SpatialClip& clip = {}) {
  require(tb > ta, ErrorKind::UnresolvedCylinder, "empty time window");
  CylinderSamples s;
  s.ta = ta;
  s.tb = tb;
  QuadSet q = spherical_ball(c, r, opt.rule);
  for (std::size_t i = 0; i < q.nodes.size(); ++i) {
    double wt = q.weights[i];
    if (clip.radius > 0) wt *= smoothed_indicator(norm(q.nodes[i]), clip.radius, clip.width > 0 ? clip.width : r / 64);
    if (wt <= 0) continue;
    s.nodes.push_back(q.nodes[i]);
    s.w_space.push_back(wt);
  }
  for (auto [t, wt] : gauss_on(ta, tb, opt.time_nodes)) {
    s.times.push_back(t);
    s.w_time.push_back(wt);
    std::vector<Vec3> vs;
    std::vector<double> ps;
    for (const Vec3& x : s.nodes) {
      vs.push_back(flow.velocity(x, t));
      ps.push_back(flow.pressure(x, t));
    }
    s.v.push_back(std::move(vs));
    s.p.push_back(std::move(ps));
  }
  return s;
}

inline double c_integral(const CylinderSamples& s, const std::vector<double>& w_time) {
  double acc = 0.0;
  for (std::size_t n = 0; n < s.times.size(); ++n) {
    double a = 0.0;
    for (std::size_t i = 0; i < s.nodes.size(); ++i) a += s.w_space[i] * std::pow(norm(s.v[n][i]), 3);
    acc += w_time[n] * a;
  }
  return acc;
}

inline CylinderQuantities reduce(const CylinderSamples& s, const ParabolicCylinder& cyl, const CylinderOptions& opt,
                                 bool trapezoid_times) {
  CylinderQuantities q;
  q.cylinder = cyl;
  q.form = opt.form;
  q.volume_error = s.volume_error;
  q.sample_times = s.times;
  const double r = cyl.radius, r2 = r * r;
  double vol = 0.0, space_vol = 0.0;
  for (double w : s.w_space) space_vol += w;
  Vec3 mean{};
  for (std::size_t n = 0; n < s.times.size(); ++n)
    for (std::size_t i = 0; i < s.nodes.size(); ++i) {
      double w = s.w_time[n] * s.w_space[i];
      mean += w * s.v[n][i];
      vol += w;
    }
  if (vol > 0) mean = mean / vol;
  q.mean_velocity = mean;
  double c3 = 0.0, osc3 = 0.0, draw = 0.0, dosc = 0.0;
  for (std::size_t n = 0; n < s.times.size(); ++n) {
    double pm = 0.0;
    for (std::size_t i = 0; i < s.nodes.size(); ++i) pm += s.w_space[i] * s.p[n][i];
    pm = space_vol > 0 ? pm / space_vol : 0.0;
    q.pressure_means.push_back(pm);
    const double shift = opt.gauge == Gauge::BallAnchored ? pm : 0.0;
    double a = 0, b = 0, e = 0, f = 0;
    const bool half_t = s.times[n] >= cyl.t0 - 0.25 * r2 - 1e-12;
    for (std::size_t i = 0; i < s.nodes.size(); ++i) {
      const double w = s.w_space[i];
      const double vm = norm(s.v[n][i]);
      a += w * vm * vm * vm;
      b += w * std::pow(norm(s.v[n][i] - mean), 3);
      e += w * std::pow(std::abs(s.p[n][i] - shift), 1.5);
      f += w * std::pow(std::abs(s.p[n][i] - pm), 1.5);
      if (half_t && norm(s.nodes[i] - cyl.center) <= 0.5 * r) q.sup_half = std::max(q.sup_half, vm);
    }
    c3 += s.w_time[n] * a;
    osc3 += s.w_time[n] * b;
    draw += s.w_time[n] * e;
    dosc += s.w_time[n] * f;
  }
  q.C = c3 / r2;
  q.D_raw = draw / r2;
  q.D_osc = dosc / r2;
  q.D = opt.form == PressureForm::Raw ? q.D_raw : q.D_osc;
  q.phi = std::cbrt(osc3 / r2) + std::pow(q.D_osc, 2.0 / 3.0);
  q.B = r * norm(mean);
  if (trapezoid_times && s.times.size() >= 5) {
    // same window integrated with every other sample
    std::vector<double> sub_t, keep;
    for (std::size_t n = 0; n < s.times.size(); n += 2) sub_t.push_back(s.times[n]);
    if (sub_t.back() != s.times.back()) sub_t.push_back(s.times.back());
    std::vector<double> wc = window_weights(sub_t, std::max(s.ta, sub_t.front()), std::min(s.tb, sub_t.back()));
    std::vector<double> w_full(s.times.size(), 0.0);
    for (std::size_t n = 0, m = 0; n < s.times.size(); ++n)
      if (m < sub_t.size() && s.times[n] == sub_t[m]) w_full[n] = wc[m++];
    q.time_error = std::abs(c3 - c_integral(s, w_full)) / (3.0 * r2);
  }
  return q;
}

}  // namespace detail

/// C, D, phi, B on one cylinder of a computed trajectory.
inline CylinderQuantities cylinder_quantities(const TrajectoryLedger& led, const ParabolicCylinder& cyl,
                                              const CylinderOptions& opt = {}) {
  require(cyl.radius > 0, ErrorKind::InvalidArgument, "cylinder radius must be positive");
  const double r = cyl.radius;
  auto s = detail::sample_cylinder(led, cyl.center, r, cyl.t0 - r * r, cyl.t0, opt);
  return detail::reduce(s, cyl, opt, true);
}

/// Same quantities for a flow given in closed form (no resolution limits).
inline CylinderQuantities cylinder_quantities(const AnalyticFlow& flow, const ParabolicCylinder& cyl,
                                              const CylinderOptions& opt = {}) {
  require(cyl.radius > 0, ErrorKind::InvalidArgument, "cylinder radius must be positive");
  const double r = cyl.radius;
  auto s = detail::sample_cylinder(flow, cyl.center, r, cyl.t0 - r * r, cyl.t0, opt);
  return detail::reduce(s, cyl, opt, false);
}

// ---- CKN flag ----------------------------------------------------------------------

struct CknBudgets {
  double eps_ckn = 0.05;
  double c_ckn = 1.0;  // sup |v| on the half cylinder is compared with c_ckn / r
};

struct CknVerdict {
  bool flagged_regular = false;
  double sum = 0.0;  // C + D
  double eps_budget = 0.0;
  double sup_half = 0.0;
  double sup_budget = 0.0;  // c_ckn / r
  bool sup_within_budget = true;
  double measured_constant = 0.0;  // r * sup_half
};

inline CknVerdict ckn_flag(const CylinderQuantities& q, const CknBudgets& b = {}) {
  CknVerdict v;
  v.sum = q.C + q.D;
  v.eps_budget = b.eps_ckn;
  v.flagged_regular = v.sum <= b.eps_ckn;
  v.sup_half = q.sup_half;
  v.sup_budget = b.c_ckn / q.cylinder.radius;
  v.measured_constant = q.cylinder.radius * q.sup_half;
  if (v.flagged_regular) v.sup_within_budget = q.sup_half <= v.sup_budget;
  return v;
}

// ---- Morrey scan -----------------------------------------------------------------

/// The slab B_R(0) x (0, T1) that cylinders are clipped to.
struct Slab {
  double radius = 1.0;
  double t1 = 1.0;
};

struct MorreyEntry {
  Vec3 x0{};
  double t0 = 0.0;
  double r = 0.0;
  double clipped_C = 0.0;
  std::optional<double> beta_form;  // absent when the full cylinder is not covered
};

struct MorreyScan {
  double sup = 0.0;
  MorreyEntry argmax;
  double beta = 0.25;
  double beta_sup = 0.0;
  double beta_exponent = 0.0;  // least-squares slope of log(max beta form) against log r
  std::vector<MorreyEntry> entries;
};

inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] > 0 && y[i] > 0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  if (lx.size() < 2) return 0.0;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) { mx += lx[i]; my += ly[i]; }
  mx /= lx.size();
  my /= lx.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxx > 0 ? sxy / sxx : 0.0;
}

/// sup over probes and radii of r^-2 int_{Q cap slab} |v|^3, plus r^{-2-3 beta} int_Q (|v|^3 + |p - (p)_B|^{3/2}).
inline MorreyScan morrey_sup_scan(const TrajectoryLedger& led, const std::vector<std::pair<Vec3, double>>& probes,
                                  const std::vector<double>& r_ladder, const Slab& slab = {}, double beta = 0.25,
                                  const CylinderOptions& opt = {}) {
  MorreyScan out;
  out.beta = beta;
  std::vector<double> beta_by_r(r_ladder.size(), 0.0);
  const double t_first = led.snapshots.empty() ? 0.0 : led.snapshots.front().time;
  for (const auto& [x0, t0] : probes)
    for (std::size_t k = 0; k < r_ladder.size(); ++k) {
      const double r = r_ladder[k];
      MorreyEntry e{x0, t0, r, 0.0, std::nullopt};
      double ta = std::max(t0 - r * r, 0.0), tb = std::min(t0, slab.t1);
      if (tb > ta) {
        auto s = detail::sample_cylinder(led, x0, r, ta, tb, opt, {slab.radius, 0.0}, false);
        e.clipped_C = detail::c_integral(s, s.w_time) / (r * r);
      }
      if (t0 - r * r >= t_first - 1e-12) {
        ParabolicCylinder cyl{x0, t0, r};
        CylinderOptions o = opt;
        o.form = PressureForm::Oscillation;
        auto q = cylinder_quantities(led, cyl, o);
        e.beta_form = std::pow(r, -3.0 * beta) * (q.C + q.D_osc);
        out.beta_sup = std::max(out.beta_sup, *e.beta_form);
        beta_by_r[k] = std::max(beta_by_r[k], *e.beta_form);
      }
      if (out.entries.empty() || e.clipped_C > out.sup) {
        out.sup = e.clipped_C;
        out.argmax = e;
      }
      out.entries.push_back(e);
    }
  out.beta_exponent = loglog_slope(r_ladder, beta_by_r);
  return out;
}

// ---- decay ladder ----------------------------------------------------------------

struct DecayRung {
  double r = 0.0;
  double phi = 0.0, B = 0.0, Psi = 0.0;
  double ratio = 0.0;      // Psi(r) / Psi(r / theta); 0 on the first rung
  bool degenerate = false; // 0 / 0
  bool within = false;     // ratio <= theta^beta
  double C = 0.0, D = 0.0;
};

struct DecayLedger {
  double theta = 0.25, beta = 0.25;
  double c3 = 0.0;  // |Q_1|^{-1/3}
  std::vector<DecayRung> rungs;
  bool terminated_early = false;
  std::string termination;
  double fraction_within = 0.0;  // over non-degenerate ratios
};

inline DecayLedger decay_ledger(const TrajectoryLedger& led, const Vec3& x0, double t0, double theta, double beta,
                                double r0, int max_rungs = 12, const CylinderOptions& opt = {}) {
  require(theta > 0 && theta < 1.0 / 3.0, ErrorKind::InvalidArgument, "theta must lie in (0, 1/3)");
  DecayLedger out;
  out.theta = theta;
  out.beta = beta;
  out.c3 = std::pow(ball_volume(1.0), -1.0 / 3.0);
  const double weight = std::pow(theta, 2.0 / 3.0 + beta) / (2.0 * out.c3);
  const double target = std::pow(theta, beta);
  int counted = 0, good = 0;
  double r = r0;
  for (int k = 0; k < max_rungs; ++k, r *= theta) {
    CylinderQuantities q;
    try {
      q = cylinder_quantities(led, {x0, t0, r}, opt);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::UnresolvedCylinder) throw;
      out.terminated_early = true;
      out.termination = e.what();
      break;
    }
    DecayRung rung{r, q.phi, q.B, q.phi + weight * q.B};
    rung.C = q.C;
    rung.D = q.D;
    if (!out.rungs.empty()) {
      double prev = out.rungs.back().Psi;
      if (prev == 0.0 && rung.Psi == 0.0) {
        rung.degenerate = true;
      } else {
        rung.ratio = prev > 0 ? rung.Psi / prev : kInf;
        rung.within = rung.ratio <= target * (1 + 1e-12);
        ++counted;
        good += rung.within;
      }
    }
    out.rungs.push_back(rung);
  }
  out.fraction_within = counted ? double(good) / counted : 0.0;
  return out;
}

/// T1(M) = eps (1 + M)^-6
inline double t1_schedule(double M, double eps) {
  require(M >= 0 && eps > 0, ErrorKind::InvalidArgument, "t1_schedule needs M >= 0 and eps > 0");
  return eps * std::pow(1.0 + M, -6.0);
}

// ---- a priori checks -----------------------------------------------------------------

struct EnergyCheck {
  double r = 0.0, nr = 0.0, sigma = 0.0, window = 0.0;
  std::vector<double> times;
  std::vector<double> a;  // A_r at each snapshot time in the window
  double a0 = 0.0;        // A_r at the first snapshot
  double max_ratio = 0.0; // max A / a0
  bool passes = true;     // A <= 2 a0 throughout
  double measured_constant = 0.0;  // A(window end) / N_r
};

/// A_r(t) = sup_x [ sup_{s<t} r^-1 int_{B_r(x)} |v(s)|^2 + r^-1 int_0^t int_{B_r(x)} |grad v|^2 ],
/// checked against 2 A_r(0+) on (0, sigma r^2).
inline EnergyCheck apriori_energy_check(const TrajectoryLedger& led, double r, double c0) {
  require(!led.snapshots.empty(), ErrorKind::CoverageGap, "empty ledger");
  require(led.snapshots.front().time <= 1e-12, ErrorKind::CoverageGap, "ledger must start at t = 0");
  EnergyCheck out;
  out.r = r;
  const SpectralField& v0 = led.snapshots.front().v;
  out.nr = data_quantity_nr(GridMagnitude(magnitude(to_physical(v0))), r);
  out.sigma = sigma_schedule(out.nr, c0);
  out.window = out.sigma * r * r;
  require(led.snapshots.back().time >= out.window - 1e-9, ErrorKind::CoverageGap,
          "ledger ends at " + std::to_string(led.snapshots.back().time) + " before sigma r^2 = " +
              std::to_string(out.window));
  const GridSpec& g = led.grid;
  PhysicalScalar run_sup = zero_physical_scalar(g), diss = zero_physical_scalar(g), prev_d;
  double prev_t = 0.0;
  for (std::size_t i = 0; i < led.snapshots.size(); ++i) {
    const Snapshot& s = led.snapshots[i];
    const bool last = s.time >= out.window - 1e-12;
    PhysicalScalar e2 = magnitude(to_physical(s.v));
    for (double& x : e2.data) x *= x;
    PhysicalScalar em = ball_integral_map(e2, r);
    PhysicalScalar dm = ball_integral_map(gradient_magnitude_sq(s.v), r);
    double frac = 1.0;  // part of the last interval inside the window
    if (i > 0) {
      double dt = s.time - prev_t;
      if (last && s.time > out.window) frac = (out.window - prev_t) / dt;
      // trapezoid on the linear interpolant, truncated at the window end
      for (std::size_t n = 0; n < diss.data.size(); ++n) {
        double end = prev_d.data[n] + frac * (dm.data[n] - prev_d.data[n]);
        diss.data[n] += 0.5 * frac * dt * (prev_d.data[n] + end);
      }
    }
    double a = 0.0;
    for (std::size_t n = 0; n < em.data.size(); ++n) {
      run_sup.data[n] = std::max(run_sup.data[n], em.data[n] / r);
      a = std::max(a, run_sup.data[n] + diss.data[n] / r);
    }
    out.times.push_back(std::min(s.time, out.window));
    out.a.push_back(a);
    if (i == 0) out.a0 = a;
    prev_d = std::move(dm);
    prev_t = s.time;
    if (last) break;
  }
  for (double a : out.a) {
    double ratio = out.a0 > 0 ? a / out.a0 : (a > 0 ? kInf : 0.0);
    out.max_ratio = std::max(out.max_ratio, ratio);
  }
  out.passes = out.max_ratio <= 2.0;
  out.measured_constant = out.nr > 0 ? out.a.back() / out.nr : 0.0;
  return out;
}

struct PressureApriori {
  double r = 0.0, s = 0.0, q = 0.0, nr = 0.0, sigma = 0.0, window = 0.0;
  double sup_value = 0.0;  // sup over centers of r^-1 |p - (p)_B(t)|_{L^s(0, sigma r^2; L^q(B_r))}
  Vec3 argmax{};
  double measured_constant = 0.0;  // sup_value / N_r
  std::optional<double> budget;
  bool within_budget = true;
  std::size_t centers = 0;
};

inline void check_pressure_exponents(double s, double q) {
  require(q > 1.0 && q <= 3.0 && s >= 1.0 && std::abs(2.0 / s + 3.0 / q - 3.0) <= 1e-12,
          ErrorKind::AdmissibilityViolation,
          "need 2/s + 3/q = 3 with q in (1, 3]; got s = " + std::to_string(s) + ", q = " + std::to_string(q));
}

/// The gauge constant is the ball mean. Centers on a lattice of the given spacing (0: about r / 2).
inline PressureApriori pressure_apriori_check(const TrajectoryLedger& led, double r, double s, double q, double c0,
                                              double center_spacing = 0.0, std::optional<double> budget = {}) {
  check_pressure_exponents(s, q);
  require(!led.snapshots.empty() && led.snapshots.front().time <= 1e-12, ErrorKind::CoverageGap,
          "ledger must start at t = 0");
  PressureApriori out;
  out.r = r;
  out.s = s;
  out.q = q;
  out.budget = budget;
  const GridSpec& g = led.grid;
  out.nr = data_quantity_nr(GridMagnitude(magnitude(to_physical(led.snapshots.front().v))), r);
  out.sigma = sigma_schedule(out.nr, c0);
  out.window = out.sigma * r * r;
  std::vector<double> tw = detail::window_weights(detail::snapshot_times(led), 0.0, out.window);
  std::vector<std::size_t> used;
  std::vector<PhysicalScalar> ps;
  for (std::size_t i = 0; i < tw.size(); ++i)
    if (tw[i] > 0) {
      used.push_back(i);
      ps.push_back(to_physical(led.pressure(i)));
    }
  const double h = g.spacing();
  const int stride = center_spacing > 0 ? std::max(1, int(std::round(center_spacing / h)))
                                        : std::max(1, int(std::round(0.5 * r / h)));
  for (int i = 0; i < g.n; i += stride)
    for (int j = 0; j < g.n; j += stride)
      for (int k = 0; k < g.n; k += stride) {
        ++out.centers;
        QuadSet ball = grid_region(g, g.node(i, j, k), 0.0, r);
        double acc = 0.0;
        for (std::size_t u = 0; u < used.size(); ++u) {
          const auto& pd = ps[u].data;
          double vol = 0, mean = 0;
          for (std::size_t a = 0; a < ball.nodes.size(); ++a) {
            mean += ball.weights[a] * pd[ball.grid_index[a]];
            vol += ball.weights[a];
          }
          mean /= vol;
          double lq = 0.0;
          for (std::size_t a = 0; a < ball.nodes.size(); ++a)
            lq += ball.weights[a] * std::pow(std::abs(pd[ball.grid_index[a]] - mean), q);
          acc += tw[used[u]] * std::pow(lq, s / q);
        }
        double val = std::pow(acc, 1.0 / s) / r;
        if (val > out.sup_value) {
          out.sup_value = val;
          out.argmax = g.node(i, j, k);
        }
      }
  out.measured_constant = out.nr > 0 ? out.sup_value / out.nr : 0.0;
  if (budget) out.within_budget = out.measured_constant <= *budget;
  return out;
}

// ---- paraboloid map ----------------------------------------------------------------

enum class Verdict { FlaggedRegular, Unresolved };

inline const char* to_string(Verdict v) { return v == Verdict::FlaggedRegular ? "flagged-regular" : "unresolved"; }

struct ProbePoint {
  Vec3 x{};
  double t = 0.0;
};

struct RegularityMap {
  std::vector<ProbePoint> probes;
  std::vector<bool> admitted;       // 0 < t < sigma2 |x|^2
  std::vector<double> values;       // sqrt(t) |v(x, t)|, 0 when not admitted
  std::vector<Verdict> verdicts;
  double sigma2 = 0.0;
  double c1_budget = 0.0;
  double eps_budget = 0.0;
  double max_value = 0.0;
};

inline bool below_paraboloid(const ProbePoint& p, double sigma2) { return p.t > 0 && p.t < sigma2 * dot(p.x, p.x); }

/// sqrt(t) |v| on probes under the paraboloid t < sigma2 |x|^2; v is interpolated linearly
/// in time between snapshots.
inline RegularityMap paraboloid_map(const TrajectoryLedger& led, double sigma2, const std::vector<ProbePoint>& probes,
                                    double c1_budget = 1.0, double eps_budget = 0.05) {
  RegularityMap m;
  m.probes = probes;
  m.sigma2 = sigma2;
  m.c1_budget = c1_budget;
  m.eps_budget = eps_budget;
  std::vector<double> times = detail::snapshot_times(led);
  for (const auto& p : probes) {
    bool in = below_paraboloid(p, sigma2);
    double val = 0.0;
    if (in) {
      require(p.t >= times.front() - 1e-9 && p.t <= times.back() + 1e-9, ErrorKind::CoverageGap,
              "probe time outside the ledger");
      std::size_t hi = std::lower_bound(times.begin(), times.end(), p.t) - times.begin();
      hi = std::min(hi, times.size() - 1);
      std::size_t lo = hi > 0 ? hi - 1 : 0;
      double th = times[hi] - times[lo] > 0 ? (p.t - times[lo]) / (times[hi] - times[lo]) : 0.0;
      th = std::clamp(th, 0.0, 1.0);
      Vec3 v = (1 - th) * evaluate_at(led.snapshots[lo].v, p.x) + th * evaluate_at(led.snapshots[hi].v, p.x);
      val = std::sqrt(p.t) * norm(v);
      m.max_value = std::max(m.max_value, val);
    }
    m.admitted.push_back(in);
    m.values.push_back(val);
    m.verdicts.push_back(in && val <= c1_budget ? Verdict::FlaggedRegular : Verdict::Unresolved);
  }
  return m;
}

}  // namespace nsreg
