#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "nsreg/ledger.hpp"

namespace nsreg {

struct StepOptions {
  double cfl_limit = 0.5;
  bool with_pressure = true;
};

struct StepResult {
  SpectralField v;
  ScalarField pressure;
};

/// P[v x curl v] with the 2/3 rule; the mean is removed (it vanishes analytically).
inline SpectralField nonlinear_term(const SpectralField& v) {
  SpectralField w = v;
  dealias(w);
  PhysicalVector pv = to_physical(w);
  PhysicalVector pw = to_physical(curl(w));
  PhysicalVector prod = zero_physical_vector(v.grid);
  for (std::size_t a = 0; a < pv.data[0].size(); ++a) {
    Vec3 u{pv.data[0][a], pv.data[1][a], pv.data[2][a]};
    Vec3 o{pw.data[0][a], pw.data[1][a], pw.data[2][a]};
    Vec3 c = cross(u, o);
    for (int k = 0; k < 3; ++k) prod.data[k][a] = c[k];
  }
  SpectralField n = to_spectral(prod);
  dealias(n);
  n = leray_project(n);
  for (auto& c : n.comp) c[0] = 0.0;
  n.time = v.time;
  return n;
}

inline double cfl_number(const SpectralField& v, double dt) {
  return max_magnitude(to_physical(v)) * dt / v.grid.spacing();
}

/// One integrating-factor Heun step: exact heat factor, explicit dealiased nonlinearity.
inline StepResult step(const SpectralField& v, double dt, const StepOptions& opt = {}) {
  require(dt > 0, ErrorKind::InvalidArgument, "time step must be positive");
  double cfl = cfl_number(v, dt);
  require(cfl <= opt.cfl_limit, ErrorKind::CflViolation,
          "CFL number " + std::to_string(cfl) + " exceeds " + std::to_string(opt.cfl_limit));
  SpectralField n0 = nonlinear_term(v);
  SpectralField pred = add(v, n0, dt);
  apply_heat(pred, dt);
  SpectralField n1 = nonlinear_term(pred);
  SpectralField out = add(v, n0, 0.5 * dt);
  apply_heat(out, dt);
  out = add(out, n1, 0.5 * dt);
  out = leray_project(out);
  out.time = v.time + dt;
  StepResult r;
  r.v = std::move(out);
  if (opt.with_pressure) {
    r.pressure = global_pressure(r.v);
  }
  return r;
}

inline void check_finite(const SpectralField& v) {
  for (const auto& c : v.comp)
    for (const auto& x : c)
      if (!std::isfinite(x.real()) || !std::isfinite(x.imag()))
        throw Error(ErrorKind::NanGuard, "non-finite coefficient at t = " + std::to_string(v.time));
}

/// Called after every step with the new field; returning false stops the run.
using StepObserver = std::function<bool(const SpectralField&)>;

/// Runs to time T with a uniform step (T / ceil(T / dt)); energy and dissipation every step.
inline TrajectoryLedger evolve(const SpectralField& v0, double T, double dt, const SnapshotPolicy& policy = {},
                               const StepOptions& opt = {}, const StepObserver& observe = {}) {
  require(T >= 0 && dt > 0, ErrorKind::InvalidArgument, "need T >= 0 and dt > 0");
  require(policy.stride >= 1, ErrorKind::InvalidArgument, "snapshot stride must be >= 1");
  require(divergence_residual(v0) <= 1e-10, ErrorKind::InvalidArgument, "initial data is not divergence free");
  const int steps = T == 0.0 ? 0 : int(std::ceil(T / dt - 1e-9));
  const double h = steps ? T / steps : dt;
  TrajectoryLedger led;
  led.grid = v0.grid;
  led.dt = h;
  led.dealias_fraction = v0.grid.dealias_fraction;
  SpectralField v = v0;
  dealias(v);
  v.time = 0.0;
  auto record = [&](int k, const SpectralField& f, const ScalarField* p) {
    led.step_times.push_back(f.time);
    led.energy.push_back(kinetic_energy(f));
    led.dissipation.push_back(gradient_energy(f));
    bool due = k % policy.stride == 0 || f.time >= policy.dense_from - 1e-12;
    if (due && f.time >= policy.t_begin - 1e-12) {
      Snapshot s{f.time, f, std::nullopt};
      if (policy.store_pressure) s.pressure = p ? *p : global_pressure(f);
      led.snapshots.push_back(std::move(s));
    }
  };
  record(0, v, nullptr);
  StepOptions so = opt;
  so.with_pressure = false;
  for (int k = 1; k <= steps; ++k) {
    StepResult r = step(v, h, so);
    v = std::move(r.v);
    v.time = k * h;
    check_finite(v);
    record(k, v, nullptr);
    if (observe && !observe(v)) break;
  }
  return led;
}

/// Last field of a run without storing anything else.
inline SpectralField evolve_to(const SpectralField& v0, double T, double dt) {
  SnapshotPolicy pol;
  pol.t_begin = T;
  pol.store_pressure = false;
  TrajectoryLedger led = evolve(v0, T, dt, pol);
  return led.snapshots.back().v;
}

/// Self-convergence order log2(|v_dt - v_dt/2| / |v_dt/2 - v_dt/4|) at time T.
inline double self_convergence_order(const SpectralField& v0, double T, double dt) {
  SpectralField a = evolve_to(v0, T, dt), b = evolve_to(v0, T, dt / 2), c = evolve_to(v0, T, dt / 4);
  double e1 = std::sqrt(inner_product(add(a, b, -1.0), add(a, b, -1.0)));
  double e2 = std::sqrt(inner_product(add(b, c, -1.0), add(b, c, -1.0)));
  return std::log2(e1 / e2);
}

/// Relative energy-equality defect max_t |E(t) + int_0^t D - E(0)| / E(0).
inline double energy_equality_defect(const TrajectoryLedger& led) {
  if (led.energy.empty() || led.energy[0] == 0.0) return 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < led.energy.size(); ++i)
    worst = std::max(worst, std::abs(led.energy[i] + led.dissipated(i) - led.energy[0]));
  return worst / led.energy[0];
}

// ---- local energy inequality ------------------------------------------------

/// phi(x, t) = G(|x - x0|^2 / l^2) H((t - t0) / tau) with G(s) = (1 - s)^m e^{-a s} and
/// H(u) = (1 - u^4)^m, both zero outside the unit interval. H is flat to third order at
/// u = 0, the evaluation time.
struct TestFunctionSpec {
  Vec3 center{};
  double t0 = 0.0;
  double spatial_scale = 5.0;
  double temporal_scale = 0.02;
  int power = 10;
  double gauss_rate = 1.0;
  bool nonnegative = true;

  struct Values {
    double phi, phi_t, lap;
    Vec3 grad;
  };

  double space(double s, double& d1, double& d2) const {
    if (s >= 1.0) {
      d1 = d2 = 0.0;
      return 0.0;
    }
    const int m = power;
    const double a = gauss_rate, q = 1.0 - s, e = std::exp(-a * s);
    double qm2 = m >= 2 ? std::pow(q, m - 2) : 0.0;
    double qm1 = std::pow(q, m - 1), qm = qm1 * q;
    d1 = -e * (m * qm1 + a * qm);
    d2 = e * (m * (m - 1) * qm2 + 2.0 * a * m * qm1 + a * a * qm);
    return e * qm;
  }

  double time(double t, double& d1) const {
    double u = (t - t0) / temporal_scale;
    if (std::abs(u) >= 1.0) {
      d1 = 0.0;
      return 0.0;
    }
    double b = 1.0 - u * u * u * u;
    d1 = -4.0 * power * u * u * u * std::pow(b, power - 1) / temporal_scale;
    return std::pow(b, power);
  }

  /// d is the minimal-image displacement x - x0.
  Values at(const Vec3& d, double t) const {
    double l2 = spatial_scale * spatial_scale;
    double s = dot(d, d) / l2, g1, g2, h1;
    double g = space(s, g1, g2), hh = time(t, h1);
    Values v;
    v.phi = g * hh;
    v.phi_t = g * h1;
    v.grad = (2.0 * g1 * hh / l2) * d;
    v.lap = hh * (6.0 * g1 + 4.0 * s * g2) / l2;
    return v;
  }
};

struct LeiTerms {
  double dissipation_plus_heat = 0.0;  // int int |v|^2 (phi_t + lap phi)
  double transport = 0.0;              // int int (|v|^2 + 2 pi) v . grad phi
  double perturbation = 0.0;           // 2 int int u_j a_i d_j(u_i phi), perturbed form only
  double final_energy = 0.0;           // int |v(t)|^2 phi(t)
  double gradient = 0.0;               // 2 int int |grad v|^2 phi
  double residual = 0.0;               // right side minus left side
  double scale = 0.0;                  // sum of the absolute terms
  double relative = 0.0;
  std::size_t time_samples = 0;
};

namespace detail {

inline void check_support(const TestFunctionSpec& phi, const TrajectoryLedger& led) {
  require(phi.spatial_scale < 0.5 * led.grid.length, ErrorKind::SupportViolation,
          "test function does not fit in the box");
  require(phi.t0 - phi.temporal_scale > 0.0, ErrorKind::SupportViolation, "test function reaches t = 0");
  require(!led.snapshots.empty() && led.snapshots.front().time <= phi.t0 - phi.temporal_scale + 1e-12,
          ErrorKind::SupportViolation, "ledger starts after the test function support");
  led.index_at(phi.t0);
}

/// Snapshot indices covering [t0 - tau, t0] and their trapezoid weights.
inline std::pair<std::vector<std::size_t>, std::vector<double>> lei_window(const TestFunctionSpec& phi,
                                                                          const TrajectoryLedger& led) {
  std::size_t last = led.index_at(phi.t0);
  std::size_t first = last;
  while (first > 0 && led.snapshots[first].time > phi.t0 - phi.temporal_scale) --first;
  std::vector<std::size_t> idx;
  std::vector<double> t;
  for (std::size_t i = first; i <= last; ++i) {
    idx.push_back(i);
    t.push_back(led.snapshots[i].time);
  }
  return {idx, trapezoid_weights(t)};
}

struct LeiFields {
  PhysicalVector v;
  PhysicalScalar p;
  std::array<PhysicalScalar, 9> grad;  // d_j v_i at 3 i + j
};

inline LeiFields lei_fields(const SpectralField& v, const ScalarField& p) {
  LeiFields f;
  f.v = to_physical(v);
  f.p = to_physical(p);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) f.grad[3 * i + j] = to_physical(partial(v, i, j));
  return f;
}

}  // namespace detail

inline LeiTerms finish_lei(LeiTerms t) {
  t.residual = t.dissipation_plus_heat + t.transport + t.perturbation - t.final_energy - t.gradient;
  t.scale = std::abs(t.dissipation_plus_heat) + std::abs(t.transport) + std::abs(t.perturbation) +
            std::abs(t.final_energy) + std::abs(t.gradient);
  t.relative = t.scale > 0 ? t.residual / t.scale : 0.0;
  return t;
}

/// Local energy balance at t = phi.t0, space by grid sums, time by the trapezoid rule over
/// the stored snapshots. Smooth solutions give an equality, so the residual measures the
/// discretization.
inline LeiTerms local_energy_residual(const TrajectoryLedger& led, const TestFunctionSpec& phi) {
  detail::check_support(phi, led);
  const GridSpec& g = led.grid;
  auto [idx, wt] = detail::lei_window(phi, led);
  LeiTerms out;
  out.time_samples = idx.size();
  const double cell = g.cell_volume();
  for (std::size_t n = 0; n < idx.size(); ++n) {
    const Snapshot& s = led.snapshots[idx[n]];
    bool last = n + 1 == idx.size();
    detail::LeiFields f = detail::lei_fields(s.v, led.pressure(idx[n]));
    double a = 0, b = 0, c = 0, e = 0;
    for_each_node(g, [&](std::size_t q, const Vec3& x) {
      Vec3 d = g.displacement(phi.center, x);
      if (dot(d, d) >= phi.spatial_scale * phi.spatial_scale) return;
      auto val = phi.at(d, s.time);
      Vec3 u{f.v.data[0][q], f.v.data[1][q], f.v.data[2][q]};
      double u2 = dot(u, u);
      a += u2 * (val.phi_t + val.lap);
      b += (u2 + 2.0 * f.p.data[q]) * dot(u, val.grad);
      double gr = 0;
      for (int k = 0; k < 9; ++k) gr += f.grad[k].data[q] * f.grad[k].data[q];
      c += 2.0 * gr * val.phi;
      if (last) e += u2 * val.phi;
    });
    out.dissipation_plus_heat += wt[n] * a * cell;
    out.transport += wt[n] * b * cell;
    out.gradient += wt[n] * c * cell;
    if (last) out.final_energy = e * cell;
  }
  return finish_lei(out);
}

/// Perturbed balance for (u, p) around a: the transport term carries |u|^2 (u + a) + 2 p u and
/// the extra term is 2 int int u_j a_i d_j(u_i phi).
/// Ledgers must share grid and snapshot times. u = v - a, p = pi_v - pi_a.
inline LeiTerms perturbed_local_energy_residual(const TrajectoryLedger& v_led, const TrajectoryLedger& a_led,
                                                const TestFunctionSpec& phi) {
  detail::check_support(phi, v_led);
  require(v_led.grid == a_led.grid && v_led.snapshots.size() == a_led.snapshots.size(), ErrorKind::InvalidArgument,
          "ledgers must share grid and snapshots");
  const GridSpec& g = v_led.grid;
  auto [idx, wt] = detail::lei_window(phi, v_led);
  LeiTerms out;
  out.time_samples = idx.size();
  const double cell = g.cell_volume();
  for (std::size_t n = 0; n < idx.size(); ++n) {
    const Snapshot& sv = v_led.snapshots[idx[n]];
    const Snapshot& sa = a_led.snapshots[idx[n]];
    require(std::abs(sv.time - sa.time) < 1e-12, ErrorKind::InvalidArgument, "snapshot times differ");
    bool last = n + 1 == idx.size();
    SpectralField u = add(sv.v, sa.v, -1.0);
    ScalarField p = add(v_led.pressure(idx[n]), a_led.pressure(idx[n]), -1.0);
    detail::LeiFields f = detail::lei_fields(u, p);
    PhysicalVector av = to_physical(sa.v);
    double a = 0, b = 0, c = 0, e = 0, x = 0;
    for_each_node(g, [&](std::size_t q, const Vec3& y) {
      Vec3 d = g.displacement(phi.center, y);
      if (dot(d, d) >= phi.spatial_scale * phi.spatial_scale) return;
      auto val = phi.at(d, sv.time);
      Vec3 uu{f.v.data[0][q], f.v.data[1][q], f.v.data[2][q]};
      Vec3 aa{av.data[0][q], av.data[1][q], av.data[2][q]};
      double u2 = dot(uu, uu);
      a += u2 * (val.phi_t + val.lap);
      b += dot(u2 * (uu + aa) + 2.0 * f.p.data[q] * uu, val.grad);
      double gr = 0;
      for (int k = 0; k < 9; ++k) gr += f.grad[k].data[q] * f.grad[k].data[q];
      c += 2.0 * gr * val.phi;
      // u_j a_i d_j(u_i phi) = a_i u_j (d_j u_i) phi + (a . u)(u . grad phi)
      double conv = 0;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) conv += aa[i] * uu[j] * f.grad[3 * i + j].data[q];
      x += 2.0 * (conv * val.phi + dot(aa, uu) * dot(uu, val.grad));
      if (last) e += u2 * val.phi;
    });
    out.dissipation_plus_heat += wt[n] * a * cell;
    out.transport += wt[n] * b * cell;
    out.gradient += wt[n] * c * cell;
    out.perturbation += wt[n] * x * cell;
    if (last) out.final_energy = e * cell;
  }
  return finish_lei(out);
}

/// The equation-based pairing of a and u:
/// 2 int a.u phi(t) - 2 int int a.u (phi_t + lap phi) + 4 int int grad a : grad u phi
/// + 2 int int [(a.grad a).u + ((a+u).grad u).a + (u.grad a).a] phi - 2 int int (q u + p a) . grad phi.
/// It vanishes when both runs solve the equations.
inline double cross_pairing(const TrajectoryLedger& v_led, const TrajectoryLedger& a_led, const TestFunctionSpec& phi) {
  detail::check_support(phi, v_led);
  const GridSpec& g = v_led.grid;
  auto [idx, wt] = detail::lei_window(phi, v_led);
  const double cell = g.cell_volume();
  double total = 0.0;
  for (std::size_t n = 0; n < idx.size(); ++n) {
    const Snapshot& sv = v_led.snapshots[idx[n]];
    const Snapshot& sa = a_led.snapshots[idx[n]];
    bool last = n + 1 == idx.size();
    SpectralField u = add(sv.v, sa.v, -1.0);
    ScalarField q = a_led.pressure(idx[n]);
    ScalarField p = add(v_led.pressure(idx[n]), q, -1.0);
    detail::LeiFields fu = detail::lei_fields(u, p);
    detail::LeiFields fa = detail::lei_fields(sa.v, q);
    double body = 0.0, end = 0.0;
    for_each_node(g, [&](std::size_t k, const Vec3& y) {
      Vec3 d = g.displacement(phi.center, y);
      if (dot(d, d) >= phi.spatial_scale * phi.spatial_scale) return;
      auto val = phi.at(d, sv.time);
      Vec3 uu{fu.v.data[0][k], fu.v.data[1][k], fu.v.data[2][k]};
      Vec3 aa{fa.v.data[0][k], fa.v.data[1][k], fa.v.data[2][k]};
      double au = dot(aa, uu);
      double gg = 0;
      for (int m = 0; m < 9; ++m) gg += fa.grad[m].data[k] * fu.grad[m].data[k];
      // (w . grad f)_i = w_j d_j f_i
      auto adv = [&](const Vec3& w, const detail::LeiFields& f) {
        Vec3 r;
        for (int i = 0; i < 3; ++i) r[i] = w[0] * f.grad[3 * i].data[k] + w[1] * f.grad[3 * i + 1].data[k] + w[2] * f.grad[3 * i + 2].data[k];
        return r;
      };
      double nl = dot(adv(aa, fa), uu) + dot(adv(aa + uu, fu), aa) + dot(adv(uu, fa), aa);
      Vec3 flux = fa.p.data[k] * uu + fu.p.data[k] * aa;
      body += -2.0 * au * (val.phi_t + val.lap) + 4.0 * gg * val.phi + 2.0 * nl * val.phi - 2.0 * dot(flux, val.grad);
      if (last) end += 2.0 * au * val.phi;
    });
    total += wt[n] * body * cell;
    if (last) total += end * cell;
  }
  return total;
}

struct TwoRouteCheck {
  double direct = 0.0;     // R(v, pi) - R_perturbed(u, p; a)
  double via_pairing = 0.0;  // R(a, q) - cross pairing
  double scale = 0.0;
  double relative_gap = 0.0;
};

/// Compares the two LEI forms for v = u + a in two ways; they differ only by integrations by parts.
inline TwoRouteCheck two_route_check(const TrajectoryLedger& v_led, const TrajectoryLedger& a_led,
                                     const TestFunctionSpec& phi) {
  LeiTerms rv = local_energy_residual(v_led, phi);
  LeiTerms ru = perturbed_local_energy_residual(v_led, a_led, phi);
  LeiTerms ra = local_energy_residual(a_led, phi);
  double x = cross_pairing(v_led, a_led, phi);
  TwoRouteCheck c;
  c.direct = rv.residual - ru.residual;
  c.via_pairing = ra.residual - x;
  c.scale = rv.scale + ru.scale + ra.scale;
  c.relative_gap = c.scale > 0 ? std::abs(c.direct - c.via_pairing) / c.scale : 0.0;
  return c;
}

}  // namespace nsreg
