#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "nsreg/analytic.hpp"
#include "nsreg/field.hpp"
#include "nsreg/quadrature.hpp"

namespace nsreg {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct BreakdownEntry {
  std::string label;
  double key = 0.0;
  double value = 0.0;
};

struct NormReport {
  std::string norm_id;
  std::map<std::string, double> params;
  double value = 0.0;
  Vec3 argmax{};
  double quadrature_error = 0.0;
  std::vector<BreakdownEntry> breakdown;
};

/// {inner <= |x - center| < outer}; inner = 0 is a ball.
struct Region {
  Vec3 center{};
  double inner = 0.0;
  double outer = 1.0;
};

/// A field seen through |f| on spherical regions.
class MagnitudeSource {
 public:
  virtual ~MagnitudeSource() = default;
  virtual BallSamples region(const Region& r) const = 0;
  virtual const GridSpec* grid() const { return nullptr; }
};

class AnalyticMagnitude : public MagnitudeSource {
 public:
  AnalyticMagnitude(ScalarFn mag, SphericalRule rule = {}) : mag_(std::move(mag)), rule_(rule) {}
  BallSamples region(const Region& r) const override {
    BallSamples s;
    s.quad = spherical_region(r.center, r.inner, r.outer, rule_);
    s.values.reserve(s.quad.nodes.size());
    for (const Vec3& x : s.quad.nodes) s.values.push_back(mag_(x));
    return s;
  }
  const ScalarFn& function() const { return mag_; }
  const SphericalRule& rule() const { return rule_; }

 private:
  ScalarFn mag_;
  SphericalRule rule_;
};

class GridMagnitude : public MagnitudeSource {
 public:
  explicit GridMagnitude(PhysicalScalar mag) : mag_(std::move(mag)) {}
  BallSamples region(const Region& r) const override {
    BallSamples s;
    s.quad = grid_region(mag_.grid, r.center, r.inner, r.outer);
    s.values.reserve(s.quad.grid_index.size());
    for (std::size_t idx : s.quad.grid_index) s.values.push_back(mag_.data[idx]);
    return s;
  }
  const GridSpec* grid() const override { return &mag_.grid; }
  const PhysicalScalar& samples() const { return mag_; }

 private:
  PhysicalScalar mag_;
};

inline std::unique_ptr<MagnitudeSource> magnitude_of(const VectorFn& v, SphericalRule rule = {}) {
  return std::make_unique<AnalyticMagnitude>([v](const Vec3& x) { return norm(v(x)); }, rule);
}
inline std::unique_ptr<MagnitudeSource> magnitude_of(const ScalarFn& f, SphericalRule rule = {}) {
  return std::make_unique<AnalyticMagnitude>([f](const Vec3& x) { return std::abs(f(x)); }, rule);
}
inline std::unique_ptr<MagnitudeSource> magnitude_of(const SpectralField& v) {
  return std::make_unique<GridMagnitude>(magnitude(to_physical(v)));
}
inline std::unique_ptr<MagnitudeSource> magnitude_of(const ScalarField& f) {
  PhysicalScalar p = to_physical(f);
  for (double& x : p.data) x = std::abs(x);
  return std::make_unique<GridMagnitude>(std::move(p));
}

// ---- Lebesgue and weak Lebesgue -------------------------------------------

inline double lp_of_samples(const BallSamples& s, double p) {
  if (std::isinf(p)) {
    double m = 0.0;
    for (std::size_t i = 0; i < s.values.size(); ++i)
      if (s.quad.weights[i] > 0) m = std::max(m, std::abs(s.values[i]));
    return m;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < s.values.size(); ++i) acc += s.quad.weights[i] * std::pow(std::abs(s.values[i]), p);
  return std::pow(acc, 1.0 / p);
}

/// sup over levels of level * (measure above level)^{1/p}, from the decreasing rearrangement.
/// Each sample stands for its whole cell, so piecewise-constant fields are exact; smooth
/// fields carry an O(cell width) bias.
inline double weak_lp_of_samples(const BallSamples& s, double p) {
  std::vector<std::size_t> order(s.values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(s.values[a]) > std::abs(s.values[b]);
  });
  double cum = 0.0, best = 0.0;
  for (std::size_t i : order) {
    cum += s.quad.weights[i];
    double v = std::abs(s.values[i]);
    best = std::max(best, std::isinf(p) ? v : v * std::pow(cum, 1.0 / p));
  }
  return best;
}

inline void check_exponent(double p) {
  require(p >= 1.0, ErrorKind::InvalidArgument, "Lebesgue exponent must be >= 1");
}

inline NormReport lp_norm(const MagnitudeSource& f, const Region& set, double p) {
  check_exponent(p);
  BallSamples s = f.region(set);
  NormReport r;
  r.norm_id = "lp";
  r.params = {{"p", p}, {"inner", set.inner}, {"outer", set.outer}};
  r.value = lp_of_samples(s, p);
  r.argmax = set.center;
  r.quadrature_error = s.quad.volume_error;
  return r;
}

inline NormReport weak_lp_norm(const MagnitudeSource& f, const Region& set, double p) {
  check_exponent(p);
  BallSamples s = f.region(set);
  NormReport r;
  r.norm_id = "weak_lp";
  r.params = {{"p", p}, {"inner", set.inner}, {"outer", set.outer}};
  r.value = weak_lp_of_samples(s, p);
  r.argmax = set.center;
  r.quadrature_error = s.quad.volume_error;
  return r;
}

// ---- sliding-ball integrals on the grid -------------------------------------

/// integral of f over B_rho(x + shift) for every grid node x, by one circular correlation.
inline PhysicalScalar ball_integral_map(const PhysicalScalar& f, double rho, const Vec3& shift = {}) {
  const GridSpec& g = f.grid;
  require(2.0 * (rho + norm(shift)) <= g.length, ErrorKind::BallTooLarge, "sliding ball does not fit in the box");
  const int n = g.n;
  const double h = g.spacing();
  PhysicalScalar kern = zero_physical_scalar(g);
  double raw = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        Vec3 d{h * g.mode(i), h * g.mode(j), h * g.mode(k)};
        if (i == n / 2) d.x = -d.x;  // the half-box slot sits on both sides; keep it one-sided
        double w = smoothed_indicator(norm(d - shift), rho, h);
        kern.data[g.rindex(i, j, k)] = w;
        raw += w;
      }
  const double scale = ball_volume(rho) / raw;
  std::vector<cplx> fk(g.spectral_size()), kk(g.spectral_size());
  forward_fft(n, f.data.data(), fk.data(), true);
  forward_fft(n, kern.data.data(), kk.data(), true);
  const double nn = double(n) * n * n;
  for (std::size_t i = 0; i < fk.size(); ++i) fk[i] = nn * scale * std::conj(kk[i]) * fk[i];
  PhysicalScalar out = zero_physical_scalar(g);
  inverse_fft(n, fk.data(), out.data.data());
  return out;
}

struct UlocOptions {
  double extent = 4.0;   // analytic fields: centers range over [-extent, extent]^3
  double spacing = 0.0;  // 0 means rho / 4
  int refine_levels = 2;
};

namespace detail {

/// Lexicographic tie-break for deterministic argmax.
inline bool better(double v, const Vec3& x, double best, const Vec3& bx) {
  if (v > best) return true;
  if (v < best) return false;
  if (x.x != bx.x) return x.x < bx.x;
  if (x.y != bx.y) return x.y < bx.y;
  return x.z < bx.z;
}

inline double ball_lq(const MagnitudeSource& f, const Vec3& c, double rho, double q) {
  return lp_of_samples(f.region({c, 0.0, rho}), q);
}

}  // namespace detail

/// sup_x ||f||_{L^q(B_rho(x))} over a center lattice with local refinement.
inline NormReport uloc_norm(const MagnitudeSource& f, double q, double rho, const UlocOptions& opt = {}) {
  check_exponent(q);
  require(rho > 0, ErrorKind::InvalidArgument, "uloc radius must be positive");
  NormReport r;
  r.norm_id = "uloc";
  r.params = {{"q", q}, {"rho", rho}};
  double best = -1.0;
  Vec3 bx{};
  const double spacing = opt.spacing > 0 ? opt.spacing : rho / 4.0;
  if (const GridSpec* g = f.grid()) {
    const auto& mag = static_cast<const GridMagnitude&>(f).samples();
    require(2.0 * rho <= g->length, ErrorKind::BallTooLarge, "uloc ball does not fit in the box");
    if (std::isinf(q)) {
      r.value = max_abs(mag);
      return r;
    }
    PhysicalScalar pw = mag;
    for (double& x : pw.data) x = std::pow(std::abs(x), q);
    const double h = g->spacing();
    const int sub = std::max(1, int(std::ceil(h / spacing - 1e-12)));
    for (int a = 0; a < sub; ++a)
      for (int b = 0; b < sub; ++b)
        for (int c = 0; c < sub; ++c) {
          Vec3 shift = (h / sub) * Vec3{double(a), double(b), double(c)};
          PhysicalScalar m = ball_integral_map(pw, rho, shift);
          for_each_node(*g, [&](std::size_t idx, const Vec3& x) {
            double v = std::max(0.0, m.data[idx]);
            Vec3 cx = x + shift;
            if (detail::better(v, cx, best, bx)) { best = v; bx = cx; }
          });
        }
    r.value = std::pow(std::max(best, 0.0), 1.0 / q);
    r.argmax = bx;
    r.quadrature_error = grid_region(*g, bx, 0.0, rho).volume_error;
    return r;
  }
  // coarse scan with a cheaper rule, refinement and final value with the caller's rule
  const MagnitudeSource* scan = &f;
  std::unique_ptr<AnalyticMagnitude> cheap;
  if (auto* am = dynamic_cast<const AnalyticMagnitude*>(&f)) {
    const SphericalRule& fr = am->rule();
    SphericalRule cr{std::max(8, fr.radial / 3), std::max(8, fr.polar / 3), std::max(16, fr.azimuthal / 3), 1};
    cheap = std::make_unique<AnalyticMagnitude>(am->function(), cr);
    scan = cheap.get();
  }
  const int m = int(std::floor(opt.extent / spacing + 1e-9));
  for (int i = -m; i <= m; ++i)
    for (int j = -m; j <= m; ++j)
      for (int k = -m; k <= m; ++k) {
        Vec3 c = spacing * Vec3{double(i), double(j), double(k)};
        double v = detail::ball_lq(*scan, c, rho, q);
        if (detail::better(v, c, best, bx)) { best = v; bx = c; }
      }
  best = detail::ball_lq(f, bx, rho, q);
  double step = spacing;
  for (int lvl = 0; lvl < opt.refine_levels; ++lvl) {
    step *= 0.25;
    Vec3 base = bx;
    for (int i = -3; i <= 3; ++i)
      for (int j = -3; j <= 3; ++j)
        for (int k = -3; k <= 3; ++k) {
          Vec3 c = base + step * Vec3{double(i), double(j), double(k)};
          double v = detail::ball_lq(f, c, rho, q);
          if (detail::better(v, c, best, bx)) { best = v; bx = c; }
        }
  }
  r.value = best;
  r.argmax = bx;
  return r;
}

// ---- Herz -------------------------------------------------------------------

enum class HerzFlavor { ShellSup, BallEquivalent };

struct HerzParams {
  double s = 0.0;
  double p = 3.0;
  HerzFlavor flavor = HerzFlavor::ShellSup;

  /// The scale-critical preset s = 1 - 3/p.
  static HerzParams critical(double p, HerzFlavor flavor = HerzFlavor::ShellSup) { return {1.0 - 3.0 / p, p, flavor}; }
};

struct AnnulusDecomposition {
  int k_min = -2;
  int k_max = 2;

  double inner(int k) const { return std::ldexp(1.0, k - 1); }
  double outer(int k) const { return std::ldexp(1.0, k); }

  /// Shells resolved by the grid and inside the box.
  static AnnulusDecomposition defaults_for(const GridSpec& g) {
    const double h = g.spacing();
    AnnulusDecomposition d;
    d.k_min = int(std::ceil(std::log2(2.0 * h) + 1.0 - 1e-12));
    d.k_max = int(std::floor(std::log2(0.5 * g.length) + 1e-12));
    require(d.k_min <= d.k_max, ErrorKind::ShellUnresolved, "no resolvable dyadic shell fits this grid");
    return d;
  }
};

/// Fixed set of unit directions: the 26 lattice directions plus a Fibonacci sphere.
inline std::vector<Vec3> probe_directions(int fibonacci = 32) {
  std::vector<Vec3> dirs;
  for (int a = -1; a <= 1; ++a)
    for (int b = -1; b <= 1; ++b)
      for (int c = -1; c <= 1; ++c) {
        if (!a && !b && !c) continue;
        Vec3 d{double(a), double(b), double(c)};
        dirs.push_back(d / norm(d));
      }
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < fibonacci; ++i) {
    double z = 1.0 - 2.0 * (i + 0.5) / fibonacci;
    double rr = std::sqrt(1.0 - z * z);
    dirs.push_back({rr * std::cos(golden * i), rr * std::sin(golden * i), z});
  }
  return dirs;
}

inline NormReport herz_norm(const MagnitudeSource& f, const HerzParams& hp, const AnnulusDecomposition& dec) {
  check_exponent(hp.p);
  require(dec.k_min <= dec.k_max, ErrorKind::InvalidArgument, "k_min must not exceed k_max");
  if (const GridSpec* g = f.grid()) {
    require(dec.inner(dec.k_min) >= g->spacing(), ErrorKind::ShellUnresolved,
            "innermost shell radius " + std::to_string(dec.inner(dec.k_min)) + " is below one grid cell");
    require(dec.outer(dec.k_max) <= 0.5 * g->length, ErrorKind::BallTooLarge, "outermost shell leaves the box");
  }
  NormReport r;
  r.norm_id = hp.flavor == HerzFlavor::ShellSup ? "herz_shell" : "herz_ball";
  r.params = {{"s", hp.s}, {"p", hp.p}, {"k_min", double(dec.k_min)}, {"k_max", double(dec.k_max)}};
  double best = 0.0;
  if (hp.flavor == HerzFlavor::ShellSup) {
    for (int k = dec.k_min; k <= dec.k_max; ++k) {
      BallSamples s = f.region({{}, dec.inner(k), dec.outer(k)});
      double v = std::ldexp(1.0, 0) * std::pow(2.0, k * hp.s) * lp_of_samples(s, hp.p);
      r.breakdown.push_back({"shell", double(k), v});
      r.quadrature_error = std::max(r.quadrature_error, s.quad.volume_error);
      if (v > best) { best = v; r.argmax = {dec.outer(k), 0, 0}; }
    }
    r.value = best;
    return r;
  }
  // ball form: |x|^s ||f||_{L^p(B_{|x|/2}(x))} over radii between the shell bounds
  const auto dirs = probe_directions();
  const int per_octave = 4;
  double top = dec.outer(dec.k_max);
  if (f.grid()) top = std::min(top, f.grid()->length / 3.0);
  for (int k = dec.k_min - 1; k <= dec.k_max; ++k)
    for (int m = 0; m < per_octave; ++m) {
      double rad = std::ldexp(1.0, k) * std::pow(2.0, double(m) / per_octave);
      if (rad * 1.5 > top + 1e-12) continue;
      if (f.grid() && rad * 0.5 < 2.0 * f.grid()->spacing()) continue;
      double rowbest = 0.0;
      for (const Vec3& d : dirs) {
        BallSamples s = f.region({rad * d, 0.0, 0.5 * rad});
        double v = std::pow(rad, hp.s) * lp_of_samples(s, hp.p);
        r.quadrature_error = std::max(r.quadrature_error, s.quad.volume_error);
        if (v > rowbest) rowbest = v;
        if (v > best) { best = v; r.argmax = rad * d; }
      }
      r.breakdown.push_back({"radius", rad, rowbest});
    }
  r.value = best;
  return r;
}

/// Shell value over ball value for the same field and parameters.
inline double herz_equivalence_ratio(const MagnitudeSource& f, double s, double p, const AnnulusDecomposition& dec) {
  double shell = herz_norm(f, {s, p, HerzFlavor::ShellSup}, dec).value;
  double ball = herz_norm(f, {s, p, HerzFlavor::BallEquivalent}, dec).value;
  return ball > 0 ? shell / ball : 0.0;
}

// ---- data quantities ---------------------------------------------------------

/// (1/r) sup_x integral of |v0|^2 over B_r(x).
inline double data_quantity_nr(const MagnitudeSource& v0, double r, const UlocOptions& opt = {}) {
  require(r > 0, ErrorKind::InvalidArgument, "radius must be positive");
  double u = uloc_norm(v0, 2.0, r, opt).value;
  return u * u / r;
}

inline double sigma_schedule(double nr, double c0) {
  require(nr >= 0 && c0 > 0, ErrorKind::InvalidArgument, "sigma schedule needs N_r >= 0 and c0 > 0");
  if (nr == 0.0) return c0;
  return c0 * std::min(1.0 / (nr * nr), 1.0);
}

struct HerzNrCheck {
  double nr = 0.0;
  double herz_sq = 0.0;
  double ratio = 0.0;
  double budget = 10.0;
  bool within_budget = true;
};

inline HerzNrCheck herz_controls_nr_check(const MagnitudeSource& v0, double R, const AnnulusDecomposition& dec,
                                          double budget = 10.0, const UlocOptions& opt = {}) {
  HerzNrCheck c;
  c.budget = budget;
  c.nr = data_quantity_nr(v0, R, opt);
  double h = herz_norm(v0, HerzParams::critical(3.0), dec).value;
  c.herz_sq = h * h;
  c.ratio = c.herz_sq > 0 ? c.nr / (R * c.herz_sq) : 0.0;
  c.within_budget = c.ratio <= budget;
  return c;
}

struct DecayProfile {
  std::vector<double> radius;
  std::vector<double> value;
  std::vector<double> envelope;  // sup of value over radii >= radius
  bool decays = false;
};

/// sup_{|x| = rho} ||f||_{L^q(B_1(x))} over a radius ladder.
inline DecayProfile e2_decay_indicator(const MagnitudeSource& f, double q, const std::vector<double>& ladder,
                                       double tail_fraction = 1e-3) {
  check_exponent(q);
  DecayProfile out;
  out.radius = ladder;
  out.value.assign(ladder.size(), 0.0);
  if (const GridSpec* g = f.grid()) {
    const auto& mag = static_cast<const GridMagnitude&>(f).samples();
    PhysicalScalar pw = mag;
    for (double& x : pw.data) x = std::pow(std::abs(x), q);
    PhysicalScalar m = ball_integral_map(pw, 1.0);
    const double tol = 0.5 * std::sqrt(3.0) * g->spacing();
    for_each_node(*g, [&](std::size_t idx, const Vec3& x) {
      double rx = norm(x);
      for (std::size_t i = 0; i < ladder.size(); ++i)
        if (std::abs(rx - ladder[i]) <= tol) out.value[i] = std::max(out.value[i], std::max(0.0, m.data[idx]));
    });
    for (double& v : out.value) v = std::pow(v, 1.0 / q);
  } else {
    const auto dirs = probe_directions();
    for (std::size_t i = 0; i < ladder.size(); ++i)
      for (const Vec3& d : dirs) out.value[i] = std::max(out.value[i], detail::ball_lq(f, ladder[i] * d, 1.0, q));
  }
  out.envelope = out.value;
  for (std::size_t i = out.value.size(); i-- > 1;) out.envelope[i - 1] = std::max(out.envelope[i - 1], out.envelope[i]);
  // judged on the outer half of the ladder: a field in E^q must be small there
  double peak = out.envelope.empty() ? 0.0 : out.envelope.front();
  double tail = 0.0;
  if (!ladder.empty()) {
    double mid = 0.5 * (ladder.front() + ladder.back());
    for (std::size_t i = 0; i < ladder.size(); ++i)
      if (ladder[i] >= mid) tail = std::max(tail, out.value[i]);
  }
  out.decays = tail <= tail_fraction * peak;
  return out;
}

/// Radii 1, 1 + step, ... up to L/2 - 1.
inline std::vector<double> decay_ladder(const GridSpec& g, double step = 0.5) {
  std::vector<double> r;
  for (double x = 1.0; x <= 0.5 * g.length - 1.0 + 1e-12; x += step) r.push_back(x);
  return r;
}

}  // namespace nsreg
