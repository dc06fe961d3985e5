#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "nsreg/field.hpp"
#include "nsreg/pressure.hpp"

namespace nsreg {

struct Snapshot {
  double time = 0.0;
  SpectralField v;
  std::optional<ScalarField> pressure;  // mean-zero gauge when present
};

/// Which steps keep a full snapshot.
struct SnapshotPolicy {
  int stride = 1;            // every stride-th step
  double t_begin = 0.0;      // nothing earlier than this is stored
  bool store_pressure = true;
  double dense_from = kInf;  // every step is stored from this time on
};

struct TrajectoryLedger {
  GridSpec grid;
  std::vector<Snapshot> snapshots;
  // one entry per step, starting with t = 0
  std::vector<double> step_times;
  std::vector<double> energy;       // 1/2 |v|^2 over the box
  std::vector<double> dissipation;  // |grad v|^2 over the box
  double dt = 0.0;
  std::string scheme = "if-rk2";
  double dealias_fraction = 2.0 / 3.0;

  double t_end() const { return step_times.empty() ? 0.0 : step_times.back(); }

  /// Pressure of snapshot i, recomputed when it was not stored.
  ScalarField pressure(std::size_t i) const {
    const Snapshot& s = snapshots.at(i);
    return s.pressure ? *s.pressure : global_pressure(s.v);
  }

  /// Snapshot nearest to t; fails with CoverageGap when none lies within tol.
  std::size_t index_at(double t, double tol = 1e-9) const {
    std::size_t best = 0;
    double gap = kInf;
    for (std::size_t i = 0; i < snapshots.size(); ++i)
      if (std::abs(snapshots[i].time - t) < gap) {
        gap = std::abs(snapshots[i].time - t);
        best = i;
      }
    require(gap <= tol, ErrorKind::CoverageGap, "no snapshot at t = " + std::to_string(t));
    return best;
  }

  /// Time integral of the dissipation from 0 to step_times[i] (Simpson on the step mesh).
  double dissipated(std::size_t i) const {
    if (i == 0) return 0.0;
    std::vector<double> head(dissipation.begin(), dissipation.begin() + i + 1);
    double h = step_times[i] / double(i);
    auto w = simpson_weights(head.size(), h);
    double s = 0.0;
    for (std::size_t k = 0; k < head.size(); ++k) s += w[k] * head[k];
    return s;
  }
};

}  // namespace nsreg
