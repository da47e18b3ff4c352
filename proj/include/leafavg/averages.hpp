#pragma once

#include <optional>
#include <string>

#include "leafavg/core.hpp"
#include "leafavg/flows.hpp"

namespace leafavg {

struct AverageControls {
  FlowControls flow;
  /// Sampling grid: start, start * ratio, ... up to the horizon (inclusive).
  double grid_start = 1.0;
  double grid_ratio = 1.189207115002721;
};

/// (1/T) * integral of phi(f^t x0) dt over [0, T] on the geometric grid.
RunningAverage time_average(const VectorField& field, const Point& x0, const Observable& phi, double T_max,
                            const AverageControls& controls = {});

/// (1/s) * integral of phi over the forward arc of length s. Stops early with
/// partial samples when the orbit halts at an equilibrium.
RunningAverage length_average_forward(const VectorField& field, const Point& x0, const Observable& phi,
                                      double S_max, const AverageControls& controls = {});

/// Two-sided ball of radius r along the leaf: forward arc of length r and
/// backward arc of length min(r, backward leaf length).
RunningAverage length_average_leaf(const VectorField& field, const Point& x0, const Observable& phi,
                                   double S_max, const AverageControls& controls = {});

/// Arclength mean of phi over a closed polyline. Throws InputError on open curves.
double circuit_limit_predictor(const PiecewiseLinearCurve& circuit, const Observable& phi,
                               int resolution = kDefaultSegmentResolution);

enum class Verdict { converged, diverged, undecided };

const char* to_string(Verdict v);

struct ConvergencePolicy {
  double tolerance = 1e-2;
  /// Divergence floor = divergence_factor * tolerance.
  double divergence_factor = 10.0;
  /// Fraction of samples (by index, i.e. log-scale on a geometric grid) forming the tail.
  double tail_fraction = 0.5;
  std::size_t min_samples = 8;
  std::size_t min_windows = 3;

  double divergence_floor() const { return divergence_factor * tolerance; }
  std::string describe() const;
};

struct ConvergenceReport {
  Verdict verdict = Verdict::undecided;
  std::optional<double> estimate;
  double limsup_hat = 0.0;
  double liminf_hat = 0.0;
  /// Range of the partial averages inside the last dyadic window.
  double last_window_drift = 0.0;
  /// Gaps over the earlier and later halves of the tail windows.
  double early_gap = 0.0;
  double late_gap = 0.0;
  std::size_t tail_samples = 0;
  std::size_t tail_windows = 0;
  std::string window_policy;

  double gap() const { return limsup_hat - liminf_hat; }
};

/// Dyadic window index floor(log2 parameter).
long dyadic_window(double parameter);

/// Numeric verdict on the existence of the limit. Windows are dyadic in the
/// parameter; converged iff the tail gap and the last-window drift are both
/// within tolerance; diverged iff the gap reaches the floor in both the
/// earlier and later halves of the tail windows. Throws InputError with fewer
/// than min_samples samples or min_windows windows.
ConvergenceReport convergence_report(const RunningAverage& avg, const ConvergencePolicy& policy = {});

}  // namespace leafavg
