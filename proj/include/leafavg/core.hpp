#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace leafavg {

/// Raised when a caller violates a documented precondition or hands in a
/// malformed value (bad curve, unknown catalog id, out-of-range argument).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Phase-space point. Planar systems use z = 0.
struct Point {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr double& operator[](std::size_t i) { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr double operator[](std::size_t i) const { return i == 0 ? x : (i == 1 ? y : z); }

  friend constexpr Point operator+(Point a, const Point& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend constexpr Point operator-(Point a, const Point& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend constexpr Point operator*(double s, const Point& p) { return {s * p.x, s * p.y, s * p.z}; }
  friend constexpr bool operator==(const Point&, const Point&) = default;

  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline double dot(const Point& a, const Point& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(const Point& p) { return std::sqrt(dot(p, p)); }
inline double distance(const Point& a, const Point& b) { return norm(a - b); }
inline Point cross(const Point& a, const Point& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

/// Polyline with its cumulative arclength table. Immutable after construction.
class PiecewiseLinearCurve {
 public:
  /// Throws InputError on fewer than two vertices or non-finite coordinates.
  explicit PiecewiseLinearCurve(std::vector<Point> vertices);

  const std::vector<Point>& vertices() const { return vertices_; }
  const std::vector<double>& cumulative_arclength() const { return cumulative_; }
  std::size_t segment_count() const { return vertices_.size() - 1; }
  const Point& front() const { return vertices_.front(); }
  const Point& back() const { return vertices_.back(); }

  /// True when the first and last vertex coincide within `tol`.
  bool closed(double tol = 1e-12) const;

 private:
  std::vector<Point> vertices_;
  std::vector<double> cumulative_;
};

double curve_length(const PiecewiseLinearCurve& curve);

/// Point at arclength `s` under the unit-speed parametrization.
Point point_at(const PiecewiseLinearCurve& curve, double s);

/// Continuous scalar function on phase space.
struct Observable {
  std::string id;
  std::function<double(const Point&)> evaluate;
  std::string description;

  double operator()(const Point& p) const { return evaluate(p); }
};

Observable constant_observable(double c);

/// Built-in observables: one, x, y, z, x1, x2, x3, x_squared, cos_2pi_x,
/// cos_4pi_x, sin_2pi_x.
Observable make_observable(const std::string& id);
std::vector<std::string> observable_ids();

enum class ParameterKind { time, arclength, count };

const char* to_string(ParameterKind kind);

/// How a sampled computation ended.
enum class Termination {
  horizon_reached,
  equilibrium_approach,
  left_domain,
  precision_limit,
  step_budget,
};

const char* to_string(Termination t);

/// Step counters of the adaptive integrator.
struct IntegratorStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t drift_jumps = 0;
  std::size_t transit_steps = 0;

  IntegratorStats& operator+=(const IntegratorStats& o) {
    accepted += o.accepted;
    rejected += o.rejected;
    drift_jumps += o.drift_jumps;
    transit_steps += o.transit_steps;
    return *this;
  }
};

struct AverageSample {
  double parameter = 0.0;
  double average = 0.0;
};

/// Partial averages indexed by a strictly increasing parameter.
struct RunningAverage {
  ParameterKind parameter_kind = ParameterKind::arclength;
  std::vector<AverageSample> samples;
  std::string observable_id;
  Termination termination = Termination::horizon_reached;
  /// Set when the samples come from integrating a flow.
  std::optional<IntegratorStats> integrator;

  bool empty() const { return samples.empty(); }
  double last() const { return samples.back().average; }
};

/// Sub-segment samples used by the trapezoid rule on each linear segment.
inline constexpr int kDefaultSegmentResolution = 16;

/// (1/s) times the integral of `phi` along the curve from 0 to s, for each s
/// in `grid`. Grid values must be increasing, positive, and at most the curve
/// length.
RunningAverage curve_running_average(const PiecewiseLinearCurve& curve, const Observable& phi,
                                     std::span<const double> grid,
                                     int resolution = kDefaultSegmentResolution);

/// Same, for a chain of curves traversed in order (each piece starts where the
/// previous one ends).
RunningAverage curve_running_average(std::span<const PiecewiseLinearCurve> pieces,
                                     const Observable& phi, std::span<const double> grid,
                                     int resolution = kDefaultSegmentResolution);

/// 1, r, r^2, ... up to (and including) `max_value`; `max_value` is appended
/// when it is not already on the grid. Default ratio is 2^(1/4).
std::vector<double> geometric_grid(double max_value, double start = 1.0,
                                   double ratio = 1.189207115002721);

}  // namespace leafavg
