#include "leafavg/core.hpp"

#include <algorithm>
#include <string>

namespace leafavg {

PiecewiseLinearCurve::PiecewiseLinearCurve(std::vector<Point> vertices)
    : vertices_(std::move(vertices)) {
  if (vertices_.size() < 2) {
    throw InputError("curve needs at least two vertices");
  }
  cumulative_.reserve(vertices_.size());
  cumulative_.push_back(0.0);
  for (std::size_t k = 0; k < vertices_.size(); ++k) {
    if (!vertices_[k].finite()) {
      throw InputError("curve vertex " + std::to_string(k) + " is not finite");
    }
    if (k > 0) {
      cumulative_.push_back(cumulative_.back() + distance(vertices_[k - 1], vertices_[k]));
    }
  }
}

bool PiecewiseLinearCurve::closed(double tol) const {
  return distance(vertices_.front(), vertices_.back()) <= tol;
}

double curve_length(const PiecewiseLinearCurve& curve) { return curve.cumulative_arclength().back(); }

Point point_at(const PiecewiseLinearCurve& curve, double s) {
  const auto& cum = curve.cumulative_arclength();
  const double total = cum.back();
  if (!(s >= 0.0) || s > total) {
    throw InputError("arclength " + std::to_string(s) + " outside [0, " + std::to_string(total) + "]");
  }
  // First vertex whose cumulative arclength is >= s.
  const auto it = std::lower_bound(cum.begin(), cum.end(), s);
  const auto k = static_cast<std::size_t>(it - cum.begin());
  const auto& v = curve.vertices();
  if (k == 0 || *it == s) {
    return v[k];
  }
  const double seg = cum[k] - cum[k - 1];
  const double u = (s - cum[k - 1]) / seg;
  return v[k - 1] + u * (v[k] - v[k - 1]);
}

namespace {

// Trapezoid rule for phi along p -> p + (q - p) * (len / seg_len), i.e. over
// the first `len` units of arclength of segment [p, q].
double segment_integral(const Point& p, const Point& q, double seg_len, double len,
                        const Observable& phi, int resolution) {
  if (len <= 0.0 || seg_len <= 0.0) {
    return 0.0;
  }
  const Point dir = (1.0 / seg_len) * (q - p);
  const double h = len / resolution;
  double acc = 0.5 * (phi(p) + phi(p + len * dir));
  for (int i = 1; i < resolution; ++i) {
    acc += phi(p + (i * h) * dir);
  }
  return acc * h;
}

}  // namespace

RunningAverage curve_running_average(std::span<const PiecewiseLinearCurve> pieces,
                                     const Observable& phi, std::span<const double> grid,
                                     int resolution) {
  if (grid.empty()) {
    throw InputError("curve_running_average: empty grid");
  }
  if (pieces.empty()) {
    throw InputError("curve_running_average: no curve");
  }
  if (resolution < 1) {
    throw InputError("curve_running_average: resolution must be >= 1");
  }
  double total = 0.0;
  for (const auto& c : pieces) total += curve_length(c);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0) || grid[i] > total * (1.0 + 1e-12)) {
      throw InputError("curve_running_average: grid value outside (0, length]");
    }
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw InputError("curve_running_average: grid must be strictly increasing");
    }
  }

  RunningAverage out;
  out.parameter_kind = ParameterKind::arclength;
  out.observable_id = phi.id;
  out.samples.reserve(grid.size());

  std::size_t g = 0;
  double offset = 0.0;    // arclength at the start of the current segment
  double integral = 0.0;  // integral of phi over [0, offset]
  for (const auto& curve : pieces) {
    const auto& v = curve.vertices();
    const auto& cum = curve.cumulative_arclength();
    for (std::size_t k = 0; k + 1 < v.size() && g < grid.size(); ++k) {
      const double seg = cum[k + 1] - cum[k];
      const double end = offset + seg;
      while (g < grid.size() && grid[g] <= end) {
        const double partial = segment_integral(v[k], v[k + 1], seg, grid[g] - offset, phi, resolution);
        out.samples.push_back({grid[g], (integral + partial) / grid[g]});
        ++g;
      }
      integral += segment_integral(v[k], v[k + 1], seg, seg, phi, resolution);
      offset = end;
    }
  }
  // Grid values that exceed the summed length only by rounding.
  while (g < grid.size()) {
    out.samples.push_back({grid[g], integral / grid[g]});
    ++g;
  }
  return out;
}

RunningAverage curve_running_average(const PiecewiseLinearCurve& curve, const Observable& phi,
                                     std::span<const double> grid, int resolution) {
  return curve_running_average(std::span<const PiecewiseLinearCurve>(&curve, 1), phi, grid, resolution);
}

std::vector<double> geometric_grid(double max_value, double start, double ratio) {
  if (!(max_value > 0.0) || !(start > 0.0) || !(ratio > 1.0)) {
    throw InputError("geometric_grid: need max > 0, start > 0, ratio > 1");
  }
  std::vector<double> grid;
  for (int k = 0;; ++k) {
    const double v = start * std::pow(ratio, k);
    if (v > max_value * (1.0 + 1e-12)) break;
    grid.push_back(v);
  }
  if (grid.empty() || grid.back() < max_value * (1.0 - 1e-12)) {
    grid.push_back(max_value);
  } else {
    grid.back() = max_value;
  }
  return grid;
}

const char* to_string(ParameterKind kind) {
  switch (kind) {
    case ParameterKind::time: return "time";
    case ParameterKind::arclength: return "arclength";
    case ParameterKind::count: return "count";
  }
  return "?";
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::horizon_reached: return "horizon_reached";
    case Termination::equilibrium_approach: return "equilibrium_approach";
    case Termination::left_domain: return "left_domain";
    case Termination::precision_limit: return "precision_limit";
    case Termination::step_budget: return "step_budget";
  }
  return "?";
}

}  // namespace leafavg
