#pragma once

// Integration engine shared by flows, sections and averages.

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "leafavg/flows.hpp"

namespace leafavg::detail {

using Vec3 = std::array<double, 3>;

/// Maps phase-space points to integration states. Plane: identity. Torus:
/// universal cover. Simplex: logarithmic coordinates u_i = ln x_i, with the
/// largest coordinate pinned at 0.
class Chart {
 public:
  Chart(const VectorField& field, int direction);

  Vec3 to_state(const Point& p) const;
  Point to_point(const Vec3& y) const;
  Point to_cover(const Vec3& y) const;
  std::array<long long, 2> winding(const Vec3& y) const;

  /// dy/dt in chart coordinates together with dx/dt in point space.
  void rates(const Vec3& y, const Point& x, Vec3& dy, Point& dx) const;
  void normalize(Vec3& y) const;

  bool logarithmic() const { return field_->phase_space == PhaseSpace::simplex; }
  PhaseSpace phase_space() const { return field_->phase_space; }
  int direction() const { return direction_; }

 private:
  const VectorField* field_;
  int direction_;
};

enum class Parametrization { time, arclength };

struct Snapshot {
  Vec3 y{};
  double t = 0.0;
  double s = 0.0;
  std::vector<double> int_dt;  // per observable, integral of phi dt
  std::vector<double> int_ds;  // per observable, integral of phi ds
};

/// Steps a single orbit forward (direction +1) or backward (-1), carrying
/// time, arclength and observable integrals as quadratures.
class Tracer {
 public:
  Tracer(const VectorField& field, const Point& x0, Parametrization mode, int direction,
         const FlowControls& controls, std::span<const Observable> observables = {});

  /// Takes one accepted step whose parameter increment does not exceed
  /// `limit` (exactly, except inside saddle transits). Returns false once
  /// terminated.
  bool step(double limit);

  /// Snapshot at parameter value `target` >= current parameter of the last
  /// accepted step start. Steps as needed; nullopt if terminated first.
  std::optional<Snapshot> advance_to(double target);

  /// Re-evaluates the last step with a reduced size tau.
  Snapshot interpolate(double tau) const;
  double last_step_size() const { return last_h_; }

  const Snapshot& current() const { return cur_; }
  const Snapshot& previous() const { return prev_; }
  double parameter(const Snapshot& s) const { return mode_ == Parametrization::time ? s.t : s.s; }

  Point point(const Snapshot& s) const { return chart_.to_point(s.y); }
  Point cover(const Snapshot& s) const { return chart_.to_cover(s.y); }
  std::array<long long, 2> winding(const Snapshot& s) const { return chart_.winding(s.y); }
  double speed(const Snapshot& s) const;

  bool terminated() const { return termination_.has_value(); }
  std::optional<Termination> termination() const { return termination_; }
  const IntegratorStats& stats() const { return stats_; }
  std::size_t observable_count() const { return observables_.size(); }

 private:
  enum class StepKind { time, arc, drift };

  Snapshot rk_step(const Snapshot& from, double h, StepKind kind, double* err) const;
  Snapshot drift_step(const Snapshot& from, double h) const;
  bool try_drift(double limit);
  void terminate(Termination t) { termination_ = t; }

  const VectorField* field_;
  Chart chart_;
  Parametrization mode_;
  FlowControls controls_;
  std::vector<Observable> observables_;

  Snapshot cur_;
  Snapshot prev_;
  StepKind last_kind_ = StepKind::time;
  double last_h_ = 0.0;
  double h_next_;
  bool transit_ = false;
  std::optional<Termination> termination_;
  IntegratorStats stats_;
};

}  // namespace leafavg::detail
