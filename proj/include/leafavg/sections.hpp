#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "leafavg/core.hpp"
#include "leafavg/flows.hpp"

namespace leafavg {

/// Transversal segment, or the circle {x = 0} of the torus. Crossings are
/// counted only in the direction of `normal`.
class CrossSection {
 public:
  enum class Kind { segment, torus_circle };

  /// Checks transversality of `field` at `samples` interior points and orients
  /// the normal along the flow. Throws InputError on tangency or a sign change.
  static CrossSection segment(const VectorField& field, const Point& a, const Point& b, bool open_a = true,
                              bool open_b = true, int samples = 64);
  static CrossSection torus_circle(const VectorField& field);
  static CrossSection from_hint(const VectorField& field, const SectionHint& hint);

  Kind kind() const { return kind_; }
  const Point& a() const { return a_; }
  const Point& b() const { return b_; }
  const Point& normal() const { return normal_; }
  bool open_a() const { return open_a_; }
  bool open_b() const { return open_b_; }

  /// Position along the section in [0, 1] (segment parameter, or y mod 1 on
  /// the torus circle).
  double coordinate(const Point& p) const;
  /// Signed distance to the plane (segment) or line x = 0 (torus) through the section.
  double signed_distance(const Point& p) const;
  bool contains(const Point& p, double tol = 1e-9) const;

 private:
  CrossSection() = default;
  Kind kind_ = Kind::segment;
  Point a_, b_, normal_;
  bool open_a_ = true, open_b_ = true;
};

struct ReturnRecord {
  Point x;
  Point image;
  double return_time = 0.0;
  double return_arc_length = 0.0;
  /// Integral of each observable along the return arc, keyed by id. Always
  /// contains "one".
  std::map<std::string, double> arc_integrals;
  double crossing_refinement_error = 0.0;
  /// Polyline through the integrator steps of the return arc, when requested.
  std::optional<PiecewiseLinearCurve> arc;
};

enum class ReturnStatus { ok, no_return_within_horizon, orbit_hits_equilibrium, grazing_endpoint, numeric_failure };

const char* to_string(ReturnStatus s);

class ReturnError : public std::runtime_error {
 public:
  ReturnError(ReturnStatus status, const std::string& what) : std::runtime_error(what), status_(status) {}
  ReturnStatus status() const { return status_; }

 private:
  ReturnStatus status_;
};

struct ReturnControls {
  FlowControls flow;
  double time_horizon = 1e6;
  std::size_t step_horizon = 100'000;
  double refine_tol = 1e-12;
  double graze_tol = 1e-10;
  bool record_arc = false;
};

/// First return of `x` (on the section) to the section. Throws ReturnError.
ReturnRecord first_return(const VectorField& field, const CrossSection& section, const Point& x,
                          const std::vector<Observable>& observables = {}, const ReturnControls& controls = {});

struct ReturnSequence {
  std::vector<ReturnRecord> records;
  ReturnStatus status = ReturnStatus::ok;
  /// Index of the return that failed, when status != ok.
  std::size_t failed_index = 0;
  std::string message;
};

/// n successive returns P^j x, j < n, along a single orbit; stops early on failure.
ReturnSequence return_sequence(const VectorField& field, const CrossSection& section, const Point& x,
                               std::size_t n, const std::vector<Observable>& observables = {},
                               const ReturnControls& controls = {});

/// Cumulative quantities at one hit of the section, measured from the start.
struct Hit {
  double t = 0.0;
  double s = 0.0;
  Point point;
  std::map<std::string, double> integrals;
  /// Smallest speed at the integrator steps since the previous hit.
  double min_speed = 0.0;
};

struct HitSequence {
  std::vector<Hit> hits;
  ReturnStatus status = ReturnStatus::ok;
  std::string message;
  /// Arc between the last two hits, when ReturnControls::record_arc is set.
  std::optional<PiecewiseLinearCurve> last_arc;
};

/// Crossings within graze_tol of an open endpoint stop the scan with
/// grazing_endpoint; closed endpoints count as hits.
///
/// The first `count` hitting times of the orbit of an arbitrary start,
/// computed in a single integration pass (no restarts at the hits).
HitSequence hitting_sequence(const VectorField& field, const CrossSection& section, const Point& x0,
                             std::size_t count, const std::vector<Observable>& observables = {},
                             const ReturnControls& controls = {});

enum class OmegaType { fixed_point, periodic_orbit, attracting_circuit, quasi_minimal_candidate, undecided };

const char* to_string(OmegaType t);

struct ClassifierControls {
  ReturnControls returns = [] {
    ReturnControls r;
    r.time_horizon = 1e300;
    r.step_horizon = 1'000'000;
    return r;
  }();
  double transient_time = 100.0;
  std::size_t max_returns = 64;
  std::size_t min_returns = 6;
  std::size_t convergence_window = 5;
  double position_tol = 1e-6;
  double divergence_factor = 10.0;
  int bins = 32;
  int min_filled_bins = 20;
  double speed_floor = 1e-6;
  double auto_section_half_width = 0.1;
};

struct OmegaEvidence {
  bool section_used = false;
  std::size_t returns = 0;
  double final_speed = 0.0;
  double tail_position_spread = 0.0;
  double return_time_ratio = 0.0;
  double first_return_time = 0.0;
  double last_return_time = 0.0;
  double limit_speed = 0.0;
  int filled_bins = 0;
  std::string note;
};

struct OmegaVerdict {
  OmegaType type = OmegaType::undecided;
  OmegaEvidence evidence;
  /// Last computed return arc, approximating the limit cycle or circuit.
  std::optional<PiecewiseLinearCurve> limit_curve;
};

/// Numeric heuristic for the four omega-limit types of surface flows.
OmegaVerdict classify_omega_limit(const VectorField& field, const Point& x0, const ClassifierControls& controls = {});

}  // namespace leafavg
