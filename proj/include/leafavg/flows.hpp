#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "leafavg/core.hpp"

namespace leafavg {

enum class PhaseSpace {
  plane,    // R^2, z = 0
  torus,    // R^2 / Z^2, integrated in the universal cover
  simplex,  // {x1 + x2 + x3 = 1, xi > 0} in R^3
};

const char* to_string(PhaseSpace ps);

/// Segment (or, on the torus, the circle {x = 0}) that the catalog suggests
/// as a cross-section for return-map studies.
struct SectionHint {
  Point a;
  Point b;
  bool open_a = true;
  bool open_b = true;
  bool torus_circle = false;
};

struct Parameter {
  std::string name;
  double value = 0.0;
};

/// Smooth velocity field on one of the supported phase spaces.
struct VectorField {
  std::string catalog_id;
  std::vector<Parameter> parameters;
  PhaseSpace phase_space = PhaseSpace::plane;
  std::function<Point(const Point&)> evaluator;
  /// Simplex fields only: per-coordinate growth rates r with A_i = x_i * r_i,
  /// used to integrate in logarithmic coordinates.
  std::function<Point(const Point&)> log_rates;
  std::vector<Point> declared_equilibria;
  /// Free-form diagnostics, e.g. "non_attracting".
  std::vector<std::string> flags;
  std::optional<SectionHint> default_section;

  Point operator()(const Point& p) const { return evaluator(p); }
  double speed(const Point& p) const { return norm(evaluator(p)); }
  double parameter(const std::string& name) const;
  bool has_flag(const std::string& flag) const;
};

struct CatalogEntry {
  std::string id;
  std::vector<std::string> parameter_names;
  PhaseSpace phase_space;
  std::string description;
};

const std::vector<CatalogEntry>& field_catalog();

/// Builds a catalog field. Throws InputError on an unknown id or when the
/// supplied parameter names do not match the catalog schema.
VectorField make_field(const std::string& catalog_id, const std::map<std::string, double>& parameters = {});

/// A / |A|. The result shares equilibria and section hint with `field`.
VectorField unit_speed(const VectorField& field);

/// Per-species Lotka-Volterra growth x_i (1 - x_i - alpha x_{i+1} - beta x_{i+2}).
/// The catalog's may_leonard field is its projection onto the simplex.
Point may_leonard_lotka_volterra(const Point& x, double alpha, double beta);

struct FlowControls {
  double tol = 1e-9;
  double max_step = 0.1;
  double eps_min = 1e-9;
  double degeneracy_tol = 1e-6;
  double jacobian_step = 1e-5;
  /// Plane orbits leaving this radius terminate with left_domain.
  double domain_radius = 1e6;
  std::size_t max_steps = 50'000'000;
};

struct OrbitSample {
  double t = 0.0;
  Point point;                          // reduced mod 1 on the torus
  std::array<long long, 2> winding{};   // torus only
};

struct Orbit {
  std::vector<OrbitSample> samples;
  Termination termination = Termination::horizon_reached;
  IntegratorStats stats;
};

struct ArcSample {
  double s = 0.0;
  double t = 0.0;
  Point point;
  std::array<long long, 2> winding{};
};

struct ArcTrajectory {
  std::vector<ArcSample> samples;
  Termination termination = Termination::horizon_reached;
  IntegratorStats stats;
};

/// Universal-cover position of a torus sample (identity elsewhere).
Point cover_point(const Point& p, const std::array<long long, 2>& winding);

/// Adaptive Dormand-Prince 5(4) integration of the flow up to time T.
Orbit integrate_time(const VectorField& field, const Point& x0, double T, const FlowControls& controls = {});
Orbit integrate_time(const VectorField& field, const Point& x0, double T, double tol);

/// Integration of the unit-speed field A/|A| up to arclength S. Passages
/// within eps_min of a hyperbolic saddle are crossed in the time
/// parametrization; the trajectory halts with equilibrium_approach near an
/// equilibrium without unstable directions.
ArcTrajectory integrate_arclength(const VectorField& field, const Point& x0, double S,
                                  const FlowControls& controls = {});
ArcTrajectory integrate_arclength(const VectorField& field, const Point& x0, double S, double tol,
                                  double eps_min);

enum class EquilibriumType { sink, source, saddle, center, degenerate };

const char* to_string(EquilibriumType t);

struct Equilibrium {
  Point location;
  /// Eigenvalues of the Jacobian, restricted to the simplex tangent plane for
  /// simplex fields.
  std::vector<std::complex<double>> eigenvalues;
  EquilibriumType classification = EquilibriumType::degenerate;
  double jacobian_step = 0.0;

  bool has_unstable_direction() const;
};

/// Central-difference linearization at a candidate equilibrium.
/// Throws InputError when |A(p)| >= near_tol.
Equilibrium classify_equilibrium(const VectorField& field, const Point& p, double h = 1e-5,
                                 double degeneracy_tol = 1e-6, double near_tol = 1e-9);

}  // namespace leafavg
