#include "leafavg/flows.hpp"

#include <algorithm>
#include <cmath>

#include "tracer.hpp"

namespace leafavg {

Orbit integrate_time(const VectorField& field, const Point& x0, double T, const FlowControls& controls) {
  if (!(T > 0.0)) throw InputError("integrate_time: T must be positive");
  detail::Tracer tracer(field, x0, detail::Parametrization::time, +1, controls);
  Orbit orbit;
  auto record = [&](const detail::Snapshot& s) {
    orbit.samples.push_back({s.t, tracer.point(s), tracer.winding(s)});
  };
  record(tracer.current());
  while (tracer.current().t < T) {
    if (!tracer.step(T)) break;
    record(tracer.current());
  }
  if (auto t = tracer.termination()) orbit.termination = *t;
  orbit.stats = tracer.stats();
  return orbit;
}

Orbit integrate_time(const VectorField& field, const Point& x0, double T, double tol) {
  if (!(tol > 0.0)) throw InputError("integrate_time: tol must be positive");
  FlowControls c;
  c.tol = tol;
  return integrate_time(field, x0, T, c);
}

namespace {
constexpr double kChordDeficit = 2.5e-7;
}  // namespace

ArcTrajectory integrate_arclength(const VectorField& field, const Point& x0, double S,
                                  const FlowControls& controls) {
  if (!(S > 0.0)) throw InputError("integrate_arclength: S must be positive");
  if (!(field.speed(x0) > controls.eps_min)) {
    throw InputError("integrate_arclength: start point is an equilibrium");
  }
  detail::Tracer tracer(field, x0, detail::Parametrization::arclength, +1, controls);
  ArcTrajectory traj;
  auto record = [&](const detail::Snapshot& s) {
    traj.samples.push_back({s.s, s.t, tracer.point(s), tracer.winding(s)});
  };
  record(tracer.current());
  while (tracer.current().s < S) {
    if (!tracer.step(S)) break;
    const auto& cur = tracer.current();
    if (cur.s > S) {
      // A saddle transit overshot the horizon; cut the last step back.
      if (auto snap = tracer.advance_to(S)) record(*snap);
      break;
    }
    // Drift jumps and deep transit steps may leave arclength unchanged in
    // floating point; keep the sample list strictly increasing in s.
    if (!(cur.s > traj.samples.back().s)) continue;
    // Subdivide curved steps so each chord matches its arclength to 1e-6
    // relative. The chord deficit of a step shrinks like the square of its size.
    const double ds = cur.s - tracer.previous().s;
    const double chord = distance(tracer.cover(tracer.previous()), tracer.cover(cur));
    const double deficit = ds > 0.0 ? 1.0 - chord / ds : 0.0;
    if (deficit > kChordDeficit) {
      const int m = static_cast<int>(std::min(1e4, std::ceil(std::sqrt(deficit / kChordDeficit))));
      const double h = tracer.last_step_size();
      for (int k = 1; k < m; ++k) {
        const auto mid = tracer.interpolate(h * k / m);
        if (mid.s > traj.samples.back().s && mid.s < cur.s) record(mid);
      }
    }
    record(cur);
  }
  if (auto t = tracer.termination()) traj.termination = *t;
  traj.stats = tracer.stats();
  return traj;
}

ArcTrajectory integrate_arclength(const VectorField& field, const Point& x0, double S, double tol,
                                  double eps_min) {
  FlowControls c;
  c.tol = tol;
  c.eps_min = eps_min;
  return integrate_arclength(field, x0, S, c);
}

}  // namespace leafavg
