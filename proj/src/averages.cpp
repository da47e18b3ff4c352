#include "leafavg/averages.hpp"

#include <algorithm>
#include <array>

#include "tracer.hpp"

namespace leafavg {

namespace {

std::vector<double> sampling_grid(double horizon, const AverageControls& c) {
  if (!(c.grid_start > 0.0) || !(c.grid_ratio > 1.0)) throw InputError("invalid sampling grid");
  return geometric_grid(horizon, std::min(c.grid_start, horizon), c.grid_ratio);
}

void require_moving(const VectorField& field, const Point& x0, const FlowControls& flow, const char* who) {
  if (!(field.speed(x0) > flow.eps_min)) throw InputError(std::string(who) + ": start point is an equilibrium");
}

// Samples (1/p) * integral of phi along one tracer at each grid value.
RunningAverage one_sided(const VectorField& field, const Point& x0, const Observable& phi, double horizon,
                         detail::Parametrization mode, const AverageControls& controls) {
  const std::array<Observable, 1> obs{phi};
  detail::Tracer tracer(field, x0, mode, +1, controls.flow, obs);
  RunningAverage avg;
  avg.parameter_kind = mode == detail::Parametrization::time ? ParameterKind::time : ParameterKind::arclength;
  avg.observable_id = phi.id;
  for (const double p : sampling_grid(horizon, controls)) {
    const auto snap = tracer.advance_to(p);
    if (!snap) break;
    const double integral = mode == detail::Parametrization::time ? snap->int_dt[0] : snap->int_ds[0];
    avg.samples.push_back({p, integral / p});
  }
  if (auto t = tracer.termination()) avg.termination = *t;
  avg.integrator = tracer.stats();
  return avg;
}

}  // namespace

RunningAverage time_average(const VectorField& field, const Point& x0, const Observable& phi, double T_max,
                            const AverageControls& controls) {
  if (!(T_max > 0.0)) throw InputError("time_average: T_max must be positive");
  require_moving(field, x0, controls.flow, "time_average");
  return one_sided(field, x0, phi, T_max, detail::Parametrization::time, controls);
}

RunningAverage length_average_forward(const VectorField& field, const Point& x0, const Observable& phi,
                                      double S_max, const AverageControls& controls) {
  if (!(S_max > 0.0)) throw InputError("length_average_forward: S_max must be positive");
  require_moving(field, x0, controls.flow, "length_average_forward");
  return one_sided(field, x0, phi, S_max, detail::Parametrization::arclength, controls);
}

RunningAverage length_average_leaf(const VectorField& field, const Point& x0, const Observable& phi,
                                   double S_max, const AverageControls& controls) {
  if (!(S_max > 0.0)) throw InputError("length_average_leaf: S_max must be positive");
  require_moving(field, x0, controls.flow, "length_average_leaf");
  const std::array<Observable, 1> obs{phi};
  detail::Tracer fwd(field, x0, detail::Parametrization::arclength, +1, controls.flow, obs);
  detail::Tracer bwd(field, x0, detail::Parametrization::arclength, -1, controls.flow, obs);

  RunningAverage avg;
  avg.parameter_kind = ParameterKind::arclength;
  avg.observable_id = phi.id;
  // Backward integral and length so far; frozen once the backward leaf ends.
  double back_len = 0.0, back_int = 0.0;
  bool back_open = true;
  for (const double r : sampling_grid(S_max, controls)) {
    const auto f = fwd.advance_to(r);
    if (!f) break;
    if (back_open) {
      if (const auto b = bwd.advance_to(r)) {
        back_len = r;
        back_int = b->int_ds[0];
      } else {
        back_open = false;
        back_len = bwd.current().s;
        back_int = bwd.current().int_ds[0];
      }
    }
    avg.samples.push_back({r, (f->int_ds[0] + back_int) / (r + back_len)});
  }
  if (auto t = fwd.termination()) avg.termination = *t;
  IntegratorStats stats = fwd.stats();
  stats += bwd.stats();
  avg.integrator = stats;
  return avg;
}

double circuit_limit_predictor(const PiecewiseLinearCurve& circuit, const Observable& phi, int resolution) {
  if (!circuit.closed()) throw InputError("circuit_limit_predictor: curve is not closed");
  const double len = curve_length(circuit);
  if (!(len > 0.0)) throw InputError("circuit_limit_predictor: curve has zero length");
  const std::array<double, 1> grid{len};
  return curve_running_average(circuit, phi, grid, resolution).last();
}

}  // namespace leafavg
