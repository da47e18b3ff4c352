#include <algorithm>
#include <cmath>
#include <limits>

#include "leafavg/sections.hpp"
#include "tracer.hpp"

namespace leafavg {

const char* to_string(OmegaType t) {
  switch (t) {
    case OmegaType::fixed_point: return "fixed_point";
    case OmegaType::periodic_orbit: return "periodic_orbit";
    case OmegaType::attracting_circuit: return "attracting_circuit";
    case OmegaType::quasi_minimal_candidate: return "quasi_minimal_candidate";
    case OmegaType::undecided: return "undecided";
  }
  return "?";
}

namespace {

bool sink_like(const VectorField& field, const Point& p, const FlowControls& flow) {
  try {
    const Equilibrium eq = classify_equilibrium(field, p, flow.jacobian_step, flow.degeneracy_tol,
                                                std::numeric_limits<double>::infinity());
    return !eq.has_unstable_direction();
  } catch (const InputError&) {
    return false;
  }
}

// Default section with every endpoint closed where the field stays transverse.
std::optional<CrossSection> section_from_hint(const VectorField& field, const SectionHint& hint) {
  if (hint.torus_circle) return CrossSection::torus_circle(field);
  const bool choices[4][2] = {{false, false}, {true, false}, {false, true}, {true, true}};
  for (const auto& c : choices) {
    try {
      return CrossSection::segment(field, hint.a, hint.b, c[0], c[1]);
    } catch (const InputError&) {
    }
  }
  return std::nullopt;
}

// Short open segment through p, perpendicular to the flow.
std::optional<CrossSection> auto_section(const VectorField& field, const Point& p, double half_width) {
  const Point v = field(p);
  const double sp = norm(v);
  if (!(sp > 0.0)) return std::nullopt;
  Point perp;
  if (field.phase_space == PhaseSpace::simplex) {
    perp = cross(v, Point{1.0, 1.0, 1.0});
  } else {
    perp = {-v.y, v.x, 0.0};
  }
  perp = (1.0 / norm(perp)) * perp;
  double w = half_width;
  if (field.phase_space == PhaseSpace::simplex) {
    // Keep both endpoints inside the open simplex.
    for (int i = 0; i < 3; ++i) {
      if (perp[i] != 0.0) w = std::min(w, 0.5 * p[i] / std::abs(perp[i]));
    }
  }
  for (int attempt = 0; attempt < 8 && w > 0.0; ++attempt, w *= 0.5) {
    try {
      return CrossSection::segment(field, p - w * perp, p + w * perp, true, true);
    } catch (const InputError&) {
    }
  }
  return std::nullopt;
}

double circular_gap(double a, double b) {
  const double d = std::abs(a - b);
  return std::min(d, 1.0 - d);
}

}  // namespace

OmegaVerdict classify_omega_limit(const VectorField& field, const Point& x0, const ClassifierControls& controls) {
  OmegaVerdict verdict;
  auto& ev = verdict.evidence;
  const FlowControls& flow = controls.returns.flow;

  detail::Tracer tracer(field, x0, detail::Parametrization::time, +1, flow);
  while (tracer.current().t < controls.transient_time && tracer.step(controls.transient_time)) {
  }
  const Point p = tracer.point(tracer.current());
  ev.final_speed = tracer.speed(tracer.current());
  if (tracer.terminated() && *tracer.termination() != Termination::horizon_reached) {
    ev.note = std::string("transient integration stopped: ") + to_string(*tracer.termination());
    return verdict;
  }
  if (ev.final_speed < controls.speed_floor && sink_like(field, p, flow)) {
    verdict.type = OmegaType::fixed_point;
    ev.note = "orbit settles at an equilibrium during the transient";
    return verdict;
  }

  std::optional<CrossSection> section;
  if (field.default_section) section = section_from_hint(field, *field.default_section);
  if (!section) section = auto_section(field, p, controls.auto_section_half_width);
  if (!section) {
    ev.note = "no transverse section available";
    return verdict;
  }
  ev.section_used = true;

  ReturnControls rc = controls.returns;
  rc.graze_tol = 0.0;
  rc.record_arc = true;
  const HitSequence seq = hitting_sequence(field, *section, p, controls.max_returns + 1, {}, rc);
  const auto& hits = seq.hits;
  ev.returns = hits.empty() ? 0 : hits.size() - 1;

  if (ev.returns < controls.min_returns) {
    if (seq.status == ReturnStatus::orbit_hits_equilibrium) {
      verdict.type = OmegaType::fixed_point;
      ev.note = "orbit converges to an equilibrium";
    } else {
      ev.note = "too few returns: " + seq.message;
    }
    return verdict;
  }

  const bool torus = section->kind() == CrossSection::Kind::torus_circle;
  std::vector<double> coord, period;
  for (const auto& h : hits) coord.push_back(section->coordinate(h.point));
  for (std::size_t k = 1; k < hits.size(); ++k) period.push_back(hits[k].t - hits[k - 1].t);
  ev.first_return_time = period.front();
  ev.last_return_time = period.back();
  ev.return_time_ratio = period.back() / period.front();
  ev.limit_speed = hits.back().min_speed;

  auto gap = [&](double a, double b) { return torus ? circular_gap(a, b) : std::abs(a - b); };
  // Smallest period q for which the tail of the hit coordinates repeats.
  const std::size_t window = std::min(controls.convergence_window, coord.size() - 1);
  std::optional<std::size_t> repeat;
  for (std::size_t q = 1; q <= window && !repeat; ++q) {
    if (coord.size() < window + q) break;
    double spread = 0.0;
    for (std::size_t k = coord.size() - window; k < coord.size(); ++k) {
      spread = std::max(spread, gap(coord[k], coord[k - q]));
    }
    if (q == 1) ev.tail_position_spread = spread;
    if (spread <= controls.position_tol) repeat = q;
  }

  if (repeat) {
    if (ev.limit_speed < controls.speed_floor) {
      if (ev.return_time_ratio >= controls.divergence_factor) {
        verdict.type = OmegaType::attracting_circuit;
        ev.note = "return times grow while the orbit passes arbitrarily slow points";
      } else {
        verdict.type = OmegaType::fixed_point;
        ev.note = "returns accumulate at an equilibrium";
      }
    } else {
      verdict.type = OmegaType::periodic_orbit;
      if (*repeat > 1) ev.note = "hits repeat with period " + std::to_string(*repeat);
    }
    verdict.limit_curve = seq.last_arc;
    return verdict;
  }

  std::vector<bool> filled(static_cast<std::size_t>(controls.bins), false);
  for (const double c : coord) {
    const int b = std::clamp(static_cast<int>(c * controls.bins), 0, controls.bins - 1);
    filled[static_cast<std::size_t>(b)] = true;
  }
  ev.filled_bins = static_cast<int>(std::count(filled.begin(), filled.end(), true));
  if (ev.filled_bins >= controls.min_filled_bins) {
    verdict.type = OmegaType::quasi_minimal_candidate;
    ev.note = "hits spread over the section without settling";
  } else {
    ev.note = "hits neither settle nor spread";
  }
  return verdict;
}

}  // namespace leafavg
