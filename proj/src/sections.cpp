#include "leafavg/sections.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tracer.hpp"

namespace leafavg {

const char* to_string(ReturnStatus s) {
  switch (s) {
    case ReturnStatus::ok: return "ok";
    case ReturnStatus::no_return_within_horizon: return "no_return_within_horizon";
    case ReturnStatus::orbit_hits_equilibrium: return "orbit_hits_equilibrium";
    case ReturnStatus::grazing_endpoint: return "grazing_endpoint";
    case ReturnStatus::numeric_failure: return "numeric_failure";
  }
  return "?";
}

CrossSection CrossSection::segment(const VectorField& field, const Point& a, const Point& b, bool open_a,
                                   bool open_b, int samples) {
  if (field.phase_space == PhaseSpace::torus) {
    throw InputError("torus sections must be the circle {x = 0}");
  }
  if (distance(a, b) <= 0.0) throw InputError("section endpoints must be distinct");
  if (samples < 1) throw InputError("section needs at least one transversality sample");
  const Point ambient = field.phase_space == PhaseSpace::simplex ? Point{1.0, 1.0, 1.0} : Point{0.0, 0.0, 1.0};
  Point n = cross(b - a, ambient);
  n = (1.0 / norm(n)) * n;

  CrossSection sec;
  sec.kind_ = Kind::segment;
  sec.a_ = a;
  sec.b_ = b;
  sec.open_a_ = open_a;
  sec.open_b_ = open_b;

  const int first = open_a ? 1 : 0;
  const int last = open_b ? samples : samples + 1;
  int sign = 0;
  for (int i = first; i <= last; ++i) {
    const double lambda = static_cast<double>(i) / (samples + 1);
    const Point p = a + lambda * (b - a);
    const double flux = dot(field(p), n);
    if (!(std::abs(flux) > 1e-12)) {
      throw InputError("section is tangent to the field at parameter " + std::to_string(lambda));
    }
    const int sgn = flux > 0.0 ? 1 : -1;
    if (sign != 0 && sgn != sign) {
      throw InputError("field crosses the section in both directions");
    }
    sign = sgn;
  }
  sec.normal_ = static_cast<double>(sign) * n;
  return sec;
}

CrossSection CrossSection::torus_circle(const VectorField& field) {
  if (field.phase_space != PhaseSpace::torus) throw InputError("torus_circle needs a torus field");
  const Point v = field(Point{0.0, 0.0, 0.0});
  for (int i = 0; i < 64; ++i) {
    const double y = i / 64.0;
    if (!(field(Point{0.0, y, 0.0}).x > 1e-12)) {
      throw InputError("torus field is not transverse to {x = 0} with positive orientation");
    }
  }
  (void)v;
  CrossSection sec;
  sec.kind_ = Kind::torus_circle;
  sec.a_ = {0.0, 0.0, 0.0};
  sec.b_ = {0.0, 1.0, 0.0};
  sec.normal_ = {1.0, 0.0, 0.0};
  sec.open_a_ = sec.open_b_ = false;
  return sec;
}

CrossSection CrossSection::from_hint(const VectorField& field, const SectionHint& hint) {
  if (hint.torus_circle) return torus_circle(field);
  return segment(field, hint.a, hint.b, hint.open_a, hint.open_b);
}

double CrossSection::coordinate(const Point& p) const {
  if (kind_ == Kind::torus_circle) return p.y - std::floor(p.y);
  const Point d = b_ - a_;
  return dot(p - a_, d) / dot(d, d);
}

double CrossSection::signed_distance(const Point& p) const {
  if (kind_ == Kind::torus_circle) return p.x - std::round(p.x);
  return dot(p - a_, normal_);
}

bool CrossSection::contains(const Point& p, double tol) const {
  if (std::abs(signed_distance(p)) > tol) return false;
  if (kind_ == Kind::torus_circle) return true;
  const double lambda = coordinate(p);
  const double slack = tol / distance(a_, b_);
  const bool after_a = open_a_ ? lambda > -slack : lambda >= -slack;
  const bool before_b = open_b_ ? lambda < 1.0 + slack : lambda <= 1.0 + slack;
  return after_a && before_b;
}

namespace {

std::vector<Observable> with_unit(const std::vector<Observable>& observables) {
  std::vector<Observable> out = observables;
  bool has_one = false;
  for (const auto& o : observables) has_one = has_one || o.id == "one";
  if (!has_one) out.push_back(make_observable("one"));
  return out;
}

struct RawHit {
  detail::Snapshot snap;
  Point point;  // cover coordinates on the torus
  double residual = 0.0;
  double min_speed = 0.0;  // over the accepted steps since the previous hit
  std::vector<Point> arc;
};

// Segment parameter of p measured from `end` towards `other`, read off the
// single coordinate with the smallest rounding error relative to its slope.
// Near the simplex boundary only the vanishing coordinate keeps the offset;
// simplex points are interior, so an offset from a boundary end along a
// coordinate that vanishes there is positive even when it underflows.
double end_offset(const Point& end, const Point& other, const Point& p, bool simplex) {
  const Point d = other - end;
  const double dmax = std::max({std::abs(d.x), std::abs(d.y), std::abs(d.z)});
  double best = 0.0, best_err = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (std::abs(d[i]) < 0.1 * dmax) continue;
    const double err = std::max(std::abs(end[i]), std::abs(p[i])) / std::abs(d[i]);
    if (err < best_err) {
      best_err = err;
      best = (p[i] - end[i]) / d[i];
      if (simplex && end[i] == 0.0) best = std::max(best, std::numeric_limits<double>::denorm_min());
    }
  }
  return best;
}

// Integrates forward in time from x0 and reports every positively oriented
// crossing of the section to `on_hit` until it returns false.
template <class OnHit>
ReturnStatus scan(const VectorField& field, const CrossSection& section, const Point& x0,
                  const std::vector<Observable>& observables, const ReturnControls& controls, OnHit&& on_hit,
                  std::string& message) {
  detail::Tracer tracer(field, x0, detail::Parametrization::time, +1, controls.flow, observables);
  const bool torus = section.kind() == CrossSection::Kind::torus_circle;

  // On the torus the crossing target is the next integer line x = k in the cover.
  double target_x = 0.0;
  if (torus) {
    const double x = x0.x;
    target_x = std::abs(x - std::round(x)) <= 1e-9 ? std::round(x) + 1.0 : std::floor(x) + 1.0;
  }
  auto signed_distance = [&](const detail::Snapshot& s) {
    const Point p = tracer.cover(s);
    return torus ? p.x - target_x : section.signed_distance(p);
  };

  double t_last = tracer.current().t;
  std::size_t steps_since = 0;
  double d_prev = signed_distance(tracer.current());
  bool near_saddle = false;
  double min_speed = std::numeric_limits<double>::infinity();
  std::vector<Point> arc;
  if (controls.record_arc) arc.push_back(tracer.cover(tracer.current()));

  for (;;) {
    const double limit = t_last + controls.time_horizon;
    if (tracer.current().t >= limit || steps_since >= controls.step_horizon) {
      message = "no return within the horizon";
      return ReturnStatus::no_return_within_horizon;
    }
    if (!tracer.step(limit)) {
      message = std::string("integration stopped: ") + to_string(*tracer.termination());
      return *tracer.termination() == Termination::equilibrium_approach ? ReturnStatus::orbit_hits_equilibrium
                                                                         : ReturnStatus::numeric_failure;
    }
    ++steps_since;
    const auto& cur = tracer.current();

    const double sp = tracer.speed(cur);
    min_speed = std::min(min_speed, sp);
    if (sp < controls.flow.eps_min) {
      if (!near_saddle) {
        bool unstable = false;
        try {
          const Equilibrium eq = classify_equilibrium(field, tracer.point(cur), controls.flow.jacobian_step,
                                                      controls.flow.degeneracy_tol,
                                                      std::numeric_limits<double>::infinity());
          unstable = eq.classification != EquilibriumType::degenerate && eq.has_unstable_direction();
        } catch (const InputError&) {
        }
        if (!unstable) {
          message = "orbit converges to an equilibrium";
          return ReturnStatus::orbit_hits_equilibrium;
        }
        near_saddle = true;
      }
    } else {
      near_saddle = false;
    }

    const double d_cur = signed_distance(cur);
    if (controls.record_arc) arc.push_back(tracer.cover(cur));
    if (!(d_prev < 0.0 && d_cur >= 0.0)) {
      d_prev = d_cur;
      continue;
    }

    // Bisection on the step size for the crossing.
    double lo = 0.0, hi = tracer.last_step_size();
    for (int it = 0; it < 200 && hi - lo > controls.refine_tol; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid == lo || mid == hi) break;
      if (signed_distance(tracer.interpolate(mid)) < 0.0) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    RawHit hit;
    hit.snap = tracer.interpolate(hi);
    hit.point = tracer.cover(hit.snap);
    hit.residual = std::abs(signed_distance(hit.snap));
    d_prev = d_cur;

    bool inside = true;
    if (!torus) {
      // Offsets from each end are measured from that end, so hits close to
      // an endpoint keep their relative precision.
      const bool simplex = field.phase_space == PhaseSpace::simplex;
      const double from_a = end_offset(section.a(), section.b(), hit.point, simplex);
      const double from_b = end_offset(section.b(), section.a(), hit.point, simplex);
      const double graze = controls.graze_tol / distance(section.a(), section.b());
      if ((section.open_a() && std::abs(from_a) <= graze) || (section.open_b() && std::abs(from_b) <= graze)) {
        message = "crossing grazes a section endpoint";
        return ReturnStatus::grazing_endpoint;
      }
      inside = (section.open_a() ? from_a > 0.0 : from_a >= 0.0) && (section.open_b() ? from_b > 0.0 : from_b >= 0.0);
    }
    if (!inside) continue;

    if (controls.record_arc) {
      arc.back() = hit.point;
      hit.arc = std::move(arc);
      arc.clear();
      arc.push_back(hit.point);
    }
    hit.min_speed = min_speed;
    min_speed = std::numeric_limits<double>::infinity();
    if (torus) target_x += 1.0;
    t_last = hit.snap.t;
    steps_since = 0;
    if (!on_hit(std::move(hit), tracer)) return ReturnStatus::ok;
  }
}

Point torus_image(const Point& cover) { return {0.0, cover.y - std::floor(cover.y), 0.0}; }

}  // namespace

ReturnRecord first_return(const VectorField& field, const CrossSection& section, const Point& x,
                          const std::vector<Observable>& observables, const ReturnControls& controls) {
  if (!section.contains(x)) throw InputError("first_return: start point is not on the section");
  const auto obs = with_unit(observables);
  ReturnRecord record;
  record.x = x;
  std::string message;
  const ReturnStatus status = scan(
      field, section, x, obs, controls,
      [&](RawHit&& hit, const detail::Tracer&) {
        const bool torus = section.kind() == CrossSection::Kind::torus_circle;
        record.image = torus ? torus_image(hit.point) : hit.point;
        record.return_time = hit.snap.t;
        record.return_arc_length = hit.snap.s;
        for (std::size_t i = 0; i < obs.size(); ++i) record.arc_integrals[obs[i].id] = hit.snap.int_ds[i];
        record.crossing_refinement_error = hit.residual;
        if (controls.record_arc && hit.arc.size() >= 2) record.arc.emplace(std::move(hit.arc));
        return false;
      },
      message);
  if (status != ReturnStatus::ok) throw ReturnError(status, "first_return: " + message);
  return record;
}

ReturnSequence return_sequence(const VectorField& field, const CrossSection& section, const Point& x,
                               std::size_t n, const std::vector<Observable>& observables,
                               const ReturnControls& controls) {
  if (!section.contains(x)) throw InputError("return_sequence: start point is not on the section");
  const auto obs = with_unit(observables);
  const bool torus = section.kind() == CrossSection::Kind::torus_circle;
  ReturnSequence seq;
  if (n == 0) return seq;
  // One integration pass; each record is the difference of consecutive hits,
  // so the chain never restarts from a rounded image point.
  Point from = x;
  double t0 = 0.0, s0 = 0.0;
  std::vector<double> int0(obs.size(), 0.0);
  seq.status = scan(
      field, section, x, obs, controls,
      [&](RawHit&& hit, const detail::Tracer&) {
        ReturnRecord r;
        r.x = from;
        r.image = torus ? torus_image(hit.point) : hit.point;
        r.return_time = hit.snap.t - t0;
        r.return_arc_length = hit.snap.s - s0;
        for (std::size_t i = 0; i < obs.size(); ++i) r.arc_integrals[obs[i].id] = hit.snap.int_ds[i] - int0[i];
        r.crossing_refinement_error = hit.residual;
        if (controls.record_arc && hit.arc.size() >= 2) r.arc.emplace(std::move(hit.arc));
        from = r.image;
        t0 = hit.snap.t;
        s0 = hit.snap.s;
        int0 = hit.snap.int_ds;
        seq.records.push_back(std::move(r));
        return seq.records.size() < n;
      },
      seq.message);
  if (seq.status != ReturnStatus::ok) seq.failed_index = seq.records.size();
  return seq;
}

HitSequence hitting_sequence(const VectorField& field, const CrossSection& section, const Point& x0,
                             std::size_t count, const std::vector<Observable>& observables,
                             const ReturnControls& controls) {
  const auto obs = with_unit(observables);
  HitSequence out;
  if (count == 0) return out;
  out.status = scan(
      field, section, x0, obs, controls,
      [&](RawHit&& raw, const detail::Tracer&) {
        Hit h;
        h.t = raw.snap.t;
        h.s = raw.snap.s;
        h.point = section.kind() == CrossSection::Kind::torus_circle ? torus_image(raw.point) : raw.point;
        h.min_speed = raw.min_speed;
        if (controls.record_arc && raw.arc.size() >= 2) out.last_arc.emplace(std::move(raw.arc));
        for (std::size_t i = 0; i < obs.size(); ++i) h.integrals[obs[i].id] = raw.snap.int_ds[i];
        out.hits.push_back(std::move(h));
        return out.hits.size() < count;
      },
      out.message);
  return out;
}

}  // namespace leafavg
