#include "tracer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace leafavg::detail {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double kC[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
constexpr double kB[7] = {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84, 0.0};
constexpr double kE[7] = {35.0 / 384 - 5179.0 / 57600,
                          0.0,
                          500.0 / 1113 - 7571.0 / 16695,
                          125.0 / 192 - 393.0 / 640,
                          -2187.0 / 6784 + 92097.0 / 339200,
                          11.0 / 84 - 187.0 / 2100,
                          -1.0 / 40};

// States below exp(kDriftLog) relative to the dominant simplex coordinate
// leave the vector field constant to machine precision.
const double kDriftLog = std::log(1e-18);
constexpr double kChartLimit = 1e300;

bool finite(const Vec3& y) { return std::isfinite(y[0]) && std::isfinite(y[1]) && std::isfinite(y[2]); }

}  // namespace

Chart::Chart(const VectorField& field, int direction) : field_(&field), direction_(direction) {
  if (direction != 1 && direction != -1) {
    throw InputError("integration direction must be +1 or -1");
  }
  if (field.phase_space == PhaseSpace::simplex && !field.log_rates) {
    throw InputError("simplex field '" + field.catalog_id + "' lacks logarithmic rates");
  }
}

Vec3 Chart::to_state(const Point& p) const {
  if (!p.finite()) throw InputError("initial point is not finite");
  switch (field_->phase_space) {
    case PhaseSpace::plane:
      return {p.x, p.y, 0.0};
    case PhaseSpace::torus:
      return {p.x, p.y, 0.0};
    case PhaseSpace::simplex: {
      if (!(p.x > 0.0 && p.y > 0.0 && p.z > 0.0)) {
        throw InputError("simplex point must have positive coordinates");
      }
      const double sum = p.x + p.y + p.z;
      if (std::abs(sum - 1.0) > 1e-6) {
        throw InputError("simplex point must satisfy x1 + x2 + x3 = 1");
      }
      Vec3 y{std::log(p.x / sum), std::log(p.y / sum), std::log(p.z / sum)};
      normalize(y);
      return y;
    }
  }
  return {};
}

Point Chart::to_point(const Vec3& y) const {
  switch (field_->phase_space) {
    case PhaseSpace::plane:
      return {y[0], y[1], 0.0};
    case PhaseSpace::torus:
      return {y[0] - std::floor(y[0]), y[1] - std::floor(y[1]), 0.0};
    case PhaseSpace::simplex: {
      const double m = std::max({y[0], y[1], y[2]});
      const double e0 = std::exp(y[0] - m), e1 = std::exp(y[1] - m), e2 = std::exp(y[2] - m);
      const double sum = e0 + e1 + e2;
      return {e0 / sum, e1 / sum, e2 / sum};
    }
  }
  return {};
}

Point Chart::to_cover(const Vec3& y) const {
  if (field_->phase_space == PhaseSpace::torus) return {y[0], y[1], 0.0};
  return to_point(y);
}

std::array<long long, 2> Chart::winding(const Vec3& y) const {
  if (field_->phase_space != PhaseSpace::torus) return {0, 0};
  return {static_cast<long long>(std::floor(y[0])), static_cast<long long>(std::floor(y[1]))};
}

void Chart::rates(const Vec3& y, const Point& x, Vec3& dy, Point& dx) const {
  if (field_->phase_space == PhaseSpace::simplex) {
    const Point r = field_->log_rates(x);
    for (std::size_t i = 0; i < 3; ++i) {
      dy[i] = direction_ * r[i];
      dx[i] = x[i] * dy[i];
    }
    return;
  }
  (void)y;
  const Point a = field_->evaluator(x);
  dy = {direction_ * a.x, direction_ * a.y, 0.0};
  dx = {dy[0], dy[1], 0.0};
}

void Chart::normalize(Vec3& y) const {
  if (field_->phase_space != PhaseSpace::simplex) return;
  const double m = std::max({y[0], y[1], y[2]});
  for (auto& v : y) v -= m;
}

Tracer::Tracer(const VectorField& field, const Point& x0, Parametrization mode, int direction,
               const FlowControls& controls, std::span<const Observable> observables)
    : field_(&field),
      chart_(field, direction),
      mode_(mode),
      controls_(controls),
      observables_(observables.begin(), observables.end()),
      h_next_(std::min(1e-3, controls.max_step)) {
  if (!(controls.tol > 0.0) || !(controls.max_step > 0.0)) {
    throw InputError("integrator tolerance and max step must be positive");
  }
  cur_.y = chart_.to_state(x0);
  cur_.int_dt.assign(observables_.size(), 0.0);
  cur_.int_ds.assign(observables_.size(), 0.0);
  prev_ = cur_;
}

double Tracer::speed(const Snapshot& s) const {
  Vec3 dy;
  Point dx;
  const Point x = chart_.to_point(s.y);
  chart_.rates(s.y, x, dy, dx);
  return norm(dx);
}

Snapshot Tracer::rk_step(const Snapshot& from, double h, StepKind kind, double* err) const {
  std::array<Vec3, 7> k{};
  Snapshot out = from;
  Vec3 y5{};
  for (int stage = 0; stage < 7; ++stage) {
    Vec3 ys = from.y;
    for (int j = 0; j < stage; ++j) {
      for (std::size_t i = 0; i < 3; ++i) ys[i] += h * kA[stage][j] * k[j][i];
    }
    if (stage == 6) y5 = ys;
    const Point x = chart_.to_point(ys);
    Vec3 dy;
    Point dx;
    chart_.rates(ys, x, dy, dx);
    const double sp = norm(dx);
    double wt = 1.0, ws = sp;  // d t / d param, d s / d param
    if (kind == StepKind::arc) {
      wt = 1.0 / sp;
      ws = 1.0;
      for (auto& v : dy) v *= wt;
    }
    k[stage] = dy;
    if (stage == 6) break;
    const double b = h * kB[stage];
    if (b != 0.0) {
      out.t += b * wt;
      out.s += b * ws;
      for (std::size_t o = 0; o < observables_.size(); ++o) {
        const double phi = observables_[o](x);
        out.int_dt[o] += b * phi * wt;
        out.int_ds[o] += b * phi * ws;
      }
    }
  }
  if (err != nullptr) {
    double worst = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      double e = 0.0;
      for (int j = 0; j < 7; ++j) e += kE[j] * k[j][i];
      e *= h;
      // Error per unit parameter: a step of size h may contribute tol * h,
      // but never less than the rounding floor of the state.
      double scale = std::max(controls_.tol * std::min(1.0, std::abs(h)),
                              64.0 * std::numeric_limits<double>::epsilon());
      if (chart_.phase_space() != PhaseSpace::torus) {
        scale *= 1.0 + std::max(std::abs(from.y[i]), std::abs(y5[i]));
      }
      worst = std::max(worst, std::abs(e) / scale);
    }
    *err = std::isfinite(worst) && finite(y5) && std::isfinite(out.s) && std::isfinite(out.t)
               ? worst
               : std::numeric_limits<double>::infinity();
  }
  out.y = y5;
  chart_.normalize(out.y);
  return out;
}

Snapshot Tracer::drift_step(const Snapshot& from, double h) const {
  const Point x0 = chart_.to_point(from.y);
  Vec3 dy;
  Point dx;
  chart_.rates(from.y, x0, dy, dx);
  const auto m = static_cast<std::size_t>(std::max_element(from.y.begin(), from.y.end()) - from.y.begin());
  Snapshot out = from;
  // The drift never leaves the region where non-dominant coordinates are below
  // exp(kDriftLog); clamping absorbs cancellation in long jumps.
  for (std::size_t i = 0; i < 3; ++i) {
    out.y[i] = i == m ? 0.0 : std::min(kDriftLog, from.y[i] + (dy[i] - dy[m]) * h);
  }
  const Point x1 = chart_.to_point(out.y);
  const double ds = distance(x0, x1);
  out.t += h;
  out.s += ds;
  for (std::size_t o = 0; o < observables_.size(); ++o) {
    const double phi = 0.5 * (observables_[o](x0) + observables_[o](x1));
    out.int_dt[o] += phi * h;
    out.int_ds[o] += phi * ds;
  }
  return out;
}

// Near a simplex vertex every non-dominant coordinate sits below 1e-18, the
// rates are constant to machine precision, and the flow in logarithmic
// coordinates is an exact linear drift. Jump straight to the time at which
// the first unstable coordinate climbs back to 1e-18.
bool Tracer::try_drift(double limit) {
  const Vec3& y = cur_.y;
  const auto m = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
  for (std::size_t i = 0; i < 3; ++i) {
    if (i != m && y[i] >= kDriftLog) return false;
  }
  const Point x = chart_.to_point(y);
  Vec3 dy;
  Point dx;
  chart_.rates(y, x, dy, dx);
  double dt = std::numeric_limits<double>::infinity();
  std::size_t exit_index = m;
  for (std::size_t i = 0; i < 3; ++i) {
    const double rel = dy[i] - dy[m];
    if (i == m || rel <= 0.0) continue;
    const double d = (kDriftLog - y[i]) / rel;
    if (d < dt) {
      dt = d;
      exit_index = i;
    }
  }
  const bool exits = exit_index != m;
  if (!exits && mode_ == Parametrization::arclength) {
    terminate(Termination::equilibrium_approach);
    return true;
  }
  bool clipped = false;
  if (mode_ == Parametrization::time && limit - cur_.t < dt) {
    dt = limit - cur_.t;
    clipped = true;
  }
  if (!(dt > controls_.max_step)) return false;

  Snapshot next = drift_step(cur_, dt);
  if (exits && !clipped) next.y[exit_index] = kDriftLog;
  prev_ = cur_;
  cur_ = std::move(next);
  last_kind_ = StepKind::drift;
  last_h_ = dt;
  ++stats_.accepted;
  ++stats_.drift_jumps;
  return true;
}

bool Tracer::step(double limit) {
  if (termination_) return false;
  if (stats_.accepted >= controls_.max_steps) {
    terminate(Termination::step_budget);
    return false;
  }
  if (!finite(cur_.y) || std::abs(cur_.y[0]) > kChartLimit || std::abs(cur_.y[1]) > kChartLimit ||
      std::abs(cur_.y[2]) > kChartLimit) {
    terminate(Termination::precision_limit);
    return false;
  }
  const Point x = chart_.to_point(cur_.y);
  if (chart_.phase_space() == PhaseSpace::plane && norm(x) > controls_.domain_radius) {
    terminate(Termination::left_domain);
    return false;
  }

  if (mode_ == Parametrization::arclength) {
    const double sp = speed(cur_);
    if (!transit_ && sp < controls_.eps_min) {
      bool unstable = false;
      try {
        Equilibrium eq = classify_equilibrium(*field_, x, controls_.jacobian_step, controls_.degeneracy_tol,
                                              std::numeric_limits<double>::infinity());
        if (chart_.direction() < 0) {
          for (auto& ev : eq.eigenvalues) ev = -ev;
        }
        unstable = eq.classification != EquilibriumType::degenerate && eq.has_unstable_direction();
      } catch (const InputError&) {
        unstable = false;
      }
      if (!unstable) {
        terminate(Termination::equilibrium_approach);
        return false;
      }
      transit_ = true;
    } else if (transit_ && sp >= 2.0 * controls_.eps_min) {
      transit_ = false;
    }
  }

  const StepKind kind =
      (mode_ == Parametrization::time || transit_) ? StepKind::time : StepKind::arc;
  if (kind == StepKind::time && chart_.logarithmic()) {
    if (try_drift(limit)) return !termination_;
  }

  double remaining = std::numeric_limits<double>::infinity();
  if (!transit_) remaining = limit - parameter(cur_);
  if (!(remaining > 0.0)) return true;

  const double scale = kind == StepKind::arc ? std::max(1.0, std::abs(cur_.s)) : 1.0;
  double h = std::min({h_next_, controls_.max_step, remaining});
  for (;;) {
    double err = 0.0;
    Snapshot cand = rk_step(cur_, h, kind, &err);
    if (err <= 1.0) {
      prev_ = cur_;
      cur_ = std::move(cand);
      last_kind_ = kind;
      last_h_ = h;
      ++stats_.accepted;
      if (transit_) ++stats_.transit_steps;
      const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      if (h < h_next_ && factor >= 1.0) {
        // step was clipped to the limit; keep the controller's proposal
      } else {
        h_next_ = h * factor;
      }
      if (h == remaining && mode_ == Parametrization::time) cur_.t = limit;
      if (h == remaining && mode_ == Parametrization::arclength && kind == StepKind::arc) cur_.s = limit;
      return true;
    }
    ++stats_.rejected;
    h *= std::isfinite(err) ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.25;
    if (h < 8.0 * std::numeric_limits<double>::epsilon() * scale) {
      terminate(Termination::precision_limit);
      return false;
    }
  }
}

Snapshot Tracer::interpolate(double tau) const {
  if (tau <= 0.0) return prev_;
  if (last_kind_ == StepKind::drift) return drift_step(prev_, tau);
  return rk_step(prev_, tau, last_kind_, nullptr);
}

std::optional<Snapshot> Tracer::advance_to(double target) {
  while (parameter(cur_) < target) {
    if (!step(target)) break;
  }
  const double at = parameter(cur_);
  if (at < target) return std::nullopt;
  if (at == target) return cur_;
  if (parameter(prev_) > target) {
    throw std::logic_error("advance_to: target precedes the last step");
  }
  // Overshoot inside a transit or drift step.
  double lo = 0.0, hi = last_h_;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (parameter(interpolate(mid)) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  Snapshot snap = interpolate(hi);
  if (mode_ == Parametrization::time) {
    snap.t = target;
  } else {
    snap.s = target;
  }
  return snap;
}

}  // namespace leafavg::detail
