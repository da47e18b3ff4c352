#include "leafavg/foliation_examples.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <set>

namespace leafavg {

PiecewiseLinearCurve koch_curve(int level) {
  if (level < 0) throw InputError("koch_curve: level must be >= 0");
  if (level > 13) throw InputError("koch_curve: level above 13 is not supported");
  std::vector<Point> pts{{0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}};
  const double c = 0.5, s = std::sqrt(3.0) / 2.0;
  for (int l = 0; l < level; ++l) {
    std::vector<Point> next;
    next.reserve(4 * (pts.size() - 1) + 1);
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
      const Point p = pts[k];
      const Point d = (1.0 / 3.0) * (pts[k + 1] - p);
      const Point q1 = p + d;
      const Point bump{c * d.x - s * d.y, s * d.x + c * d.y, 0.0};
      next.push_back(p);
      next.push_back(q1);
      next.push_back(q1 + bump);
      next.push_back(p + 2.0 * d);
    }
    next.push_back(pts.back());
    pts = std::move(next);
  }
  return PiecewiseLinearCurve(std::move(pts));
}

// ---------------------------------------------------------------- band

namespace {

using u128 = unsigned __int128;

}  // namespace

int BandFunction::value(std::uint64_t n) const {
  if (rule == BandRule::zero || n <= static_cast<std::uint64_t>(base)) return 0;
  u128 p = static_cast<u128>(base);
  int k = 1;
  while (p * static_cast<u128>(base) <= n) {
    p *= static_cast<u128>(base);
    ++k;
  }
  if (p == n) return 0;
  return k % 2 == 1 ? 1 : -1;
}

long long BandFunction::prefix_sum(std::uint64_t n) const {
  if (rule == BandRule::zero) return 0;
  long long sum = 0;
  const u128 b = static_cast<u128>(base);
  u128 lo_pow = b;  // b^k, k = 1, 2, ...
  for (int k = 1; lo_pow + 1 <= n; ++k, lo_pow *= b) {
    const u128 lo = lo_pow + 1, hi = lo_pow * b - 1;
    const u128 top = std::min<u128>(hi, n);
    if (top < lo) continue;
    const auto count = static_cast<long long>(top - lo + 1);
    sum += k % 2 == 1 ? count : -count;
  }
  return sum;
}

BandFunction make_band(int base, BandRule rule, double block_length) {
  if (base < 2) throw InputError("band base must be >= 2");
  if (!(block_length > 0.0)) throw InputError("band block length must be positive");
  return BandFunction{base, rule, block_length};
}

RunningAverage band_running_average(const BandFunction& band, std::uint64_t n_blocks) {
  if (n_blocks < 1) throw InputError("band_running_average: n_blocks must be >= 1");
  std::set<std::uint64_t> grid{n_blocks};
  for (const double g : geometric_grid(static_cast<double>(n_blocks))) {
    grid.insert(std::clamp<std::uint64_t>(static_cast<std::uint64_t>(std::llround(g)), 1, n_blocks));
  }
  for (u128 p = static_cast<u128>(band.base); p - 1 <= n_blocks; p *= static_cast<u128>(band.base)) {
    for (const u128 v : {p - 1, p, p + 1}) {
      if (v >= 1 && v <= n_blocks) grid.insert(static_cast<std::uint64_t>(v));
    }
  }
  RunningAverage avg;
  avg.parameter_kind = ParameterKind::arclength;
  avg.observable_id = "band";
  for (const std::uint64_t n : grid) {
    avg.samples.push_back({static_cast<double>(n) * band.block_length,
                           static_cast<double>(band.prefix_sum(n)) / static_cast<double>(n)});
  }
  return avg;
}

// ---------------------------------------------------------------- Koch leaf

double KochLeaf::block_side(std::size_t n) const { return std::pow(0.75, static_cast<double>(n)); }

double KochLeaf::total_length() const {
  double total = 0.0;
  for (const auto& p : pieces) total += curve_length(p);
  return total;
}

double KochLeaf::boundary_parameter(std::size_t n) const {
  double total = 0.0;
  for (std::size_t i = 0; i < 2 * n - 1; ++i) total += curve_length(pieces[i]);
  return total;
}

namespace {

// Half-width of the blend zone at the shared side between blocks n and n + 1;
// narrower than the horizontal end segments (4^-n and 4^-(n+1)) of both blocks.
double blend_width(std::size_t n) { return 0.5 * std::pow(0.25, static_cast<double>(n + 1)); }

}  // namespace

Observable koch_band_observable(const KochLeaf& leaf, const BandFunction& band) {
  const std::size_t N = leaf.block_count();
  if (N == 0) throw InputError("koch_band_observable: empty leaf");
  struct Data {
    std::vector<double> left, baseline, value;
    double right_end;
  };
  auto d = std::make_shared<Data>();
  d->left = leaf.block_left;
  d->baseline = leaf.block_baseline;
  for (std::size_t n = 1; n <= N; ++n) d->value.push_back(band.value(n));
  d->right_end = leaf.block_left.back() + leaf.block_side(N);

  // Value on the connector from block n to n + 1 (1-based), linear in y.
  auto ramp = [d](std::size_t n, double y) {
    const double y0 = d->baseline[n - 1], y1 = d->baseline[n];
    const double t = std::clamp((y - y0) / (y1 - y0), 0.0, 1.0);
    return d->value[n - 1] + t * (d->value[n] - d->value[n - 1]);
  };

  Observable phi;
  phi.id = "koch_band";
  phi.description = "band value per Koch block, linear along connectors";
  phi.evaluate = [d, ramp, N](const Point& p) {
    const auto it = std::upper_bound(d->left.begin(), d->left.end(), p.x);
    const std::size_t n = it == d->left.begin() ? 1 : static_cast<std::size_t>(it - d->left.begin());
    double v = d->value[n - 1];
    const double L = d->left[n - 1];
    const double R = n < N ? d->left[n] : d->right_end;
    if (n > 1 && p.x - L < blend_width(n - 1)) {
      const double w = std::max(0.0, p.x - L) / blend_width(n - 1);
      v = (1.0 - w) * ramp(n - 1, p.y) + w * v;
    } else if (n < N && R - p.x < blend_width(n)) {
      const double w = std::max(0.0, R - p.x) / blend_width(n);
      v = (1.0 - w) * ramp(n, p.y) + w * v;
    }
    return v;
  };
  return phi;
}

KochBandLeaf koch_leaf(int n_blocks, int base, double connector_fraction) {
  if (n_blocks < 1) throw InputError("koch_leaf: n_blocks must be >= 1");
  if (n_blocks > 13) throw InputError("koch_leaf: n_blocks above 13 is not supported");
  if (!(connector_fraction > 0.0) || !(connector_fraction <= 0.1)) {
    throw InputError("koch_leaf: connector_fraction must lie in (0, 0.1]");
  }
  KochBandLeaf out{KochLeaf{}, make_band(base), Observable{}};
  KochLeaf& leaf = out.leaf;
  leaf.connector_fraction = connector_fraction;
  leaf.pieces.reserve(static_cast<std::size_t>(2 * n_blocks - 1));
  double x = 0.0;
  for (int n = 1; n <= n_blocks; ++n) {
    const double side = std::pow(0.75, n);
    const double base_y = -connector_fraction * side;
    leaf.block_left.push_back(x);
    leaf.block_baseline.push_back(base_y);
    if (n > 1) {
      const Point from = leaf.pieces.back().back();
      leaf.pieces.emplace_back(std::vector<Point>{from, Point{from.x, base_y, 0.0}});
    }
    std::vector<Point> pts = koch_curve(n).vertices();
    for (auto& p : pts) p = Point{x + side * p.x, base_y + side * p.y, 0.0};
    // Blocks meet the shared side exactly.
    pts.front().x = x;
    pts.back().x = x + side;
    leaf.pieces.emplace_back(std::move(pts));
    x += side;
  }
  out.phi = koch_band_observable(leaf, out.band);
  return out;
}

RunningAverage koch_block_average(const KochBandLeaf& kl) {
  std::vector<double> grid;
  double total = 0.0;
  for (std::size_t i = 0; i < kl.leaf.pieces.size(); ++i) {
    total += curve_length(kl.leaf.pieces[i]);
    if (i % 2 == 0) grid.push_back(total);
  }
  // phi is affine along every segment, so one trapezoid per segment is exact.
  return curve_running_average(kl.leaf.pieces, kl.phi, grid, 1);
}

// ---------------------------------------------------------------- suspension

namespace {

double wrap(double t) {
  const double w = t - std::floor(t);
  return w >= 1.0 ? 0.0 : w;
}

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double ns_lift(double kappa, double t) { return t - kappa * std::sin(kTwoPi * t); }

// Increasing branch of the north-south lift through 1/2.
std::pair<double, double> ns_branch(double kappa) {
  if (kTwoPi * kappa <= 1.0) return {0.0, 1.0};
  const double tc = std::acos(1.0 / (kTwoPi * kappa)) / kTwoPi;
  return {tc, 1.0 - tc};
}

}  // namespace

double SuspensionSystem::forward(double theta) const {
  if (kind == CircleMapKind::rotation) return wrap(theta + rho);
  return wrap(ns_lift(kappa, theta));
}

double SuspensionSystem::backward(double theta) const {
  if (kind == CircleMapKind::rotation) return wrap(theta - rho);
  const auto [a, b] = ns_branch(kappa);
  const double pa = ns_lift(kappa, a);
  double target = theta + std::ceil(pa - theta);
  target = std::min(target, ns_lift(kappa, b));
  double lo = a, hi = b;
  while (hi - lo > 1e-14) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (ns_lift(kappa, mid) < target ? lo : hi) = mid;
  }
  return wrap(0.5 * (lo + hi));
}

SuspensionSystem make_rotation_suspension(double rho, const Observable& phi) {
  if (!std::isfinite(rho)) throw InputError("rotation number must be finite");
  SuspensionSystem sys;
  sys.kind = CircleMapKind::rotation;
  sys.rho = rho;
  sys.phi = phi;
  return sys;
}

SuspensionSystem make_north_south_suspension(double kappa, const Observable& phi) {
  // Beyond 1/pi the slope at 0 drops below -1 and 0 stops attracting. Between
  // 1/(2 pi) and 1/pi the map folds, but the increasing branch through 1/2
  // still covers the circle and serves as the inverse.
  if (!(kappa >= 0.0 && kappa < 1.0 / std::numbers::pi)) {
    throw InputError("north_south: kappa must lie in [0, 1/pi)");
  }
  SuspensionSystem sys;
  sys.kind = CircleMapKind::north_south;
  sys.kappa = kappa;
  sys.phi = phi;
  if (kappa > 0.0) sys.source = 0.5;
  return sys;
}

RunningAverage suspension_length_average(const SuspensionSystem& sys, double x, std::uint64_t n_max) {
  if (!(x >= 0.0 && x < 1.0)) throw InputError("suspension_length_average: x must lie in [0, 1)");
  if (n_max < 1) throw InputError("suspension_length_average: n_max must be >= 1");
  std::vector<std::uint64_t> grid;
  for (const double g : geometric_grid(static_cast<double>(n_max))) {
    const auto n = static_cast<std::uint64_t>(std::llround(g));
    if (grid.empty() || n > grid.back()) grid.push_back(n);
  }
  RunningAverage avg;
  avg.parameter_kind = ParameterKind::count;
  avg.observable_id = sys.phi.id;
  double fwd = x, bwd = x;
  long double sum = 0.0L;
  std::uint64_t n = 0;
  for (const std::uint64_t target : grid) {
    for (; n < target; ++n) {
      sum += sys.phi(Point{fwd, 0.0, 0.0});
      fwd = sys.forward(fwd);
      bwd = sys.backward(bwd);
      sum += sys.phi(Point{bwd, 0.0, 0.0});
    }
    avg.samples.push_back({static_cast<double>(n), static_cast<double>(sum / (2.0L * n))});
  }
  return avg;
}

}  // namespace leafavg
