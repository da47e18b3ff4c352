#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "leafavg/averages.hpp"
#include "leafavg/foliation_examples.hpp"

using namespace leafavg;

namespace {

const double kGolden = (std::sqrt(5.0) - 1.0) / 2.0;

double band_average(const BandFunction& band, std::uint64_t n) { return double(band.prefix_sum(n)) / double(n); }

double sample_at(const RunningAverage& avg, double parameter) {
  for (const auto& s : avg.samples) {
    if (s.parameter == parameter) return s.average;
  }
  FAIL("no sample at " << parameter);
  return NAN;
}

}  // namespace

TEST_CASE("koch_curve") {
  const auto c0 = koch_curve(0);
  CHECK(c0.vertices().size() == 2);
  CHECK(curve_length(c0) == doctest::Approx(1.0));
  CHECK(koch_curve(2).vertices().size() == 17);
  for (int n = 0; n <= 8; ++n) {
    const auto c = koch_curve(n);
    CHECK(c.segment_count() == std::size_t(std::pow(4, n)));
    CHECK(curve_length(c) == doctest::Approx(std::pow(4.0 / 3.0, n)).epsilon(1e-12));
    CHECK(c.front() == Point{0, 0, 0});
    CHECK(c.back().x == doctest::Approx(1.0));
  }
  CHECK_THROWS_AS(koch_curve(-1), InputError);
}

TEST_CASE("band rule") {
  const auto b3 = make_band(3);
  // +1 on 4..8, -1 on 10..26, +1 on 28..80; buffers at 1..3, 9, 27, 81.
  for (std::uint64_t n = 1; n <= 3; ++n) CHECK(b3.value(n) == 0);
  for (std::uint64_t n = 4; n <= 8; ++n) CHECK(b3.value(n) == 1);
  CHECK(b3.value(9) == 0);
  for (std::uint64_t n = 10; n <= 26; ++n) CHECK(b3.value(n) == -1);
  CHECK(b3.value(27) == 0);
  CHECK(b3.value(28) == 1);
  CHECK(b3.value(81) == 0);

  for (const int base : {2, 3, 10}) {
    const auto band = make_band(base);
    long long sum = 0;
    for (std::uint64_t n = 1; n <= 20000; ++n) {
      CHECK(std::abs(band.value(n)) <= 1);
      sum += band.value(n);
      if (n % 997 == 0 || n < 200) CHECK(band.prefix_sum(n) == sum);
    }
  }
  CHECK_THROWS_AS(make_band(1), InputError);
}

TEST_CASE("band_running_average examples") {
  const auto b3 = make_band(3);
  const auto avg = band_running_average(b3, 43046721);  // 3^16
  for (int m = 2; m <= 8; ++m) {
    const auto even = std::uint64_t(std::llround(std::pow(3.0, 2 * m)));
    const auto odd = std::uint64_t(std::llround(std::pow(3.0, 2 * m + 1)));
    if (even <= 43046721) CHECK(sample_at(avg, double(even)) >= 0.4);
    if (odd <= 43046721) CHECK(sample_at(avg, double(odd)) <= -0.4);
    CHECK(band_average(b3, even) >= 0.4);
    CHECK(band_average(b3, odd) <= -0.4);
  }
  CHECK(band_average(make_band(10), 99) >= 0.77);
  // Closed ranges: blocks 11..99 are positive, 1..10 are buffers.
  CHECK(band_average(make_band(10), 99) == doctest::Approx(89.0 / 99));

  const auto zero = band_running_average(make_band(3, BandRule::zero), 10000);
  for (const auto& s : zero.samples) CHECK(s.average == 0.0);

  const auto r = convergence_report(band_running_average(b3, 6561));
  CHECK(r.verdict == Verdict::diverged);
  CHECK(r.gap() >= 0.8);

  const auto scaled = band_running_average(make_band(3, BandRule::alternating, 2.5), 100);
  CHECK(scaled.samples.back().parameter == 250.0);
}

TEST_CASE("koch_leaf geometry") {
  const auto kl = koch_leaf(8);
  const auto& leaf = kl.leaf;
  REQUIRE(leaf.block_count() == 8);
  double connectors = 0.0;
  for (std::size_t n = 1; n <= 8; ++n) {
    const auto& b = leaf.block(n);
    CHECK(std::abs(curve_length(b) - 1.0) <= 1e-9);
    const double side = std::pow(0.75, double(n));
    CHECK(leaf.block_side(n) == doctest::Approx(side));
    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    for (const auto& p : b.vertices()) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
    CHECK(xmax - xmin == doctest::Approx(side).epsilon(1e-12));
    CHECK(ymax - ymin <= side);
    if (n < 8) {
      connectors += curve_length(leaf.connector(n));
      // The leaf is connected.
      CHECK(distance(b.back(), leaf.connector(n).front()) <= 1e-12);
      CHECK(distance(leaf.connector(n).back(), leaf.block(n + 1).front()) <= 1e-12);
    }
  }
  CHECK(connectors <= 0.75 * leaf.connector_fraction + 1e-12);
  CHECK(leaf.total_length() >= 8.0);
  CHECK(leaf.total_length() <= 1.01 * 8.0);
  CHECK(leaf.boundary_parameter(8) == doctest::Approx(leaf.total_length()));
  CHECK_THROWS_AS(koch_leaf(0), InputError);
  CHECK_THROWS_AS(koch_leaf(14), InputError);
}

TEST_CASE("Koch-leaf average matches the band oracle; divergence transfers") {
  const auto kl = koch_leaf(12);
  const auto avg = koch_block_average(kl);
  REQUIRE(avg.samples.size() == 12);
  double connector_integral = 0.0, connector_length = 0.0;
  for (std::size_t n = 1; n <= 12; ++n) {
    if (n > 1) {
      // phi is linear along connector n - 1, between the adjacent block values.
      const double len = curve_length(kl.leaf.connector(n - 1));
      connector_length += len;
      connector_integral += 0.5 * len * (kl.band.value(n - 1) + kl.band.value(n));
    }
    const double L = kl.leaf.boundary_parameter(n);
    CHECK(avg.samples[n - 1].parameter == doctest::Approx(L).epsilon(1e-12));
    CHECK(L == doctest::Approx(double(n) + connector_length).epsilon(1e-9));
    const double oracle = (double(kl.band.prefix_sum(n)) + connector_integral) / L;
    CHECK(std::abs(avg.samples[n - 1].average - oracle) <= 1e-6);
    // Without the connector terms the gap is bounded by the connector share.
    CHECK(std::abs(avg.samples[n - 1].average - band_average(kl.band, n)) <= 1e-6 + 2 * connector_length / L);
  }

  // Divergence transfers from the band to the leaf.
  RunningAverage band;
  band.parameter_kind = ParameterKind::count;
  for (std::uint64_t n = 1; n <= 12; ++n) band.samples.push_back({double(n), band_average(kl.band, n)});
  const auto rk = convergence_report(avg);
  const auto rb = convergence_report(band);
  CHECK(rk.verdict == rb.verdict);
  CHECK(rk.gap() == doctest::Approx(rb.gap()).epsilon(2e-2));
  // Tail max 5/8 at n = 8 (blocks 4..8 positive), min 1/6 at n = 12.
  CHECK(rb.gap() == doctest::Approx(11.0 / 24).epsilon(1e-12));
}

TEST_CASE("suspension examples") {
  const auto rot = make_rotation_suspension(kGolden, make_observable("cos_2pi_x"));
  CHECK(std::abs(suspension_length_average(rot, 0.3, 100000).last()) < 1e-2);

  const auto ns = make_north_south_suspension(0.2, make_observable("cos_4pi_x"));
  REQUIRE(ns.source);
  CHECK(*ns.source == 0.5);
  const auto avg = suspension_length_average(ns, 0.3, 10000);
  CHECK(std::abs(avg.last() - 1.0) <= 1e-2);
  const auto report = convergence_report(avg);
  CHECK(report.verdict == Verdict::converged);

  const auto c = make_rotation_suspension(kGolden, constant_observable(0.7));
  for (const auto& s : suspension_length_average(c, 0.1, 1000).samples) CHECK(s.average == doctest::Approx(0.7));

  CHECK_THROWS_AS(make_north_south_suspension(0.4, make_observable("x")), InputError);
  CHECK_THROWS_AS(make_north_south_suspension(-0.1, make_observable("x")), InputError);
  CHECK_THROWS_AS(suspension_length_average(rot, 1.5, 10), InputError);
}

TEST_CASE("suspension maps: inverse and fixed points") {
  for (const double kappa : {0.05, 0.2, 0.3}) {
    const auto ns = make_north_south_suspension(kappa, make_observable("x"));
    CHECK(ns.forward(0.0) == doctest::Approx(0.0));
    CHECK(ns.forward(0.5) == doctest::Approx(0.5));
    for (double y = 0.01; y < 1.0; y += 0.049) {
      const double x = ns.backward(y);
      const double back = ns.forward(x);
      CHECK(std::min(std::abs(back - y), 1 - std::abs(back - y)) <= 1e-12);
    }
  }
  const auto rot = make_rotation_suspension(0.3, make_observable("x"));
  CHECK(rot.backward(rot.forward(0.9)) == doctest::Approx(0.9));
}

TEST_CASE("suspension average is the mean of the forward and backward Birkhoff averages") {
  const auto phi = make_observable("cos_4pi_x");
  for (const double kappa : {0.1, 0.2}) {
    const auto ns = make_north_south_suspension(kappa, phi);
    const std::uint64_t n = 4096;
    double fwd = 0.0, bwd = 0.0, x = 0.3, y = 0.3;
    for (std::uint64_t j = 0; j < n; ++j) {
      fwd += phi(Point{x, 0, 0});
      x = ns.forward(x);
      y = ns.backward(y);
      bwd += phi(Point{y, 0, 0});
    }
    fwd /= double(n);
    bwd /= double(n);
    const auto avg = suspension_length_average(ns, 0.3, n);
    CHECK(avg.samples.back().parameter == double(n));
    CHECK(avg.last() == doctest::Approx(0.5 * (fwd + bwd)).epsilon(1e-6));
    // Both one-sided limits exist: phi(0) forward and phi(1/2) backward.
    CHECK(fwd == doctest::Approx(1.0).epsilon(1e-2));
    CHECK(bwd == doctest::Approx(1.0).epsilon(1e-2));
  }
}
