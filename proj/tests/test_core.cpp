#include <doctest.h>

#include <cmath>
#include <random>

#include "leafavg/core.hpp"
#include "leafavg/foliation_examples.hpp"

using namespace leafavg;

namespace {

PiecewiseLinearCurve unit_square() {
  return PiecewiseLinearCurve({{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}, {0, 0, 0}});
}

PiecewiseLinearCurve random_polyline(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<Point> v;
  for (int i = 0; i < n; ++i) v.push_back({u(rng), u(rng), 0.0});
  return PiecewiseLinearCurve(v);
}

}  // namespace

TEST_CASE("curve_length") {
  CHECK(curve_length(PiecewiseLinearCurve({{0, 0, 0}, {3, 4, 0}})) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(curve_length(unit_square()) == doctest::Approx(4.0).epsilon(1e-15));
  for (int n = 0; n <= 6; ++n) {
    CHECK(curve_length(koch_curve(n)) == doctest::Approx(std::pow(4.0 / 3.0, n)).epsilon(1e-12));
  }
}

TEST_CASE("curve construction rejects degenerate input") {
  CHECK_THROWS_AS(PiecewiseLinearCurve({{0, 0, 0}}), InputError);
  CHECK_THROWS_AS(PiecewiseLinearCurve({{0, 0, 0}, {NAN, 0, 0}}), InputError);
}

TEST_CASE("cumulative arclength matches segment lengths") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto c = random_polyline(rng, 30);
    const auto& cum = c.cumulative_arclength();
    REQUIRE(cum.front() == 0.0);
    for (std::size_t k = 0; k + 1 < cum.size(); ++k) {
      const double d = distance(c.vertices()[k], c.vertices()[k + 1]);
      CHECK(std::abs((cum[k + 1] - cum[k]) - d) <= 1e-12 * std::max(1.0, d));
    }
  }
}

TEST_CASE("point_at") {
  const PiecewiseLinearCurve seg({{0, 0, 0}, {1, 0, 0}});
  CHECK(point_at(seg, 0.5).x == doctest::Approx(0.5));
  const Point mid = point_at(unit_square(), 1.5);
  CHECK(mid.x == doctest::Approx(1.0));
  CHECK(mid.y == doctest::Approx(0.5));
  const Point apex = point_at(koch_curve(1), 2.0 / 3.0);
  CHECK(apex.x == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(apex.y == doctest::Approx(1.0 / (2.0 * std::sqrt(3.0))).epsilon(1e-14));
  CHECK_THROWS_AS(point_at(seg, 1.5), InputError);
  CHECK_THROWS_AS(point_at(seg, -0.1), InputError);
}

TEST_CASE("point_at reproduces vertices exactly") {
  std::mt19937_64 rng(11);
  const auto c = random_polyline(rng, 40);
  for (std::size_t k = 0; k < c.vertices().size(); ++k) {
    const Point p = point_at(c, c.cumulative_arclength()[k]);
    CHECK(p.x == c.vertices()[k].x);
    CHECK(p.y == c.vertices()[k].y);
  }
}

TEST_CASE("curve_running_average examples") {
  const PiecewiseLinearCurve seg({{0, 0, 0}, {1, 0, 0}});
  const std::vector<double> one{1.0};
  CHECK(curve_running_average(seg, make_observable("x"), one).last() == doctest::Approx(0.5).epsilon(1e-15));
  const auto c = constant_observable(-2.5);
  const auto grid = geometric_grid(4.0, 0.1);
  for (const auto& s : curve_running_average(unit_square(), c, grid).samples) CHECK(s.average == doctest::Approx(-2.5));
  CHECK_THROWS_AS(curve_running_average(seg, c, std::vector<double>{}), InputError);
  CHECK_THROWS_AS(curve_running_average(seg, c, std::vector<double>{2.0}), InputError);
}

TEST_CASE("constant one averages to one along random curves") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto c = random_polyline(rng, 50);
    const auto avg = curve_running_average(c, make_observable("one"), geometric_grid(curve_length(c), 0.01));
    for (const auto& s : avg.samples) CHECK(std::abs(s.average - 1.0) <= 1e-12);
  }
}

TEST_CASE("quadrature is exact for linear observables and stable under refinement") {
  std::mt19937_64 rng(5);
  const auto c = random_polyline(rng, 25);
  const auto grid = geometric_grid(curve_length(c), 0.05);
  // Oracle: the exact integral of x along each segment (midpoint times length).
  double integral = 0.0, offset = 0.0;
  std::size_t g = 0;
  const auto& v = c.vertices();
  std::vector<double> expected;
  for (std::size_t k = 0; k + 1 < v.size(); ++k) {
    const double len = distance(v[k], v[k + 1]);
    while (g < grid.size() && grid[g] <= offset + len) {
      const double t = (grid[g] - offset) / len;
      const double xe = v[k].x + t * (v[k + 1].x - v[k].x);
      expected.push_back((integral + 0.5 * (v[k].x + xe) * (grid[g] - offset)) / grid[g]);
      ++g;
    }
    integral += 0.5 * (v[k].x + v[k + 1].x) * len;
    offset += len;
  }
  const auto avg = curve_running_average(c, make_observable("x"), grid);
  REQUIRE(avg.samples.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) CHECK(avg.samples[i].average == doctest::Approx(expected[i]).epsilon(1e-12));

  const auto phi = make_observable("x");
  const auto a16 = curve_running_average(c, phi, grid, 16);
  const auto a32 = curve_running_average(c, phi, grid, 32);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(std::abs(a16.samples[i].average - a32.samples[i].average) < 1e-8);
}

TEST_CASE("chained pieces equal the concatenated curve") {
  std::mt19937_64 rng(9);
  const auto whole = random_polyline(rng, 31);
  const auto& v = whole.vertices();
  std::vector<PiecewiseLinearCurve> pieces{PiecewiseLinearCurve({v.begin(), v.begin() + 11}),
                                           PiecewiseLinearCurve({v.begin() + 10, v.begin() + 21}),
                                           PiecewiseLinearCurve({v.begin() + 20, v.end()})};
  const auto grid = geometric_grid(curve_length(whole) * (1 - 1e-9), 0.1);
  const auto phi = make_observable("cos_2pi_x");
  const auto a = curve_running_average(whole, phi, grid);
  const auto b = curve_running_average(pieces, phi, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(a.samples[i].average == doctest::Approx(b.samples[i].average).epsilon(1e-12));
}

TEST_CASE("geometric_grid") {
  const auto g = geometric_grid(1000.0);
  CHECK(g.front() == 1.0);
  CHECK(g.back() == 1000.0);
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);
  CHECK(g[4] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(geometric_grid(0.5).size() == 1);
  CHECK_THROWS_AS(geometric_grid(-1.0), InputError);
}

TEST_CASE("observable registry") {
  for (const auto& id : observable_ids()) {
    const auto o = make_observable(id);
    CHECK(o.id == id);
    CHECK(std::isfinite(o(Point{0.3, 0.4, 0.3})));
  }
  CHECK(make_observable("x_squared")(Point{3, 1, 0}) == 9.0);
  CHECK(make_observable("cos_4pi_x")(Point{0.5, 0, 0}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(make_observable("nope"), InputError);
}
