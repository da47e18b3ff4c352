#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "leafavg/flows.hpp"

using namespace leafavg;

namespace {

const double kGolden = (std::sqrt(5.0) - 1.0) / 2.0;

VectorField linear(double a11, double a12, double a21, double a22) {
  return make_field("linear", {{"a11", a11}, {"a12", a12}, {"a21", a21}, {"a22", a22}});
}

VectorField may_leonard(double alpha = 0.8, double beta = 1.5) {
  return make_field("may_leonard", {{"alpha", alpha}, {"beta", beta}});
}

}  // namespace

TEST_CASE("make_field examples") {
  const auto torus = make_field("torus_linear", {{"slope", kGolden}});
  const Point v = torus(Point{0.3, 0.9, 0});
  CHECK(v.x == 1.0);
  CHECK(v.y == kGolden);

  const Point lv = may_leonard_lotka_volterra(Point{1.0 / 3, 1.0 / 3, 1.0 / 3}, 0.8, 1.5);
  for (std::size_t i = 0; i < 3; ++i) CHECK(lv[i] == doctest::Approx(-1.0 / 30).epsilon(1e-14));

  const Point lc = make_field("limit_cycle")(Point{1, 0, 0});
  CHECK(lc.x == doctest::Approx(0.0));
  CHECK(lc.y == doctest::Approx(1.0));
}

TEST_CASE("make_field errors and flags") {
  CHECK_THROWS_AS(make_field("bowen_exact"), InputError);
  CHECK_THROWS_AS(make_field("torus_linear"), InputError);
  CHECK_THROWS_AS(make_field("torus_linear", {{"slope", 1}, {"extra", 2}}), InputError);
  CHECK_THROWS_AS(make_field("may_leonard", {{"alpha", 0.8}, {"gamma", 1.5}}), InputError);
  CHECK_FALSE(may_leonard().has_flag("non_attracting"));
  CHECK(may_leonard(1.2, 1.5).has_flag("non_attracting"));
  CHECK(may_leonard(0.3, 1.5).has_flag("non_attracting"));
  for (const auto& e : field_catalog()) {
    std::map<std::string, double> params;
    for (const auto& n : e.parameter_names) params[n] = 0.5;
    if (e.id == "may_leonard") params = {{"alpha", 0.8}, {"beta", 1.5}};
    const auto f = make_field(e.id, params);
    CHECK(f.phase_space == e.phase_space);
    for (const auto& q : f.declared_equilibria) CHECK(f.speed(q) < 1e-12);
  }
}

TEST_CASE("integrate_time examples") {
  const auto flat = make_field("torus_linear", {{"slope", 0.0}});
  const auto o = integrate_time(flat, Point{0, 0, 0}, 1.0);
  const auto& end = o.samples.back();
  CHECK(end.t == doctest::Approx(1.0));
  CHECK(cover_point(end.point, end.winding).x == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(end.point.y == 0.0);

  const double tol = 1e-9;
  const auto sink = integrate_time(linear(-1, 0, 0, -1), Point{1, 0, 0}, 1.0, tol);
  CHECK(std::abs(sink.samples.back().point.x - std::exp(-1.0)) <= 10 * tol);
  CHECK(sink.termination == Termination::horizon_reached);

  const auto lc = integrate_time(make_field("limit_cycle"), Point{1, 0, 0}, 2 * std::numbers::pi, tol);
  CHECK(distance(lc.samples.back().point, Point{1, 0, 0}) <= 10 * tol);
}

TEST_CASE("torus samples are reduced with winding counts") {
  const auto f = make_field("torus_linear", {{"slope", kGolden}});
  const auto o = integrate_time(f, Point{0.2, 0.7, 0}, 12.5);
  for (const auto& s : o.samples) {
    CHECK(s.point.x >= 0.0);
    CHECK(s.point.x < 1.0);
    CHECK(s.point.y >= 0.0);
    CHECK(s.point.y < 1.0);
    const Point c = cover_point(s.point, s.winding);
    CHECK(c.x == doctest::Approx(0.2 + s.t).epsilon(1e-10));
    CHECK(c.y == doctest::Approx(0.7 + kGolden * s.t).epsilon(1e-10));
  }
}

TEST_CASE("integrate_arclength examples") {
  const auto sink = linear(-1, 0, 0, -1);
  const auto half = integrate_arclength(sink, Point{1, 0, 0}, 0.5, 1e-9, 1e-9);
  CHECK(half.termination == Termination::horizon_reached);
  CHECK(half.samples.back().s == doctest::Approx(0.5));
  CHECK(half.samples.back().point.x == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(half.samples.back().t == doctest::Approx(std::log(2.0)).epsilon(1e-8));

  const auto two = integrate_arclength(sink, Point{1, 0, 0}, 2.0, 1e-9, 1e-9);
  CHECK(two.termination == Termination::equilibrium_approach);
  CHECK(two.samples.back().s == doctest::Approx(1.0).epsilon(1e-6));

  CHECK_THROWS_AS(integrate_arclength(sink, Point{0, 0, 0}, 1.0), InputError);
  CHECK_THROWS_AS(integrate_arclength(sink, Point{1, 0, 0}, -1.0), InputError);
}

TEST_CASE("unit-speed torus flow: arclength equals time") {
  const auto f = unit_speed(make_field("torus_linear", {{"slope", kGolden}}));
  const auto arc = integrate_arclength(f, Point{0.1, 0.1, 0}, 5.0);
  const auto orb = integrate_time(f, Point{0.1, 0.1, 0}, 5.0);
  for (const auto& s : arc.samples) CHECK(s.t == doctest::Approx(s.s).epsilon(1e-9));
  const Point a = cover_point(arc.samples.back().point, arc.samples.back().winding);
  const Point b = cover_point(orb.samples.back().point, orb.samples.back().winding);
  CHECK(distance(a, b) <= 1e-8);
}

TEST_CASE("arclength trajectories: monotone parameters and chord fidelity") {
  struct Case {
    VectorField field;
    Point x0;
    double S;
  };
  const std::vector<Case> cases{{make_field("spiral_sink"), {1, 0, 0}, 1.3},
                                {make_field("limit_cycle"), {0.2, 0.1, 0}, 30.0},
                                {linear(0.5, -2, 2, 0.5), {0.1, 0, 0}, 50.0},
                                {may_leonard(), {0.5, 0.3, 0.2}, 20.0}};
  for (const auto& c : cases) {
    const auto arc = integrate_arclength(c.field, c.x0, c.S);
    REQUIRE(arc.samples.size() >= 2);
    double chords = 0.0;
    for (std::size_t k = 1; k < arc.samples.size(); ++k) {
      const auto& p = arc.samples[k - 1];
      const auto& q = arc.samples[k];
      CHECK(q.s > p.s);
      CHECK(q.t > p.t);
      const double chord = distance(cover_point(p.point, p.winding), cover_point(q.point, q.winding));
      CHECK(std::abs(chord - (q.s - p.s)) <= 1e-6 * (q.s - p.s) + 1e-12);
      chords += chord;
    }
    const double s_end = arc.samples.back().s;
    CHECK(std::abs(chords - s_end) <= 1e-6 * s_end);
  }
}

TEST_CASE("time and arclength orbits trace the same point set") {
  // Each arclength sample carries its elapsed time; the time flow must reach
  // the same point at that time.
  const double tol = 1e-9;
  struct Case {
    VectorField field;
    Point x0;
    double S;
  };
  const std::vector<Case> cases{{make_field("limit_cycle"), {0.5, 0, 0}, 6.0},
                                {make_field("spiral_sink"), {1, 0, 0}, 1.2},
                                {may_leonard(), {0.5, 0.3, 0.2}, 3.0}};
  for (const auto& c : cases) {
    const auto arc = integrate_arclength(c.field, c.x0, c.S);
    double worst = 0.0;
    for (std::size_t k = 1; k < arc.samples.size(); k += 7) {
      const auto orb = integrate_time(c.field, c.x0, arc.samples[k].t, tol);
      worst = std::max(worst, distance(orb.samples.back().point, arc.samples[k].point));
    }
    CHECK(worst <= 10 * tol);
  }
}

TEST_CASE("simplex invariance") {
  const auto f = may_leonard();
  for (const Point x0 : {Point{0.5, 0.3, 0.2}, Point{0.01, 0.01, 0.98}, Point{0.34, 0.33, 0.33}}) {
    const auto o = integrate_time(f, x0, 400.0);
    for (const auto& s : o.samples) {
      CHECK(std::abs(s.point.x + s.point.y + s.point.z - 1.0) <= 1e-9);
      CHECK(s.point.x > 0.0);
      CHECK(s.point.y > 0.0);
      CHECK(s.point.z > 0.0);
    }
  }
}

TEST_CASE("classify_equilibrium examples") {
  const auto saddle = classify_equilibrium(linear(1, 0, 0, -1), Point{});
  CHECK(saddle.classification == EquilibriumType::saddle);
  std::vector<double> re;
  for (const auto& e : saddle.eigenvalues) re.push_back(e.real());
  std::sort(re.begin(), re.end());
  REQUIRE(re.size() == 2);
  CHECK(re[0] == doctest::Approx(-1.0).epsilon(1e-8));
  CHECK(re[1] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(saddle.has_unstable_direction());

  const auto vertex = classify_equilibrium(may_leonard(), Point{1, 0, 0});
  CHECK(vertex.classification == EquilibriumType::saddle);
  re.clear();
  for (const auto& e : vertex.eigenvalues) re.push_back(e.real());
  std::sort(re.begin(), re.end());
  REQUIRE(re.size() == 2);
  CHECK(re[0] == doctest::Approx(-0.5).epsilon(1e-6));
  CHECK(re[1] == doctest::Approx(0.2).epsilon(1e-6));

  CHECK(classify_equilibrium(make_field("saddle_node"), Point{}).classification == EquilibriumType::degenerate);
  CHECK(classify_equilibrium(make_field("spiral_sink"), Point{}).classification == EquilibriumType::sink);
  CHECK_FALSE(classify_equilibrium(make_field("spiral_sink"), Point{}).has_unstable_direction());
  CHECK(classify_equilibrium(linear(0, -1, 1, 0), Point{}).classification == EquilibriumType::center);
  CHECK(classify_equilibrium(make_field("limit_cycle"), Point{}).classification == EquilibriumType::source);
  CHECK(classify_equilibrium(may_leonard(), Point{1.0 / 3, 1.0 / 3, 1.0 / 3}).classification ==
        EquilibriumType::source);
  CHECK_THROWS_AS(classify_equilibrium(linear(1, 0, 0, -1), Point{1, 1, 0}), InputError);
}

TEST_CASE("arclength integration crosses saddle passages") {
  // Near the May-Leonard circuit the orbit passes close to three saddles per lap.
  const auto arc = integrate_arclength(may_leonard(), Point{0.5, 0.3, 0.2}, 60.0);
  CHECK(arc.termination == Termination::horizon_reached);
  CHECK(arc.samples.back().s == doctest::Approx(60.0));
}
