#include <cmath>
#include <numbers>

#include "leafavg/core.hpp"

namespace leafavg {

namespace {

struct Entry {
  const char* id;
  double (*fn)(const Point&);
  const char* description;
};

constexpr double kTwoPi = 2.0 * std::numbers::pi;

const Entry kObservables[] = {
    {"one", [](const Point&) { return 1.0; }, "constant 1"},
    {"x", [](const Point& p) { return p.x; }, "first coordinate"},
    {"y", [](const Point& p) { return p.y; }, "second coordinate"},
    {"z", [](const Point& p) { return p.z; }, "third coordinate"},
    {"x1", [](const Point& p) { return p.x; }, "simplex coordinate x1"},
    {"x2", [](const Point& p) { return p.y; }, "simplex coordinate x2"},
    {"x3", [](const Point& p) { return p.z; }, "simplex coordinate x3"},
    {"x_squared", [](const Point& p) { return p.x * p.x; }, "x^2"},
    {"cos_2pi_x", [](const Point& p) { return std::cos(kTwoPi * p.x); }, "cos(2 pi x)"},
    {"cos_4pi_x", [](const Point& p) { return std::cos(2.0 * kTwoPi * p.x); }, "cos(4 pi x)"},
    {"sin_2pi_x", [](const Point& p) { return std::sin(kTwoPi * p.x); }, "sin(2 pi x)"},
};

}  // namespace

Observable constant_observable(double c) {
  return {"const", [c](const Point&) { return c; }, "constant"};
}

Observable make_observable(const std::string& id) {
  for (const auto& e : kObservables) {
    if (id == e.id) {
      return {e.id, e.fn, e.description};
    }
  }
  throw InputError("unknown observable '" + id + "'");
}

std::vector<std::string> observable_ids() {
  std::vector<std::string> ids;
  for (const auto& e : kObservables) ids.emplace_back(e.id);
  return ids;
}

}  // namespace leafavg
