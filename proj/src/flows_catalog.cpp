#include <algorithm>
#include <cmath>

#include "leafavg/flows.hpp"

namespace leafavg {

const char* to_string(PhaseSpace ps) {
  switch (ps) {
    case PhaseSpace::plane: return "plane";
    case PhaseSpace::torus: return "torus";
    case PhaseSpace::simplex: return "simplex";
  }
  return "?";
}

double VectorField::parameter(const std::string& name) const {
  for (const auto& p : parameters) {
    if (p.name == name) return p.value;
  }
  throw InputError("field '" + catalog_id + "' has no parameter '" + name + "'");
}

bool VectorField::has_flag(const std::string& flag) const {
  return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

const std::vector<CatalogEntry>& field_catalog() {
  static const std::vector<CatalogEntry> catalog = {
      {"linear", {"a11", "a12", "a21", "a22"}, PhaseSpace::plane, "x' = A x for a constant 2x2 matrix A"},
      {"spiral_sink", {}, PhaseSpace::plane, "r' = -r, theta' = 1"},
      {"limit_cycle", {}, PhaseSpace::plane, "r' = r (1 - r^2), theta' = 1; attracting unit circle"},
      {"saddle_node", {}, PhaseSpace::plane, "x' = x^2, y' = -y; degenerate equilibrium at the origin"},
      {"torus_linear", {"slope"}, PhaseSpace::torus, "constant field (1, slope) on the unit torus"},
      {"may_leonard", {"alpha", "beta"}, PhaseSpace::simplex,
       "May-Leonard competition projected onto the simplex x1 + x2 + x3 = 1; "
       "heteroclinic circuit on the boundary, attracting when alpha + beta > 2"},
  };
  return catalog;
}

Point may_leonard_lotka_volterra(const Point& x, double alpha, double beta) {
  Point out;
  for (std::size_t i = 0; i < 3; ++i) {
    const double next = x[(i + 1) % 3];
    const double after = x[(i + 2) % 3];
    out[i] = x[i] * (1.0 - x[i] - alpha * next - beta * after);
  }
  return out;
}

namespace {

const CatalogEntry& lookup(const std::string& id) {
  for (const auto& e : field_catalog()) {
    if (e.id == id) return e;
  }
  throw InputError("unknown field catalog id '" + id + "'");
}

std::vector<Parameter> check_parameters(const CatalogEntry& entry, const std::map<std::string, double>& given) {
  if (given.size() != entry.parameter_names.size()) {
    throw InputError("field '" + entry.id + "' expects " + std::to_string(entry.parameter_names.size()) +
                     " parameter(s), got " + std::to_string(given.size()));
  }
  std::vector<Parameter> out;
  for (const auto& name : entry.parameter_names) {
    const auto it = given.find(name);
    if (it == given.end()) {
      throw InputError("field '" + entry.id + "' is missing parameter '" + name + "'");
    }
    if (!std::isfinite(it->second)) {
      throw InputError("field '" + entry.id + "' parameter '" + name + "' is not finite");
    }
    out.push_back({name, it->second});
  }
  return out;
}

// Growth rates r_i = g_i - sum_j x_j g_j with g_i = 1 - x_i - alpha x_{i+1} - beta x_{i+2}.
Point replicator_rates(const Point& x, double alpha, double beta) {
  Point g;
  for (std::size_t i = 0; i < 3; ++i) {
    g[i] = 1.0 - x[i] - alpha * x[(i + 1) % 3] - beta * x[(i + 2) % 3];
  }
  const double mean = x.x * g.x + x.y * g.y + x.z * g.z;
  return {g.x - mean, g.y - mean, g.z - mean};
}

}  // namespace

VectorField make_field(const std::string& catalog_id, const std::map<std::string, double>& parameters) {
  const CatalogEntry& entry = lookup(catalog_id);
  VectorField f;
  f.catalog_id = entry.id;
  f.parameters = check_parameters(entry, parameters);
  f.phase_space = entry.phase_space;

  if (catalog_id == "linear") {
    const double a11 = f.parameter("a11"), a12 = f.parameter("a12");
    const double a21 = f.parameter("a21"), a22 = f.parameter("a22");
    f.evaluator = [=](const Point& p) { return Point{a11 * p.x + a12 * p.y, a21 * p.x + a22 * p.y, 0.0}; };
    f.declared_equilibria = {Point{}};
  } else if (catalog_id == "spiral_sink") {
    f.evaluator = [](const Point& p) { return Point{-p.x - p.y, p.x - p.y, 0.0}; };
    f.declared_equilibria = {Point{}};
    f.default_section = SectionHint{{0.0, 0.0, 0.0}, {2.0, 0.0, 0.0}, true, false, false};
  } else if (catalog_id == "limit_cycle") {
    f.evaluator = [](const Point& p) {
      const double k = 1.0 - (p.x * p.x + p.y * p.y);
      return Point{p.x * k - p.y, p.y * k + p.x, 0.0};
    };
    f.declared_equilibria = {Point{}};
    f.default_section = SectionHint{{0.0, 0.0, 0.0}, {2.0, 0.0, 0.0}, true, false, false};
  } else if (catalog_id == "saddle_node") {
    f.evaluator = [](const Point& p) { return Point{p.x * p.x, -p.y, 0.0}; };
    f.declared_equilibria = {Point{}};
  } else if (catalog_id == "torus_linear") {
    const double g = f.parameter("slope");
    f.evaluator = [g](const Point&) { return Point{1.0, g, 0.0}; };
    f.default_section = SectionHint{{0.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, false, false, true};
  } else if (catalog_id == "may_leonard") {
    const double alpha = f.parameter("alpha"), beta = f.parameter("beta");
    f.log_rates = [=](const Point& x) { return replicator_rates(x, alpha, beta); };
    f.evaluator = [=](const Point& x) {
      const Point r = replicator_rates(x, alpha, beta);
      return Point{x.x * r.x, x.y * r.y, x.z * r.z};
    };
    f.declared_equilibria = {Point{1, 0, 0}, Point{0, 1, 0}, Point{0, 0, 1}, Point{1.0 / 3, 1.0 / 3, 1.0 / 3}};
    if (!(0.0 < alpha && alpha < 1.0 && 1.0 < beta) || !(alpha + beta > 2.0)) {
      f.flags.emplace_back("non_attracting");
    }
    f.default_section =
        SectionHint{{1.0 / 3, 1.0 / 3, 1.0 / 3}, {0.5, 0.5, 0.0}, true, true, false};
  }
  return f;
}

VectorField unit_speed(const VectorField& field) {
  VectorField f = field;
  f.catalog_id = field.catalog_id + "/unit_speed";
  auto eval = field.evaluator;
  f.evaluator = [eval](const Point& p) {
    const Point a = eval(p);
    return (1.0 / norm(a)) * a;
  };
  if (field.log_rates) {
    auto rates = field.log_rates;
    f.log_rates = [eval, rates](const Point& p) {
      const Point r = rates(p);
      return (1.0 / norm(eval(p))) * r;
    };
  }
  f.declared_equilibria.clear();
  return f;
}

Point cover_point(const Point& p, const std::array<long long, 2>& winding) {
  return {p.x + static_cast<double>(winding[0]), p.y + static_cast<double>(winding[1]), p.z};
}

}  // namespace leafavg
