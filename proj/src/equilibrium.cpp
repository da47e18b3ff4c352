#include <cmath>

#include "leafavg/flows.hpp"

namespace leafavg {

const char* to_string(EquilibriumType t) {
  switch (t) {
    case EquilibriumType::sink: return "sink";
    case EquilibriumType::source: return "source";
    case EquilibriumType::saddle: return "saddle";
    case EquilibriumType::center: return "center";
    case EquilibriumType::degenerate: return "degenerate";
  }
  return "?";
}

bool Equilibrium::has_unstable_direction() const {
  for (const auto& ev : eigenvalues) {
    if (ev.real() > 0.0) return true;
  }
  return false;
}

namespace {

using Mat2 = std::array<std::array<double, 2>, 2>;

std::vector<std::complex<double>> eigenvalues2(const Mat2& m) {
  const double tr = m[0][0] + m[1][1];
  const double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
  const double disc = 0.25 * tr * tr - det;
  if (disc >= 0.0) {
    const double r = std::sqrt(disc);
    // Avoid cancellation for the smaller root.
    const double big = 0.5 * tr + (tr >= 0.0 ? r : -r);
    const double small = big != 0.0 ? det / big : 0.5 * tr - (tr >= 0.0 ? r : -r);
    return {{big, 0.0}, {small, 0.0}};
  }
  const double im = std::sqrt(-disc);
  return {{0.5 * tr, im}, {0.5 * tr, -im}};
}

}  // namespace

Equilibrium classify_equilibrium(const VectorField& field, const Point& p, double h, double degeneracy_tol,
                                 double near_tol) {
  if (!(h > 0.0) || !std::isfinite(h)) throw InputError("jacobian step must be positive");
  if (!(field.speed(p) < near_tol)) {
    throw InputError("point is not near an equilibrium (|A(p)| = " + std::to_string(field.speed(p)) + ")");
  }
  const int dim = field.phase_space == PhaseSpace::simplex ? 3 : 2;
  double jac[3][3] = {};
  for (int j = 0; j < dim; ++j) {
    Point plus = p, minus = p;
    plus[j] += h;
    minus[j] -= h;
    const Point d = (0.5 / h) * (field(plus) - field(minus));
    for (int i = 0; i < dim; ++i) jac[i][j] = d[i];
  }

  Mat2 m{};
  if (dim == 2) {
    m = {{{jac[0][0], jac[0][1]}, {jac[1][0], jac[1][1]}}};
  } else {
    // Orthonormal basis of the tangent plane x1 + x2 + x3 = 0.
    const double r2 = 1.0 / std::sqrt(2.0), r6 = 1.0 / std::sqrt(6.0);
    const double basis[2][3] = {{r2, -r2, 0.0}, {r6, r6, -2.0 * r6}};
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        double acc = 0.0;
        for (int i = 0; i < 3; ++i) {
          for (int j = 0; j < 3; ++j) acc += basis[a][i] * jac[i][j] * basis[b][j];
        }
        m[a][b] = acc;
      }
    }
  }

  Equilibrium eq;
  eq.location = p;
  eq.jacobian_step = h;
  eq.eigenvalues = eigenvalues2(m);
  bool degenerate = false, all_neg = true, all_pos = true, all_zero_real = true;
  for (const auto& ev : eq.eigenvalues) {
    if (std::abs(ev) < degeneracy_tol) degenerate = true;
    if (!(ev.real() < 0.0)) all_neg = false;
    if (!(ev.real() > 0.0)) all_pos = false;
    if (std::abs(ev.real()) >= degeneracy_tol) all_zero_real = false;
  }
  if (degenerate) {
    eq.classification = EquilibriumType::degenerate;
  } else if (all_zero_real) {
    eq.classification = EquilibriumType::center;
  } else if (all_neg) {
    eq.classification = EquilibriumType::sink;
  } else if (all_pos) {
    eq.classification = EquilibriumType::source;
  } else {
    eq.classification = EquilibriumType::saddle;
  }
  return eq;
}

}  // namespace leafavg
