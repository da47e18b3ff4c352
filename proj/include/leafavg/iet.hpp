#pragma once

#include <boost/rational.hpp>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "leafavg/core.hpp"

namespace leafavg {

using Rational = boost::rational<long long>;

/// Interval exchange of [0,1) on half-open intervals [a_i, a_{i+1}).
/// permutation[i] (1-based) is the position of interval i + 1 after the exchange.
struct IntervalExchange {
  std::vector<double> lengths;
  std::vector<int> permutation;
  /// Present when the exchange was built from rational lengths.
  std::optional<std::vector<Rational>> exact_lengths;

  std::size_t size() const { return lengths.size(); }
  /// a_0 = 0, ..., a_N = 1.
  std::vector<double> breakpoints() const;
  /// Label of the interval occupying image position k (1-based), i.e. the inverse permutation.
  std::vector<int> inverse_permutation() const;
};

/// Normalizes the lengths to sum 1. Throws InputError on a non-positive
/// length, an empty input or an invalid permutation.
IntervalExchange make_iet(std::vector<double> lengths, std::vector<int> permutation);
IntervalExchange make_iet(std::vector<Rational> lengths, std::vector<int> permutation);

/// Throws InputError unless x is in [0, 1).
double apply(const IntervalExchange& E, double x);
Rational apply(const IntervalExchange& E, const Rational& x);

/// (1/n) sum_{j<n} phi(E^j x) on a geometric n-grid up to n_max; phi is
/// evaluated at the point (x, 0, 0).
RunningAverage birkhoff_average(const IntervalExchange& E, double x, const Observable& phi, std::size_t n_max,
                                double grid_ratio = 1.189207115002721);

enum class KeaneVerdict { passes, fails, undecided };

const char* to_string(KeaneVerdict v);

struct KeaneReport {
  KeaneVerdict verdict = KeaneVerdict::undecided;
  bool exact = false;
  /// First collision E^m(a_i) = a_j, 1-based breakpoint indices.
  std::size_t from_breakpoint = 0;
  std::size_t to_breakpoint = 0;
  std::size_t iterate = 0;
  /// Closest approach of a breakpoint orbit to a breakpoint (0 on collision).
  double closest_approach = 0.0;
};

/// Orbits of the interior breakpoints a_1..a_{N-1} for m = 1..depth against
/// the same breakpoints. Exact when the exchange carries rational lengths;
/// otherwise long double, with collisions within tol, and undecided when the
/// closest approach lies in (tol, 100 tol].
KeaneReport keane_check(const IntervalExchange& E, std::size_t depth, double tol = 1e-12);

enum class RauzyType { top, bottom };

const char* to_string(RauzyType t);

struct RauzyResult {
  IntervalExchange induced;
  RauzyType type = RauzyType::top;
  /// Length of the inducing interval [0, inducing_length) before renormalization.
  double inducing_length = 0.0;
};

/// One Rauzy-Veech step: first return to [0, 1 - min(l_top, l_bottom)) of the
/// last interval in the domain (top) and the last in the image (bottom),
/// renormalized to unit length. Throws InputError when the two lengths are equal.
RauzyResult rauzy_step(const IntervalExchange& E);

struct UniqueErgodicityReport {
  double spread = 0.0;
  /// Per observable: mean over starts of the Birkhoff averages at n.
  std::vector<double> estimates;
  /// Per observable, per start.
  std::vector<std::vector<double>> averages;
  bool consistent = false;
  double threshold = 0.0;
};

/// Birkhoff averages at n over several starts; consistent iff the largest
/// spread across starts is below threshold.
UniqueErgodicityReport unique_ergodicity_diagnostic(const IntervalExchange& E, const std::vector<Observable>& observables,
                                                    const std::vector<double>& starts, std::size_t n,
                                                    double threshold = 1e-2);

}  // namespace leafavg
