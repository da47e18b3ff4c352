#include "leafavg/iet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace leafavg {

namespace {

void check_permutation(const std::vector<int>& perm, std::size_t n) {
  if (perm.size() != n) throw InputError("permutation size does not match the number of intervals");
  std::vector<bool> seen(n, false);
  for (const int p : perm) {
    if (p < 1 || static_cast<std::size_t>(p) > n || seen[static_cast<std::size_t>(p - 1)]) {
      throw InputError("permutation must be a bijection of {1..N}");
    }
    seen[static_cast<std::size_t>(p - 1)] = true;
  }
}

// Breakpoints and per-interval translations in arithmetic T.
template <class T>
struct Layout {
  std::vector<T> starts;  // a_0..a_N
  std::vector<T> shifts;  // image start minus domain start, per interval

  Layout(const std::vector<T>& lengths, const std::vector<int>& perm) {
    const std::size_t n = lengths.size();
    starts.assign(n + 1, T(0));
    for (std::size_t i = 0; i < n; ++i) starts[i + 1] = starts[i] + lengths[i];
    std::vector<std::size_t> inv(n);
    for (std::size_t i = 0; i < n; ++i) inv[static_cast<std::size_t>(perm[i] - 1)] = i;
    std::vector<T> image_start(n);
    T acc(0);
    for (std::size_t k = 0; k < n; ++k) {
      image_start[inv[k]] = acc;
      acc += lengths[inv[k]];
    }
    shifts.resize(n);
    for (std::size_t i = 0; i < n; ++i) shifts[i] = image_start[i] - starts[i];
  }

  std::size_t locate(const T& x) const {
    const auto it = std::upper_bound(starts.begin() + 1, starts.end() - 1, x);
    return static_cast<std::size_t>(it - starts.begin()) - 1;
  }

  T operator()(const T& x) const { return x + shifts[locate(x)]; }
};

// Keeps floating images inside [0, 1).
template <class T>
T clamp_unit(T y) {
  if (y < T(0)) return T(0);
  if (y >= T(1)) return std::nextafter(T(1), T(0));
  return y;
}

std::vector<long double> widen(const std::vector<double>& v) { return {v.begin(), v.end()}; }

}  // namespace

std::vector<double> IntervalExchange::breakpoints() const {
  std::vector<double> a(lengths.size() + 1, 0.0);
  if (exact_lengths) {
    Rational acc(0);
    for (std::size_t i = 0; i < lengths.size(); ++i) {
      acc += (*exact_lengths)[i];
      a[i + 1] = boost::rational_cast<double>(acc);
    }
  } else {
    long double acc = 0.0L;
    for (std::size_t i = 0; i < lengths.size(); ++i) {
      acc += lengths[i];
      a[i + 1] = static_cast<double>(acc);
    }
  }
  a.back() = 1.0;
  return a;
}

std::vector<int> IntervalExchange::inverse_permutation() const {
  std::vector<int> inv(permutation.size());
  for (std::size_t i = 0; i < permutation.size(); ++i) {
    inv[static_cast<std::size_t>(permutation[i] - 1)] = static_cast<int>(i + 1);
  }
  return inv;
}

IntervalExchange make_iet(std::vector<double> lengths, std::vector<int> permutation) {
  if (lengths.empty()) throw InputError("an interval exchange needs at least one interval");
  long double total = 0.0L;
  for (const double l : lengths) {
    if (!(l > 0.0) || !std::isfinite(l)) throw InputError("interval lengths must be positive and finite");
    total += l;
  }
  check_permutation(permutation, lengths.size());
  IntervalExchange E;
  for (const double l : lengths) E.lengths.push_back(static_cast<double>(l / total));
  E.permutation = std::move(permutation);
  return E;
}

IntervalExchange make_iet(std::vector<Rational> lengths, std::vector<int> permutation) {
  if (lengths.empty()) throw InputError("an interval exchange needs at least one interval");
  Rational total(0);
  for (const auto& l : lengths) {
    if (!(l > 0)) throw InputError("interval lengths must be positive");
    total += l;
  }
  check_permutation(permutation, lengths.size());
  IntervalExchange E;
  for (auto& l : lengths) {
    l /= total;
    E.lengths.push_back(boost::rational_cast<double>(l));
  }
  E.exact_lengths = std::move(lengths);
  E.permutation = std::move(permutation);
  return E;
}

double apply(const IntervalExchange& E, double x) {
  if (!(x >= 0.0 && x < 1.0)) throw InputError("apply: x must lie in [0, 1)");
  const Layout<long double> layout(widen(E.lengths), E.permutation);
  return static_cast<double>(clamp_unit(layout(static_cast<long double>(x))));
}

Rational apply(const IntervalExchange& E, const Rational& x) {
  if (!(x >= 0 && x < 1)) throw InputError("apply: x must lie in [0, 1)");
  if (!E.exact_lengths) throw InputError("apply: exchange has no exact lengths");
  return Layout<Rational>(*E.exact_lengths, E.permutation)(x);
}

RunningAverage birkhoff_average(const IntervalExchange& E, double x, const Observable& phi, std::size_t n_max,
                                double grid_ratio) {
  if (!(x >= 0.0 && x < 1.0)) throw InputError("birkhoff_average: x must lie in [0, 1)");
  if (n_max == 0) throw InputError("birkhoff_average: n_max must be positive");
  std::vector<std::size_t> grid;
  for (const double g : geometric_grid(static_cast<double>(n_max), 1.0, grid_ratio)) {
    const auto n = static_cast<std::size_t>(std::llround(g));
    if (grid.empty() || n > grid.back()) grid.push_back(n);
  }
  const Layout<long double> layout(widen(E.lengths), E.permutation);
  RunningAverage avg;
  avg.parameter_kind = ParameterKind::count;
  avg.observable_id = phi.id;
  long double y = x, sum = 0.0L;
  std::size_t n = 0;
  for (const std::size_t target : grid) {
    for (; n < target; ++n) {
      sum += phi(Point{static_cast<double>(y), 0.0, 0.0});
      y = clamp_unit(layout(y));
    }
    avg.samples.push_back({static_cast<double>(n), static_cast<double>(sum / static_cast<long double>(n))});
  }
  return avg;
}

const char* to_string(KeaneVerdict v) {
  switch (v) {
    case KeaneVerdict::passes: return "passes";
    case KeaneVerdict::fails: return "fails";
    case KeaneVerdict::undecided: return "undecided";
  }
  return "?";
}

KeaneReport keane_check(const IntervalExchange& E, std::size_t depth, double tol) {
  if (depth < 1) throw InputError("keane_check: depth must be at least 1");
  const std::size_t n = E.size();
  KeaneReport rep;
  rep.closest_approach = std::numeric_limits<double>::infinity();
  if (n < 2) {
    rep.verdict = KeaneVerdict::passes;
    return rep;
  }

  if (E.exact_lengths) {
    rep.exact = true;
    const Layout<Rational> layout(*E.exact_lengths, E.permutation);
    for (std::size_t i = 1; i < n; ++i) {
      Rational y = layout.starts[i];
      for (std::size_t m = 1; m <= depth; ++m) {
        y = layout(y);
        for (std::size_t j = 1; j < n; ++j) {
          if (y == layout.starts[j]) {
            rep.verdict = KeaneVerdict::fails;
            rep.from_breakpoint = i;
            rep.to_breakpoint = j;
            rep.iterate = m;
            rep.closest_approach = 0.0;
            return rep;
          }
          const double gap = std::abs(boost::rational_cast<double>(y - layout.starts[j]));
          rep.closest_approach = std::min(rep.closest_approach, gap);
        }
      }
    }
    rep.verdict = KeaneVerdict::passes;
    return rep;
  }

  const Layout<long double> layout(widen(E.lengths), E.permutation);
  for (std::size_t i = 1; i < n; ++i) {
    long double y = layout.starts[i];
    for (std::size_t m = 1; m <= depth; ++m) {
      y = clamp_unit(layout(y));
      for (std::size_t j = 1; j < n; ++j) {
        const double gap = static_cast<double>(std::abs(y - layout.starts[j]));
        if (gap <= tol) {
          rep.verdict = KeaneVerdict::fails;
          rep.from_breakpoint = i;
          rep.to_breakpoint = j;
          rep.iterate = m;
          rep.closest_approach = gap;
          return rep;
        }
        rep.closest_approach = std::min(rep.closest_approach, gap);
      }
    }
  }
  rep.verdict = rep.closest_approach <= 100.0 * tol ? KeaneVerdict::undecided : KeaneVerdict::passes;
  return rep;
}

const char* to_string(RauzyType t) { return t == RauzyType::top ? "top" : "bottom"; }

namespace {

// Labeled Rauzy step on rows of labels; returns the new domain-ordered
// lengths and permutation. T is double or Rational.
template <class T>
std::pair<std::vector<T>, std::vector<int>> rauzy_rows(std::vector<T> len, const std::vector<int>& perm,
                                                       RauzyType& type, T& cut) {
  const std::size_t n = len.size();
  std::vector<int> top(n), bottom(n);
  for (std::size_t i = 0; i < n; ++i) {
    top[i] = static_cast<int>(i);
    bottom[static_cast<std::size_t>(perm[i] - 1)] = static_cast<int>(i);
  }
  const int at = top.back(), ab = bottom.back();
  const T lt = len[static_cast<std::size_t>(at)], lb = len[static_cast<std::size_t>(ab)];
  if (lt > lb) {
    type = RauzyType::top;
    cut = lb;
    len[static_cast<std::size_t>(at)] -= lb;
    bottom.pop_back();
    const auto pos = std::find(bottom.begin(), bottom.end(), at);
    bottom.insert(pos + 1, ab);
  } else {
    type = RauzyType::bottom;
    cut = lt;
    len[static_cast<std::size_t>(ab)] -= lt;
    top.pop_back();
    const auto pos = std::find(top.begin(), top.end(), ab);
    top.insert(pos + 1, at);
  }
  std::vector<T> new_len(n);
  std::vector<int> new_perm(n);
  for (std::size_t k = 0; k < n; ++k) {
    new_len[k] = len[static_cast<std::size_t>(top[k])];
    const auto pos = std::find(bottom.begin(), bottom.end(), top[k]);
    new_perm[k] = static_cast<int>(pos - bottom.begin()) + 1;
  }
  return {new_len, new_perm};
}

}  // namespace

RauzyResult rauzy_step(const IntervalExchange& E) {
  const std::size_t n = E.size();
  if (n < 2) throw InputError("rauzy_step: needs at least two intervals");
  const auto inv = E.inverse_permutation();
  const std::size_t at = n - 1, ab = static_cast<std::size_t>(inv.back() - 1);
  if (at == ab) throw InputError("rauzy_step: last interval is fixed; the exchange is reducible");
  RauzyResult out;
  if (E.exact_lengths) {
    const auto& L = *E.exact_lengths;
    if (L[at] == L[ab]) throw InputError("rauzy_step: degenerate comparison of equal lengths");
    Rational cut;
    auto [len, perm] = rauzy_rows(L, E.permutation, out.type, cut);
    out.inducing_length = boost::rational_cast<double>(Rational(1) - cut);
    out.induced = make_iet(std::move(len), std::move(perm));
  } else {
    const auto& L = E.lengths;
    if (std::abs(L[at] - L[ab]) <= 1e-14) throw InputError("rauzy_step: degenerate comparison of equal lengths");
    double cut = 0.0;
    auto [len, perm] = rauzy_rows(L, E.permutation, out.type, cut);
    out.inducing_length = 1.0 - cut;
    out.induced = make_iet(std::move(len), std::move(perm));
  }
  return out;
}

UniqueErgodicityReport unique_ergodicity_diagnostic(const IntervalExchange& E,
                                                    const std::vector<Observable>& observables,
                                                    const std::vector<double>& starts, std::size_t n,
                                                    double threshold) {
  if (starts.size() < 2) throw InputError("unique_ergodicity_diagnostic: needs at least two starts");
  if (observables.empty()) throw InputError("unique_ergodicity_diagnostic: needs an observable");
  if (n == 0) throw InputError("unique_ergodicity_diagnostic: n must be positive");
  for (const double x : starts) {
    if (!(x >= 0.0 && x < 1.0)) throw InputError("unique_ergodicity_diagnostic: starts must lie in [0, 1)");
  }
  const Layout<long double> layout(widen(E.lengths), E.permutation);
  UniqueErgodicityReport rep;
  rep.threshold = threshold;
  rep.averages.assign(observables.size(), std::vector<double>(starts.size(), 0.0));
  std::vector<long double> sums(observables.size());
  for (std::size_t s = 0; s < starts.size(); ++s) {
    std::fill(sums.begin(), sums.end(), 0.0L);
    long double y = starts[s];
    for (std::size_t j = 0; j < n; ++j) {
      const Point p{static_cast<double>(y), 0.0, 0.0};
      for (std::size_t o = 0; o < observables.size(); ++o) sums[o] += observables[o](p);
      y = clamp_unit(layout(y));
    }
    for (std::size_t o = 0; o < observables.size(); ++o) {
      rep.averages[o][s] = static_cast<double>(sums[o] / static_cast<long double>(n));
    }
  }
  for (const auto& per_start : rep.averages) {
    const auto [lo, hi] = std::minmax_element(per_start.begin(), per_start.end());
    rep.spread = std::max(rep.spread, *hi - *lo);
    rep.estimates.push_back(std::accumulate(per_start.begin(), per_start.end(), 0.0) /
                            static_cast<double>(per_start.size()));
  }
  rep.consistent = rep.spread < threshold;
  return rep;
}

}  // namespace leafavg
