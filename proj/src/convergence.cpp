#include <cmath>
#include <cstdio>
#include <map>

#include "leafavg/averages.hpp"

namespace leafavg {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::converged: return "converged";
    case Verdict::diverged: return "diverged";
    case Verdict::undecided: return "undecided";
  }
  return "?";
}

std::string ConvergencePolicy::describe() const {
  char buf[160];
  std::snprintf(buf, sizeof buf, "dyadic windows over the last %g of samples; tolerance %g; divergence floor %g",
                tail_fraction, tolerance, divergence_floor());
  return buf;
}

long dyadic_window(double parameter) { return static_cast<long>(std::floor(std::log2(parameter))); }

ConvergenceReport convergence_report(const RunningAverage& avg, const ConvergencePolicy& policy) {
  if (!(policy.tolerance > 0.0) || !(policy.divergence_factor >= 1.0) || !(policy.tail_fraction > 0.0) ||
      !(policy.tail_fraction <= 1.0)) {
    throw InputError("convergence_report: invalid policy");
  }
  const auto& s = avg.samples;
  if (s.size() < policy.min_samples) {
    throw InputError("convergence_report: " + std::to_string(s.size()) + " samples, need " +
                     std::to_string(policy.min_samples));
  }
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (!(s[k].parameter > 0.0) || (k > 0 && !(s[k].parameter > s[k - 1].parameter))) {
      throw InputError("convergence_report: parameters must be positive and strictly increasing");
    }
  }
  if (static_cast<std::size_t>(dyadic_window(s.back().parameter) - dyadic_window(s.front().parameter) + 1) <
      policy.min_windows) {
    throw InputError("convergence_report: samples span fewer than " + std::to_string(policy.min_windows) +
                     " dyadic windows");
  }

  ConvergenceReport rep;
  rep.window_policy = policy.describe();
  const auto tail_n = std::max<std::size_t>(
      2, static_cast<std::size_t>(std::ceil(policy.tail_fraction * static_cast<double>(s.size()))));
  const std::size_t first = s.size() - std::min(tail_n, s.size());
  rep.tail_samples = s.size() - first;

  // Window index -> (min, max) of the partial averages in it.
  std::map<long, std::pair<double, double>> windows;
  for (std::size_t k = first; k < s.size(); ++k) {
    const double a = s[k].average;
    auto [it, fresh] = windows.try_emplace(dyadic_window(s[k].parameter), a, a);
    if (!fresh) {
      it->second.first = std::min(it->second.first, a);
      it->second.second = std::max(it->second.second, a);
    }
  }
  rep.tail_windows = windows.size();

  double lo = s[first].average, hi = lo;
  for (const auto& [w, range] : windows) {
    lo = std::min(lo, range.first);
    hi = std::max(hi, range.second);
  }
  rep.liminf_hat = lo;
  rep.limsup_hat = hi;
  rep.last_window_drift = windows.rbegin()->second.second - windows.rbegin()->second.first;

  // Earlier and later halves of the tail windows; the later half gets the middle window.
  const std::size_t split = windows.size() / 2;
  double elo = INFINITY, ehi = -INFINITY, llo = INFINITY, lhi = -INFINITY;
  std::size_t i = 0;
  for (const auto& [w, range] : windows) {
    if (i++ < split) {
      elo = std::min(elo, range.first);
      ehi = std::max(ehi, range.second);
    } else {
      llo = std::min(llo, range.first);
      lhi = std::max(lhi, range.second);
    }
  }
  rep.early_gap = split > 0 ? ehi - elo : 0.0;
  rep.late_gap = lhi - llo;

  if (rep.gap() <= policy.tolerance && rep.last_window_drift <= policy.tolerance) {
    rep.verdict = Verdict::converged;
    rep.estimate = s.back().average;
  } else if (windows.size() >= 2 && rep.early_gap >= policy.divergence_floor() &&
             rep.late_gap >= policy.divergence_floor()) {
    rep.verdict = Verdict::diverged;
  }
  return rep;
}

}  // namespace leafavg
