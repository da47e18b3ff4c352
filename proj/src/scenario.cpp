#include "leafavg/scenario.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <mutex>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "leafavg/averages.hpp"
#include "leafavg/flows.hpp"
#include "leafavg/foliation_examples.hpp"
#include "leafavg/iet.hpp"
#include "leafavg/sections.hpp"

namespace leafavg {

namespace {

using json = nlohmann::ordered_json;

// ------------------------------------------------------------ schema helpers

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw InputError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw InputError(where + ": unknown key \"" + key + "\"");
  }
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw InputError(where + ": expected a number");
  return v.get<double>();
}

double positive(const json& obj, const char* key, const std::string& where, std::optional<double> fallback = {}) {
  if (!obj.is_object() || !obj.contains(key)) {
    if (fallback) return *fallback;
    throw InputError(where + ": missing \"" + key + "\"");
  }
  const double v = number(obj.at(key), where + "." + key);
  if (!(v > 0.0) || !std::isfinite(v)) throw InputError(where + "." + key + " must be positive");
  return v;
}

std::uint64_t count(const json& obj, const char* key, const std::string& where, std::optional<std::uint64_t> fallback = {}) {
  const double v = positive(obj, key, where, fallback ? std::optional<double>(static_cast<double>(*fallback))
                                                      : std::nullopt);
  if (v != std::floor(v) || v > 1e15) throw InputError(where + "." + key + " must be a positive integer");
  return static_cast<std::uint64_t>(v);
}

bool flag(const json& obj, const char* key, bool fallback, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  if (!obj.at(key).is_boolean()) throw InputError(where + "." + key + ": expected true or false");
  return obj.at(key).get<bool>();
}

Point point(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() < 2 || v.size() > 3) throw InputError(where + ": expected [x, y] or [x, y, z]");
  Point p;
  for (std::size_t i = 0; i < v.size(); ++i) p[i] = number(v[i], where);
  return p;
}

json point_json(const Point& p, PhaseSpace ps) {
  json a = json::array({p.x, p.y});
  if (ps == PhaseSpace::simplex) a.push_back(p.z);
  return a;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ------------------------------------------------------------ scenario model

struct Scenario {
  std::string id;
  std::string kind;
  json raw;
  json tolerances = json::object();
  json horizons = json::object();
  bool csv = true;
  bool svg = false;
};

struct RunOutput {
  std::string name;
  json entry;
  std::optional<RunningAverage> series;
  std::optional<IntegratorStats> stats;
  bool numeric_failure = false;
  double seconds = 0.0;
};

struct Task {
  std::string name;
  std::function<RunOutput()> run;
};

struct Plan {
  std::vector<Task> tasks;
  json analysis = json::object();
};

const std::set<std::string> kKinds{"flow_average", "return_study",    "omega_classify",  "iet_study",
                                   "band_study",   "koch_study",      "suspension_study"};

std::set<std::string> allowed_keys(const std::string& kind) {
  std::set<std::string> keys{"id", "kind", "description", "output", "tolerances"};
  auto add = [&](std::initializer_list<const char*> more) { keys.insert(more.begin(), more.end()); };
  if (kind == "flow_average") add({"system", "observables", "starts", "horizons", "averages"});
  if (kind == "return_study") add({"system", "observables", "starts", "horizons", "returns", "section"});
  if (kind == "omega_classify") add({"system", "starts", "transient_time"});
  if (kind == "iet_study") add({"iet", "observables", "starts", "horizons", "keane_depth", "rauzy_steps"});
  if (kind == "band_study") add({"band", "horizons"});
  if (kind == "koch_study") add({"koch"});
  if (kind == "suspension_study") add({"suspension", "observables", "starts", "horizons"});
  return keys;
}

double tolerance(const Scenario& sc, const char* key, double fallback) {
  return positive(sc.tolerances, key, "tolerances", fallback);
}

ConvergencePolicy policy_of(const Scenario& sc) {
  ConvergencePolicy p;
  p.tolerance = tolerance(sc, "convergence", p.tolerance);
  p.divergence_factor = tolerance(sc, "divergence_factor", p.divergence_factor);
  return p;
}

FlowControls flow_controls(const Scenario& sc) {
  FlowControls c;
  c.tol = tolerance(sc, "integrator", c.tol);
  c.eps_min = tolerance(sc, "eps_min", c.eps_min);
  return c;
}

VectorField parse_system(const Scenario& sc) {
  if (!sc.raw.contains("system")) throw InputError("missing \"system\"");
  const json& sys = sc.raw.at("system");
  check_keys(sys, {"catalog", "parameters", "unit_speed"}, "system");
  if (!sys.contains("catalog") || !sys.at("catalog").is_string()) throw InputError("system.catalog: expected a string");
  std::map<std::string, double> params;
  if (sys.contains("parameters")) {
    if (!sys.at("parameters").is_object()) throw InputError("system.parameters: expected an object");
    for (const auto& [k, v] : sys.at("parameters").items()) params[k] = number(v, "system.parameters." + k);
  }
  VectorField f = make_field(sys.at("catalog").get<std::string>(), params);
  return flag(sys, "unit_speed", false, "system") ? unit_speed(f) : f;
}

std::vector<Observable> parse_observables(const Scenario& sc) {
  if (!sc.raw.contains("observables")) throw InputError("missing \"observables\"");
  const json& obs = sc.raw.at("observables");
  if (!obs.is_array() || obs.empty()) throw InputError("observables: expected a non-empty array of ids");
  std::vector<Observable> out;
  std::set<std::string> seen;
  for (const auto& o : obs) {
    if (!o.is_string()) throw InputError("observables: expected string ids");
    if (!seen.insert(o.get<std::string>()).second) throw InputError("observables: duplicate id " + o.get<std::string>());
    out.push_back(make_observable(o.get<std::string>()));
  }
  return out;
}

std::vector<Point> parse_points(const Scenario& sc) {
  if (!sc.raw.contains("starts")) throw InputError("missing \"starts\"");
  const json& st = sc.raw.at("starts");
  if (!st.is_array() || st.empty()) throw InputError("starts: expected a non-empty array");
  std::vector<Point> out;
  for (std::size_t i = 0; i < st.size(); ++i) out.push_back(point(st[i], "starts[" + std::to_string(i) + "]"));
  return out;
}

std::vector<double> parse_unit_starts(const Scenario& sc) {
  if (!sc.raw.contains("starts")) throw InputError("missing \"starts\"");
  const json& st = sc.raw.at("starts");
  if (!st.is_array() || st.empty()) throw InputError("starts: expected a non-empty array of numbers in [0, 1)");
  std::vector<double> out;
  for (const auto& v : st) {
    const double x = number(v, "starts");
    if (!(x >= 0.0 && x < 1.0)) throw InputError("starts: values must lie in [0, 1)");
    out.push_back(x);
  }
  return out;
}

// ------------------------------------------------------------ report pieces

json stats_json(const IntegratorStats& s) {
  return {{"accepted_steps", s.accepted},
          {"rejected_steps", s.rejected},
          {"drift_jumps", s.drift_jumps},
          {"transit_steps", s.transit_steps}};
}

json convergence_json(const RunningAverage& avg, const ConvergencePolicy& policy) {
  try {
    const ConvergenceReport r = convergence_report(avg, policy);
    json j{{"verdict", to_string(r.verdict)}};
    j["estimate"] = r.estimate ? json(*r.estimate) : json(nullptr);
    j["limsup_hat"] = r.limsup_hat;
    j["liminf_hat"] = r.liminf_hat;
    j["gap"] = r.gap();
    j["last_window_drift"] = r.last_window_drift;
    j["early_gap"] = r.early_gap;
    j["late_gap"] = r.late_gap;
    j["tail_samples"] = r.tail_samples;
    j["tail_windows"] = r.tail_windows;
    j["window_policy"] = r.window_policy;
    return j;
  } catch (const InputError& e) {
    return {{"verdict", "insufficient_samples"}, {"detail", e.what()}};
  }
}

bool finite_series(const RunningAverage& avg) {
  for (const auto& s : avg.samples) {
    if (!std::isfinite(s.average) || !std::isfinite(s.parameter)) return false;
  }
  return true;
}

RunOutput series_output(std::string name, json entry, RunningAverage avg, const ConvergencePolicy& policy) {
  RunOutput out;
  out.name = std::move(name);
  out.entry = std::move(entry);
  out.entry["parameter_kind"] = to_string(avg.parameter_kind);
  out.entry["samples"] = avg.samples.size();
  out.entry["termination"] = to_string(avg.termination);
  if (!avg.empty()) {
    out.entry["final_parameter"] = avg.samples.back().parameter;
    out.entry["final_average"] = avg.last();
  }
  out.entry["convergence"] = convergence_json(avg, policy);
  if (avg.integrator) {
    out.entry["integrator"] = stats_json(*avg.integrator);
    out.stats = avg.integrator;
  }
  if (avg.empty() || !finite_series(avg)) {
    out.numeric_failure = true;
    out.entry["error"] = avg.empty() ? "no samples" : "non-finite samples";
  }
  out.series = std::move(avg);
  return out;
}

// ------------------------------------------------------------ kinds

void plan_flow_average(const Scenario& sc, Plan& plan) {
  const auto field = std::make_shared<VectorField>(parse_system(sc));
  const auto observables = parse_observables(sc);
  const auto starts = parse_points(sc);
  check_keys(sc.horizons, {"T_max", "S_max"}, "horizons");
  std::vector<std::string> kinds{"time", "length"};
  if (sc.raw.contains("averages")) {
    kinds.clear();
    const json& a = sc.raw.at("averages");
    if (!a.is_array() || a.empty()) throw InputError("averages: expected a non-empty array");
    for (const auto& k : a) {
      if (!k.is_string() || !std::set<std::string>{"time", "length", "leaf"}.count(k.get<std::string>())) {
        throw InputError("averages: entries must be \"time\", \"length\" or \"leaf\"");
      }
      kinds.push_back(k.get<std::string>());
    }
  }
  AverageControls controls;
  controls.flow = flow_controls(sc);
  const ConvergencePolicy policy = policy_of(sc);
  for (const auto& k : kinds) {
    // Validate horizons before any run starts.
    if (k == "time") positive(sc.horizons, "T_max", "horizons");
    else positive(sc.horizons, "S_max", "horizons");
  }
  for (std::size_t s = 0; s < starts.size(); ++s) {
    if (!(field->speed(starts[s]) > controls.flow.eps_min)) {
      throw InputError("starts[" + std::to_string(s) + "] is an equilibrium");
    }
    for (const auto& phi : observables) {
      for (const auto& k : kinds) {
        const std::string name = "s" + std::to_string(s) + "_" + phi.id + "_" + k;
        const double horizon = positive(sc.horizons, k == "time" ? "T_max" : "S_max", "horizons");
        const Point x0 = starts[s];
        plan.tasks.push_back({name, [=] {
          RunningAverage avg = k == "time"     ? time_average(*field, x0, phi, horizon, controls)
                               : k == "length" ? length_average_forward(*field, x0, phi, horizon, controls)
                                               : length_average_leaf(*field, x0, phi, horizon, controls);
          json entry{{"name", name}, {"start", point_json(x0, field->phase_space)}, {"observable", phi.id},
                     {"average", k}};
          return series_output(name, std::move(entry), std::move(avg), policy);
        }});
      }
    }
  }
}

CrossSection parse_section(const Scenario& sc, const VectorField& field) {
  if (!sc.raw.contains("section")) {
    if (!field.default_section) throw InputError("field has no default section; give \"section\"");
    return CrossSection::from_hint(field, *field.default_section);
  }
  const json& s = sc.raw.at("section");
  check_keys(s, {"a", "b", "open_a", "open_b", "torus_circle"}, "section");
  if (flag(s, "torus_circle", false, "section")) return CrossSection::torus_circle(field);
  if (!s.contains("a") || !s.contains("b")) throw InputError("section: needs \"a\" and \"b\"");
  return CrossSection::segment(field, point(s.at("a"), "section.a"), point(s.at("b"), "section.b"),
                               flag(s, "open_a", true, "section"), flag(s, "open_b", true, "section"));
}

void plan_return_study(const Scenario& sc, Plan& plan) {
  const auto field = std::make_shared<VectorField>(parse_system(sc));
  const auto observables = parse_observables(sc);
  const auto starts = parse_points(sc);
  const auto section = std::make_shared<CrossSection>(parse_section(sc, *field));
  check_keys(sc.horizons, {"T_max"}, "horizons");
  const std::size_t n = count(sc.raw, "returns", "scenario");
  ReturnControls rc;
  rc.flow = flow_controls(sc);
  rc.time_horizon = positive(sc.horizons, "T_max", "horizons", 1e300);
  rc.step_horizon = 1'000'000;
  rc.graze_tol = sc.tolerances.contains("graze") ? number(sc.tolerances.at("graze"), "tolerances.graze") : 1e-10;
  if (!(rc.graze_tol >= 0.0)) throw InputError("tolerances.graze must be >= 0");
  const ConvergencePolicy policy = policy_of(sc);
  for (std::size_t s = 0; s < starts.size(); ++s) {
    if (!section->contains(starts[s])) throw InputError("starts[" + std::to_string(s) + "] is not on the section");
    // One integration per start; the observables share it.
    auto seq = std::make_shared<std::optional<ReturnSequence>>();
    auto once = std::make_shared<std::once_flag>();
    const Point x0 = starts[s];
    auto compute = [=] {
      std::call_once(*once, [&] { *seq = return_sequence(*field, *section, x0, n, observables, rc); });
      return **seq;
    };
    for (const auto& phi : observables) {
      const std::string name = "s" + std::to_string(s) + "_" + phi.id + "_returns";
      plan.tasks.push_back({name, [=] {
        const ReturnSequence rs = compute();
        RunningAverage avg;
        avg.parameter_kind = ParameterKind::arclength;
        avg.observable_id = phi.id;
        json returns = json::array();
        double len = 0.0, integral = 0.0;
        for (std::size_t k = 0; k < rs.records.size(); ++k) {
          const auto& r = rs.records[k];
          len += r.return_arc_length;
          integral += r.arc_integrals.at(phi.id);
          avg.samples.push_back({len, integral / len});
          returns.push_back({{"index", k + 1},
                             {"image", point_json(r.image, field->phase_space)},
                             {"return_time", r.return_time},
                             {"return_arc_length", r.return_arc_length},
                             {"arc_integral", r.arc_integrals.at(phi.id)},
                             {"crossing_refinement_error", r.crossing_refinement_error}});
        }
        json entry{{"name", name},
                   {"start", point_json(x0, field->phase_space)},
                   {"observable", phi.id},
                   {"average", "return_sums"},
                   {"status", to_string(rs.status)}};
        if (rs.status != ReturnStatus::ok) entry["status_detail"] = rs.message;
        entry["returns"] = std::move(returns);
        RunOutput out = series_output(name, std::move(entry), std::move(avg), policy);
        // Stopping early is a reported outcome; only a broken integration is a failure.
        out.numeric_failure = rs.status == ReturnStatus::numeric_failure ||
                              (out.numeric_failure && !rs.records.empty());
        return out;
      }});
    }
  }
}

void plan_omega_classify(const Scenario& sc, Plan& plan) {
  const auto field = std::make_shared<VectorField>(parse_system(sc));
  const auto starts = parse_points(sc);
  ClassifierControls cc;
  cc.returns.flow = flow_controls(sc);
  cc.transient_time = positive(sc.raw, "transient_time", "scenario", cc.transient_time);
  for (std::size_t s = 0; s < starts.size(); ++s) {
    const std::string name = "s" + std::to_string(s) + "_omega";
    const Point x0 = starts[s];
    plan.tasks.push_back({name, [=] {
      const OmegaVerdict v = classify_omega_limit(*field, x0, cc);
      const auto& e = v.evidence;
      RunOutput out;
      out.name = name;
      out.entry = {{"name", name},
                   {"start", point_json(x0, field->phase_space)},
                   {"verdict", to_string(v.type)},
                   {"evidence",
                    {{"section_used", e.section_used},
                     {"returns", e.returns},
                     {"final_speed", e.final_speed},
                     {"tail_position_spread", e.tail_position_spread},
                     {"return_time_ratio", e.return_time_ratio},
                     {"first_return_time", e.first_return_time},
                     {"last_return_time", e.last_return_time},
                     {"limit_speed", e.limit_speed},
                     {"filled_bins", e.filled_bins},
                     {"note", e.note}}}};
      if (v.limit_curve) out.entry["limit_curve_length"] = curve_length(*v.limit_curve);
      return out;
    }});
  }
}

IntervalExchange parse_iet(const json& j) {
  check_keys(j, {"lengths", "permutation"}, "iet");
  if (!j.contains("lengths") || !j.at("lengths").is_array()) throw InputError("iet.lengths: expected an array");
  if (!j.contains("permutation") || !j.at("permutation").is_array()) {
    throw InputError("iet.permutation: expected an array");
  }
  std::vector<int> perm;
  for (const auto& p : j.at("permutation")) {
    if (!p.is_number_integer()) throw InputError("iet.permutation: expected integers");
    perm.push_back(p.get<int>());
  }
  // Exact arithmetic when every length is an integer or a "p/q" string.
  bool exact = true;
  for (const auto& l : j.at("lengths")) exact = exact && (l.is_string() || l.is_number_integer());
  if (exact) {
    static const std::regex frac(R"(\s*(\d+)\s*(?:/\s*(\d+))?\s*)");
    std::vector<Rational> lengths;
    for (const auto& l : j.at("lengths")) {
      if (l.is_number_integer()) {
        lengths.emplace_back(l.get<long long>());
        continue;
      }
      std::smatch m;
      const std::string s = l.get<std::string>();
      if (!std::regex_match(s, m, frac)) throw InputError("iet.lengths: cannot parse \"" + s + "\" as p/q");
      const long long num = std::stoll(m[1]);
      const long long den = m[2].matched ? std::stoll(m[2]) : 1;
      if (den == 0) throw InputError("iet.lengths: zero denominator");
      lengths.emplace_back(num, den);
    }
    return make_iet(std::move(lengths), std::move(perm));
  }
  std::vector<double> lengths;
  for (const auto& l : j.at("lengths")) lengths.push_back(number(l, "iet.lengths"));
  return make_iet(std::move(lengths), std::move(perm));
}

json iet_json(const IntervalExchange& E) {
  json j{{"lengths", E.lengths}, {"permutation", E.permutation}};
  if (E.exact_lengths) {
    json ex = json::array();
    for (const auto& r : *E.exact_lengths) ex.push_back(std::to_string(r.numerator()) + "/" + std::to_string(r.denominator()));
    j["exact_lengths"] = ex;
  }
  return j;
}

void plan_iet_study(const Scenario& sc, Plan& plan) {
  if (!sc.raw.contains("iet")) throw InputError("missing \"iet\"");
  const auto E = std::make_shared<IntervalExchange>(parse_iet(sc.raw.at("iet")));
  const auto observables = parse_observables(sc);
  const auto starts = parse_unit_starts(sc);
  check_keys(sc.horizons, {"n_max"}, "horizons");
  const std::uint64_t n_max = count(sc.horizons, "n_max", "horizons");
  const std::uint64_t depth = count(sc.raw, "keane_depth", "scenario", 10'000);
  const std::uint64_t rauzy = sc.raw.contains("rauzy_steps") ? count(sc.raw, "rauzy_steps", "scenario") : 0;
  const ConvergencePolicy policy = policy_of(sc);

  json analysis{{"iet", iet_json(*E)}};
  const KeaneReport k = keane_check(*E, depth, tolerance(sc, "keane", 1e-12));
  analysis["keane"] = {{"verdict", to_string(k.verdict)}, {"depth", depth}, {"exact", k.exact}};
  if (k.verdict == KeaneVerdict::fails) {
    analysis["keane"]["collision"] = {{"from_breakpoint", k.from_breakpoint},
                                      {"to_breakpoint", k.to_breakpoint},
                                      {"iterate", k.iterate}};
  } else {
    analysis["keane"]["closest_approach"] = k.closest_approach;
  }
  json steps = json::array();
  IntervalExchange cur = *E;
  for (std::uint64_t i = 0; i < rauzy; ++i) {
    try {
      const RauzyResult r = rauzy_step(cur);
      steps.push_back({{"type", to_string(r.type)}, {"induced", iet_json(r.induced)}});
      cur = r.induced;
    } catch (const InputError& e) {
      steps.push_back({{"refused", e.what()}});
      break;
    }
  }
  if (rauzy > 0) analysis["rauzy"] = steps;
  if (starts.size() >= 2) {
    const double threshold = tolerance(sc, "ue_threshold", 1e-2);
    const auto ue = unique_ergodicity_diagnostic(*E, observables, starts, n_max, threshold);
    analysis["unique_ergodicity"] = {{"n", n_max},
                                     {"spread", ue.spread},
                                     {"threshold", ue.threshold},
                                     {"consistent", ue.consistent},
                                     {"estimates", ue.estimates}};
  }
  plan.analysis = std::move(analysis);

  for (std::size_t s = 0; s < starts.size(); ++s) {
    for (const auto& phi : observables) {
      const std::string name = "s" + std::to_string(s) + "_" + phi.id + "_birkhoff";
      const double x0 = starts[s];
      plan.tasks.push_back({name, [=] {
        json entry{{"name", name}, {"start", x0}, {"observable", phi.id}, {"average", "birkhoff"}};
        return series_output(name, std::move(entry), birkhoff_average(*E, x0, phi, n_max), policy);
      }});
    }
  }
}

void plan_band_study(const Scenario& sc, Plan& plan) {
  if (!sc.raw.contains("band")) throw InputError("missing \"band\"");
  const json& b = sc.raw.at("band");
  check_keys(b, {"base", "rule", "block_length"}, "band");
  const auto base = static_cast<int>(count(b, "base", "band", 3));
  BandRule rule = BandRule::alternating;
  if (b.contains("rule")) {
    const std::string r = b.at("rule").is_string() ? b.at("rule").get<std::string>() : "";
    if (r == "zero") rule = BandRule::zero;
    else if (r != "alternating") throw InputError("band.rule must be \"alternating\" or \"zero\"");
  }
  const BandFunction band = make_band(base, rule, positive(b, "block_length", "band", 1.0));
  check_keys(sc.horizons, {"n_max"}, "horizons");
  const std::uint64_t n = count(sc.horizons, "n_max", "horizons");
  const ConvergencePolicy policy = policy_of(sc);
  plan.tasks.push_back({"band", [=] {
    json entry{{"name", "band"}, {"observable", "band"}, {"average", "block"}, {"base", base}};
    return series_output("band", std::move(entry), band_running_average(band, n), policy);
  }});
}

void plan_koch_study(const Scenario& sc, Plan& plan) {
  if (!sc.raw.contains("koch")) throw InputError("missing \"koch\"");
  const json& k = sc.raw.at("koch");
  check_keys(k, {"n_blocks", "base", "connector_fraction"}, "koch");
  const auto n_blocks = static_cast<int>(count(k, "n_blocks", "koch"));
  if (n_blocks > 13) throw InputError("koch.n_blocks above 13 is not supported");
  const auto base = static_cast<int>(count(k, "base", "koch", 3));
  const double fraction = positive(k, "connector_fraction", "koch", 0.01);
  const ConvergencePolicy policy = policy_of(sc);
  plan.tasks.push_back({"koch", [=] {
    const KochBandLeaf kl = koch_leaf(n_blocks, base, fraction);
    RunningAverage avg = koch_block_average(kl);
    double block_dev = 0.0, oracle_dev = 0.0;
    for (std::size_t n = 1; n <= kl.leaf.block_count(); ++n) {
      block_dev = std::max(block_dev, std::abs(curve_length(kl.leaf.block(n)) - 1.0));
      const double oracle = static_cast<double>(kl.band.prefix_sum(n)) / static_cast<double>(n);
      oracle_dev = std::max(oracle_dev, std::abs(avg.samples[n - 1].average - oracle));
    }
    json entry{{"name", "koch"},
               {"observable", kl.phi.id},
               {"average", "curve"},
               {"n_blocks", n_blocks},
               {"total_length", kl.leaf.total_length()},
               {"max_block_length_deviation", block_dev},
               {"max_band_oracle_deviation", oracle_dev}};
    return series_output("koch", std::move(entry), std::move(avg), policy);
  }});
}

void plan_suspension_study(const Scenario& sc, Plan& plan) {
  if (!sc.raw.contains("suspension")) throw InputError("missing \"suspension\"");
  const json& s = sc.raw.at("suspension");
  check_keys(s, {"map", "rho", "kappa"}, "suspension");
  const std::string map = s.contains("map") && s.at("map").is_string() ? s.at("map").get<std::string>() : "";
  const auto observables = parse_observables(sc);
  const auto starts = parse_unit_starts(sc);
  check_keys(sc.horizons, {"n_max"}, "horizons");
  const std::uint64_t n_max = count(sc.horizons, "n_max", "horizons");
  const ConvergencePolicy policy = policy_of(sc);
  for (const auto& phi : observables) {
    std::shared_ptr<SuspensionSystem> sys;
    if (map == "rotation") {
      if (!s.contains("rho")) throw InputError("suspension: rotation needs \"rho\"");
      sys = std::make_shared<SuspensionSystem>(make_rotation_suspension(number(s.at("rho"), "suspension.rho"), phi));
    } else if (map == "north_south") {
      if (!s.contains("kappa")) throw InputError("suspension: north_south needs \"kappa\"");
      sys = std::make_shared<SuspensionSystem>(
          make_north_south_suspension(number(s.at("kappa"), "suspension.kappa"), phi));
    } else {
      throw InputError("suspension.map must be \"rotation\" or \"north_south\"");
    }
    for (std::size_t i = 0; i < starts.size(); ++i) {
      const std::string name = "s" + std::to_string(i) + "_" + phi.id + "_suspension";
      const double x0 = starts[i];
      plan.tasks.push_back({name, [=] {
        json entry{{"name", name}, {"start", x0}, {"observable", phi.id}, {"average", "suspension"}};
        return series_output(name, std::move(entry), suspension_length_average(*sys, x0, n_max), policy);
      }});
    }
  }
}

Scenario parse_scenario(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw InputError("cannot read scenario file " + file.string());
  Scenario sc;
  try {
    sc.raw = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("malformed scenario file: ") + e.what());
  }
  if (!sc.raw.is_object()) throw InputError("scenario must be a JSON object");
  if (!sc.raw.contains("kind") || !sc.raw.at("kind").is_string()) throw InputError("missing \"kind\"");
  sc.kind = sc.raw.at("kind").get<std::string>();
  if (!kKinds.count(sc.kind)) throw InputError("unknown scenario kind \"" + sc.kind + "\"");
  check_keys(sc.raw, allowed_keys(sc.kind), "scenario");
  if (!sc.raw.contains("id") || !sc.raw.at("id").is_string()) throw InputError("missing \"id\"");
  sc.id = sc.raw.at("id").get<std::string>();
  if (!std::regex_match(sc.id, std::regex("[A-Za-z0-9_.-]+"))) {
    throw InputError("id may contain only letters, digits, '_', '-' and '.'");
  }
  if (sc.raw.contains("tolerances")) {
    sc.tolerances = sc.raw.at("tolerances");
    check_keys(sc.tolerances,
               {"integrator", "eps_min", "convergence", "divergence_factor", "ue_threshold", "keane", "graze"},
               "tolerances");
  }
  if (sc.raw.contains("horizons")) {
    sc.horizons = sc.raw.at("horizons");
    if (!sc.horizons.is_object()) throw InputError("horizons: expected an object");
  }
  if (sc.raw.contains("output")) {
    const json& o = sc.raw.at("output");
    check_keys(o, {"csv", "svg"}, "output");
    sc.csv = flag(o, "csv", true, "output");
    sc.svg = flag(o, "svg", false, "output");
  }
  return sc;
}

Plan make_plan(const Scenario& sc) {
  Plan plan;
  if (sc.kind == "flow_average") plan_flow_average(sc, plan);
  if (sc.kind == "return_study") plan_return_study(sc, plan);
  if (sc.kind == "omega_classify") plan_omega_classify(sc, plan);
  if (sc.kind == "iet_study") plan_iet_study(sc, plan);
  if (sc.kind == "band_study") plan_band_study(sc, plan);
  if (sc.kind == "koch_study") plan_koch_study(sc, plan);
  if (sc.kind == "suspension_study") plan_suspension_study(sc, plan);
  return plan;
}

// Runs tasks on a small pool; results stay in task order.
std::vector<RunOutput> execute(const std::vector<Task>& tasks, unsigned threads, std::vector<std::string>& input_errors) {
  std::vector<RunOutput> results(tasks.size());
  std::vector<std::string> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < tasks.size();) {
      const auto t0 = std::chrono::steady_clock::now();
      try {
        results[i] = tasks[i].run();
      } catch (const InputError& e) {
        errors[i] = tasks[i].name + ": " + e.what();
      } catch (const std::exception& e) {
        results[i].name = tasks[i].name;
        results[i].entry = {{"name", tasks[i].name}, {"error", e.what()}};
        results[i].numeric_failure = true;
      }
      results[i].seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(tasks.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (!e.empty()) input_errors.push_back(e);
  }
  return results;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

std::string csv_of(const RunningAverage& avg) {
  std::string s = "parameter,average\n";
  for (const auto& p : avg.samples) s += fmt17(p.parameter) + "," + fmt17(p.average) + "\n";
  return s;
}

}  // namespace

int run_scenario(const std::filesystem::path& scenario_file, const RunOptions& options, std::ostream& diag) {
  const auto t0 = std::chrono::steady_clock::now();
  Scenario sc;
  Plan plan;
  try {
    sc = parse_scenario(scenario_file);
    plan = make_plan(sc);
  } catch (const InputError& e) {
    diag << "scenario error: " << e.what() << '\n';
    return kExitScenarioError;
  } catch (const json::exception& e) {
    diag << "scenario error: " << e.what() << '\n';
    return kExitScenarioError;
  }

  std::vector<std::string> input_errors;
  std::vector<RunOutput> results = execute(plan.tasks, options.threads, input_errors);
  if (!input_errors.empty()) {
    for (const auto& e : input_errors) diag << "scenario error: " << e << '\n';
    return kExitScenarioError;
  }

  try {
    std::filesystem::create_directories(options.out_dir);
    const bool svg = options.svg || sc.svg;
    json runs = json::array();
    IntegratorStats total;
    bool any_stats = false;
    std::size_t failures = 0;
    for (auto& r : results) {
      if (r.numeric_failure) ++failures;
      if (r.stats) {
        total += *r.stats;
        any_stats = true;
      }
      if (r.series && sc.csv) {
        const std::string file = sc.id + "_" + r.name + ".csv";
        write_file(options.out_dir / file, csv_of(*r.series));
        r.entry["csv"] = file;
      }
      if (r.series && svg) {
        const std::string file = sc.id + "_" + r.name + ".svg";
        write_file(options.out_dir / file, running_average_svg(*r.series, sc.id + " " + r.name));
        r.entry["svg"] = file;
      }
      if (options.timing) r.entry["seconds"] = r.seconds;
      runs.push_back(std::move(r.entry));
    }
    json stats{{"runs", results.size()}, {"numeric_failures", failures}};
    if (any_stats) stats["integrator"] = stats_json(total);
    if (!plan.analysis.empty()) stats["analysis"] = std::move(plan.analysis);
    if (options.timing) {
      stats["threads"] = options.threads;
      stats["wall_clock_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    json report{{"scenario", {{"id", sc.id}, {"kind", sc.kind}, {"input", sc.raw}}},
                {"runs", std::move(runs)},
                {"stats", std::move(stats)}};
    write_file(options.out_dir / (sc.id + "_report.json"), report.dump(2) + "\n");
    if (failures > 0) {
      diag << failures << " run(s) failed numerically; see " << sc.id << "_report.json\n";
      return kExitNumericFailure;
    }
  } catch (const std::exception& e) {
    diag << "output error: " << e.what() << '\n';
    return kExitNumericFailure;
  }
  return kExitOk;
}

std::string list_catalog() {
  std::ostringstream out;
  out << "fields (system.catalog):\n";
  for (const auto& e : field_catalog()) {
    out << "  " << e.id << "(";
    for (std::size_t i = 0; i < e.parameter_names.size(); ++i) out << (i ? ", " : "") << e.parameter_names[i];
    out << ")  [" << to_string(e.phase_space) << "]  " << e.description << '\n';
  }
  out << "circle maps (suspension.map):\n"
         "  rotation(rho)        theta -> theta + rho\n"
         "  north_south(kappa)   theta -> theta - kappa sin(2 pi theta); fixed points 0 (sink), 1/2 (source)\n";
  out << "observables:\n";
  for (const auto& id : observable_ids()) out << "  " << id << "  " << make_observable(id).description << '\n';
  out << "scenario kinds and stanzas:\n"
         "  flow_average      system, observables, starts, horizons{T_max,S_max}, averages[time|length|leaf]\n"
         "  return_study      system, observables, starts, returns, section{a,b,open_a,open_b,torus_circle}\n"
         "  omega_classify    system, starts, transient_time\n"
         "  iet_study         iet{lengths: [lambda_1..lambda_N] (numbers or \"p/q\"), permutation: [pi(1)..pi(N)]},\n"
         "                    observables, starts, horizons{n_max}, keane_depth, rauzy_steps\n"
         "  band_study        band{base, rule[alternating|zero], block_length}, horizons{n_max}\n"
         "  koch_study        koch{n_blocks, base, connector_fraction}\n"
         "  suspension_study  suspension{map, rho|kappa}, observables, starts, horizons{n_max}\n"
         "  common            id, kind, description, output{csv,svg},\n"
         "                    tolerances{integrator,eps_min,convergence,divergence_factor,ue_threshold,keane,graze}\n";
  return out.str();
}

}  // namespace leafavg
