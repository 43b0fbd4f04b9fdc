#include "bqd/config.h"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "bqd/error.h"

namespace bqd {

std::string_view to_string(Backend b) {
  switch (b) {
  case Backend::meanfield: return "meanfield";
  case Backend::fewbody: return "fewbody";
  case Backend::ci: return "ci";
  }
  return "?";
}

std::string_view to_string(RunMode m) {
  switch (m) {
  case RunMode::groundstate: return "groundstate";
  case RunMode::evolve: return "evolve";
  case RunMode::sweep: return "sweep";
  case RunMode::fit: return "fit";
  case RunMode::converge: return "converge";
  }
  return "?";
}

Backend parse_backend(std::string_view name) {
  for (Backend b : {Backend::meanfield, Backend::fewbody, Backend::ci})
    if (to_string(b) == name) return b;
  throw ConfigError(fmt::format("unknown backend '{}' (meanfield, fewbody, ci)", name));
}

RunMode parse_mode(std::string_view name) {
  for (RunMode m : {RunMode::groundstate, RunMode::evolve, RunMode::sweep, RunMode::fit, RunMode::converge})
    if (to_string(m) == name) return m;
  throw ConfigError(fmt::format("unknown mode '{}' (groundstate, evolve, sweep, fit, converge)", name));
}

namespace {

/// Raised by value setters; the parser attaches key and position.
struct BadValue {
  std::string message;
};

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(std::string_view v) {
  double x = 0.0;
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || ptr != end || !std::isfinite(x)) throw BadValue{fmt::format("'{}' is not a number", v)};
  return x;
}

long long to_integer(std::string_view v) {
  long long x = 0;
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || ptr != end) throw BadValue{fmt::format("'{}' is not an integer", v)};
  return x;
}

bool to_bool(std::string_view v) {
  if (v == "true" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "no" || v == "off") return false;
  throw BadValue{fmt::format("'{}' is not a boolean (true/false)", v)};
}

std::vector<std::string_view> split_list(std::string_view v) {
  std::vector<std::string_view> items;
  std::size_t start = 0;
  while (true) {
    const auto comma = v.find(',', start);
    const auto item = trim(v.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (item.empty()) throw BadValue{"empty list entry"};
    items.push_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return items;
}

double positive(std::string_view v) {
  const double x = to_double(v);
  if (!(x > 0.0)) throw BadValue{"must be positive"};
  return x;
}

double non_negative(std::string_view v) {
  const double x = to_double(v);
  if (x < 0.0) throw BadValue{"must be non-negative"};
  return x;
}

int bounded_int(std::string_view v, long long lo, long long hi = 1'000'000'000) {
  const long long x = to_integer(v);
  if (x < lo || x > hi) throw BadValue{fmt::format("must lie in [{}, {}]", lo, hi)};
  return static_cast<int>(x);
}

using Setter = std::function<void(RunConfig&, std::string_view)>;

void add_species(std::map<std::string, Setter>& keys, const std::string& section, Species s) {
  keys[section + ".count"] = [s](RunConfig& c, std::string_view v) {
    c.model.species(s).count = bounded_int(v, 1);
    if (s == Species::bath) c.bath_count_set = true;
  };
  keys[section + ".mass"] = [s](RunConfig& c, std::string_view v) { c.model.species(s).mass = positive(v); };
  keys[section + ".omega"] = [s](RunConfig& c, std::string_view v) { c.model.species(s).omega = positive(v); };
  keys[section + ".g"] = [s](RunConfig& c, std::string_view v) { c.model.species(s).g_intra = to_double(v); };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> k;
    k["backend"] = [](RunConfig& c, std::string_view v) {
      try {
        c.backend = parse_backend(v);
      } catch (const ConfigError& e) {
        throw BadValue{e.what()};
      }
    };
    k["mode"] = [](RunConfig& c, std::string_view v) {
      try {
        c.mode = parse_mode(v);
      } catch (const ConfigError& e) {
        throw BadValue{e.what()};
      }
    };
    k["g_bi"] = [](RunConfig& c, std::string_view v) { c.model.g_bi = to_double(v); };
    k["repulsion_guard"] = [](RunConfig& c, std::string_view v) { c.repulsion_guard = to_bool(v); };
    k["output_dir"] = [](RunConfig& c, std::string_view v) {
      if (v.empty()) throw BadValue{"must not be empty"};
      c.output_dir = std::string(v);
    };

    k["grid.x_min"] = [](RunConfig& c, std::string_view v) { c.model.grid.x_min = to_double(v); };
    k["grid.x_max"] = [](RunConfig& c, std::string_view v) { c.model.grid.x_max = to_double(v); };
    k["grid.n"] = [](RunConfig& c, std::string_view v) { c.model.grid.n = static_cast<std::size_t>(bounded_int(v, 2)); };

    add_species(k, "bath", Species::bath);
    add_species(k, "impurity", Species::impurity);

    k["driving.mode"] = [](RunConfig& c, std::string_view v) {
      if (v == "none") c.model.driving.mode = DriveMode::none;
      else if (v == "pulse") c.model.driving.mode = DriveMode::pulse;
      else if (v == "continuous") c.model.driving.mode = DriveMode::continuous;
      else throw BadValue{fmt::format("'{}' is not a drive mode (none, pulse, continuous)", v)};
    };
    k["driving.omega_d"] = [](RunConfig& c, std::string_view v) { c.model.driving.omega_d = non_negative(v); };
    k["driving.amplitude"] = [](RunConfig& c, std::string_view v) { c.model.driving.amplitude = to_double(v); };
    k["driving.periods"] = [](RunConfig& c, std::string_view v) { c.model.driving.n_periods = bounded_int(v, 1); };

    k["time.t_end"] = [](RunConfig& c, std::string_view v) { c.time.t_end = non_negative(v); };
    k["time.dt"] = [](RunConfig& c, std::string_view v) { c.time.dt = non_negative(v); };
    k["time.stride"] = [](RunConfig& c, std::string_view v) { c.time.stride = bounded_int(v, 1); };
    k["time.snapshot_stride"] = [](RunConfig& c, std::string_view v) { c.time.snapshot_stride = bounded_int(v, 0); };

    k["sweep.omega_d"] = [](RunConfig& c, std::string_view v) {
      std::vector<double> w;
      for (auto item : split_list(v)) w.push_back(positive(item));
      c.sweep_omega_d = std::move(w);
    };
    k["sweep.jobs"] = [](RunConfig& c, std::string_view v) { c.jobs = bounded_int(v, 0, 4096); };

    k["basis.d_bath"] = [](RunConfig& c, std::string_view v) { c.basis.d_bath = bounded_int(v, 1, 64); };
    k["basis.d_impurity"] = [](RunConfig& c, std::string_view v) { c.basis.d_impurity = bounded_int(v, 1, 256); };
    k["basis.ladder"] = [](RunConfig& c, std::string_view v) {
      std::vector<std::pair<int, int>> ladder;
      for (auto item : split_list(v)) {
        const auto colon = item.find(':');
        if (colon == std::string_view::npos) throw BadValue{fmt::format("ladder entry '{}' is not d_bath:d_impurity", item)};
        ladder.emplace_back(bounded_int(trim(item.substr(0, colon)), 1, 64),
                            bounded_int(trim(item.substr(colon + 1)), 1, 256));
      }
      c.basis.ladder = std::move(ladder);
    };

    k["solver.tolerance"] = [](RunConfig& c, std::string_view v) { c.solver.tolerance = non_negative(v); };
    k["solver.max_iterations"] = [](RunConfig& c, std::string_view v) { c.solver.max_iterations = bounded_int(v, 1); };

    k["fewbody.n"] = [](RunConfig& c, std::string_view v) { c.fewbody.n = static_cast<std::size_t>(bounded_int(v, 2, 4096)); };
    k["fewbody.half_width"] = [](RunConfig& c, std::string_view v) { c.fewbody.half_width = non_negative(v); };
    k["fewbody.double_trap"] = [](RunConfig& c, std::string_view v) { c.fewbody.double_trap = to_bool(v); };

    k["fit.lambda"] = [](RunConfig& c, std::string_view v) { c.fit.initial.lambda = non_negative(v); };
    k["fit.omega_eff"] = [](RunConfig& c, std::string_view v) { c.fit.initial.omega_eff = positive(v); };
    k["fit.phase"] = [](RunConfig& c, std::string_view v) { c.fit.initial.phase = to_double(v); };
    k["fit.textbook"] = [](RunConfig& c, std::string_view v) { c.fit.textbook = to_bool(v); };
    k["fit.skip"] = [](RunConfig& c, std::string_view v) { c.fit.skip = to_double(v); };
    k["fit.series"] = [](RunConfig& c, std::string_view v) { c.fit.series = std::string(v); };

    k["analysis.tf_threshold"] = [](RunConfig& c, std::string_view v) {
      const double x = to_double(v);
      if (!(x > 0.0 && x < 1.0)) throw BadValue{"must lie in (0, 1)"};
      c.tf_threshold = x;
    };
    return k;
  }();
  return table;
}

/// Top-level spellings that refer to sectioned keys.
std::string canonical_key(const std::string& key) {
  if (key == "g_bb") return "bath.g";
  if (key == "g_ii") return "impurity.g";
  if (key == "jobs") return "sweep.jobs";
  return key;
}

bool valid_name(std::string_view s) {
  if (s.empty()) return false;
  for (char ch : s)
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '.')) return false;
  return true;
}

} // namespace

double RunConfig::effective_dt() const {
  if (time.dt > 0.0) return time.dt;
  return backend == Backend::fewbody ? 5e-3 : 1e-3;
}

double RunConfig::effective_tolerance() const {
  if (solver.tolerance > 0.0) return solver.tolerance;
  return backend == Backend::meanfield ? 1e-10 : 1e-9;
}

void RunConfig::finalize() {
  if (!bath_count_set) model.bath.count = backend == Backend::ci ? 10 : 100;
  if (repulsion_guard) {
    const std::pair<const char*, double> couplings[] = {
        {"bath.g", model.bath.g_intra}, {"impurity.g", model.impurity.g_intra}, {"g_bi", model.g_bi}};
    for (const auto& [key, g] : couplings)
      if (g < 0.0) throw ConfigError(fmt::format("{}: attractive coupling {} rejected by repulsion_guard", key, g));
  }
  if (mode != RunMode::sweep && model.driving.mode != DriveMode::none && !(model.driving.omega_d > 0.0))
    throw ConfigError("driving.omega_d: must be positive when driving.mode is not none");
  if (time.snapshot_stride < 0) throw ConfigError("time.snapshot_stride: must be non-negative");
  if (mode == RunMode::sweep && sweep_omega_d.empty()) throw ConfigError("sweep.omega_d: empty sweep list");
  if (mode == RunMode::converge && basis.ladder.size() < 2)
    throw ConfigError("basis.ladder: converge mode needs at least two entries");
  if (fewbody.half_width > 0.0 && fewbody.half_width > std::max(-model.grid.x_min, model.grid.x_max))
    throw ConfigError("fewbody.half_width: must not exceed the model grid");
  MixtureModel check = model;
  if (mode == RunMode::sweep) check.driving.omega_d = sweep_omega_d.front();
  try {
    check.validate();
  } catch (const DomainError& e) {
    throw ConfigError(fmt::format("invalid model: {}", e.what()));
  }
}

RunConfig parse_config_unvalidated(const std::string& text) {
  RunConfig config;
  config.source = text;
  std::set<std::string> seen;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string_view::npos || line[first] == ';') continue;
    const int col0 = static_cast<int>(first) + 1;

    if (line[first] == '[') {
      const auto close = line.find(']', first);
      if (close == std::string_view::npos) throw ConfigError("missing ']' in section header", line_no, col0);
      if (!trim(line.substr(close + 1)).empty())
        throw ConfigError("unexpected text after section header", line_no, static_cast<int>(close) + 2);
      const auto name = trim(line.substr(first + 1, close - first - 1));
      static const std::set<std::string_view> sections{"grid",  "bath",  "impurity", "driving", "time",    "sweep",
                                                       "basis", "solver", "fewbody", "fit",     "analysis"};
      if (!sections.contains(name)) throw ConfigError(fmt::format("unknown section [{}]", name), line_no, col0 + 1);
      section = std::string(name);
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'", line_no, col0);
    const auto key = trim(line.substr(0, eq));
    if (!valid_name(key)) throw ConfigError(fmt::format("malformed key '{}'", key), line_no, col0);
    if (!section.empty() && key.find('.') != std::string_view::npos)
      throw ConfigError(fmt::format("dotted key '{}' inside section [{}]", key, section), line_no, col0);

    const std::string full = canonical_key(section.empty() ? std::string(key) : section + "." + std::string(key));
    const auto& table = setters();
    const auto it = table.find(full);
    if (it == table.end()) {
      throw ConfigError(section.empty() ? fmt::format("unknown key '{}'", key)
                                        : fmt::format("unknown key '{}' in section [{}]", key, section),
                        line_no, col0);
    }
    if (!seen.insert(full).second) throw ConfigError(fmt::format("duplicate key '{}'", full), line_no, col0);

    const auto rest = line.substr(eq + 1);
    const auto value = trim(rest);
    const auto value_off = rest.find_first_not_of(" \t");
    const int value_col = static_cast<int>(eq) + 2 + (value_off == std::string_view::npos ? 0 : static_cast<int>(value_off));
    if (value.empty()) throw ConfigError(fmt::format("{}: missing value", full), line_no, value_col);
    try {
      it->second(config, value);
    } catch (const BadValue& bad) {
      throw ConfigError(fmt::format("{}: {}", full, bad.message), line_no, value_col);
    }
  }
  return config;
}

RunConfig parse_config(const std::string& text) {
  RunConfig config = parse_config_unvalidated(text);
  config.finalize();
  return config;
}

std::string format_config(const RunConfig& c) {
  const auto num = [](double x) { return fmt::format("{:.17g}", x); };
  const auto flag = [](bool b) { return b ? "true" : "false"; };
  std::string out;
  auto line = [&out](std::string_view key, const std::string& value) { out += fmt::format("{} = {}\n", key, value); };

  line("backend", std::string(to_string(c.backend)));
  line("mode", std::string(to_string(c.mode)));
  line("g_bi", num(c.model.g_bi));
  line("repulsion_guard", flag(c.repulsion_guard));
  line("output_dir", c.output_dir);

  out += "\n[grid]\n";
  line("x_min", num(c.model.grid.x_min));
  line("x_max", num(c.model.grid.x_max));
  line("n", std::to_string(c.model.grid.n));
  for (Species s : {Species::bath, Species::impurity}) {
    const auto& p = c.model.species(s);
    out += fmt::format("\n[{}]\n", to_string(s));
    line("count", std::to_string(p.count));
    line("mass", num(p.mass));
    line("omega", num(p.omega));
    line("g", num(p.g_intra));
  }
  out += "\n[driving]\n";
  line("mode", std::string(to_string(c.model.driving.mode)));
  line("omega_d", num(c.model.driving.omega_d));
  line("amplitude", num(c.model.driving.amplitude));
  line("periods", std::to_string(c.model.driving.n_periods));

  out += "\n[time]\n";
  line("t_end", num(c.time.t_end));
  line("dt", num(c.effective_dt()));
  line("stride", std::to_string(c.time.stride));
  line("snapshot_stride", std::to_string(c.time.snapshot_stride));

  out += "\n[sweep]\n";
  std::string list;
  for (std::size_t i = 0; i < c.sweep_omega_d.size(); ++i) list += (i ? ", " : "") + num(c.sweep_omega_d[i]);
  line("omega_d", list);
  line("jobs", std::to_string(c.jobs));

  out += "\n[basis]\n";
  line("d_bath", std::to_string(c.basis.d_bath));
  line("d_impurity", std::to_string(c.basis.d_impurity));
  std::string ladder;
  for (std::size_t i = 0; i < c.basis.ladder.size(); ++i)
    ladder += fmt::format("{}{}:{}", i ? ", " : "", c.basis.ladder[i].first, c.basis.ladder[i].second);
  line("ladder", ladder);

  out += "\n[solver]\n";
  line("tolerance", num(c.effective_tolerance()));
  line("max_iterations", std::to_string(c.solver.max_iterations));

  out += "\n[fewbody]\n";
  line("n", std::to_string(c.fewbody.n));
  line("half_width", num(c.fewbody.half_width));
  line("double_trap", flag(c.fewbody.double_trap));

  out += "\n[fit]\n";
  line("lambda", num(c.fit.initial.lambda));
  line("omega_eff", num(c.fit.initial.omega_eff));
  line("phase", num(c.fit.initial.phase));
  line("textbook", flag(c.fit.textbook));
  line("skip", num(c.fit.skip));
  if (!c.fit.series.empty()) line("series", c.fit.series);

  out += "\n[analysis]\n";
  line("tf_threshold", num(c.tf_threshold));
  return out;
}

} // namespace bqd
