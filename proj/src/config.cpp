#include "vmfem/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "vmfem/scenarios.hpp"

namespace vmfem {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// drop a trailing # comment that is not inside a string
std::string strip_comment(const std::string& s) {
  bool in_str = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') in_str = !in_str;
    if (s[i] == '#' && !in_str) return s.substr(0, i);
  }
  return s;
}

bool parse_number(const std::string& s, double& out) {
  std::string t;
  for (char c : s)
    if (c != '_') t += c;
  if (t.empty()) return false;
  if (t[0] == '+') t = t.substr(1);
  const auto r = std::from_chars(t.data(), t.data() + t.size(), out);
  return r.ec == std::errc() && r.ptr == t.data() + t.size() && std::isfinite(out);
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  return true;
}

ConfigValue parse_value(const std::string& raw, int line) {
  auto fail = [&](const std::string& what) {
    return ConfigError("line " + std::to_string(line) + ": " + what);
  };
  const std::string v = trim(raw);
  if (v.empty()) throw fail("missing value");
  if (v == "true") return true;
  if (v == "false") return false;
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"' || v.find('"', 1) != v.size() - 1)
      throw fail("unterminated string");
    return v.substr(1, v.size() - 2);
  }
  if (v.front() == '[') {
    if (v.back() != ']') throw fail("arrays must close on the same line");
    std::vector<double> out;
    std::stringstream ss(v.substr(1, v.size() - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) {
        if (ss.eof()) break;  // trailing comma
        throw fail("empty array element");
      }
      double x;
      if (!parse_number(item, x)) throw fail("array elements must be numbers: '" + item + "'");
      out.push_back(x);
    }
    return out;
  }
  double x;
  if (!parse_number(v, x)) throw fail("cannot parse value '" + v + "'");
  return x;
}

class Reader {
 public:
  explicit Reader(const std::map<std::string, ConfigValue>& kv) : kv_(kv) {}

  template <class T>
  const T* get(const std::string& key) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return nullptr;
    used_.insert(key);
    const T* p = std::get_if<T>(&it->second);
    if (!p) throw ConfigError("key '" + key + "' has the wrong type");
    return p;
  }
  void number(const std::string& key, double& out) {
    if (auto p = get<double>(key)) out = *p;
  }
  void integer(const std::string& key, int& out) {
    if (auto p = get<double>(key)) {
      if (*p != std::floor(*p) || std::abs(*p) > 1e9)
        throw ConfigError("key '" + key + "' must be an integer");
      out = static_cast<int>(*p);
    }
  }
  void flag(const std::string& key, bool& out) {
    if (auto p = get<bool>(key)) out = *p;
  }
  void text(const std::string& key, std::string& out) {
    if (auto p = get<std::string>(key)) out = *p;
  }
  void list(const std::string& key, std::vector<double>& out) {
    if (auto p = get<std::vector<double>>(key)) out = *p;
  }
  // scenario overrides: every numeric key of a section
  std::map<std::string, double> section(const std::string& name) {
    std::map<std::string, double> out;
    const std::string prefix = name + ".";
    for (const auto& [k, v] : kv_)
      if (k.rfind(prefix, 0) == 0) {
        const double* p = get<double>(k);
        out[k.substr(prefix.size())] = *p;
      }
    return out;
  }
  void finish() const {
    for (const auto& [k, v] : kv_)
      if (!used_.count(k)) throw ConfigError("unknown key '" + k + "'");
  }

 private:
  const std::map<std::string, ConfigValue>& kv_;
  std::set<std::string> used_;
};

}  // namespace

std::map<std::string, ConfigValue> parse_config_text(const std::string& text) {
  std::map<std::string, ConfigValue> out;
  std::stringstream ss(text);
  std::string raw, section;
  int line = 0;
  while (std::getline(ss, raw)) {
    ++line;
    const std::string s = trim(strip_comment(raw));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError("line " + std::to_string(line) + ": bad section header");
      section = trim(s.substr(1, s.size() - 2));
      if (!valid_key(section))
        throw ConfigError("line " + std::to_string(line) + ": bad section name");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line) + ": expected key = value");
    const std::string key = trim(s.substr(0, eq));
    if (!valid_key(key)) throw ConfigError("line " + std::to_string(line) + ": bad key '" + key + "'");
    const std::string full = section.empty() ? key : section + "." + key;
    if (out.count(full)) throw ConfigError("line " + std::to_string(line) + ": duplicate key '" + full + "'");
    out[full] = parse_value(s.substr(eq + 1), line);
  }
  return out;
}

RunConfig RunConfig::from_values(const std::map<std::string, ConfigValue>& kv) {
  RunConfig c;
  Reader r(kv);
  r.text("scenario", c.scenario);
  r.number("final_time", c.final_time);
  c.params = r.section("params");

  // explicit zeros are errors; 0 in RunConfig means "scenario default"
  auto positive = [&](const char* key, int& out) {
    int v = 0;
    if (!kv.count(key)) return;
    r.integer(key, v);
    if (v < 1) throw ConfigError(std::string(key) + " must be positive");
    out = v;
  };
  positive("grid.x_nodes", c.x_nodes);
  positive("grid.v_nodes", c.v_nodes);
  positive("grid.degree", c.degree);
  std::string nodes = "equispaced";
  r.text("grid.nodes", nodes);
  if (nodes == "equispaced")
    c.nodes = NodeFamily::equispaced;
  else if (nodes == "gauss_lobatto" || nodes == "gauss-lobatto")
    c.nodes = NodeFamily::gauss_lobatto;
  else
    throw ConfigError("grid.nodes must be \"equispaced\" or \"gauss_lobatto\"");

  std::string mode = mode_name(c.viscosity);
  r.text("viscosity.mode", mode);
  try {
    c.viscosity = parse_viscosity_mode(mode);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  r.flag("viscosity.per_stage", c.viscosity_per_stage);
  r.number("viscosity.composite_cap", c.composite_cap);

  std::string integ = "ssprk54";
  r.text("time.integrator", integ);
  if (integ == "ssprk54")
    c.stepper.integrator = StepperOptions::Integrator::ssprk54;
  else if (integ == "forward_euler" || integ == "forward-euler")
    c.stepper.integrator = StepperOptions::Integrator::forward_euler;
  else
    throw ConfigError("time.integrator must be \"ssprk54\" or \"forward_euler\"");
  r.number("time.cfl", c.stepper.cfl);
  r.number("time.max_dt", c.stepper.max_dt);
  r.number("time.fixed_dt", c.stepper.fixed_dt);
  c.stepper.viscosity_per_stage = c.viscosity_per_stage;

  r.number("physics.c", c.physics.c);
  r.number("physics.eps0", c.physics.eps0);
  r.number("physics.charge", c.physics.charge);
  r.number("physics.mass", c.physics.mass);

  r.integer("output.cadence", c.cadence);
  r.integer("output.progress", c.progress);
  r.list("output.snapshot_times", c.snapshot_times);
  r.text("output.directory", c.output_dir);
  r.integer("run.threads", c.threads);

  r.number("fit.t0", c.fit_t0);
  r.number("fit.t1", c.fit_t1);

  r.number("reverse.time", c.reverse_time);
  r.list("converge.x_nodes", c.converge_x_nodes);
  r.list("converge.v_nodes", c.converge_v_nodes);
  r.finish();
  c.validate();
  return c;
}

void RunConfig::validate() const {
  if (scenario.empty()) throw ConfigError("missing key 'scenario'");
  Scenario s;
  try {
    s = make_scenario(scenario, params);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const int k = degree ? degree : s.degree;
  if (k < 1 || k > 4) throw ConfigError("grid.degree must be in 1..4");
  auto check_nodes = [&](const char* key, int n) {
    if (n < 0) throw ConfigError(std::string(key) + " must be positive");
    if (n == 0) return;
    if (n < 2 || (n - 1) % k != 0)
      throw ConfigError(std::string(key) + " = " + std::to_string(n) +
                        " is not 1 + a multiple of the degree " + std::to_string(k));
  };
  check_nodes("grid.x_nodes", x_nodes ? x_nodes : s.x_nodes);
  check_nodes("grid.v_nodes", v_nodes ? v_nodes : s.v_nodes);
  if (final_time != -1 && final_time < 0) throw ConfigError("final_time must be >= 0");
  if (!(stepper.cfl > 0)) throw ConfigError("time.cfl must be positive");
  if (!(stepper.max_dt > 0)) throw ConfigError("time.max_dt must be positive");
  if (stepper.fixed_dt < 0) throw ConfigError("time.fixed_dt must be >= 0");
  if (!(physics.c > 0 && physics.eps0 > 0 && physics.mass > 0 && physics.charge != 0))
    throw ConfigError("physics constants must be positive (charge nonzero)");
  if (cadence < 1) throw ConfigError("output.cadence must be >= 1");
  if (progress < 0) throw ConfigError("output.progress must be >= 0");
  if (threads < 1) throw ConfigError("run.threads must be >= 1");
  if (!(composite_cap > 0)) throw ConfigError("viscosity.composite_cap must be positive");
  for (double t : snapshot_times)
    if (t < 0) throw ConfigError("output.snapshot_times must be >= 0");
  if (!(reverse_time >= 0)) throw ConfigError("reverse.time must be >= 0");
  if (converge_x_nodes.size() != converge_v_nodes.size())
    throw ConfigError("converge.x_nodes and converge.v_nodes must have the same length");
  for (std::size_t i = 0; i < converge_x_nodes.size(); ++i) {
    check_nodes("converge.x_nodes", static_cast<int>(converge_x_nodes[i]));
    check_nodes("converge.v_nodes", static_cast<int>(converge_v_nodes[i]));
    for (std::size_t j = 0; j < i; ++j)
      if (converge_x_nodes[i] == converge_x_nodes[j] && converge_v_nodes[i] == converge_v_nodes[j])
        throw ConfigError("converge resolutions must be distinct");
  }
  if ((fit_t0 >= 0) != (fit_t1 >= 0) || (fit_t0 >= 0 && fit_t1 <= fit_t0))
    throw ConfigError("fit.t0 and fit.t1 must both be set with t0 < t1");
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["scenario"] = scenario;
  j["params"] = params;
  j["final_time"] = final_time;
  j["grid"] = {{"x_nodes", x_nodes},
               {"v_nodes", v_nodes},
               {"degree", degree},
               {"nodes", nodes == NodeFamily::equispaced ? "equispaced" : "gauss_lobatto"}};
  j["viscosity"] = {{"mode", mode_name(viscosity)},
                    {"per_stage", viscosity_per_stage},
                    {"composite_cap", composite_cap}};
  j["time"] = {{"integrator", stepper.integrator == StepperOptions::Integrator::ssprk54
                                  ? "ssprk54"
                                  : "forward_euler"},
               {"cfl", stepper.cfl},
               {"max_dt", stepper.max_dt},
               {"fixed_dt", stepper.fixed_dt}};
  j["physics"] = {{"c", physics.c},
                  {"eps0", physics.eps0},
                  {"charge", physics.charge},
                  {"mass", physics.mass}};
  j["output"] = {{"cadence", cadence},
                 {"progress", progress},
                 {"snapshot_times", snapshot_times},
                 {"directory", output_dir}};
  j["run"] = {{"threads", threads}};
  j["fit"] = {{"t0", fit_t0}, {"t1", fit_t1}};
  j["reverse"] = {{"time", reverse_time}};
  j["converge"] = {{"x_nodes", converge_x_nodes}, {"v_nodes", converge_v_nodes}};
  return j;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return RunConfig::from_values(parse_config_text(ss.str()));
}

}  // namespace vmfem
