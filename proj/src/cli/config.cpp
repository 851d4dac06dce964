#include "kolmo/cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <set>
#include <sstream>

#include "kolmo/util/errors.hpp"
#include "kolmo/util/files.hpp"

namespace kolmo::cli {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

bool parse_int(const std::string& s, long& out) {
  char* end = nullptr;
  out = std::strtol(s.c_str(), &end, 10);
  return !s.empty() && *end == '\0';
}

bool parse_double(const std::string& s, double& out) {
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return !s.empty() && *end == '\0';
}

bool valid_value(ValueType type, const std::string& v) {
  long i = 0;
  double d = 0;
  switch (type) {
    case ValueType::kInt:
      return parse_int(v, i);
    case ValueType::kDouble:
      return parse_double(v, d);
    case ValueType::kBool:
      return v == "true" || v == "false" || v == "1" || v == "0";
    case ValueType::kString:
      return true;
    case ValueType::kIntList:
      for (const std::string& item : split_list(v)) {
        if (!parse_int(item, i)) return false;
      }
      return true;
    case ValueType::kDoubleList:
      for (const std::string& item : split_list(v)) {
        if (!parse_double(item, d)) return false;
      }
      return true;
  }
  return false;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

const std::vector<std::string>& section_order() {
  static const std::vector<std::string> kSections = {"run", "train", "sweep", "convergence", "linear"};
  return kSections;
}

}  // namespace

std::string type_name(ValueType type) {
  switch (type) {
    case ValueType::kInt:
      return "integer";
    case ValueType::kDouble:
      return "number";
    case ValueType::kBool:
      return "boolean (true/false)";
    case ValueType::kString:
      return "string";
    case ValueType::kIntList:
      return "comma-separated integers";
    case ValueType::kDoubleList:
      return "comma-separated numbers";
  }
  return "value";
}

const std::vector<KeySpec>& config_schema() {
  using T = ValueType;
  static const std::vector<KeySpec> kSchema = {
      {"command", "run", T::kString, "", "train | evaluate | sweep | convergence | linear | list-problems"},
      {"problem", "run", T::kString, "bs_exp", "registry name"},
      {"scheme", "run", T::kString, "em", "em | milstein | lm"},
      {"seed", "run", T::kInt, "1", "base seed; repeats use seed, seed + 1, ..."},
      {"entropy_seed", "run", T::kBool, "false", "draw the seed from the system entropy source"},
      {"out", "run", T::kString, "runs", "output root directory"},
      {"jobs", "run", T::kInt, "1", "parallel cells; 1 keeps runs bit-reproducible"},
      {"repeats", "run", T::kInt, "1", "independent trainings to average"},
      {"model", "run", T::kString, "", "model file for evaluate"},
      {"steps", "train", T::kInt, "", "training steps (problem default when empty)"},
      {"lr", "train", T::kDouble, "", "constant learning rate (problem default when empty)"},
      {"schedule", "train", T::kString, "", "start:lr pairs such as 0:10,1001:5, or 'long'"},
      {"batch", "train", T::kInt, "64", "paths per training step"},
      {"N", "train", T::kInt, "", "time steps (problem default when empty)"},
      {"T", "train", T::kDouble, "", "horizon (problem default when empty)"},
      {"sampler", "train", T::kString, "fixed", "fixed | points | box"},
      {"points", "train", T::kInt, "0", "P for the points sampler"},
      {"milstein_mode", "train", T::kString, "explicit", "explicit | learned"},
      {"checkpoint_every", "train", T::kInt, "100", "curve cadence in steps"},
      {"init", "train", T::kString, "fanin", "fanin | unit weight scaling"},
      {"pilot_init", "train", T::kBool, "true", "shift g0's output bias to the pilot mean"},
      {"probe", "train", T::kDoubleList, "", "evaluation point; one value fills every coordinate"},
      {"kind", "sweep", T::kString, "complexity", "complexity | walltime"},
      {"dims", "sweep", T::kIntList, "2,4,6,8,10", "dimensions"},
      {"point_counts", "sweep", T::kIntList, "4,8,16,32,64,128,256,512,1024,2048,4096", "P values, ascending"},
      {"eps_target", "sweep", T::kDouble, "0.1", "target average relative error"},
      {"probes", "sweep", T::kInt, "10000", "evaluation probes M"},
      {"walltime_problems", "sweep", T::kString, "heat,nonlinear_diffusion", "problems for the wall-time fit"},
      {"target", "convergence", T::kString, "gbm", "gbm (strong order) | ou (stationary variance)"},
      {"taus", "convergence", T::kDoubleList, "", "step sizes (target default when empty)"},
      {"paths", "convergence", T::kInt, "10000", "coupled paths per step size"},
      {"n_steps", "convergence", T::kInt, "200000", "steps per OU chain"},
      {"burn_in", "convergence", T::kInt, "2000", "discarded OU steps"},
      {"chains", "convergence", T::kInt, "100", "OU chains"},
      {"lo", "linear", T::kDouble, "", "box lower edge (problem default when empty)"},
      {"hi", "linear", T::kDouble, "", "box upper edge (problem default when empty)"},
      {"n_mc", "linear", T::kInt, "10000", "Monte-Carlo samples per reference value"},
      {"eval_probes", "linear", T::kInt, "1000", "probes for the relative error"},
      {"cache_dir", "linear", T::kString, "", "reference cache directory (disabled when empty)"},
  };
  return kSchema;
}

const KeySpec* find_key(const std::string& key) {
  for (const KeySpec& spec : config_schema()) {
    if (spec.key == key) return &spec;
  }
  return nullptr;
}

std::optional<std::string> suggest_key(const std::string& key) {
  std::optional<std::string> best;
  std::size_t best_distance = 3;
  for (const KeySpec& spec : config_schema()) {
    const std::size_t dist = edit_distance(key, spec.key);
    if (dist < best_distance) {
      best_distance = dist;
      best = spec.key;
    }
  }
  return best;
}

RunConfig::RunConfig() {
  for (const KeySpec& spec : config_schema()) values_[spec.key] = spec.default_value;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const KeySpec* spec = find_key(key);
  if (!spec) {
    std::string msg = "unknown key '" + key + "'";
    if (auto s = suggest_key(key)) msg += "; did you mean '" + *s + "'?";
    throw ConfigError(msg);
  }
  const std::string v = trim(value);
  if (!v.empty() && !valid_value(spec->type, v)) {
    throw ConfigError("key '" + key + "' expects " + type_name(spec->type) + ", got '" + v + "'");
  }
  values_[key] = v;
}

void RunConfig::set_problem_param(const std::string& key, const std::string& value) {
  double v = 0;
  if (!parse_double(trim(value), v)) {
    throw ConfigError("problem parameter '" + key + "' expects " + type_name(ValueType::kDouble) + ", got '" +
                      value + "'");
  }
  problem_params_[key] = v;
}

const std::string& RunConfig::raw(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown key '" + key + "'");
  return it->second;
}

bool RunConfig::is_default(const std::string& key) const { return raw(key) == find_key(key)->default_value; }

int RunConfig::get_int(const std::string& key) const {
  long v = 0;
  if (!parse_int(raw(key), v)) throw ConfigError("key '" + key + "' has no integer value");
  return static_cast<int>(v);
}

double RunConfig::get_double(const std::string& key) const {
  double v = 0;
  if (!parse_double(raw(key), v)) throw ConfigError("key '" + key + "' has no numeric value");
  return v;
}

bool RunConfig::get_bool(const std::string& key) const {
  const std::string& v = raw(key);
  return v == "true" || v == "1";
}

const std::string& RunConfig::get_string(const std::string& key) const { return raw(key); }

std::vector<int> RunConfig::get_int_list(const std::string& key) const {
  std::vector<int> out;
  for (const std::string& item : split_list(raw(key))) out.push_back(std::stoi(item));
  return out;
}

std::vector<double> RunConfig::get_double_list(const std::string& key) const {
  std::vector<double> out;
  for (const std::string& item : split_list(raw(key))) out.push_back(std::stod(item));
  return out;
}

std::string RunConfig::echo() const {
  std::ostringstream out;
  for (const std::string& section : section_order()) {
    out << '[' << section << "]\n";
    for (const KeySpec& spec : config_schema()) {
      if (spec.section == section) out << spec.key << " = " << values_.at(spec.key) << '\n';
    }
  }
  out << "[problem]\n";
  out.precision(17);
  for (const auto& [key, value] : problem_params_) out << key << " = " << value << '\n';
  return out.str();
}

void parse_config_text(const std::string& text, RunConfig& config, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::set<std::string> seen;
  int line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "problem" &&
          std::find(section_order().begin(), section_order().end(), section) == section_order().end()) {
        fail("unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail("missing key");
    const std::string qualified = (section == "problem" ? "problem." : "") + key;
    if (!seen.insert(qualified).second) fail("duplicate key '" + key + "'");
    try {
      if (section == "problem") {
        config.set_problem_param(key, value);
        continue;
      }
      const KeySpec* spec = find_key(key);
      if (spec && !section.empty() && spec->section != section) {
        fail("key '" + key + "' belongs to section [" + spec->section + "], not [" + section + "]");
      }
      config.set(key, value);
    } catch (const ConfigError& e) {
      if (std::string(e.what()).rfind(origin + ":", 0) == 0) throw;
      fail(e.what());
    }
  }
}

void load_config(const std::string& path, RunConfig& config) {
  std::string text;
  try {
    text = util::read_file(path);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  parse_config_text(text, config, path);
}

void apply_environment(RunConfig& config, const std::string& prefix) {
  for (const KeySpec& spec : config_schema()) {
    std::string name = prefix;
    for (char c : spec.key) name += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (const char* v = std::getenv(name.c_str())) {
      try {
        config.set(spec.key, v);
      } catch (const ConfigError& e) {
        throw ConfigError("environment variable " + name + ": " + e.what());
      }
    }
  }
}

}  // namespace kolmo::cli
