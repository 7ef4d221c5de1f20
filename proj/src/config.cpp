#include "sparsid/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

namespace sparsid {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& msg) { throw ConfigError(msg); }

void require_object(const json& node, const std::string& path) {
  if (!node.is_object()) bad(path + " must be an object");
}

// strict schema: any key outside `allowed` is an error naming its full path
void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* a : allowed)
      if (item.key() == a) {
        known = true;
        break;
      }
    if (!known) bad("unknown key '" + path + "." + item.key() + "'");
  }
}

const json* find(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double get_double(const json& obj, const std::string& path, const char* key,
                  bool required, double fallback) {
  const json* v = find(obj, key);
  if (!v) {
    if (required) bad("missing key '" + path + "." + key + "'");
    return fallback;
  }
  if (!v->is_number()) bad("'" + path + "." + key + "' must be a number");
  return v->get<double>();
}

std::uint64_t get_uint(const json& obj, const std::string& path, const char* key,
                       bool required, std::uint64_t fallback) {
  const json* v = find(obj, key);
  if (!v) {
    if (required) bad("missing key '" + path + "." + key + "'");
    return fallback;
  }
  if (!v->is_number_unsigned()) bad("'" + path + "." + key + "' must be a non-negative integer");
  return v->get<std::uint64_t>();
}

std::string get_string(const json& obj, const std::string& path, const char* key,
                       bool required, const std::string& fallback) {
  const json* v = find(obj, key);
  if (!v) {
    if (required) bad("missing key '" + path + "." + key + "'");
    return fallback;
  }
  if (!v->is_string()) bad("'" + path + "." + key + "' must be a string");
  return v->get<std::string>();
}

ChannelConfig parse_channel(const json& node, const std::string& path) {
  require_object(node, path);
  ChannelConfig c;
  const std::string kind = get_string(node, path, "kind", true, "");
  if (kind == "file") {
    c.kind = ChannelConfig::Kind::File;
    check_keys(node, path, {"kind", "path"});
    c.path = get_string(node, path, "path", true, "");
  } else if (kind == "synthetic") {
    c.kind = ChannelConfig::Kind::Synthetic;
    check_keys(node, path, {"kind", "taps", "active", "decay", "seed"});
    c.taps = static_cast<std::size_t>(get_uint(node, path, "taps", true, 0));
    c.active = static_cast<std::size_t>(get_uint(node, path, "active", true, 0));
    c.decay = get_double(node, path, "decay", false, 0.0);
    c.seed = get_uint(node, path, "seed", false, 0);
  } else {
    bad("'" + path + ".kind' must be \"file\" or \"synthetic\"");
  }
  return c;
}

SignalSpec parse_input(const json& node, const std::string& path) {
  require_object(node, path);
  SignalSpec s;
  const std::string kind = get_string(node, path, "kind", true, "");
  if (kind == "white-gaussian") {
    s.kind = SignalKind::WhiteGaussian;
    check_keys(node, path, {"kind", "variance"});
    s.variance = get_double(node, path, "variance", false, 1.0);
  } else if (kind == "ar1") {
    s.kind = SignalKind::Ar1;
    check_keys(node, path, {"kind", "pole", "variance", "warmup"});
    s.pole = get_double(node, path, "pole", true, 0.0);
    s.variance = get_double(node, path, "variance", false, 1.0);
    s.warmup = static_cast<std::size_t>(get_uint(node, path, "warmup", false, 1000));
  } else if (kind == "pcm-file") {
    s.kind = SignalKind::PcmFile;
    check_keys(node, path, {"kind", "path"});
    s.path = get_string(node, path, "path", true, "");
  } else {
    bad("'" + path + ".kind' must be \"white-gaussian\", \"ar1\" or \"pcm-file\"");
  }
  return s;
}

DeltaRule parse_delta_rule(const json& node, const std::string& path) {
  DeltaRule r;
  if (node.is_string()) {
    if (node.get<std::string>() != "sigma-scaled")
      bad("'" + path + "' must be \"sigma-scaled\" or a positive number");
    r.mode = DeltaRule::Mode::SigmaScaled;
  } else if (node.is_number()) {
    r.mode = DeltaRule::Mode::Fixed;
    r.value = node.get<double>();
  } else {
    bad("'" + path + "' must be \"sigma-scaled\" or a positive number");
  }
  return r;
}

AlgorithmConfig parse_algorithm(const json& node, const std::string& path) {
  require_object(node, path);
  AlgorithmConfig a;
  const std::string name = get_string(node, path, "name", true, "");
  if (name == "nlms") {
    a.kind = AlgorithmKind::Nlms;
    check_keys(node, path, {"name", "label", "mu", "delta_rule"});
  } else if (name == "apa") {
    a.kind = AlgorithmKind::Apa;
    check_keys(node, path, {"name", "label", "mu", "M", "delta_rule"});
  } else if (name == "ipapa") {
    a.kind = AlgorithmKind::Ipapa;
    check_keys(node, path, {"name", "label", "mu", "M", "alpha", "epsilon", "delta_rule"});
  } else if (name == "dbipapa") {
    a.kind = AlgorithmKind::Dbipapa;
    check_keys(node, path,
               {"name", "label", "mu", "M", "alpha", "epsilon", "delta_rule", "m"});
  } else {
    bad("'" + path + ".name' must be one of nlms, apa, ipapa, dbipapa");
  }
  a.label = get_string(node, path, "label", false, name);
  a.mu = get_double(node, path, "mu", true, 0.0);
  a.order = static_cast<std::size_t>(get_uint(node, path, "M", false, 1));
  a.alpha = get_double(node, path, "alpha", false, 0.0);
  a.epsilon = get_double(node, path, "epsilon", false, 0.01);
  if (const json* dr = find(node, "delta_rule"))
    a.delta_rule = parse_delta_rule(*dr, path + ".delta_rule");
  a.snapshot_multiplier = get_double(node, path, "m", false, 1.0);
  return a;
}

ExperimentConfig parse_experiment(const json& node) {
  const std::string path = "experiment";
  require_object(node, path);
  check_keys(node, path,
             {"iterations", "realizations", "seed_base", "snr_db", "pad_to", "channel",
              "input", "shift", "algorithms"});
  ExperimentConfig cfg;
  cfg.iterations = get_uint(node, path, "iterations", true, 0);
  cfg.realizations = get_uint(node, path, "realizations", false, 20);
  cfg.seed_base = get_uint(node, path, "seed_base", false, 0);
  cfg.pad_to = static_cast<std::size_t>(get_uint(node, path, "pad_to", true, 0));

  if (const json* snr = find(node, "snr_db")) {
    if (snr->is_string()) {
      if (snr->get<std::string>() != "inf")
        bad("'experiment.snr_db' must be a number or \"inf\"");
      cfg.snr_db = std::numeric_limits<double>::infinity();
    } else if (snr->is_number()) {
      cfg.snr_db = snr->get<double>();
    } else {
      bad("'experiment.snr_db' must be a number or \"inf\"");
    }
  } else {
    bad("missing key 'experiment.snr_db'");
  }

  const json* channel = find(node, "channel");
  if (!channel) bad("missing key 'experiment.channel'");
  cfg.channel = parse_channel(*channel, path + ".channel");

  const json* input = find(node, "input");
  if (!input) bad("missing key 'experiment.input'");
  cfg.input = parse_input(*input, path + ".input");

  if (const json* shift = find(node, "shift")) {
    require_object(*shift, path + ".shift");
    check_keys(*shift, path + ".shift", {"at_iteration", "by_samples"});
    ShiftConfig s;
    s.at_iteration = get_uint(*shift, path + ".shift", "at_iteration", true, 0);
    s.by_samples =
        static_cast<std::size_t>(get_uint(*shift, path + ".shift", "by_samples", true, 0));
    cfg.shift = s;
  }

  const json* algos = find(node, "algorithms");
  if (!algos) bad("missing key 'experiment.algorithms'");
  if (!algos->is_array()) bad("'experiment.algorithms' must be an array");
  for (std::size_t i = 0; i < algos->size(); ++i)
    cfg.algorithms.push_back(
        parse_algorithm((*algos)[i], path + ".algorithms[" + std::to_string(i) + "]"));
  return cfg;
}

// dotted-path assignment; numeric tokens index arrays, other tokens index
// objects (created on demand; validation rejects anything bogus afterwards)
void apply_override(json& root, const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0)
    bad("override must look like key.path=value: '" + text + "'");
  const std::string key_path = text.substr(0, eq);
  const std::string value_text = text.substr(eq + 1);

  json value = json::parse(value_text, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = value_text;  // unquoted strings stay strings

  std::vector<std::string> tokens;
  std::stringstream ss(key_path);
  std::string tok;
  while (std::getline(ss, tok, '.')) {
    if (tok.empty()) bad("override path has an empty segment: '" + key_path + "'");
    tokens.push_back(tok);
  }
  json* node = &root;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string& t = tokens[i];
    const bool digits = t.find_first_not_of("0123456789") == std::string::npos;
    const bool last = i + 1 == tokens.size();
    if (node->is_array()) {
      if (!digits) bad("override path '" + key_path + "': '" + t + "' is not an array index");
      const std::size_t idx = std::stoull(t);
      if (idx >= node->size())
        bad("override path '" + key_path + "': index " + t + " out of range");
      if (last)
        (*node)[idx] = value;
      else
        node = &(*node)[idx];
    } else {
      if (!node->is_object() && !node->is_null())
        bad("override path '" + key_path + "' descends into a scalar");
      if (last)
        (*node)[t] = value;
      else
        node = &(*node)[t];
    }
  }
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text,
                                   std::span<const std::string> overrides) {
  json root = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (root.is_discarded()) bad("config is not valid JSON");
  if (!root.is_object()) bad("config root must be an object");
  for (const std::string& o : overrides) apply_override(root, o);
  check_keys(root, "$", {"experiment"});
  const json* experiment = find(root, "experiment");
  if (!experiment) bad("missing key 'experiment'");
  ExperimentConfig cfg = parse_experiment(*experiment);
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path,
                             std::span<const std::string> overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), overrides);
}

}  // namespace sparsid
