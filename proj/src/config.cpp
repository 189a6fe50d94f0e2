// Copyright 2026 The exposurerec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "exposurerec/config.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "binary_io.hpp"
#include "exposurerec/errors.hpp"
#include "exposurerec/metrics.hpp"

namespace exposurerec {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T, typename Fn>
std::string join(const std::vector<T>& v, Fn fmt) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += fmt(v[i]);
  }
  return out;
}

double to_double(const std::string& section, const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(section + "." + key + ": '" + v + "' is not a number");
  }
}

std::uint64_t to_uint(const std::string& section, const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
    const auto u = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return u;
  } catch (const std::exception&) {
    throw ConfigError(section + "." + key + ": '" + v + "' is not a non-negative integer");
  }
}

void read_model(const KeyValueConfig& kv, const std::string& s, std::size_t& d, std::size_t& layers,
                std::size_t& heads, std::size_t& t_max, std::size_t& window, double& dropout,
                double& lr) {
  d = kv.get_uint(s, "d", d);
  layers = kv.get_uint(s, "layers", layers);
  heads = kv.get_uint(s, "heads", heads);
  t_max = kv.get_uint(s, "t_max", t_max);
  window = kv.get_uint(s, "window", window);
  dropout = kv.get_double(s, "dropout", dropout);
  lr = kv.get_double(s, "learning_rate", lr);
}

template <typename C>
void write_model(KeyValueConfig& kv, const std::string& s, const C& c) {
  kv.set(s, "d", std::to_string(c.d));
  kv.set(s, "layers", std::to_string(c.layers));
  kv.set(s, "heads", std::to_string(c.heads));
  kv.set(s, "t_max", std::to_string(c.t_max));
  kv.set(s, "window", std::to_string(c.window));
  kv.set(s, "dropout", format_double(c.dropout));
  kv.set(s, "learning_rate", format_double(c.learning_rate));
}

void read_training(const KeyValueConfig& kv, const std::string& s, TrainingOptions& t) {
  t.max_epochs = kv.get_uint(s, "max_epochs", t.max_epochs);
  t.patience = kv.get_uint(s, "patience", t.patience);
  t.batch_size = kv.get_uint(s, "batch_size", t.batch_size);
  t.eval_k = kv.get_uint(s, "eval_k", t.eval_k);
}

void write_training(KeyValueConfig& kv, const std::string& s, const TrainingOptions& t) {
  kv.set(s, "max_epochs", std::to_string(t.max_epochs));
  kv.set(s, "patience", std::to_string(t.patience));
  kv.set(s, "batch_size", std::to_string(t.batch_size));
  kv.set(s, "eval_k", std::to_string(t.eval_k));
}

}  // namespace

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
  KeyValueConfig kv;
  std::istringstream in(text);
  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) throw ParseError(line_no, "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      kv.sections_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected 'key = value'");
    if (section.empty()) throw ParseError(line_no, "key outside any section");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError(line_no, "empty key");
    if (kv.has(section, key)) throw ParseError(line_no, "duplicate key '" + key + "'");
    kv.sections_[section][key] = trim(line.substr(eq + 1));
  }
  return kv;
}

std::string KeyValueConfig::serialize() const {
  std::ostringstream out;
  bool first = true;
  for (const auto& [name, entries] : sections_) {
    if (!first) out << '\n';
    first = false;
    out << '[' << name << "]\n";
    for (const auto& [k, v] : entries) out << k << " = " << v << '\n';
  }
  return out.str();
}

void KeyValueConfig::set(const std::string& section, const std::string& key,
                         const std::string& value) {
  sections_[section][key] = value;
}

bool KeyValueConfig::has(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key);
}

std::optional<std::string> KeyValueConfig::get(const std::string& section,
                                               const std::string& key) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) return std::nullopt;
  auto k = s->second.find(key);
  if (k == s->second.end()) return std::nullopt;
  return k->second;
}

std::string KeyValueConfig::get_string(const std::string& section, const std::string& key,
                                       const std::string& fallback) const {
  return get(section, key).value_or(fallback);
}

double KeyValueConfig::get_double(const std::string& section, const std::string& key,
                                  double fallback) const {
  auto v = get(section, key);
  return v ? to_double(section, key, *v) : fallback;
}

std::uint64_t KeyValueConfig::get_uint(const std::string& section, const std::string& key,
                                       std::uint64_t fallback) const {
  auto v = get(section, key);
  return v ? to_uint(section, key, *v) : fallback;
}

bool KeyValueConfig::get_bool(const std::string& section, const std::string& key,
                              bool fallback) const {
  auto v = get(section, key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ConfigError(section + "." + key + ": '" + *v + "' is not a boolean");
}

ExperimentConfig ExperimentConfig::from_config(const KeyValueConfig& kv) {
  ExperimentConfig c;
  c.log_path = kv.get_string("data", "log", "");
  c.world_path = kv.get_string("data", "world", "");
  c.splits = kv.get_uint("data", "splits", c.splits);
  if (auto r = kv.get("data", "split")) {
    auto parts = split_list(*r);
    if (parts.size() != 3) throw ConfigError("data.split needs three ratios");
    for (std::size_t i = 0; i < 3; ++i) c.split_ratios[i] = to_double("data", "split", parts[i]);
  }

  auto& sp = c.synthetic;
  sp.users = kv.get_uint("synthetic", "users", sp.users);
  sp.items = kv.get_uint("synthetic", "items", sp.items);
  sp.factors = kv.get_uint("synthetic", "factors", sp.factors);
  sp.steps = kv.get_uint("synthetic", "steps", sp.steps);
  sp.world.slope = kv.get_double("synthetic", "slope", sp.world.slope);
  sp.world.target_click_rate = kv.get_double("synthetic", "click_rate", sp.world.target_click_rate);
  const std::string policy = kv.get_string("synthetic", "policy", "biased");
  if (policy == "biased") {
    sp.policy.kind = PolicyKind::kBiasedSoftmax;
  } else if (policy == "uniform") {
    sp.policy.kind = PolicyKind::kUniform;
  } else {
    throw ConfigError("synthetic.policy must be 'biased' or 'uniform'");
  }
  sp.policy.temperature = kv.get_double("synthetic", "temperature", sp.policy.temperature);
  sp.policy.slate_size = kv.get_uint("synthetic", "slate", sp.policy.slate_size);

  auto& rc = c.recommender;
  read_model(kv, "recommender", rc.d, rc.layers, rc.heads, rc.t_max, rc.window, rc.dropout,
             rc.learning_rate);
  rc.reward.r_uni = kv.get_double("recommender", "r_uni", rc.reward.r_uni);
  rc.reward.r_int = kv.get_double("recommender", "r_int", rc.reward.r_int);
  rc.reward.gamma = kv.get_double("recommender", "gamma", rc.reward.gamma);
  auto& sc = c.simulator;
  read_model(kv, "simulator", sc.d, sc.layers, sc.heads, sc.t_max, sc.window, sc.dropout,
             sc.learning_rate);
  read_training(kv, "training", c.training);
  c.simulator_training = c.training;
  read_training(kv, "simulator_training", c.simulator_training);

  if (auto s = kv.get("augmentation", "strategies")) {
    c.strategies.clear();
    for (const auto& n : split_list(*s)) c.strategies.push_back(parse_strategy(n));
  }
  if (auto s = kv.get("augmentation", "deltas")) {
    c.deltas.clear();
    for (const auto& n : split_list(*s)) c.deltas.push_back(to_double("augmentation", "deltas", n));
  }
  auto& ac = c.augmentation;
  ac.h = kv.get_uint("augmentation", "h", ac.h);
  if (auto s = kv.get("augmentation", "sigma"); s && *s != "auto") {
    ac.sigma = to_double("augmentation", "sigma", *s);
  }
  ac.max_epochs = kv.get_uint("augmentation", "max_epochs", ac.max_epochs);
  ac.include_original = kv.get_bool("augmentation", "union", ac.include_original);
  const std::string sampling = kv.get_string("augmentation", "sampling", "categorical");
  if (sampling == "categorical") {
    ac.sampling.mode = SamplingMode::kCategorical;
  } else if (sampling == "greedy") {
    ac.sampling.mode = SamplingMode::kGreedy;
  } else {
    throw ConfigError("augmentation.sampling must be 'categorical' or 'greedy'");
  }
  ac.sampling.temperature = kv.get_double("augmentation", "temperature", ac.sampling.temperature);
  const std::string feedback = kv.get_string("augmentation", "feedback", "sample");
  if (feedback == "sample") {
    ac.feedback = FeedbackMode::kSample;
  } else if (feedback == "threshold") {
    ac.feedback = FeedbackMode::kThreshold;
  } else {
    throw ConfigError("augmentation.feedback must be 'sample' or 'threshold'");
  }

  if (auto s = kv.get("evaluation", "ks")) {
    c.ks.clear();
    for (const auto& n : split_list(*s)) c.ks.push_back(to_uint("evaluation", "ks", n));
  }
  if (auto s = kv.get("run", "seeds")) {
    c.seeds.clear();
    for (const auto& n : split_list(*s)) c.seeds.push_back(to_uint("run", "seeds", n));
  }
  c.output_dir = kv.get_string("run", "output", "");
  return c;
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  return from_config(KeyValueConfig::parse(text));
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  ExperimentConfig c = parse(detail::read_file_bytes(path));
  c.validate();
  return c;
}

KeyValueConfig ExperimentConfig::to_config() const {
  KeyValueConfig kv;
  kv.set("data", "log", log_path);
  kv.set("data", "world", world_path);
  kv.set("data", "splits", std::to_string(splits));
  kv.set("data", "split",
         join(std::vector<double>(split_ratios.begin(), split_ratios.end()), format_double));
  kv.set("synthetic", "users", std::to_string(synthetic.users));
  kv.set("synthetic", "items", std::to_string(synthetic.items));
  kv.set("synthetic", "factors", std::to_string(synthetic.factors));
  kv.set("synthetic", "steps", std::to_string(synthetic.steps));
  kv.set("synthetic", "slope", format_double(synthetic.world.slope));
  kv.set("synthetic", "click_rate", format_double(synthetic.world.target_click_rate));
  kv.set("synthetic", "policy",
         synthetic.policy.kind == PolicyKind::kUniform ? "uniform" : "biased");
  kv.set("synthetic", "temperature", format_double(synthetic.policy.temperature));
  kv.set("synthetic", "slate", std::to_string(synthetic.policy.slate_size));
  write_model(kv, "recommender", recommender);
  kv.set("recommender", "r_uni", format_double(recommender.reward.r_uni));
  kv.set("recommender", "r_int", format_double(recommender.reward.r_int));
  kv.set("recommender", "gamma", format_double(recommender.reward.gamma));
  write_model(kv, "simulator", simulator);
  write_training(kv, "training", training);
  write_training(kv, "simulator_training", simulator_training);
  kv.set("augmentation", "strategies", join(strategies, strategy_name));
  kv.set("augmentation", "deltas", join(deltas, format_double));
  kv.set("augmentation", "h", std::to_string(augmentation.h));
  kv.set("augmentation", "sigma",
         augmentation.sigma < 0.0 ? "auto" : format_double(augmentation.sigma));
  kv.set("augmentation", "max_epochs", std::to_string(augmentation.max_epochs));
  kv.set("augmentation", "union", augmentation.include_original ? "true" : "false");
  kv.set("augmentation", "sampling",
         augmentation.sampling.mode == SamplingMode::kGreedy ? "greedy" : "categorical");
  kv.set("augmentation", "temperature", format_double(augmentation.sampling.temperature));
  kv.set("augmentation", "feedback",
         augmentation.feedback == FeedbackMode::kThreshold ? "threshold" : "sample");
  kv.set("evaluation", "ks", join(ks, [](std::size_t k) { return std::to_string(k); }));
  kv.set("run", "seeds", join(seeds, [](std::uint64_t s) { return std::to_string(s); }));
  kv.set("run", "output", output_dir);
  return kv;
}

void ExperimentConfig::validate() const {
  namespace fs = std::filesystem;
  if (!log_path.empty() && !fs::exists(log_path)) throw IoError("log file not found: " + log_path);
  if (!world_path.empty() && !fs::exists(world_path)) {
    throw IoError("world file not found: " + world_path);
  }
  if (log_path.empty() && (synthetic.users < 1 || synthetic.items < 1 || synthetic.factors < 1)) {
    throw ConfigError("synthetic profile needs users, items and factors >= 1");
  }
  if (log_path.empty() && synthetic.steps < 2) throw ConfigError("synthetic.steps must be >= 2");
  synthetic.policy.validate();
  if (splits < 1) throw ConfigError("data.splits must be >= 1");
  validate_ks(ks);
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (strategies.empty()) throw ConfigError("at least one strategy is required");
  if (deltas.empty()) throw ConfigError("at least one delta is required");
  for (double d : deltas) {
    if (!(d > 0.0)) throw ConfigError("every delta must be positive");
  }
  training.validate();
  simulator_training.validate();
  augmentation.validate();
  recommender.reward.validate();
}

std::string hex_fingerprint(const std::string& text) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(detail::fnv1a(text)));
  return buf;
}

std::string ExperimentConfig::fingerprint() const {
  ExperimentConfig located = *this;
  located.output_dir.clear();
  return hex_fingerprint(located.serialize());
}

}  // namespace exposurerec
