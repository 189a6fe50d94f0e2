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


// Sectioned key-value configuration text and the experiment description
// built on it.

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "exposurerec/augmentation.hpp"
#include "exposurerec/recommender.hpp"
#include "exposurerec/simulator.hpp"
#include "exposurerec/synthetic.hpp"
#include "exposurerec/training.hpp"

namespace exposurerec {

// "[section]" headers followed by "key = value" lines; '#' starts a comment
// line. Serialisation sorts sections and keys so equal configs print equally.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(const std::string& text);
  std::string serialize() const;

  void set(const std::string& section, const std::string& key, const std::string& value);
  bool has(const std::string& section, const std::string& key) const;
  std::optional<std::string> get(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  std::uint64_t get_uint(const std::string& section, const std::string& key,
                         std::uint64_t fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

  const std::map<std::string, std::map<std::string, std::string>>& sections() const {
    return sections_;
  }

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

std::vector<std::string> split_list(const std::string& text);

struct SyntheticProfile {
  std::size_t users = 500;
  std::size_t items = 200;
  std::size_t factors = 8;
  std::size_t steps = 60;
  WorldOptions world;
  LoggingPolicy policy;
};

struct ExperimentConfig {
  // Logged data; when empty a synthetic world is generated per seed.
  std::string log_path;
  // Optional world file enabling oracle metrics for logged data.
  std::string world_path;
  SyntheticProfile synthetic;
  std::array<double, 3> split_ratios{0.8, 0.1, 0.1};
  std::size_t splits = 1;

  RecommenderConfig recommender;
  SimulatorConfig simulator;
  TrainingOptions training;
  TrainingOptions simulator_training;

  std::vector<Strategy> strategies{Strategy::kNone, Strategy::kRandom, Strategy::kSelfImproving};
  std::vector<double> deltas{1.0};
  AugmentationConfig augmentation;

  std::vector<std::size_t> ks{5, 10, 20};
  std::vector<std::uint64_t> seeds{1};
  std::string output_dir;

  static ExperimentConfig from_config(const KeyValueConfig& kv);
  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::string& path);
  KeyValueConfig to_config() const;
  std::string serialize() const { return to_config().serialize(); }

  // Checks value ranges and that referenced input files exist.
  void validate() const;
  // Hex FNV-1a of the canonical serialisation with the output directory left
  // out, so a relocated run keeps its fingerprint.
  std::string fingerprint() const;
};

std::string hex_fingerprint(const std::string& text);

}  // namespace exposurerec
