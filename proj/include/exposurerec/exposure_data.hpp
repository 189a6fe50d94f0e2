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

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace exposurerec {

// Catalog items are 1..num_items. Index 0 is the reserved padding item and
// behavior 2 the reserved padding behavior.
using ItemId = std::uint32_t;
constexpr ItemId kPaddingItem = 0;
constexpr int kPaddingBehavior = 2;
constexpr std::size_t kBehaviorVocab = 3;

struct ExposureEvent {
  ItemId item = kPaddingItem;
  int behavior = 0;  // 1 = interacted
  std::optional<std::uint64_t> timestamp;

  friend bool operator==(const ExposureEvent&, const ExposureEvent&) = default;
};

struct ExposureSequence {
  std::uint64_t user = 0;
  std::vector<ExposureEvent> events;

  std::size_t size() const { return events.size(); }
  friend bool operator==(const ExposureSequence&, const ExposureSequence&) = default;
};

enum class Split { kAll, kTrain, kValidation, kTest };

struct Dataset {
  std::size_t num_items = 0;
  std::vector<ExposureSequence> sequences;
  Split split = Split::kAll;
  // Free-form '#' lines other than the catalog header, kept in order.
  std::vector<std::string> comments;

  std::size_t size() const { return sequences.size(); }
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Items the user interacted with, in order, limited to the most recent
// max_items.
std::vector<ItemId> interaction_items(const ExposureSequence& seq, std::size_t max_items = 50);

// Sequence consisting only of the interacted events (behavior 1).
ExposureSequence interaction_sequence(const ExposureSequence& seq, std::size_t max_items = 50);

// ---------------------------------------------------------------- log format

struct ParseLimits {
  std::size_t max_events = 200;
};

// Line format:
//   #items N                 catalog header, required before any record
//   # free text              comment
//   <user> <item>:<behavior>[:<timestamp>] ...
Dataset parse_exposure_log(std::string_view text, const ParseLimits& limits = {});
Dataset load_exposure_log(const std::string& path, const ParseLimits& limits = {});
std::string serialize_exposure_log(const Dataset& ds);
void save_exposure_log(const Dataset& ds, const std::string& path);

// ---------------------------------------------------------------- trajectories

struct RewardConfig {
  double r_uni = 0.0;
  double r_int = 1.0;
  double gamma = 1.0;

  void validate() const;
  double reward(int behavior) const { return behavior == 1 ? r_int : r_uni; }
};

struct StatePair {
  ItemId item = kPaddingItem;
  int behavior = kPaddingBehavior;

  friend bool operator==(const StatePair&, const StatePair&) = default;
};
using StateWindow = std::vector<StatePair>;

struct TrajectoryStep {
  double rtg = 0.0;
  StateWindow state;
  ItemId action = kPaddingItem;
  bool has_action = false;
  // Feedback observed on the action (b_{t+1}); -1 when there is none.
  int action_behavior = -1;
  double reward = 0.0;
  ItemId target = kPaddingItem;
  bool target_valid = false;
  // 1-based position in the source sequence of the last event in `state`.
  std::size_t position = 0;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  std::size_t size() const { return steps.size(); }
};

// The last min(t, window) events ending at 1-based position t, left-padded to
// exactly `window` pairs.
StateWindow build_state(const ExposureSequence& seq, std::size_t t, std::size_t window);

struct RelabeledTargets {
  // Indexed by 0-based position; target[i] is the item of the first
  // interacted event strictly after position i.
  std::vector<ItemId> target;
  std::vector<bool> valid;
};
RelabeledTargets relabel_targets(const ExposureSequence& seq);

// Training trajectory: step t has state s_t, action v_{t+1}, reward from
// b_{t+1} and the discounted return-to-go; the last t_max steps are kept.
// Sequences shorter than 2 events yield nullopt with a warning.
std::optional<Trajectory> build_trajectory(const ExposureSequence& seq, const RewardConfig& cfg,
                                           std::size_t t_max, std::size_t window);

// Inference trajectory ending at the state after the final event, with no
// action on the last step and R_t = sum_{k=t}^{T-1} r_k + r_int.
// Every step of the sequence, cut from the end into consecutive windows of at
// most t_max steps. Return-to-go restarts inside each window, so each window
// is a self-contained trajectory. Sequences shorter than 2 yield no windows.
std::vector<Trajectory> build_training_windows(const ExposureSequence& seq, const RewardConfig& cfg,
                                               std::size_t t_max, std::size_t window);

Trajectory build_inference_trajectory(const ExposureSequence& seq, const RewardConfig& cfg,
                                      std::size_t t_max, std::size_t window);

// ---------------------------------------------------------------- splitting

// User-level shuffle split, deterministic under seed. Ratios must sum to 1.
std::array<Dataset, 3> split_dataset(const Dataset& ds, const std::array<double, 3>& ratios,
                                     std::uint64_t seed);

}  // namespace exposurerec
