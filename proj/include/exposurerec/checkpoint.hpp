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


// Versioned binary checkpoints: magic, version, model kind, config block,
// named little-endian f64 parameter arrays, step counter, FNV-1a checksum.

#pragma once

#include <string>

#include "exposurerec/recommender.hpp"
#include "exposurerec/simulator.hpp"

namespace exposurerec {

enum class ModelKind { kRecommender, kSimulator };

std::string serialize_checkpoint(const RecommenderModel& model);
std::string serialize_checkpoint(const SimulatorModel& model);

// Throws LoadError on truncation, bad magic, version or kind mismatch,
// checksum failure or a parameter that does not fit the stored config.
ModelKind checkpoint_kind(const std::string& bytes);
RecommenderModel parse_recommender_checkpoint(const std::string& bytes);
SimulatorModel parse_simulator_checkpoint(const std::string& bytes);

void save_checkpoint(const RecommenderModel& model, const std::string& path);
void save_checkpoint(const SimulatorModel& model, const std::string& path);
RecommenderModel load_recommender(const std::string& path);
SimulatorModel load_simulator(const std::string& path);

}  // namespace exposurerec
