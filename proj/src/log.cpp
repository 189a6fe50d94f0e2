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

#include "exposurerec/log.hpp"

#include <atomic>
#include <iostream>

namespace exposurerec::log {
namespace {
std::atomic<int> g_level{static_cast<int>(Level::kWarning)};
std::atomic<std::size_t> g_warnings{0};
}  // namespace

void set_level(Level l) { g_level = static_cast<int>(l); }
Level level() { return static_cast<Level>(g_level.load()); }

void warn(const std::string& msg) {
  ++g_warnings;
  if (g_level >= static_cast<int>(Level::kWarning)) {
    std::cerr << "[warn] " << msg << '\n';
  }
}

void info(const std::string& msg) {
  if (g_level >= static_cast<int>(Level::kInfo)) {
    std::cerr << "[info] " << msg << '\n';
  }
}

std::size_t warning_count() { return g_warnings; }
void reset_warning_count() { g_warnings = 0; }

}  // namespace exposurerec::log
