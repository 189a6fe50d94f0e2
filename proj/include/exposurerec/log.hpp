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

#include <cstddef>
#include <string>

namespace exposurerec::log {

enum class Level { kSilent = 0, kWarning = 1, kInfo = 2 };

void set_level(Level level);
Level level();

void warn(const std::string& msg);
void info(const std::string& msg);

// Number of warnings emitted since process start (or the last reset).
std::size_t warning_count();
void reset_warning_count();

}  // namespace exposurerec::log
