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

#include "exposurerec/exposure_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

#include "exposurerec/errors.hpp"
#include "exposurerec/log.hpp"
#include "exposurerec/rng.hpp"

namespace exposurerec {
namespace {

template <typename T>
bool parse_uint(std::string_view s, T& out) {
  if (s.empty()) return false;
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

std::vector<ItemId> interaction_items(const ExposureSequence& seq, std::size_t max_items) {
  std::vector<ItemId> items;
  for (const auto& e : seq.events) {
    if (e.behavior == 1) items.push_back(e.item);
  }
  if (items.size() > max_items) items.erase(items.begin(), items.end() - static_cast<long>(max_items));
  return items;
}

ExposureSequence interaction_sequence(const ExposureSequence& seq, std::size_t max_items) {
  ExposureSequence out{seq.user, {}};
  for (const auto& e : seq.events) {
    if (e.behavior == 1) out.events.push_back(e);
  }
  if (out.events.size() > max_items) {
    out.events.erase(out.events.begin(), out.events.end() - static_cast<long>(max_items));
  }
  return out;
}

// ---------------------------------------------------------------- log format

Dataset parse_exposure_log(std::string_view text, const ParseLimits& limits) {
  Dataset ds;
  bool have_header = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    if (line.front() == '#') {
      if (line.starts_with("#items")) {
        if (have_header) throw ParseError(line_no, "duplicate #items header");
        auto fields = split_ws(line);
        if (fields.size() != 2 || !parse_uint(fields[1], ds.num_items) || ds.num_items == 0) {
          throw ParseError(line_no, "malformed catalog header '" + std::string(line) + "'");
        }
        have_header = true;
      } else {
        std::string_view c = line.substr(1);
        if (!c.empty() && c.front() == ' ') c.remove_prefix(1);
        ds.comments.emplace_back(c);
      }
      continue;
    }
    if (!have_header) throw ParseError(line_no, "record before the #items header");

    auto fields = split_ws(line);
    ExposureSequence seq;
    if (!parse_uint(fields[0], seq.user)) {
      throw ParseError(line_no, "bad user id '" + std::string(fields[0]) + "'");
    }
    if (fields.size() < 2) throw ParseError(line_no, "record without events");
    std::size_t stamped = 0;
    for (std::size_t f = 1; f < fields.size(); ++f) {
      std::string_view tok = fields[f];
      std::array<std::string_view, 3> parts;
      std::size_t np = 0;
      std::size_t start = 0;
      for (std::size_t i = 0; i <= tok.size(); ++i) {
        if (i == tok.size() || tok[i] == ':') {
          if (np == 3) throw ParseError(line_no, "too many fields in '" + std::string(tok) + "'");
          parts[np++] = tok.substr(start, i - start);
          start = i + 1;
        }
      }
      ExposureEvent ev;
      std::uint64_t item = 0;
      if (np < 2 || !parse_uint(parts[0], item)) {
        throw ParseError(line_no, "malformed event '" + std::string(tok) + "'");
      }
      if (parts[1] == "0") {
        ev.behavior = 0;
      } else if (parts[1] == "1") {
        ev.behavior = 1;
      } else {
        throw ParseError(line_no, "behavior must be 0 or 1 in '" + std::string(tok) + "'");
      }
      if (np == 3) {
        std::uint64_t ts = 0;
        if (!parse_uint(parts[2], ts)) {
          throw ParseError(line_no, "bad timestamp in '" + std::string(tok) + "'");
        }
        ev.timestamp = ts;
        ++stamped;
      }
      if (item == 0 || item > ds.num_items) {
        throw CatalogError("line " + std::to_string(line_no) + ": item " + std::to_string(item) +
                           " outside catalog 1.." + std::to_string(ds.num_items));
      }
      ev.item = static_cast<ItemId>(item);
      seq.events.push_back(ev);
    }
    if (stamped != 0 && stamped != seq.events.size()) {
      throw ParseError(line_no, "timestamps must be given for all events or none");
    }
    if (stamped) {
      std::stable_sort(seq.events.begin(), seq.events.end(),
                       [](const ExposureEvent& a, const ExposureEvent& b) {
                         return *a.timestamp < *b.timestamp;
                       });
    }
    if (seq.events.size() > limits.max_events) {
      seq.events.erase(seq.events.begin(),
                       seq.events.end() - static_cast<long>(limits.max_events));
    }
    ds.sequences.push_back(std::move(seq));
  }
  if (!have_header) throw ParseError(line_no, "missing #items header");
  return ds;
}

Dataset load_exposure_log(const std::string& path, const ParseLimits& limits) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_exposure_log(buf.str(), limits);
}

std::string serialize_exposure_log(const Dataset& ds) {
  std::string out = "#items " + std::to_string(ds.num_items) + "\n";
  for (const auto& c : ds.comments) out += "# " + c + "\n";
  for (const auto& seq : ds.sequences) {
    out += std::to_string(seq.user);
    for (const auto& e : seq.events) {
      out += ' ';
      out += std::to_string(e.item);
      out += ':';
      out += std::to_string(e.behavior);
      if (e.timestamp) {
        out += ':';
        out += std::to_string(*e.timestamp);
      }
    }
    out += '\n';
  }
  return out;
}

void save_exposure_log(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << serialize_exposure_log(ds);
  if (!out) throw IoError("write failed for " + path);
}

// ---------------------------------------------------------------- trajectories

void RewardConfig::validate() const {
  if (!(r_int > r_uni)) throw ConfigError("reward config requires r_int > r_uni");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("reward discount must lie in (0, 1]");
}

StateWindow build_state(const ExposureSequence& seq, std::size_t t, std::size_t window) {
  if (t < 1 || t > seq.events.size()) {
    throw IndexError("state position " + std::to_string(t) + " outside 1.." +
                     std::to_string(seq.events.size()));
  }
  StateWindow w(window);
  const std::size_t n = std::min(t, window);
  for (std::size_t i = 0; i < n; ++i) {
    const ExposureEvent& e = seq.events[t - n + i];
    w[window - n + i] = StatePair{e.item, e.behavior};
  }
  return w;
}

RelabeledTargets relabel_targets(const ExposureSequence& seq) {
  const std::size_t n = seq.events.size();
  RelabeledTargets out{std::vector<ItemId>(n, kPaddingItem), std::vector<bool>(n, false)};
  bool have = false;
  ItemId next = kPaddingItem;
  for (std::size_t i = n; i-- > 0;) {
    out.target[i] = next;
    out.valid[i] = have;
    if (seq.events[i].behavior == 1) {
      next = seq.events[i].item;
      have = true;
    }
  }
  return out;
}

std::optional<Trajectory> build_trajectory(const ExposureSequence& seq, const RewardConfig& cfg,
                                           std::size_t t_max, std::size_t window) {
  const std::size_t n = seq.events.size();
  if (n < 2) {
    log::warn("skipping sequence of user " + std::to_string(seq.user) + " with " +
              std::to_string(n) + " event(s)");
    return std::nullopt;
  }
  const std::size_t steps = n - 1;
  const std::size_t first = steps > t_max ? steps - t_max + 1 : 1;
  const RelabeledTargets targets = relabel_targets(seq);

  std::vector<double> rtg(steps + 1, 0.0);
  for (std::size_t t = steps; t >= 1; --t) {
    rtg[t - 1] = cfg.reward(seq.events[t].behavior) + cfg.gamma * rtg[t];
  }

  Trajectory traj;
  traj.steps.reserve(steps - first + 1);
  for (std::size_t t = first; t <= steps; ++t) {
    TrajectoryStep st;
    st.state = build_state(seq, t, window);
    st.action = seq.events[t].item;
    st.has_action = true;
    st.action_behavior = seq.events[t].behavior;
    st.reward = cfg.reward(seq.events[t].behavior);
    st.rtg = rtg[t - 1];
    st.target = targets.target[t - 1];
    st.target_valid = targets.valid[t - 1];
    st.position = t;
    traj.steps.push_back(std::move(st));
  }
  return traj;
}

std::vector<Trajectory> build_training_windows(const ExposureSequence& seq, const RewardConfig& cfg,
                                               std::size_t t_max, std::size_t window) {
  if (t_max < 1) throw ConfigError("t_max must be >= 1");
  std::vector<Trajectory> out;
  if (seq.events.size() < 2) return out;
  auto full = build_trajectory(seq, cfg, seq.events.size(), window);
  auto& steps = full->steps;
  std::size_t end = steps.size();
  while (end > 0) {
    const std::size_t begin = end > t_max ? end - t_max : 0;
    Trajectory w;
    w.steps.assign(std::make_move_iterator(steps.begin() + static_cast<long>(begin)),
                   std::make_move_iterator(steps.begin() + static_cast<long>(end)));
    double acc = 0.0;
    for (std::size_t i = w.steps.size(); i-- > 0;) {
      acc = w.steps[i].reward + cfg.gamma * acc;
      w.steps[i].rtg = acc;
    }
    out.push_back(std::move(w));
    end = begin;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

Trajectory build_inference_trajectory(const ExposureSequence& seq, const RewardConfig& cfg,
                                      std::size_t t_max, std::size_t window) {
  const std::size_t n = seq.events.size();
  if (n == 0) throw InputError("inference trajectory from an empty sequence");
  const std::size_t first = n > t_max ? n - t_max + 1 : 1;
  Trajectory traj;
  for (std::size_t t = first; t <= n; ++t) {
    TrajectoryStep st;
    st.state = build_state(seq, t, window);
    st.position = t;
    if (t < n) {
      st.action = seq.events[t].item;
      st.has_action = true;
      st.action_behavior = seq.events[t].behavior;
      st.reward = cfg.reward(seq.events[t].behavior);
    } else {
      st.reward = cfg.r_int;
    }
    traj.steps.push_back(std::move(st));
  }
  double acc = cfg.r_int;
  for (std::size_t i = traj.steps.size(); i-- > 0;) {
    if (traj.steps[i].has_action) acc += traj.steps[i].reward;
    traj.steps[i].rtg = acc;
  }
  return traj;
}

// ---------------------------------------------------------------- splitting

std::array<Dataset, 3> split_dataset(const Dataset& ds, const std::array<double, 3>& ratios,
                                     std::uint64_t seed) {
  const double total = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(total - 1.0) > 1e-9 ||
      std::any_of(ratios.begin(), ratios.end(), [](double r) { return r < 0.0; })) {
    throw ConfigError("split ratios must be non-negative and sum to 1");
  }
  const std::size_t n = ds.sequences.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng.engine());

  const auto n_train = static_cast<std::size_t>(std::llround(ratios[0] * static_cast<double>(n)));
  const auto n_val = std::min(
      n - std::min(n, n_train),
      static_cast<std::size_t>(std::llround(ratios[1] * static_cast<double>(n))));
  const std::size_t bounds[4] = {0, std::min(n, n_train), std::min(n, n_train) + n_val, n};
  const Split tags[3] = {Split::kTrain, Split::kValidation, Split::kTest};

  std::array<Dataset, 3> out;
  for (int s = 0; s < 3; ++s) {
    out[s].num_items = ds.num_items;
    out[s].split = tags[s];
    out[s].comments = ds.comments;
    std::vector<std::size_t> idx(order.begin() + static_cast<long>(bounds[s]),
                                 order.begin() + static_cast<long>(bounds[s + 1]));
    std::sort(idx.begin(), idx.end());
    for (auto i : idx) out[s].sequences.push_back(ds.sequences[i]);
  }
  return out;
}

}  // namespace exposurerec
