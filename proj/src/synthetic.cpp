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


#include "exposurerec/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "binary_io.hpp"
#include "exposurerec/errors.hpp"
#include "exposurerec/autodiff.hpp"
#include "exposurerec/rng.hpp"

namespace exposurerec {
namespace {

constexpr char kWorldMagic[8] = {'E', 'X', 'R', 'W', 'O', 'R', 'L', 'D'};
constexpr std::uint32_t kWorldVersion = 1;
constexpr std::size_t kCalibrationPairs = 200000;
constexpr std::size_t kEvalBatch = 64;

double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

void check_user(const SyntheticWorld& w, std::size_t user) {
  if (user >= w.num_users) {
    throw IndexError("user " + std::to_string(user) + " outside world of " +
                     std::to_string(w.num_users) + " users");
  }
}

void check_item(const SyntheticWorld& w, ItemId item) {
  if (item == kPaddingItem || item > w.num_items) {
    throw CatalogError("item " + std::to_string(item) + " outside catalog [1, " +
                       std::to_string(w.num_items) + "]");
  }
}

// Slope-scaled affinities of the pairs used for calibration.
std::vector<double> calibration_logits(const SyntheticWorld& w) {
  std::vector<double> out;
  const std::size_t pairs = w.num_users * w.num_items;
  if (pairs <= kCalibrationPairs) {
    out.reserve(pairs);
    for (std::size_t u = 0; u < w.num_users; ++u) {
      for (std::size_t v = 1; v <= w.num_items; ++v) {
        out.push_back(w.slope * w.affinity(u, static_cast<ItemId>(v)));
      }
    }
  } else {
    Rng rng(mix_seed(w.seed, 0xca11b4a7eULL));
    out.reserve(kCalibrationPairs);
    for (std::size_t i = 0; i < kCalibrationPairs; ++i) {
      const auto u = static_cast<std::size_t>(rng.uniform_int(0, static_cast<long>(w.num_users) - 1));
      const auto v = static_cast<ItemId>(rng.uniform_int(1, static_cast<long>(w.num_items)));
      out.push_back(w.slope * w.affinity(u, v));
    }
  }
  return out;
}

std::size_t sample_cdf(const std::vector<double>& cdf, Rng& rng) {
  const double x = rng.uniform() * cdf.back();
  auto it = std::upper_bound(cdf.begin(), cdf.end(), x);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

}  // namespace

double SyntheticWorld::affinity(std::size_t user, ItemId item) const {
  check_user(*this, user);
  check_item(*this, item);
  const auto u = user_factors.row(user);
  const auto v = item_factors.row(item - 1);
  double s = 0.0;
  for (std::size_t j = 0; j < factors; ++j) s += u[j] * v[j];
  return s;
}

double SyntheticWorld::click_probability(std::size_t user, ItemId item) const {
  return sigmoid(slope * affinity(user, item) + offset);
}

std::vector<double> SyntheticWorld::affinities(std::size_t user) const {
  std::vector<double> out(num_items);
  for (std::size_t v = 1; v <= num_items; ++v) out[v - 1] = affinity(user, static_cast<ItemId>(v));
  return out;
}

double SyntheticWorld::mean_click_probability() const {
  const auto logits = calibration_logits(*this);
  double s = 0.0;
  for (double z : logits) s += sigmoid(z + offset);
  return s / static_cast<double>(logits.size());
}

double calibrate_offset(const SyntheticWorld& world, double target) {
  if (!(target > 0.0 && target < 1.0)) throw ConfigError("target click rate must be in (0, 1)");
  const auto logits = calibration_logits(world);
  auto mean_at = [&](double b) {
    double s = 0.0;
    for (double z : logits) s += sigmoid(z + b);
    return s / static_cast<double>(logits.size());
  };
  double lo = -60.0, hi = 60.0;
  for (int i = 0; i < 200 && hi - lo > 1e-12; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mean_at(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

SyntheticWorld generate_world(std::size_t users, std::size_t items, std::size_t factors,
                              std::uint64_t seed, const WorldOptions& options) {
  if (users < 1 || items < 1 || factors < 1) {
    throw ConfigError("world needs at least one user, item and factor");
  }
  if (options.target_click_rate < 0.05 || options.target_click_rate > 0.3) {
    throw ConfigError("target click rate must lie in [0.05, 0.3]");
  }
  if (!std::isfinite(options.slope)) throw ConfigError("slope must be finite");
  SyntheticWorld w;
  w.num_users = users;
  w.num_items = items;
  w.factors = factors;
  w.slope = options.slope;
  w.seed = seed;
  const double sd = std::pow(static_cast<double>(factors), -0.25);
  Rng rng(seed);
  w.user_factors = NdArray({users, factors});
  for (auto& x : w.user_factors.values()) x = rng.normal(0.0, sd);
  w.item_factors = NdArray({items, factors});
  for (auto& x : w.item_factors.values()) x = rng.normal(0.0, sd);
  w.offset = calibrate_offset(w, options.target_click_rate);
  return w;
}

void LoggingPolicy::validate() const {
  if (kind == PolicyKind::kBiasedSoftmax && !(temperature > 0.0 && std::isfinite(temperature))) {
    throw ConfigError("biased policy temperature must be positive");
  }
  if (slate_size < 1) throw ConfigError("slate size must be >= 1");
}

std::vector<double> exposure_probabilities(const SyntheticWorld& world, const LoggingPolicy& policy,
                                           std::size_t user) {
  policy.validate();
  check_user(world, user);
  const std::size_t n = world.num_items;
  if (policy.kind == PolicyKind::kUniform) return std::vector<double>(n, 1.0 / static_cast<double>(n));
  std::vector<double> p = world.affinities(user);
  const double mx = *std::max_element(p.begin(), p.end());
  double s = 0.0;
  for (auto& x : p) {
    x = std::exp((x - mx) / policy.temperature);
    s += x;
  }
  for (auto& x : p) x /= s;
  return p;
}

Dataset simulate_logs(const SyntheticWorld& world, const LoggingPolicy& policy,
                      std::span<const std::size_t> users, std::size_t steps, std::uint64_t seed) {
  if (steps < 2) throw ConfigError("simulate_logs needs at least 2 steps per user");
  policy.validate();
  Dataset ds;
  ds.num_items = world.num_items;
  ds.sequences.reserve(users.size());
  for (std::size_t u : users) {
    const auto probs = exposure_probabilities(world, policy, u);
    std::vector<double> cdf(probs.size());
    std::partial_sum(probs.begin(), probs.end(), cdf.begin());
    Rng rng(mix_seed(seed, u));
    ExposureSequence seq;
    seq.user = u;
    seq.events.reserve(steps * policy.slate_size);
    for (std::size_t t = 0; t < steps * policy.slate_size; ++t) {
      const auto item = static_cast<ItemId>(sample_cdf(cdf, rng) + 1);
      const int b = rng.bernoulli(world.click_probability(u, item)) ? 1 : 0;
      seq.events.push_back({item, b, std::nullopt});
    }
    ds.sequences.push_back(std::move(seq));
  }
  return ds;
}

Dataset simulate_logs(const SyntheticWorld& world, const LoggingPolicy& policy, std::size_t steps,
                      std::uint64_t seed) {
  std::vector<std::size_t> users(world.num_users);
  std::iota(users.begin(), users.end(), 0);
  return simulate_logs(world, policy, users, steps, seed);
}

std::vector<ItemId> true_top_items(const SyntheticWorld& world, std::size_t user, std::size_t k) {
  return rank_items(world.affinities(user), k);
}

MetricsReport oracle_metrics(const SyntheticWorld& world, std::span<const std::uint64_t> users,
                             std::span<const std::vector<ItemId>> lists,
                             std::span<const std::size_t> ks) {
  validate_ks(ks);
  if (users.size() != lists.size()) throw DimensionError("one ranked list per user is required");
  if (users.empty()) throw EmptyReportError("no user to evaluate");
  MetricsReport r;
  r.kind = "oracle";
  r.ks.assign(ks.begin(), ks.end());
  r.sequences = users.size();
  const std::size_t kmax = std::min(ks.back(), world.num_items);
  std::vector<std::vector<ItemId>> truth(users.size());
  for (std::size_t i = 0; i < users.size(); ++i) {
    truth[i] = true_top_items(world, static_cast<std::size_t>(users[i]), kmax);
  }
  for (auto k : ks) {
    const std::size_t kk = std::min(k, world.num_items);
    double idcg = 0.0;
    for (std::size_t i = 1; i <= kk; ++i) idcg += 1.0 / std::log2(static_cast<double>(i) + 1.0);
    double rsum = 0.0, nsum = 0.0;
    for (std::size_t u = 0; u < users.size(); ++u) {
      std::unordered_set<ItemId> relevant(truth[u].begin(), truth[u].begin() + static_cast<long>(kk));
      const std::size_t n = std::min(kk, lists[u].size());
      double hits = 0.0, dcg = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (relevant.count(lists[u][i])) {
          hits += 1.0;
          dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
        }
      }
      rsum += hits / static_cast<double>(kk);
      nsum += dcg / idcg;
    }
    r.recall[k] = rsum / static_cast<double>(users.size());
    r.ndcg[k] = nsum / static_cast<double>(users.size());
    r.coverage[k] = coverage_at_k(lists, k, world.num_items);
  }
  return r;
}

MetricsReport ground_truth_eval(const RecommenderModel& model, const SyntheticWorld& world,
                                const Dataset& test, std::span<const std::size_t> ks) {
  validate_ks(ks);
  if (model.num_items() != world.num_items) {
    throw CatalogError("model catalog does not match the world catalog");
  }
  std::vector<std::vector<ItemId>> histories;
  std::vector<std::uint64_t> users;
  std::size_t excluded = 0;
  for (const auto& seq : test.sequences) {
    auto items = interaction_items(seq);
    if (items.empty()) {
      ++excluded;
      continue;
    }
    users.push_back(seq.user);
    histories.push_back(std::move(items));
  }
  if (histories.empty()) throw EmptyReportError("no test user has an interaction");
  std::vector<std::vector<ItemId>> lists;
  lists.reserve(histories.size());
  for (std::size_t start = 0; start < histories.size(); start += kEvalBatch) {
    const std::size_t n = std::min(kEvalBatch, histories.size() - start);
    auto part = recommend_topk_batch(
        std::span<const std::vector<ItemId>>(histories.data() + start, n), ks.back(), model);
    for (auto& l : part) lists.push_back(std::move(l));
  }
  MetricsReport r = oracle_metrics(world, users, lists, ks);
  r.excluded = excluded;
  return r;
}

SimulatorQuality evaluate_simulator(const SimulatorModel& model, const SyntheticWorld& world,
                                    const Dataset& test) {
  if (model.num_items() != world.num_items) {
    throw CatalogError("simulator catalog does not match the world catalog");
  }
  std::vector<Trajectory> windows;
  std::vector<std::size_t> owner;
  for (const auto& seq : test.sequences) {
    for (auto& w : build_training_windows(seq, RewardConfig{}, model.config().t_max,
                                          model.config().window)) {
      windows.push_back(std::move(w));
      owner.push_back(static_cast<std::size_t>(seq.user));
    }
  }
  if (windows.empty()) throw EmptyReportError("no test sequence has two or more events");
  std::vector<double> scores, truth;
  std::vector<int> labels;
  const nn::BlockOptions opts{model.config().dropout, false, nullptr};
  for (std::size_t start = 0; start < windows.size(); start += kEvalBatch) {
    const std::size_t n = std::min(kEvalBatch, windows.size() - start);
    auto batch = std::span<const Trajectory>(windows).subspan(start, n);
    ad::Tape tape(false);
    const TokenBatch tokens = embed_simulator_contexts(tape, model, batch);
    const ad::Var logits = simulator_logits(tape, model, tokens, opts);
    for (std::size_t r = 0; r < tokens.step_trajectory.size(); ++r) {
      const std::size_t ti = tokens.step_trajectory[r];
      const TrajectoryStep& st = batch[ti].steps[tokens.step_index[r]];
      scores.push_back(sigmoid(logits.value()[r]));
      labels.push_back(st.action_behavior);
      truth.push_back(world.click_probability(owner[start + ti], st.action));
    }
  }
  SimulatorQuality q;
  q.events = scores.size();
  q.auc = roc_auc(scores, labels);
  q.spearman = spearman_rho(scores, truth);
  return q;
}

double exposure_gini(const Dataset& ds) {
  if (ds.num_items < 1) throw ConfigError("gini needs a non-empty catalog");
  std::vector<double> counts(ds.num_items, 0.0);
  for (const auto& s : ds.sequences) {
    for (const auto& e : s.events) {
      if (e.item >= 1 && e.item <= ds.num_items) counts[e.item - 1] += 1.0;
    }
  }
  std::sort(counts.begin(), counts.end());
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (total == 0.0) return 0.0;
  const auto n = static_cast<double>(counts.size());
  double weighted = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) weighted += static_cast<double>(i + 1) * counts[i];
  return 2.0 * weighted / (n * total) - (n + 1.0) / n;
}

std::string serialize_world(const SyntheticWorld& w) {
  detail::ByteWriter out;
  out.raw(kWorldMagic, sizeof kWorldMagic);
  out.u32(kWorldVersion);
  out.u64(w.num_users);
  out.u64(w.num_items);
  out.u64(w.factors);
  out.u64(w.seed);
  out.f64(w.slope);
  out.f64(w.offset);
  out.f64s({w.user_factors.values().begin(), w.user_factors.values().end()});
  out.f64s({w.item_factors.values().begin(), w.item_factors.values().end()});
  out.u64(detail::fnv1a(out.bytes()));
  return out.bytes();
}

SyntheticWorld parse_world(const std::string& bytes) {
  detail::ByteReader in(bytes);
  char magic[8];
  in.raw(magic, sizeof magic);
  if (!std::equal(magic, magic + 8, kWorldMagic)) throw LoadError("not a world file");
  const std::uint32_t version = in.u32();
  if (version != kWorldVersion) {
    throw LoadError("unsupported world file version " + std::to_string(version));
  }
  SyntheticWorld w;
  w.num_users = in.u64();
  w.num_items = in.u64();
  w.factors = in.u64();
  w.seed = in.u64();
  w.slope = in.f64();
  w.offset = in.f64();
  auto uf = in.f64s();
  auto itf = in.f64s();
  const std::size_t body = in.position();
  const std::uint64_t checksum = in.u64();
  if (in.remaining() != 0) throw LoadError("trailing bytes after world data");
  if (checksum != detail::fnv1a(std::string_view(bytes).substr(0, body))) {
    throw LoadError("world file checksum mismatch");
  }
  if (uf.size() != w.num_users * w.factors || itf.size() != w.num_items * w.factors) {
    throw LoadError("world factor arrays do not match the header");
  }
  w.user_factors = NdArray({w.num_users, w.factors}, std::move(uf));
  w.item_factors = NdArray({w.num_items, w.factors}, std::move(itf));
  return w;
}

void save_world(const SyntheticWorld& world, const std::string& path) {
  detail::write_file_bytes(path, serialize_world(world));
}

SyntheticWorld load_world(const std::string& path) {
  return parse_world(detail::read_file_bytes(path));
}

}  // namespace exposurerec
