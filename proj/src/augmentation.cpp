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


#include "exposurerec/augmentation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "exposurerec/errors.hpp"
#include "exposurerec/log.hpp"
#include "exposurerec/metrics.hpp"

namespace exposurerec {
namespace {

constexpr int kSnapAttempts = 10;
constexpr std::size_t kGenerationBatch = 64;

ItemId uniform_other(std::size_t catalog_size, ItemId exclude, Rng& rng) {
  auto v = static_cast<ItemId>(rng.uniform_int(1, static_cast<long>(catalog_size) - 1));
  return v >= exclude ? v + 1 : v;
}

void require_trained(const GenerationSettings& s, const RecommenderModel& rec,
                     const SimulatorModel& sim) {
  if (sim.training_steps == 0) throw UsageError("counterfactual labels need a trained simulator");
  if (s.strategy == Strategy::kSelfImproving && rec.training_steps == 0) {
    throw UsageError("self-improving generation needs a trained recommender");
  }
  if (s.strategy == Strategy::kNone) throw ConfigError("no augmentation strategy selected");
  if (s.h < 1) throw ConfigError("generation length h must be >= 1");
  if (rec.num_items() != sim.num_items()) {
    throw CatalogError("recommender and simulator catalogs differ");
  }
}

}  // namespace

std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kNone: return "none";
    case Strategy::kRandom: return "random";
    case Strategy::kSelfImproving: return "self-improving";
  }
  return "none";
}

Strategy parse_strategy(const std::string& name) {
  if (name == "none") return Strategy::kNone;
  if (name == "random") return Strategy::kRandom;
  if (name == "self-improving") return Strategy::kSelfImproving;
  throw ConfigError("unknown augmentation strategy '" + name + "'");
}

void AugmentationConfig::validate() const {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw ConfigError("delta must be positive");
  if (h < 1) throw ConfigError("h must be >= 1");
  if (std::isnan(sigma)) throw ConfigError("sigma must be a number");
}

ItemId sample_replacement_random(std::size_t catalog_size, Rng& rng) {
  if (catalog_size < 1) throw ConfigError("cannot sample from an empty catalog");
  return static_cast<ItemId>(rng.uniform_int(1, static_cast<long>(catalog_size)));
}

double default_sigma(const NdArray& emb) {
  if (emb.rows() < 2) throw ConfigError("embedding table has no real item");
  double s = 0.0;
  for (std::size_t r = 1; r < emb.rows(); ++r) {
    for (double x : emb.row(r)) s += x * x;
  }
  return 0.1 * std::sqrt(s / static_cast<double>((emb.rows() - 1) * emb.cols()));
}

ItemId snap_to_nearest(std::span<const double> vec, ItemId exclude, const NdArray& emb) {
  const std::size_t d = emb.cols();
  if (vec.size() != d) throw DimensionError("snap vector width does not match the embedding");
  if (emb.rows() < 3) throw ConfigError("snapping needs a catalog of at least 2 items");
  double vnorm = 0.0;
  for (double x : vec) vnorm += x * x;
  vnorm = std::sqrt(vnorm);
  ItemId best = kPaddingItem;
  double best_sim = -std::numeric_limits<double>::infinity();
  for (std::size_t r = 1; r < emb.rows(); ++r) {
    if (r == exclude) continue;
    const auto row = emb.row(r);
    double dot = 0.0, rnorm = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      dot += row[j] * vec[j];
      rnorm += row[j] * row[j];
    }
    const double denom = std::sqrt(rnorm) * vnorm;
    const double sim = denom > 0.0 ? dot / denom : 0.0;
    if (sim > best_sim) {
      best_sim = sim;
      best = static_cast<ItemId>(r);
    }
  }
  return best;
}

ItemId perturb_and_snap(ItemId item, const NdArray& emb, double sigma, Rng& rng) {
  if (!(sigma >= 0.0)) throw ConfigError("sigma must be >= 0");
  if (emb.rows() < 3) throw ConfigError("snapping needs a catalog of at least 2 items");
  if (item == kPaddingItem || item >= emb.rows()) {
    throw CatalogError("item " + std::to_string(item) + " outside the embedding table");
  }
  const auto base = emb.row(item);
  std::vector<double> e(base.size());
  for (int attempt = 0; attempt < kSnapAttempts; ++attempt) {
    double norm = 0.0;
    for (std::size_t j = 0; j < e.size(); ++j) {
      e[j] = base[j] + (sigma > 0.0 ? rng.normal(0.0, sigma) : 0.0);
      norm += e[j] * e[j];
    }
    if (norm > 0.0) return snap_to_nearest(e, item, emb);
  }
  log::warn("perturbed embedding stayed at zero norm; using a uniform replacement");
  return uniform_other(emb.rows() - 1, item, rng);
}

ExposureSequence generate_counterfactual_sequence(const ExposureSequence& prefix, ItemId original,
                                                  const GenerationSettings& settings,
                                                  const RecommenderModel& recommender,
                                                  const SimulatorModel& simulator, Rng& rng) {
  return generate_counterfactual_batch(std::span<const ExposureSequence>(&prefix, 1),
                                       std::span<const ItemId>(&original, 1), settings,
                                       recommender, simulator, std::span<Rng>(&rng, 1))
      .front();
}

std::vector<ExposureSequence> generate_counterfactual_batch(
    std::span<const ExposureSequence> prefixes, std::span<const ItemId> originals,
    const GenerationSettings& settings, const RecommenderModel& recommender,
    const SimulatorModel& simulator, std::span<Rng> rngs) {
  require_trained(settings, recommender, simulator);
  const std::size_t n = prefixes.size();
  if (originals.size() != n || rngs.size() != n) {
    throw DimensionError("prefixes, originals and generators must have equal counts");
  }
  const std::size_t catalog = recommender.num_items();
  const auto& emb = recommender.backbone.item_embedding.value;
  std::vector<ExposureSequence> out(prefixes.begin(), prefixes.end());
  for (const auto& p : out) {
    if (p.events.empty()) throw InputError("counterfactual prefix must be non-empty");
  }
  const auto& rc = recommender.config();
  const auto& sc = simulator.config();
  std::vector<ItemId> candidates(n);
  std::vector<Trajectory> contexts(n);
  for (std::size_t step = 0; step < settings.h; ++step) {
    if (step == 0) {
      for (std::size_t i = 0; i < n; ++i) {
        candidates[i] = settings.strategy == Strategy::kRandom
                            ? sample_replacement_random(catalog, rngs[i])
                            : perturb_and_snap(originals[i], emb, settings.sigma, rngs[i]);
      }
    } else if (settings.strategy == Strategy::kRandom) {
      for (std::size_t i = 0; i < n; ++i) candidates[i] = sample_replacement_random(catalog, rngs[i]);
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        contexts[i] = build_inference_trajectory(out[i], rc.reward, rc.t_max, rc.window);
      }
      const NdArray logits = final_step_logits(recommender, contexts);
      for (std::size_t i = 0; i < n; ++i) {
        candidates[i] = sample_from_logits(logits.row(i), settings.sampling, rngs[i]);
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      contexts[i] = simulator_context(out[i], candidates[i], sc.t_max, sc.window);
    }
    const auto probs = forward_reward_batch(contexts, simulator);
    for (std::size_t i = 0; i < n; ++i) {
      const int b = feedback_from_probability(probs[i], settings.feedback, rngs[i]);
      out[i].events.push_back({candidates[i], b, std::nullopt});
    }
  }
  return out;
}

std::size_t augmented_target_size(std::size_t n, double delta) {
  if (n == 0) throw InputError("augmentation source dataset is empty");
  std::size_t m = 0;
  while (static_cast<double>(m) / static_cast<double>(n) < delta) ++m;
  return std::max<std::size_t>(m, 1);
}

Dataset build_augmented_dataset(const Dataset& train, const AugmentationConfig& cfg,
                                const RecommenderModel& recommender,
                                const SimulatorModel& simulator, Rng& rng) {
  cfg.validate();
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < train.sequences.size(); ++i) {
    if (train.sequences[i].events.size() >= 2) eligible.push_back(i);
  }
  if (eligible.empty()) throw InputError("no training sequence is long enough to augment");
  const std::size_t target = augmented_target_size(train.sequences.size(), cfg.delta);

  GenerationSettings settings;
  settings.strategy = cfg.strategy;
  settings.h = cfg.h;
  settings.sampling = cfg.sampling;
  settings.feedback = cfg.feedback;
  const auto& emb = recommender.backbone.item_embedding.value;
  settings.sigma = cfg.sigma < 0.0 ? default_sigma(emb) : cfg.sigma;

  // Sources, cut points and per-sequence generators are all drawn up front so
  // that batching does not change the result.
  std::vector<ExposureSequence> prefixes;
  std::vector<ItemId> originals;
  std::vector<Rng> rngs;
  prefixes.reserve(target);
  std::vector<std::size_t> order;
  std::size_t cursor = 0;
  for (std::size_t m = 0; m < target; ++m) {
    if (cursor == order.size()) {
      order = eligible;
      std::shuffle(order.begin(), order.end(), rng.engine());
      cursor = 0;
    }
    const ExposureSequence& src = train.sequences[order[cursor++]];
    const std::size_t len = src.events.size();
    const auto k = static_cast<std::size_t>(
        rng.uniform_int(2, static_cast<long>(std::max<std::size_t>(2, len - 1))));
    ExposureSequence prefix;
    prefix.user = src.user;
    prefix.events.assign(src.events.begin(), src.events.begin() + static_cast<long>(k - 1));
    prefixes.push_back(std::move(prefix));
    originals.push_back(src.events[k - 1].item);
    rngs.emplace_back(rng.next_u64());
  }

  Dataset aug;
  aug.num_items = train.num_items;
  aug.split = train.split;
  aug.comments.push_back("augmentation strategy=" + strategy_name(cfg.strategy) +
                         " delta=" + format_double(cfg.delta) + " h=" + std::to_string(cfg.h) +
                         " sigma=" + format_double(settings.sigma) +
                         " seed=" + std::to_string(cfg.seed));
  aug.sequences.reserve(target);
  for (std::size_t start = 0; start < target; start += kGenerationBatch) {
    const std::size_t n = std::min(kGenerationBatch, target - start);
    auto part = generate_counterfactual_batch(
        std::span<const ExposureSequence>(prefixes.data() + start, n),
        std::span<const ItemId>(originals.data() + start, n), settings, recommender, simulator,
        std::span<Rng>(rngs.data() + start, n));
    for (auto& s : part) aug.sequences.push_back(std::move(s));
  }
  return aug;
}

CaseRecResult run_caserec_training(RecommenderModel& model, nn::AdamState& optimizer,
                                   const SimulatorModel& simulator, const Dataset& train,
                                   const Dataset& valid, const AugmentationConfig& cfg,
                                   const TrainingOptions& options, bool pretrained) {
  cfg.validate();
  options.validate();
  if (train.sequences.empty()) throw InputError("training set is empty");
  CaseRecResult result;
  if (!pretrained) {
    result.report = train_recommender(model, optimizer, train, &valid, options);
  } else {
    result.report.validation_metric = "ndcg@" + std::to_string(options.eval_k);
  }
  if (cfg.strategy == Strategy::kNone || cfg.max_epochs == 0) return result;

  const auto base_examples = recommender_examples(train, model.config());
  Rng rng(mix_seed(cfg.seed, 0xa6a6ULL));
  std::size_t epoch = result.report.epochs.size();
  double best = -std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0, stale = 0;
  RecommenderModel best_model;
  nn::AdamState best_optimizer;
  Dataset best_aug;
  for (std::size_t round = 1; round <= cfg.max_epochs; ++round) {
    Dataset aug = build_augmented_dataset(train, cfg, model, simulator, rng);
    std::vector<Trajectory> examples;
    if (cfg.include_original) examples = base_examples;
    for (auto& t : recommender_examples(aug, model.config())) examples.push_back(std::move(t));
    if (examples.empty()) throw InputError("augmented epoch has no trainable trajectory");

    EpochRecord rec;
    rec.epoch = ++epoch;
    rec.phase = "augment";
    rec.augmented = aug.sequences.size();
    rec.ratio = static_cast<double>(aug.sequences.size()) /
                static_cast<double>(train.sequences.size());
    rec.loss = recommender_epoch(model, optimizer, examples, options.batch_size, rng, &rec.batches);
    rec.validation = validation_ndcg(model, valid, options.eval_k);
    log::info("augment epoch " + std::to_string(round) + " |D_aug| " +
              std::to_string(rec.augmented) + " loss " + format_double(rec.loss) + " valid " +
              format_double(rec.validation));
    result.report.epochs.push_back(rec);
    if (rec.validation > best) {
      best = rec.validation;
      best_epoch = rec.epoch;
      stale = 0;
      best_model = model;
      best_optimizer = optimizer;
      best_aug = std::move(aug);
    } else if (++stale >= options.patience) {
      break;
    }
  }
  model = std::move(best_model);
  optimizer = std::move(best_optimizer);
  result.report.best_epoch = best_epoch;
  result.report.best_validation = best;
  result.last_augmented = std::move(best_aug);
  return result;
}

}  // namespace exposurerec
