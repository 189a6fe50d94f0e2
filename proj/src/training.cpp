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


#include "exposurerec/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "exposurerec/errors.hpp"
#include "exposurerec/log.hpp"
#include "exposurerec/metrics.hpp"

namespace exposurerec {
namespace {

constexpr std::size_t kValidationBatch = 64;

template <typename StepFn>
double run_epoch(std::span<const Trajectory> examples, std::size_t batch_size, Rng& rng,
                 std::size_t* batches_out, StepFn step) {
  if (examples.empty()) throw UsageError("training epoch over an empty example set");
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng.engine());
  double total = 0.0;
  std::size_t batches = 0;
  std::vector<Trajectory> batch;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    batch.clear();
    for (std::size_t i = start; i < end; ++i) batch.push_back(examples[order[i]]);
    if (auto loss = step(std::span<const Trajectory>(batch))) {
      total += *loss;
      ++batches;
    }
  }
  if (batches_out) *batches_out = batches;
  return batches ? total / static_cast<double>(batches) : std::numeric_limits<double>::quiet_NaN();
}

// Early-stopping bookkeeping shared by both trainers; larger is better.
template <typename Model>
struct BestTracker {
  double best = -std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
  std::size_t stale = 0;
  Model model;
  nn::AdamState optimizer;

  bool update(double score, std::size_t epoch, const Model& m, const nn::AdamState& opt) {
    if (score > best) {
      best = score;
      best_epoch = epoch;
      stale = 0;
      model = m;
      optimizer = opt;
      return true;
    }
    ++stale;
    return false;
  }
};

}  // namespace

void TrainingOptions::validate() const {
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (eval_k < 1) throw ConfigError("evaluation K must be >= 1");
}

std::string TrainingReport::serialize() const {
  std::ostringstream out;
  out << "# exposurerec training report v1\n";
  out << "# best_epoch=" << best_epoch << " best_validation=" << format_double(best_validation)
      << " metric=" << (validation_metric.empty() ? "-" : validation_metric) << "\n";
  out << "epoch\tphase\tloss\tbatches\taugmented\tratio\tvalidation\n";
  for (const auto& e : epochs) {
    out << e.epoch << '\t' << e.phase << '\t' << format_double(e.loss) << '\t' << e.batches << '\t'
        << e.augmented << '\t' << format_double(e.ratio) << '\t' << format_double(e.validation)
        << '\n';
  }
  return out.str();
}

std::vector<Trajectory> recommender_examples(const Dataset& ds, const RecommenderConfig& cfg) {
  std::vector<Trajectory> out;
  for (const auto& seq : ds.sequences) {
    for (auto& w : build_training_windows(seq, cfg.reward, cfg.t_max, cfg.window)) {
      if (std::any_of(w.steps.begin(), w.steps.end(),
                      [](const TrajectoryStep& s) { return s.target_valid; })) {
        out.push_back(std::move(w));
      }
    }
  }
  return out;
}

std::vector<Trajectory> simulator_examples(const Dataset& ds, const SimulatorConfig& cfg) {
  std::vector<Trajectory> out;
  for (const auto& seq : ds.sequences) {
    for (auto& w : build_training_windows(seq, RewardConfig{}, cfg.t_max, cfg.window)) {
      out.push_back(std::move(w));
    }
  }
  return out;
}

double recommender_epoch(RecommenderModel& model, nn::AdamState& optimizer,
                         std::span<const Trajectory> examples, std::size_t batch_size, Rng& rng,
                         std::size_t* batches) {
  return run_epoch(examples, batch_size, rng, batches, [&](std::span<const Trajectory> b) {
    return training_step(model, optimizer, b, rng);
  });
}

double simulator_epoch(SimulatorModel& model, nn::AdamState& optimizer,
                       std::span<const Trajectory> examples, std::size_t batch_size, Rng& rng,
                       std::size_t* batches) {
  return run_epoch(examples, batch_size, rng, batches, [&](std::span<const Trajectory> b) {
    return std::optional<double>(simulator_training_step(model, optimizer, b, rng));
  });
}

double validation_ndcg(const RecommenderModel& model, const Dataset& valid, std::size_t k) {
  const std::size_t ks[] = {k};
  return evaluate(model, valid, ks).ndcg.at(k);
}

double simulator_validation_loss(const SimulatorModel& model,
                                 std::span<const Trajectory> examples) {
  if (examples.empty()) throw UsageError("simulator validation over an empty example set");
  double total = 0.0;
  std::size_t labels = 0;
  const nn::BlockOptions opts{model.config().dropout, false, nullptr};
  for (std::size_t start = 0; start < examples.size(); start += kValidationBatch) {
    const std::size_t n = std::min(kValidationBatch, examples.size() - start);
    auto batch = examples.subspan(start, n);
    std::size_t count = 0;
    for (const auto& t : batch) count += t.size();
    ad::Tape tape(false);
    total += simulator_loss(tape, model, batch, opts).value()[0] * static_cast<double>(count);
    labels += count;
  }
  return total / static_cast<double>(labels);
}

TrainingReport train_recommender(RecommenderModel& model, nn::AdamState& optimizer,
                                 const Dataset& train, const Dataset* valid,
                                 const TrainingOptions& options) {
  options.validate();
  const auto examples = recommender_examples(train, model.config());
  if (examples.empty()) throw InputError("training set has no trajectory with a relabeled target");
  Rng rng(options.seed);
  TrainingReport report;
  report.validation_metric = "ndcg@" + std::to_string(options.eval_k);
  BestTracker<RecommenderModel> best;
  for (std::size_t epoch = 1; epoch <= options.max_epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.phase = "base";
    rec.loss = recommender_epoch(model, optimizer, examples, options.batch_size, rng, &rec.batches);
    if (valid) {
      rec.validation = validation_ndcg(model, *valid, options.eval_k);
      best.update(rec.validation, epoch, model, optimizer);
    }
    log::info("recommender epoch " + std::to_string(epoch) + " loss " + format_double(rec.loss) +
              (valid ? " valid " + format_double(rec.validation) : ""));
    report.epochs.push_back(rec);
    if (valid && best.stale >= options.patience) break;
  }
  if (valid && best.best_epoch > 0) {
    model = std::move(best.model);
    optimizer = std::move(best.optimizer);
    report.best_epoch = best.best_epoch;
    report.best_validation = best.best;
  } else if (!report.epochs.empty()) {
    report.best_epoch = report.epochs.back().epoch;
  }
  return report;
}

TrainingReport train_simulator(SimulatorModel& model, nn::AdamState& optimizer,
                               const Dataset& train, const Dataset* valid,
                               const TrainingOptions& options) {
  options.validate();
  const auto examples = simulator_examples(train, model.config());
  if (examples.empty()) throw InputError("training set has no sequence of length >= 2");
  std::vector<Trajectory> valid_examples;
  if (valid) valid_examples = simulator_examples(*valid, model.config());
  const bool validate = !valid_examples.empty();
  Rng rng(options.seed);
  TrainingReport report;
  report.validation_metric = "bce";
  BestTracker<SimulatorModel> best;
  for (std::size_t epoch = 1; epoch <= options.max_epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.phase = "simulator";
    rec.loss = simulator_epoch(model, optimizer, examples, options.batch_size, rng, &rec.batches);
    if (validate) {
      rec.validation = simulator_validation_loss(model, valid_examples);
      best.update(-rec.validation, epoch, model, optimizer);
    }
    log::info("simulator epoch " + std::to_string(epoch) + " loss " + format_double(rec.loss) +
              (validate ? " valid " + format_double(rec.validation) : ""));
    report.epochs.push_back(rec);
    if (validate && best.stale >= options.patience) break;
  }
  if (validate && best.best_epoch > 0) {
    model = std::move(best.model);
    optimizer = std::move(best.optimizer);
    report.best_epoch = best.best_epoch;
    report.best_validation = -best.best;
  } else if (!report.epochs.empty()) {
    report.best_epoch = report.epochs.back().epoch;
  }
  return report;
}

}  // namespace exposurerec
