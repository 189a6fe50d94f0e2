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


#include "exposurerec/experiment.hpp"

#include <algorithm>
#include <filesystem>
#include <sstream>

#include "binary_io.hpp"
#include "exposurerec/augmentation.hpp"
#include "exposurerec/errors.hpp"
#include "exposurerec/log.hpp"

namespace exposurerec {
namespace {

enum Stream : std::uint64_t {
  kWorldStream = 1,
  kLogStream,
  kSplitStream,
  kSimInitStream,
  kSimTrainStream,
  kRecInitStream,
  kRecTrainStream,
  kAugmentStream,
};

std::string run_name(const RunRecord& r) {
  std::ostringstream out;
  out << "seed" << r.seed << "_split" << r.split << "_" << strategy_name(r.strategy);
  if (r.strategy != Strategy::kNone) out << "_delta" << format_double(r.delta);
  return out.str();
}

void evaluate_into(RunRecord& rec, const RecommenderModel& model, const Dataset& test,
                   const SyntheticWorld* world, const ExperimentConfig& cfg) {
  rec.logged = evaluate(model, test, cfg.ks);
  rec.logged.seed = rec.seed;
  rec.logged.fingerprint = cfg.fingerprint();
  if (world) {
    rec.oracle = ground_truth_eval(model, *world, test, cfg.ks);
    rec.oracle->seed = rec.seed;
    rec.oracle->fingerprint = rec.logged.fingerprint;
  }
}

}  // namespace

std::uint64_t derived_seed(std::uint64_t seed, std::size_t split, std::uint64_t stream) {
  return mix_seed(mix_seed(seed, split), stream);
}

std::vector<ReportEntry> ExperimentResult::entries() const {
  std::vector<ReportEntry> out;
  for (const auto& r : runs) {
    out.push_back({strategy_name(r.strategy), r.delta, r.logged});
    if (r.oracle) out.push_back({strategy_name(r.strategy), r.delta, *r.oracle});
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentResult result;
  std::optional<Dataset> logged;
  std::optional<SyntheticWorld> file_world;
  if (!cfg.log_path.empty()) logged = load_exposure_log(cfg.log_path);
  if (!cfg.world_path.empty()) file_world = load_world(cfg.world_path);

  for (std::uint64_t seed : cfg.seeds) {
    std::optional<SyntheticWorld> world = file_world;
    Dataset data;
    if (logged) {
      data = *logged;
    } else {
      world = generate_world(cfg.synthetic.users, cfg.synthetic.items, cfg.synthetic.factors,
                             derived_seed(seed, 0, kWorldStream), cfg.synthetic.world);
      data = simulate_logs(*world, cfg.synthetic.policy, cfg.synthetic.steps,
                           derived_seed(seed, 0, kLogStream));
    }
    for (std::size_t split = 0; split < cfg.splits; ++split) {
      auto parts = split_dataset(data, cfg.split_ratios, derived_seed(seed, split, kSplitStream));
      const Dataset& train = parts[0];
      const Dataset& valid = parts[1];
      const Dataset& test = parts[2];
      const SyntheticWorld* w = world ? &*world : nullptr;

      const bool augmenting = std::any_of(cfg.strategies.begin(), cfg.strategies.end(),
                                          [](Strategy s) { return s != Strategy::kNone; });
      SimulatorModel sim;
      if (augmenting || w) {
        SimulatorConfig sc = cfg.simulator;
        sc.num_items = data.num_items;
        Rng init(derived_seed(seed, split, kSimInitStream));
        sim = SimulatorModel(sc, init);
        nn::AdamState opt = nn::make_adam(sc.learning_rate);
        TrainingOptions to = cfg.simulator_training;
        to.seed = derived_seed(seed, split, kSimTrainStream);
        SimulatorRecord srec;
        srec.seed = seed;
        srec.split = split;
        log::info("seed " + std::to_string(seed) + ": training simulator");
        srec.training = train_simulator(sim, opt, train, &valid, to);
        if (w) srec.quality = evaluate_simulator(sim, *w, test);
        result.simulators.push_back(std::move(srec));
      }

      RecommenderConfig rc = cfg.recommender;
      rc.num_items = data.num_items;
      Rng init(derived_seed(seed, split, kRecInitStream));
      RecommenderModel base(rc, init);
      nn::AdamState base_opt = nn::make_adam(rc.learning_rate);
      TrainingOptions to = cfg.training;
      to.seed = derived_seed(seed, split, kRecTrainStream);
      log::info("seed " + std::to_string(seed) + ": training baseline recommender");
      TrainingReport base_report = train_recommender(base, base_opt, train, &valid, to);

      for (Strategy strategy : cfg.strategies) {
        const std::vector<double> none_delta{0.0};
        const auto& deltas = strategy == Strategy::kNone ? none_delta : cfg.deltas;
        for (std::size_t di = 0; di < deltas.size(); ++di) {
          RunRecord rec;
          rec.seed = seed;
          rec.split = split;
          rec.strategy = strategy;
          rec.delta = deltas[di];
          rec.train_sequences = train.size();
          if (strategy == Strategy::kNone) {
            rec.training = base_report;
            evaluate_into(rec, base, test, w, cfg);
          } else {
            RecommenderModel model = base;
            nn::AdamState opt = base_opt;
            AugmentationConfig ac = cfg.augmentation;
            ac.strategy = strategy;
            ac.delta = deltas[di];
            ac.seed = derived_seed(seed, split, kAugmentStream + 16 * static_cast<int>(strategy) + di);
            log::info("seed " + std::to_string(seed) + ": " + strategy_name(strategy) +
                      " delta " + format_double(ac.delta));
            auto res = run_caserec_training(model, opt, sim, train, valid, ac, to, true);
            rec.training = base_report;
            rec.training.epochs.insert(rec.training.epochs.end(), res.report.epochs.begin(),
                                       res.report.epochs.end());
            rec.training.best_epoch = res.report.best_epoch;
            rec.training.best_validation = res.report.best_validation;
            rec.training.validation_metric = res.report.validation_metric;
            evaluate_into(rec, model, test, w, cfg);
          }
          result.runs.push_back(std::move(rec));
        }
      }
    }
  }
  return result;
}

void write_experiment(const ExperimentResult& result, const ExperimentConfig& cfg,
                      const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path root(dir);
  ExperimentConfig located = cfg;
  located.output_dir.clear();
  detail::write_file_bytes((root / "config.ini").string(), located.serialize());
  const auto entries = result.entries();
  detail::write_file_bytes((root / "runs.tsv").string(), runs_table(entries));
  detail::write_file_bytes((root / "summary.tsv").string(), summary_table(entries));
  for (Strategy s : cfg.strategies) {
    if (s == Strategy::kNone) continue;
    const std::size_t k = cfg.training.eval_k;
    detail::write_file_bytes((root / ("sweep_" + strategy_name(s) + ".tsv")).string(),
                             delta_sweep_table(entries, strategy_name(s), k));
  }
  std::ostringstream sim;
  sim << "seed\tsplit\tbest_epoch\tvalid_bce\tauc\tspearman\tevents\n";
  for (const auto& s : result.simulators) {
    sim << s.seed << '\t' << s.split << '\t' << s.training.best_epoch << '\t'
        << format_double(s.training.best_validation) << '\t'
        << (s.quality ? format_double(s.quality->auc) : "nan") << '\t'
        << (s.quality ? format_double(s.quality->spearman) : "nan") << '\t'
        << (s.quality ? s.quality->events : 0) << '\n';
  }
  detail::write_file_bytes((root / "simulator.tsv").string(), sim.str());
  const fs::path runs = root / "runs";
  fs::create_directories(runs);
  for (const auto& r : result.runs) {
    const std::string name = run_name(r);
    save_metrics(r.logged, (runs / (name + ".metrics.tsv")).string());
    if (r.oracle) save_metrics(*r.oracle, (runs / (name + ".oracle.tsv")).string());
    detail::write_file_bytes((runs / (name + ".training.tsv")).string(), r.training.serialize());
  }
}

}  // namespace exposurerec
