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


#include "exposurerec/exposurerec.h"

#include <cstdlib>
#include <cstring>
#include <map>
#include <memory>
#include <new>
#include <string>
#include <utility>

#include "exposurerec/augmentation.hpp"
#include "exposurerec/checkpoint.hpp"
#include "exposurerec/config.hpp"
#include "exposurerec/errors.hpp"
#include "exposurerec/experiment.hpp"
#include "exposurerec/log.hpp"
#include "exposurerec/metrics.hpp"
#include "exposurerec/report.hpp"
#include "exposurerec/synthetic.hpp"
#include "exposurerec/training.hpp"

namespace er = exposurerec;

struct exrec_dataset {
  er::Dataset value;
};
struct exrec_world {
  er::SyntheticWorld value;
};
struct exrec_recommender {
  er::RecommenderModel value;
};
struct exrec_simulator {
  er::SimulatorModel value;
};
struct exrec_metrics {
  er::MetricsReport value;
};

namespace {

thread_local std::string g_last_error;

struct NullArgument : er::UsageError {
  using er::UsageError::UsageError;
};

exrec_status status_of(er::ErrorKind kind) {
  switch (kind) {
    case er::ErrorKind::kDimension: return EXREC_ERR_DIMENSION;
    case er::ErrorKind::kDomain: return EXREC_ERR_DOMAIN;
    case er::ErrorKind::kConfig: return EXREC_ERR_CONFIG;
    case er::ErrorKind::kParse: return EXREC_ERR_PARSE;
    case er::ErrorKind::kCatalog: return EXREC_ERR_CATALOG;
    case er::ErrorKind::kIndex: return EXREC_ERR_INDEX;
    case er::ErrorKind::kUsage: return EXREC_ERR_USAGE;
    case er::ErrorKind::kLoad: return EXREC_ERR_LOAD;
    case er::ErrorKind::kInput: return EXREC_ERR_INPUT;
    case er::ErrorKind::kEmpty: return EXREC_ERR_EMPTY;
    case er::ErrorKind::kIo: return EXREC_ERR_IO;
  }
  return EXREC_ERR_INTERNAL;
}

template <typename Fn>
exrec_status guard(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return EXREC_OK;
  } catch (const NullArgument& e) {
    g_last_error = e.what();
    return EXREC_ERR_NULL_ARGUMENT;
  } catch (const er::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return EXREC_ERR_INTERNAL;
}

void require(const void* p, const char* name) {
  if (!p) throw NullArgument(std::string(name) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

template <typename Handle, typename T>
void emit(Handle** out, T&& value) {
  *out = new Handle{std::forward<T>(value)};
}

template <typename Config>
void apply_model(const exrec_model_params& p, Config& c) {
  c.d = p.d;
  c.layers = p.layers;
  c.heads = p.heads;
  c.t_max = p.t_max;
  c.window = p.window;
  c.dropout = p.dropout;
  c.learning_rate = p.learning_rate;
}

er::TrainingOptions to_training(const exrec_train_params& p) {
  er::TrainingOptions t;
  t.max_epochs = p.max_epochs;
  t.patience = p.patience;
  t.batch_size = p.batch_size;
  t.eval_k = p.eval_k;
  t.seed = p.seed;
  return t;
}

}  // namespace

extern "C" {

const char* exrec_version(void) { return "0.1.0"; }

const char* exrec_status_name(exrec_status status) {
  switch (status) {
    case EXREC_OK: return "ok";
    case EXREC_ERR_DIMENSION: return "dimension error";
    case EXREC_ERR_DOMAIN: return "domain error";
    case EXREC_ERR_CONFIG: return "configuration error";
    case EXREC_ERR_PARSE: return "parse error";
    case EXREC_ERR_CATALOG: return "catalog error";
    case EXREC_ERR_INDEX: return "index error";
    case EXREC_ERR_USAGE: return "usage error";
    case EXREC_ERR_LOAD: return "load error";
    case EXREC_ERR_INPUT: return "input error";
    case EXREC_ERR_EMPTY: return "empty report";
    case EXREC_ERR_IO: return "i/o error";
    case EXREC_ERR_NULL_ARGUMENT: return "null argument";
    case EXREC_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* exrec_last_error(void) { return g_last_error.c_str(); }

void exrec_string_free(char* s) { std::free(s); }

void exrec_set_log_level(int level) {
  er::log::set_level(level <= 0   ? er::log::Level::kSilent
                     : level == 1 ? er::log::Level::kWarning
                                  : er::log::Level::kInfo);
}

// ---------------------------------------------------------------- datasets

exrec_status exrec_dataset_load(const char* path, exrec_dataset** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    emit(out, er::load_exposure_log(path));
  });
}

exrec_status exrec_dataset_parse(const char* text, exrec_dataset** out) {
  return guard([&] {
    require(text, "text");
    require(out, "out");
    emit(out, er::parse_exposure_log(text));
  });
}

exrec_status exrec_dataset_save(const exrec_dataset* ds, const char* path) {
  return guard([&] {
    require(ds, "dataset");
    require(path, "path");
    er::save_exposure_log(ds->value, path);
  });
}

exrec_status exrec_dataset_serialize(const exrec_dataset* ds, char** out) {
  return guard([&] {
    require(ds, "dataset");
    require(out, "out");
    *out = dup_string(er::serialize_exposure_log(ds->value));
  });
}

size_t exrec_dataset_size(const exrec_dataset* ds) { return ds ? ds->value.size() : 0; }
size_t exrec_dataset_num_items(const exrec_dataset* ds) { return ds ? ds->value.num_items : 0; }

exrec_status exrec_dataset_split(const exrec_dataset* ds, double train, double valid, double test,
                                 uint64_t seed, exrec_dataset** train_out,
                                 exrec_dataset** valid_out, exrec_dataset** test_out) {
  return guard([&] {
    require(ds, "dataset");
    require(train_out, "train_out");
    require(valid_out, "valid_out");
    require(test_out, "test_out");
    auto parts = er::split_dataset(ds->value, {train, valid, test}, seed);
    auto a = std::make_unique<exrec_dataset>(exrec_dataset{std::move(parts[0])});
    auto b = std::make_unique<exrec_dataset>(exrec_dataset{std::move(parts[1])});
    auto c = std::make_unique<exrec_dataset>(exrec_dataset{std::move(parts[2])});
    *train_out = a.release();
    *valid_out = b.release();
    *test_out = c.release();
  });
}

void exrec_dataset_free(exrec_dataset* ds) { delete ds; }

// ---------------------------------------------------------------- worlds

void exrec_world_params_default(exrec_world_params* p) {
  if (!p) return;
  const er::WorldOptions o;
  *p = {500, 200, 8, o.slope, o.target_click_rate, 1};
}

void exrec_policy_params_default(exrec_policy_params* p) {
  if (!p) return;
  *p = {EXREC_POLICY_BIASED, 1.0, 1};
}

exrec_status exrec_world_generate(const exrec_world_params* p, exrec_world** out) {
  return guard([&] {
    require(p, "params");
    require(out, "out");
    er::WorldOptions o;
    o.slope = p->slope;
    o.target_click_rate = p->target_click_rate;
    emit(out, er::generate_world(p->users, p->items, p->factors, p->seed, o));
  });
}

exrec_status exrec_world_load(const char* path, exrec_world** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    emit(out, er::load_world(path));
  });
}

exrec_status exrec_world_save(const exrec_world* w, const char* path) {
  return guard([&] {
    require(w, "world");
    require(path, "path");
    er::save_world(w->value, path);
  });
}

exrec_status exrec_world_click_probability(const exrec_world* w, size_t user, uint32_t item,
                                           double* out) {
  return guard([&] {
    require(w, "world");
    require(out, "out");
    *out = w->value.click_probability(user, item);
  });
}

exrec_status exrec_world_simulate(const exrec_world* w, const exrec_policy_params* policy,
                                  size_t steps, uint64_t seed, exrec_dataset** out) {
  return guard([&] {
    require(w, "world");
    require(policy, "policy");
    require(out, "out");
    er::LoggingPolicy lp;
    lp.kind = policy->kind == EXREC_POLICY_UNIFORM ? er::PolicyKind::kUniform
                                                   : er::PolicyKind::kBiasedSoftmax;
    lp.temperature = policy->temperature;
    lp.slate_size = policy->slate_size;
    emit(out, er::simulate_logs(w->value, lp, steps, seed));
  });
}

void exrec_world_free(exrec_world* w) { delete w; }

// ---------------------------------------------------------------- models

void exrec_model_params_default(exrec_model_params* p) {
  if (!p) return;
  const er::RecommenderConfig c;
  *p = {c.d,       c.layers,        c.heads,        c.t_max,        c.window, c.dropout,
        c.learning_rate, c.reward.r_uni, c.reward.r_int, c.reward.gamma, 0};
}

void exrec_train_params_default(exrec_train_params* p) {
  if (!p) return;
  const er::TrainingOptions t;
  *p = {t.max_epochs, t.patience, t.batch_size, t.eval_k, t.seed};
}

void exrec_augment_params_default(exrec_augment_params* p) {
  if (!p) return;
  const er::AugmentationConfig a;
  *p = {EXREC_STRATEGY_SELF_IMPROVING, a.delta, a.h, a.sigma, a.max_epochs, a.seed, 1, 0,
        a.sampling.temperature, 0};
}

exrec_status exrec_simulator_train(const exrec_model_params* model,
                                   const exrec_train_params* train,
                                   const exrec_dataset* train_set, const exrec_dataset* valid_set,
                                   exrec_simulator** out, char** report) {
  return guard([&] {
    require(model, "model params");
    require(train, "train params");
    require(train_set, "train set");
    require(out, "out");
    er::SimulatorConfig c;
    apply_model(*model, c);
    c.num_items = train_set->value.num_items;
    er::Rng init(model->init_seed);
    er::SimulatorModel sim(c, init);
    auto opt = er::nn::make_adam(c.learning_rate);
    auto rep = er::train_simulator(sim, opt, train_set->value,
                                   valid_set ? &valid_set->value : nullptr, to_training(*train));
    char* text = report ? dup_string(rep.serialize()) : nullptr;
    emit(out, std::move(sim));
    if (report) *report = text;
  });
}

exrec_status exrec_simulator_load(const char* path, exrec_simulator** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    emit(out, er::load_simulator(path));
  });
}

exrec_status exrec_simulator_save(const exrec_simulator* sim, const char* path) {
  return guard([&] {
    require(sim, "simulator");
    require(path, "path");
    er::save_checkpoint(sim->value, path);
  });
}

exrec_status exrec_simulator_predict(const exrec_simulator* sim, const uint32_t* items,
                                     const int* behaviors, size_t n, uint32_t candidate,
                                     double* out) {
  return guard([&] {
    require(sim, "simulator");
    require(out, "out");
    if (n > 0) {
      require(items, "items");
      require(behaviors, "behaviors");
    }
    er::ExposureSequence prefix;
    for (size_t i = 0; i < n; ++i) {
      if (items[i] == er::kPaddingItem || items[i] > sim->value.num_items()) {
        throw er::CatalogError("item " + std::to_string(items[i]) + " outside the catalog");
      }
      if (behaviors[i] != 0 && behaviors[i] != 1) throw er::DomainError("behavior must be 0 or 1");
      prefix.events.push_back({items[i], behaviors[i], std::nullopt});
    }
    if (candidate == er::kPaddingItem || candidate > sim->value.num_items()) {
      throw er::CatalogError("candidate outside the catalog");
    }
    const auto& c = sim->value.config();
    *out = er::forward_reward(er::simulator_context(prefix, candidate, c.t_max, c.window),
                              sim->value);
  });
}

exrec_status exrec_simulator_quality(const exrec_simulator* sim, const exrec_world* w,
                                     const exrec_dataset* test, double* auc, double* spearman) {
  return guard([&] {
    require(sim, "simulator");
    require(w, "world");
    require(test, "test set");
    auto q = er::evaluate_simulator(sim->value, w->value, test->value);
    if (auc) *auc = q.auc;
    if (spearman) *spearman = q.spearman;
  });
}

void exrec_simulator_free(exrec_simulator* sim) { delete sim; }

exrec_status exrec_recommender_train(const exrec_model_params* model,
                                     const exrec_train_params* train,
                                     const exrec_augment_params* augment,
                                     const exrec_simulator* sim, const exrec_dataset* train_set,
                                     const exrec_dataset* valid_set, exrec_recommender** out,
                                     char** report, exrec_dataset** augmented) {
  return guard([&] {
    require(model, "model params");
    require(train, "train params");
    require(train_set, "train set");
    require(out, "out");
    er::RecommenderConfig c;
    apply_model(*model, c);
    c.reward = {model->r_uni, model->r_int, model->gamma};
    c.num_items = train_set->value.num_items;
    er::Rng init(model->init_seed);
    er::RecommenderModel rec(c, init);
    auto opt = er::nn::make_adam(c.learning_rate);
    const er::TrainingOptions to = to_training(*train);
    er::TrainingReport rep;
    std::unique_ptr<exrec_dataset> aug_out;
    if (!augment || augment->strategy == EXREC_STRATEGY_NONE) {
      rep = er::train_recommender(rec, opt, train_set->value,
                                  valid_set ? &valid_set->value : nullptr, to);
    } else {
      require(sim, "simulator");
      require(valid_set, "validation set");
      er::AugmentationConfig ac;
      ac.strategy = augment->strategy == EXREC_STRATEGY_RANDOM ? er::Strategy::kRandom
                                                               : er::Strategy::kSelfImproving;
      ac.delta = augment->delta;
      ac.h = augment->h;
      ac.sigma = augment->sigma;
      ac.max_epochs = augment->max_epochs;
      ac.seed = augment->seed;
      ac.include_original = augment->include_original != 0;
      ac.sampling.mode = augment->greedy ? er::SamplingMode::kGreedy : er::SamplingMode::kCategorical;
      ac.sampling.temperature = augment->temperature;
      ac.feedback = augment->threshold_feedback ? er::FeedbackMode::kThreshold
                                                : er::FeedbackMode::kSample;
      auto base = er::train_recommender(rec, opt, train_set->value, &valid_set->value, to);
      auto res = er::run_caserec_training(rec, opt, sim->value, train_set->value,
                                          valid_set->value, ac, to, true);
      rep = base;
      rep.epochs.insert(rep.epochs.end(), res.report.epochs.begin(), res.report.epochs.end());
      rep.best_epoch = res.report.best_epoch;
      rep.best_validation = res.report.best_validation;
      aug_out = std::make_unique<exrec_dataset>(exrec_dataset{std::move(res.last_augmented)});
    }
    char* text = report ? dup_string(rep.serialize()) : nullptr;
    emit(out, std::move(rec));
    if (report) *report = text;
    if (augmented) *augmented = aug_out.release();
  });
}

exrec_status exrec_recommender_load(const char* path, exrec_recommender** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    emit(out, er::load_recommender(path));
  });
}

exrec_status exrec_recommender_save(const exrec_recommender* rec, const char* path) {
  return guard([&] {
    require(rec, "recommender");
    require(path, "path");
    er::save_checkpoint(rec->value, path);
  });
}

size_t exrec_recommender_num_items(const exrec_recommender* rec) {
  return rec ? rec->value.num_items() : 0;
}

exrec_status exrec_recommend(const exrec_recommender* rec, const uint32_t* interactions, size_t n,
                             size_t k, uint32_t* out) {
  return guard([&] {
    require(rec, "recommender");
    require(out, "out");
    if (n > 0) require(interactions, "interactions");
    for (size_t i = 0; i < n; ++i) {
      if (interactions[i] == er::kPaddingItem || interactions[i] > rec->value.num_items()) {
        throw er::CatalogError("item " + std::to_string(interactions[i]) + " outside the catalog");
      }
    }
    auto top = er::recommend_topk(std::span<const er::ItemId>(interactions, n), k, rec->value);
    std::copy(top.begin(), top.end(), out);
  });
}

void exrec_recommender_free(exrec_recommender* rec) { delete rec; }

// ---------------------------------------------------------------- evaluation

exrec_status exrec_evaluate(const exrec_recommender* rec, const exrec_dataset* test,
                            const size_t* ks, size_t nks, exrec_metrics** out) {
  return guard([&] {
    require(rec, "recommender");
    require(test, "test set");
    require(ks, "ks");
    require(out, "out");
    emit(out, er::evaluate(rec->value, test->value, std::span<const size_t>(ks, nks)));
  });
}

exrec_status exrec_evaluate_oracle(const exrec_recommender* rec, const exrec_world* w,
                                   const exrec_dataset* test, const size_t* ks, size_t nks,
                                   exrec_metrics** out) {
  return guard([&] {
    require(rec, "recommender");
    require(w, "world");
    require(test, "test set");
    require(ks, "ks");
    require(out, "out");
    emit(out, er::ground_truth_eval(rec->value, w->value, test->value,
                                    std::span<const size_t>(ks, nks)));
  });
}

exrec_status exrec_metrics_value(const exrec_metrics* m, const char* metric, size_t k,
                                 double* out) {
  return guard([&] {
    require(m, "metrics");
    require(metric, "metric");
    require(out, "out");
    const std::string name(metric);
    const std::map<size_t, double>* table = nullptr;
    if (name == "recall") table = &m->value.recall;
    if (name == "ndcg") table = &m->value.ndcg;
    if (name == "coverage") table = &m->value.coverage;
    if (!table) throw er::ConfigError("unknown metric '" + name + "'");
    auto it = table->find(k);
    if (it == table->end()) throw er::ConfigError("cutoff " + std::to_string(k) + " not evaluated");
    *out = it->second;
  });
}

size_t exrec_metrics_sequences(const exrec_metrics* m) { return m ? m->value.sequences : 0; }
size_t exrec_metrics_excluded(const exrec_metrics* m) { return m ? m->value.excluded : 0; }

exrec_status exrec_metrics_set_provenance(exrec_metrics* m, uint64_t seed,
                                          const char* fingerprint) {
  return guard([&] {
    require(m, "metrics");
    m->value.seed = seed;
    m->value.fingerprint = fingerprint ? fingerprint : "";
  });
}

exrec_status exrec_metrics_serialize(const exrec_metrics* m, char** out) {
  return guard([&] {
    require(m, "metrics");
    require(out, "out");
    *out = dup_string(er::serialize_metrics(m->value));
  });
}

exrec_status exrec_metrics_save(const exrec_metrics* m, const char* path) {
  return guard([&] {
    require(m, "metrics");
    require(path, "path");
    er::save_metrics(m->value, path);
  });
}

exrec_status exrec_metrics_load(const char* path, exrec_metrics** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    emit(out, er::load_metrics(path));
  });
}

void exrec_metrics_free(exrec_metrics* m) { delete m; }

exrec_status exrec_report(const char* const* labels, const double* deltas,
                          const char* const* paths, size_t n, const char* sweep_label, size_t k,
                          char** summary, char** sweep) {
  return guard([&] {
    if (n == 0) throw er::EmptyReportError("no metrics file to report");
    require(labels, "labels");
    require(deltas, "deltas");
    require(paths, "paths");
    std::vector<er::ReportEntry> entries;
    for (size_t i = 0; i < n; ++i) {
      require(labels[i], "label");
      require(paths[i], "path");
      entries.push_back({labels[i], deltas[i], er::load_metrics(paths[i])});
    }
    char* a = summary ? dup_string(er::summary_table(entries)) : nullptr;
    char* b = nullptr;
    if (sweep) {
      require(sweep_label, "sweep label");
      try {
        b = dup_string(er::delta_sweep_table(entries, sweep_label, k));
      } catch (...) {
        std::free(a);
        throw;
      }
    }
    if (summary) *summary = a;
    if (sweep) *sweep = b;
  });
}

// ---------------------------------------------------------------- experiments

exrec_status exrec_experiment_run(const char* config_path, const char* output_dir) {
  return guard([&] {
    require(config_path, "config path");
    auto cfg = er::ExperimentConfig::load(config_path);
    if (output_dir) cfg.output_dir = output_dir;
    if (cfg.output_dir.empty()) throw er::ConfigError("no output directory given");
    auto result = er::run_experiment(cfg);
    er::write_experiment(result, cfg, cfg.output_dir);
  });
}

exrec_status exrec_experiment_canonical(const char* config_path, char** text,
                                        char** fingerprint) {
  return guard([&] {
    require(config_path, "config path");
    auto cfg = er::ExperimentConfig::load(config_path);
    char* a = text ? dup_string(cfg.serialize()) : nullptr;
    char* b = nullptr;
    if (fingerprint) {
      try {
        b = dup_string(cfg.fingerprint());
      } catch (...) {
        std::free(a);
        throw;
      }
    }
    if (text) *text = a;
    if (fingerprint) *fingerprint = b;
  });
}

exrec_status exrec_fingerprint(const char* text, char** out) {
  return guard([&] {
    require(text, "text");
    require(out, "out");
    *out = dup_string(er::hex_fingerprint(text));
  });
}

}  // extern "C"
