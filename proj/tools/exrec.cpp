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


// Command-line driver. Links only against the C interface.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "exposurerec/exposurerec.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct Failure : std::runtime_error {
  Failure(exrec_status s, const std::string& what) : std::runtime_error(what), status(s) {}
  exrec_status status;
};

void check(exrec_status s) {
  if (s != EXREC_OK) {
    throw Failure(s, std::string(exrec_status_name(s)) + ": " + exrec_last_error());
  }
}

struct CString {
  char* p = nullptr;
  ~CString() { exrec_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
};
using Dataset = Handle<exrec_dataset, exrec_dataset_free>;
using World = Handle<exrec_world, exrec_world_free>;
using Recommender = Handle<exrec_recommender, exrec_recommender_free>;
using Simulator = Handle<exrec_simulator, exrec_simulator_free>;
using Metrics = Handle<exrec_metrics, exrec_metrics_free>;

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Failure(EXREC_ERR_IO, "cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure(EXREC_ERR_IO, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Every option of a subcommand is registered here so the parsed values can be
// written to the manifest and replayed later.
class Registry {
 public:
  template <typename T>
  CLI::Option* option(CLI::App* app, const std::string& name, T& var, const std::string& help) {
    entries_.push_back({name, [&var] { return to_text(var); }, false});
    return app->add_option("--" + name, var, help);
  }
  CLI::Option* flag(CLI::App* app, const std::string& name, bool& var, const std::string& help) {
    entries_.push_back({name, [&var] { return std::string(var ? "true" : "false"); }, true});
    return app->add_flag("--" + name, var, help);
  }
  CLI::Option* list(CLI::App* app, const std::string& name, std::vector<std::string>& var,
                    const std::string& help) {
    entries_.push_back({name, [&var] {
                          std::string s;
                          for (std::size_t i = 0; i < var.size(); ++i) s += (i ? ";" : "") + var[i];
                          return s;
                        },
                        false, true});
    return app->add_option("--" + name, var, help)->take_all();
  }

  std::vector<std::pair<std::string, std::string>> values() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& e : entries_) out.emplace_back(e.name, e.get());
    return out;
  }

  // argv tail reproducing the given recorded values.
  std::vector<std::string> replay(const std::map<std::string, std::string>& recorded) const {
    std::vector<std::string> args;
    for (const auto& e : entries_) {
      auto it = recorded.find(e.name);
      if (it == recorded.end()) continue;
      if (e.flag) {
        if (it->second == "true") args.push_back("--" + e.name);
      } else if (e.list) {
        auto items = split(it->second, ';');
        if (items.empty()) continue;
        args.push_back("--" + e.name);
        for (auto& v : items) args.push_back(v);
      } else if (!it->second.empty()) {
        args.push_back("--" + e.name);
        args.push_back(it->second);
      }
    }
    return args;
  }

 private:
  static std::string to_text(const std::string& v) { return v; }
  static std::string to_text(double v) { return fmt_double(v); }
  template <typename T>
  static std::string to_text(const T& v) {
    return std::to_string(v);
  }

  struct Entry {
    std::string name;
    std::function<std::string()> get;
    bool flag = false;
    bool list = false;
  };
  std::vector<Entry> entries_;
};

struct Command {
  CLI::App* app = nullptr;
  Registry registry;
  std::string out;
  // Returns the output files it wrote, relative to `out`.
  std::function<std::vector<std::string>()> run;
};

std::string canonical_args(const Registry& reg) {
  std::string text;
  for (const auto& [k, v] : reg.values()) {
    if (k != "out") text += k + " = " + v + "\n";
  }
  return text;
}

std::string fingerprint_of(const Registry& reg) {
  CString fp;
  check(exrec_fingerprint(canonical_args(reg).c_str(), &fp.p));
  return fp.str();
}

void write_manifest(const std::string& name, const Command& cmd,
                    const std::vector<std::string>& outputs) {
  std::ostringstream m;
  m << "[manifest]\n";
  m << "command = " << name << "\n";
  m << "cwd = " << fs::current_path().string() << "\n";
  m << "fingerprint = " << fingerprint_of(cmd.registry) << "\n";
  m << "version = " << exrec_version() << "\n";
  m << "\n[args]\n";
  for (const auto& [k, v] : cmd.registry.values()) m << k << " = " << v << "\n";
  m << "\n[outputs]\n";
  for (std::size_t i = 0; i < outputs.size(); ++i) m << "file" << i << " = " << outputs[i] << "\n";
  write_text(fs::path(cmd.out) / (name + ".manifest"), m.str());
}

using Sections = std::map<std::string, std::map<std::string, std::string>>;

Sections parse_sections(const std::string& text) {
  Sections out;
  std::string section, line;
  std::istringstream in(text);
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Failure(EXREC_ERR_PARSE, "malformed manifest line: " + line);
    out[section][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

std::vector<std::size_t> parse_ks(const std::string& text) {
  std::vector<std::size_t> ks;
  for (const auto& s : split(text, ',')) {
    try {
      ks.push_back(static_cast<std::size_t>(std::stoull(s)));
    } catch (const std::exception&) {
      throw Failure(EXREC_ERR_CONFIG, "invalid cutoff '" + s + "'");
    }
  }
  return ks;
}

struct ModelFlags {
  std::size_t d = 64, layers = 2, heads = 8, t_max = 20, window = 10;
  double dropout = 0.1, lr = 1e-3;
  std::uint64_t init_seed = 1;
  std::size_t epochs = 30, patience = 5, batch_size = 32, eval_k = 10;
  std::uint64_t seed = 1;

  void add(CLI::App* app, Registry& reg) {
    reg.option(app, "d", d, "Model width");
    reg.option(app, "layers", layers, "Transformer blocks");
    reg.option(app, "heads", heads, "Attention heads");
    reg.option(app, "t-max", t_max, "Steps per trajectory");
    reg.option(app, "window", window, "State window length");
    reg.option(app, "dropout", dropout, "Dropout rate");
    reg.option(app, "lr", lr, "Adam learning rate");
    reg.option(app, "init-seed", init_seed, "Parameter initialisation seed");
    reg.option(app, "epochs", epochs, "Maximum training epochs");
    reg.option(app, "patience", patience, "Early-stopping patience in epochs");
    reg.option(app, "batch-size", batch_size, "Trajectories per batch");
    reg.option(app, "eval-k", eval_k, "Validation NDCG cutoff");
    reg.option(app, "seed", seed, "Training seed");
  }

  exrec_model_params model() const {
    exrec_model_params p;
    exrec_model_params_default(&p);
    p.d = d;
    p.layers = layers;
    p.heads = heads;
    p.t_max = t_max;
    p.window = window;
    p.dropout = dropout;
    p.learning_rate = lr;
    p.init_seed = init_seed;
    return p;
  }

  exrec_train_params train() const {
    return {epochs, patience, batch_size, eval_k, seed};
  }
};

int run_cli(std::vector<std::string> args);

struct Cli {
  CLI::App app{"Exposure-sequence recommender laboratory", "exrec"};
  std::map<std::string, std::unique_ptr<Command>> commands;

  Command& add(const std::string& name, const std::string& help) {
    auto cmd = std::make_unique<Command>();
    cmd->app = app.add_subcommand(name, help);
    // "--h" is a real flag of train-rec, so subcommands only accept --help.
    cmd->app->set_help_flag("--help", "Print this help message and exit");
    auto& ref = *cmd;
    commands[name] = std::move(cmd);
    return ref;
  }

  Cli() {
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(exrec_version()));
    add_gen_data();
    add_train_sim();
    add_train_rec();
    add_evaluate();
    add_report();
    add_run();
    add_recommend();
    add_rerun();
  }

  // ------------------------------------------------------------ gen-data
  struct GenData {
    std::size_t users = 500, items = 200, factors = 8, steps = 60, slate = 1;
    double slope = 2.0, click_rate = 0.15, temperature = 1.0;
    std::string policy = "biased";
    std::uint64_t seed = 1;
    double train = 0.8, valid = 0.1, test = 0.1;
  } gen;

  void add_gen_data() {
    Command& c = add("gen-data", "Generate a synthetic world, its exposure logs and a split");
    auto* a = c.app;
    auto& r = c.registry;
    r.option(a, "users", gen.users, "Number of users");
    r.option(a, "items", gen.items, "Catalog size");
    r.option(a, "factors", gen.factors, "Latent factor dimension");
    r.option(a, "steps", gen.steps, "Exposures per user");
    r.option(a, "slope", gen.slope, "Click-model slope");
    r.option(a, "click-rate", gen.click_rate, "Calibrated mean click probability");
    r.option(a, "policy", gen.policy, "Logging policy")->check(CLI::IsMember({"biased", "uniform"}));
    r.option(a, "temperature", gen.temperature, "Biased policy temperature");
    r.option(a, "slate", gen.slate, "Exposures per step");
    r.option(a, "seed", gen.seed, "World seed; logs use seed + 1 and the split seed + 2");
    r.option(a, "train-ratio", gen.train, "Training fraction");
    r.option(a, "valid-ratio", gen.valid, "Validation fraction");
    r.option(a, "test-ratio", gen.test, "Test fraction");
    r.option(a, "out", c.out, "Output directory")->required();
    c.run = [this, &c] {
      exrec_world_params wp;
      exrec_world_params_default(&wp);
      wp.users = gen.users;
      wp.items = gen.items;
      wp.factors = gen.factors;
      wp.slope = gen.slope;
      wp.target_click_rate = gen.click_rate;
      wp.seed = gen.seed;
      World world;
      check(exrec_world_generate(&wp, &world.p));
      exrec_policy_params pp{gen.policy == "uniform" ? EXREC_POLICY_UNIFORM : EXREC_POLICY_BIASED,
                             gen.temperature, gen.slate};
      Dataset logs, tr, va, te;
      check(exrec_world_simulate(world.p, &pp, gen.steps, gen.seed + 1, &logs.p));
      check(exrec_dataset_split(logs.p, gen.train, gen.valid, gen.test, gen.seed + 2, &tr.p, &va.p,
                                &te.p));
      const fs::path out(c.out);
      check(exrec_world_save(world.p, (out / "world.bin").c_str()));
      check(exrec_dataset_save(logs.p, (out / "logs.txt").c_str()));
      check(exrec_dataset_save(tr.p, (out / "train.txt").c_str()));
      check(exrec_dataset_save(va.p, (out / "valid.txt").c_str()));
      check(exrec_dataset_save(te.p, (out / "test.txt").c_str()));
      return std::vector<std::string>{"world.bin", "logs.txt", "train.txt", "valid.txt", "test.txt"};
    };
  }

  // ------------------------------------------------------------ train-sim
  struct TrainSim {
    std::string train, valid;
    ModelFlags model;
  } sim;

  void add_train_sim() {
    Command& c = add("train-sim", "Train the feedback simulator");
    auto* a = c.app;
    auto& r = c.registry;
    r.option(a, "train", sim.train, "Training exposure log")->required();
    r.option(a, "valid", sim.valid, "Validation exposure log (enables early stopping)");
    sim.model.epochs = 10;
    sim.model.add(a, r);
    r.option(a, "out", c.out, "Output directory")->required();
    c.run = [this, &c] {
      Dataset tr, va;
      check(exrec_dataset_load(sim.train.c_str(), &tr.p));
      if (!sim.valid.empty()) check(exrec_dataset_load(sim.valid.c_str(), &va.p));
      const auto mp = sim.model.model();
      const auto tp = sim.model.train();
      Simulator s;
      CString report;
      check(exrec_simulator_train(&mp, &tp, tr.p, va.p, &s.p, &report.p));
      const fs::path out(c.out);
      check(exrec_simulator_save(s.p, (out / "simulator.ckpt").c_str()));
      write_text(out / "simulator_training.tsv", report.str());
      return std::vector<std::string>{"simulator.ckpt", "simulator_training.tsv"};
    };
  }

  // ------------------------------------------------------------ train-rec
  struct TrainRec {
    std::string train, valid, simulator, augment = "none";
    ModelFlags model;
    double delta = 1.0, sigma = -1.0, temperature = 1.0;
    std::size_t h = 10, aug_epochs = 10;
    std::uint64_t aug_seed = 1;
    bool pure = false, greedy = false, threshold = false;
  } rec;

  void add_train_rec() {
    Command& c = add("train-rec", "Train the recommender, optionally with counterfactual augmentation");
    auto* a = c.app;
    auto& r = c.registry;
    r.option(a, "train", rec.train, "Training exposure log")->required();
    r.option(a, "valid", rec.valid, "Validation exposure log");
    rec.model.add(a, r);
    r.option(a, "augment", rec.augment, "Augmentation strategy")
        ->check(CLI::IsMember({"none", "random", "self-improving"}));
    r.option(a, "simulator", rec.simulator, "Simulator checkpoint for augmentation");
    r.option(a, "delta", rec.delta, "Augmentation ratio");
    r.option(a, "h", rec.h, "Counterfactual generation length");
    r.option(a, "sigma", rec.sigma, "Perturbation scale; negative picks 0.1 x embedding RMS");
    r.option(a, "aug-epochs", rec.aug_epochs, "Augmentation epochs");
    r.option(a, "aug-seed", rec.aug_seed, "Augmentation seed");
    r.option(a, "sample-temperature", rec.temperature, "Generation sampling temperature");
    r.flag(a, "pure-augmented", rec.pure, "Train augmentation epochs on the augmented set only");
    r.flag(a, "greedy", rec.greedy, "Generate the top item instead of sampling");
    r.flag(a, "threshold-feedback", rec.threshold, "Label feedback by p >= 0.5");
    r.option(a, "out", c.out, "Output directory")->required();
    c.run = [this, &c] {
      const bool augmenting = rec.augment != "none";
      if (augmenting && (rec.simulator.empty() || rec.valid.empty())) {
        throw Failure(EXREC_ERR_USAGE, "usage error: --augment needs --simulator and --valid");
      }
      Dataset tr, va, aug;
      check(exrec_dataset_load(rec.train.c_str(), &tr.p));
      if (!rec.valid.empty()) check(exrec_dataset_load(rec.valid.c_str(), &va.p));
      Simulator s;
      if (augmenting) check(exrec_simulator_load(rec.simulator.c_str(), &s.p));
      exrec_augment_params ap;
      exrec_augment_params_default(&ap);
      ap.strategy = rec.augment == "random"           ? EXREC_STRATEGY_RANDOM
                    : rec.augment == "self-improving" ? EXREC_STRATEGY_SELF_IMPROVING
                                                      : EXREC_STRATEGY_NONE;
      ap.delta = rec.delta;
      ap.h = rec.h;
      ap.sigma = rec.sigma;
      ap.max_epochs = rec.aug_epochs;
      ap.seed = rec.aug_seed;
      ap.include_original = rec.pure ? 0 : 1;
      ap.greedy = rec.greedy ? 1 : 0;
      ap.temperature = rec.temperature;
      ap.threshold_feedback = rec.threshold ? 1 : 0;
      const auto mp = rec.model.model();
      const auto tp = rec.model.train();
      Recommender model;
      CString report;
      check(exrec_recommender_train(&mp, &tp, &ap, s.p, tr.p, va.p, &model.p, &report.p,
                                    augmenting ? &aug.p : nullptr));
      const fs::path out(c.out);
      check(exrec_recommender_save(model.p, (out / "recommender.ckpt").c_str()));
      write_text(out / "recommender_training.tsv", report.str());
      std::vector<std::string> files{"recommender.ckpt", "recommender_training.tsv"};
      if (aug.p) {
        check(exrec_dataset_save(aug.p, (out / "augmented.txt").c_str()));
        files.push_back("augmented.txt");
      }
      return files;
    };
  }

  // ------------------------------------------------------------ evaluate
  struct Evaluate {
    std::string checkpoint, test, world, ks = "5,10,20", name = "metrics";
    std::uint64_t seed = 0;
  } eval;

  void add_evaluate() {
    Command& c = add("evaluate", "Score a recommender on held-out interactions");
    auto* a = c.app;
    auto& r = c.registry;
    r.option(a, "checkpoint", eval.checkpoint, "Recommender checkpoint")->required();
    r.option(a, "test", eval.test, "Test exposure log")->required();
    r.option(a, "world", eval.world, "World file; adds ground-truth metrics");
    r.option(a, "ks", eval.ks, "Comma-separated cutoffs");
    r.option(a, "seed", eval.seed, "Seed recorded in the report");
    r.option(a, "name", eval.name, "Output file stem");
    r.option(a, "out", c.out, "Output directory")->required();
    c.run = [this, &c] {
      const auto ks = parse_ks(eval.ks);
      Recommender model;
      check(exrec_recommender_load(eval.checkpoint.c_str(), &model.p));
      Dataset te;
      check(exrec_dataset_load(eval.test.c_str(), &te.p));
      const std::string fp = fingerprint_of(c.registry);
      const fs::path out(c.out);
      Metrics m;
      check(exrec_evaluate(model.p, te.p, ks.data(), ks.size(), &m.p));
      check(exrec_metrics_set_provenance(m.p, eval.seed, fp.c_str()));
      check(exrec_metrics_save(m.p, (out / (eval.name + ".tsv")).c_str()));
      std::vector<std::string> files{eval.name + ".tsv"};
      CString text;
      check(exrec_metrics_serialize(m.p, &text.p));
      std::cout << text.str();
      if (!eval.world.empty()) {
        World w;
        check(exrec_world_load(eval.world.c_str(), &w.p));
        Metrics o;
        check(exrec_evaluate_oracle(model.p, w.p, te.p, ks.data(), ks.size(), &o.p));
        check(exrec_metrics_set_provenance(o.p, eval.seed, fp.c_str()));
        check(exrec_metrics_save(o.p, (out / (eval.name + ".oracle.tsv")).c_str()));
        files.push_back(eval.name + ".oracle.tsv");
      }
      return files;
    };
  }

  // ------------------------------------------------------------ report
  struct Report {
    std::vector<std::string> runs;
    std::string sweep_label = "self-improving";
    std::size_t k = 10;
  } rep;

  void add_report() {
    Command& c = add("report", "Aggregate metrics files into summary and delta-sweep tables");
    auto* a = c.app;
    auto& r = c.registry;
    r.list(a, "run", rep.runs, "LABEL,DELTA,PATH of one metrics file (repeatable)")->required();
    r.option(a, "sweep-label", rep.sweep_label, "Label whose runs form the delta sweep");
    r.option(a, "k", rep.k, "Cutoff of the sweep table");
    r.option(a, "out", c.out, "Output directory")->required();
    c.run = [this, &c] {
      std::vector<std::string> labels, paths;
      std::vector<double> deltas;
      for (const auto& spec : rep.runs) {
        auto parts = split(spec, ',');
        if (parts.size() != 3) {
          throw Failure(EXREC_ERR_USAGE, "usage error: --run expects LABEL,DELTA,PATH");
        }
        labels.push_back(parts[0]);
        try {
          deltas.push_back(std::stod(parts[1]));
        } catch (const std::exception&) {
          throw Failure(EXREC_ERR_USAGE, "usage error: invalid delta '" + parts[1] + "'");
        }
        paths.push_back(parts[2]);
      }
      std::vector<const char*> lp, pp;
      for (auto& s : labels) lp.push_back(s.c_str());
      for (auto& s : paths) pp.push_back(s.c_str());
      CString summary, sweep;
      check(exrec_report(lp.data(), deltas.data(), pp.data(), lp.size(), rep.sweep_label.c_str(),
                         rep.k, &summary.p, &sweep.p));
      const fs::path out(c.out);
      write_text(out / "summary.tsv", summary.str());
      write_text(out / "sweep.tsv", sweep.str());
      std::cout << summary.str();
      return std::vector<std::string>{"summary.tsv", "sweep.tsv"};
    };
  }

  // ------------------------------------------------------------ run
  std::string run_config;

  void add_run() {
    Command& c = add("run", "Run a full experiment described by a key-value config file");
    auto* a = c.app;
    auto& r = c.registry;
    r.option(a, "config", run_config, "Experiment config")->required()->check(CLI::ExistingFile);
    r.option(a, "out", c.out, "Output directory")->required();
    c.run = [this, &c] {
      check(exrec_experiment_run(run_config.c_str(), c.out.c_str()));
      std::vector<std::string> files;
      for (const auto& e : fs::recursive_directory_iterator(c.out)) {
        if (e.is_regular_file() && e.path().extension() != ".manifest") {
          files.push_back(fs::relative(e.path(), c.out).string());
        }
      }
      std::sort(files.begin(), files.end());
      return files;
    };
  }

  // ------------------------------------------------------------ recommend
  struct Recommend {
    std::string checkpoint, items;
    std::size_t k = 10;
  } recommend;

  void add_recommend() {
    Command& c = add("recommend", "Print the top-K items for an interaction history");
    auto* a = c.app;
    auto& r = c.registry;
    r.option(a, "checkpoint", recommend.checkpoint, "Recommender checkpoint")->required();
    r.option(a, "items", recommend.items, "Comma-separated interacted items, oldest first")->required();
    r.option(a, "k", recommend.k, "Number of items");
    c.run = [this] {
      Recommender model;
      check(exrec_recommender_load(recommend.checkpoint.c_str(), &model.p));
      std::vector<std::uint32_t> items;
      for (auto v : parse_ks(recommend.items)) items.push_back(static_cast<std::uint32_t>(v));
      std::vector<std::uint32_t> top(recommend.k);
      check(exrec_recommend(model.p, items.data(), items.size(), recommend.k, top.data()));
      for (std::size_t i = 0; i < top.size(); ++i) std::cout << (i ? " " : "") << top[i];
      std::cout << "\n";
      return std::vector<std::string>{};
    };
  }

  // ------------------------------------------------------------ rerun
  std::string manifest, rerun_out;

  void add_rerun() {
    Command& c = add("rerun", "Replay a recorded manifest");
    auto* a = c.app;
    a->add_option("--manifest", manifest, "Manifest file")->required()->check(CLI::ExistingFile);
    a->add_option("--out", rerun_out, "Write outputs here instead of the recorded directory");
    c.run = [this] {
      const Sections s = parse_sections(read_text(manifest));
      auto m = s.find("manifest");
      auto args = s.find("args");
      if (m == s.end() || args == s.end() || !m->second.count("command")) {
        throw Failure(EXREC_ERR_PARSE, "manifest lacks [manifest] command or [args]");
      }
      const std::string name = m->second.at("command");
      auto it = commands.find(name);
      if (it == commands.end() || name == "rerun") {
        throw Failure(EXREC_ERR_PARSE, "manifest names unknown command '" + name + "'");
      }
      if (m->second.count("version") && m->second.at("version") != exrec_version()) {
        std::cerr << "warning: manifest written by version " << m->second.at("version") << "\n";
      }
      auto recorded = args->second;
      if (!rerun_out.empty()) recorded["out"] = fs::absolute(rerun_out).string();
      // Relative paths in the recorded arguments resolve against the original cwd.
      if (m->second.count("cwd")) fs::current_path(m->second.at("cwd"));
      std::vector<std::string> argv{"exrec", name};
      for (auto& v : it->second->registry.replay(recorded)) argv.push_back(v);
      const int rc = run_cli(argv);
      if (rc != 0) throw Failure(EXREC_ERR_USAGE, "replayed command failed");
      return std::vector<std::string>{};
    };
  }
};

int run_cli(std::vector<std::string> args) {
  Cli cli;
  std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
  try {
    cli.app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return cli.app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return cli.app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return cli.app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    std::cerr << "run 'exrec --help' for the list of subcommands and flags\n";
    return kExitUsage;
  }
  for (auto& [name, cmd] : cli.commands) {
    if (!cmd->app->parsed()) continue;
    try {
      if (!cmd->out.empty()) fs::create_directories(cmd->out);
      const auto outputs = cmd->run();
      if (!cmd->out.empty() && name != "rerun") write_manifest(name, *cmd, outputs);
      return 0;
    } catch (const Failure& f) {
      std::cerr << "error: " << f.what() << "\n";
      return f.status == EXREC_ERR_USAGE || f.status == EXREC_ERR_NULL_ARGUMENT ? kExitUsage
                                                                                : kExitRuntime;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitRuntime;
    }
  }
  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  exrec_set_log_level(std::getenv("EXREC_VERBOSE") ? 2 : 1);
  return run_cli(std::vector<std::string>(argv, argv + argc));
}
