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


#include "exposurerec/checkpoint.hpp"

#include <algorithm>
#include <map>

#include "binary_io.hpp"
#include "exposurerec/errors.hpp"
#include "exposurerec/rng.hpp"

namespace exposurerec {
namespace {

constexpr char kMagic[8] = {'E', 'X', 'R', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

const char* kind_tag(ModelKind k) {
  return k == ModelKind::kRecommender ? "recommender" : "simulator";
}

template <typename Config>
void write_common(detail::ByteWriter& out, const Config& c) {
  out.u64(c.num_items);
  out.u64(c.d);
  out.u64(c.layers);
  out.u64(c.heads);
  out.u64(c.t_max);
  out.u64(c.window);
  out.f64(c.dropout);
  out.f64(c.learning_rate);
}

template <typename Config>
void read_common(detail::ByteReader& in, Config& c) {
  c.num_items = in.u64();
  c.d = in.u64();
  c.layers = in.u64();
  c.heads = in.u64();
  c.t_max = in.u64();
  c.window = in.u64();
  c.dropout = in.f64();
  c.learning_rate = in.f64();
}

void write_params(detail::ByteWriter& out, const std::vector<const Parameter*>& params,
                  std::uint64_t steps) {
  out.u64(steps);
  out.u64(params.size());
  for (const Parameter* p : params) {
    out.str(p->name);
    out.u64(p->value.rank());
    for (auto e : p->value.shape()) out.u64(e);
    out.f64s({p->value.values().begin(), p->value.values().end()});
  }
}

void read_params(detail::ByteReader& in, const std::vector<Parameter*>& params,
                 std::uint64_t& steps) {
  steps = in.u64();
  const std::uint64_t count = in.u64();
  if (count != params.size()) throw LoadError("checkpoint parameter count does not match config");
  std::map<std::string, Parameter*> by_name;
  for (Parameter* p : params) by_name[p->name] = p;
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string name = in.str();
    auto it = by_name.find(name);
    if (it == by_name.end()) throw LoadError("unknown parameter '" + name + "' in checkpoint");
    const std::uint64_t rank = in.u64();
    if (rank > 8) throw LoadError("implausible rank for parameter '" + name + "'");
    Shape shape(rank);
    for (auto& e : shape) e = in.u64();
    auto values = in.f64s();
    if (shape != it->second->value.shape() || values.size() != shape_numel(shape)) {
      throw LoadError("parameter '" + name + "' has shape " + shape_str(shape) + ", expected " +
                      shape_str(it->second->value.shape()));
    }
    it->second->value = NdArray(shape, std::move(values));
    by_name.erase(it);
  }
}

std::string finish(detail::ByteWriter& out) {
  out.u64(detail::fnv1a(out.bytes()));
  return out.bytes();
}

// Validates the envelope and returns a reader positioned after the kind tag.
detail::ByteReader open_checkpoint(const std::string& bytes, ModelKind* kind) {
  if (bytes.size() < sizeof kMagic + 4 + 8) throw LoadError("checkpoint truncated");
  const std::string_view body(bytes.data(), bytes.size() - 8);
  detail::ByteReader tail(std::string_view(bytes).substr(bytes.size() - 8));
  detail::ByteReader in(body);
  char magic[8];
  in.raw(magic, sizeof magic);
  if (!std::equal(magic, magic + 8, kMagic)) throw LoadError("not a checkpoint file");
  const std::uint32_t version = in.u32();
  if (version != kVersion) {
    throw LoadError("unsupported checkpoint version " + std::to_string(version));
  }
  if (tail.u64() != detail::fnv1a(body)) throw LoadError("checkpoint checksum mismatch");
  const std::string tag = in.str();
  if (tag == "recommender") {
    *kind = ModelKind::kRecommender;
  } else if (tag == "simulator") {
    *kind = ModelKind::kSimulator;
  } else {
    throw LoadError("unknown model kind '" + tag + "'");
  }
  return in;
}

void expect_kind(ModelKind got, ModelKind want) {
  if (got != want) {
    throw LoadError(std::string("checkpoint holds a ") + kind_tag(got) + ", expected a " +
                    kind_tag(want));
  }
}

template <typename Config>
void validate_loaded(const Config& c) {
  try {
    c.validate();
  } catch (const Error& e) {
    throw LoadError(std::string("checkpoint config invalid: ") + e.what());
  }
}

}  // namespace

std::string serialize_checkpoint(const RecommenderModel& model) {
  detail::ByteWriter out;
  out.raw(kMagic, sizeof kMagic);
  out.u32(kVersion);
  out.str(kind_tag(ModelKind::kRecommender));
  const auto& c = model.config();
  write_common(out, c);
  out.f64(c.reward.r_uni);
  out.f64(c.reward.r_int);
  out.f64(c.reward.gamma);
  write_params(out, model.parameters(), model.training_steps);
  return finish(out);
}

std::string serialize_checkpoint(const SimulatorModel& model) {
  detail::ByteWriter out;
  out.raw(kMagic, sizeof kMagic);
  out.u32(kVersion);
  out.str(kind_tag(ModelKind::kSimulator));
  write_common(out, model.config());
  write_params(out, model.parameters(), model.training_steps);
  return finish(out);
}

ModelKind checkpoint_kind(const std::string& bytes) {
  ModelKind kind;
  open_checkpoint(bytes, &kind);
  return kind;
}

RecommenderModel parse_recommender_checkpoint(const std::string& bytes) {
  ModelKind kind;
  auto in = open_checkpoint(bytes, &kind);
  expect_kind(kind, ModelKind::kRecommender);
  RecommenderConfig c;
  read_common(in, c);
  c.reward.r_uni = in.f64();
  c.reward.r_int = in.f64();
  c.reward.gamma = in.f64();
  validate_loaded(c);
  Rng rng(0);
  RecommenderModel model(c, rng);
  read_params(in, model.parameters(), model.training_steps);
  if (in.remaining() != 0) throw LoadError("trailing bytes in checkpoint");
  return model;
}

SimulatorModel parse_simulator_checkpoint(const std::string& bytes) {
  ModelKind kind;
  auto in = open_checkpoint(bytes, &kind);
  expect_kind(kind, ModelKind::kSimulator);
  SimulatorConfig c;
  read_common(in, c);
  validate_loaded(c);
  Rng rng(0);
  SimulatorModel model(c, rng);
  read_params(in, model.parameters(), model.training_steps);
  if (in.remaining() != 0) throw LoadError("trailing bytes in checkpoint");
  return model;
}

void save_checkpoint(const RecommenderModel& model, const std::string& path) {
  detail::write_file_bytes(path, serialize_checkpoint(model));
}

void save_checkpoint(const SimulatorModel& model, const std::string& path) {
  detail::write_file_bytes(path, serialize_checkpoint(model));
}

RecommenderModel load_recommender(const std::string& path) {
  return parse_recommender_checkpoint(detail::read_file_bytes(path));
}

SimulatorModel load_simulator(const std::string& path) {
  return parse_simulator_checkpoint(detail::read_file_bytes(path));
}

}  // namespace exposurerec
