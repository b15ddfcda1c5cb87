// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#include "train/checkpoint.hpp"

#include <cmath>
#include <cstring>
#include <map>

#include "core/binary_io.hpp"
#include "core/error.hpp"

namespace idr::train {

std::size_t tensor_record_size(const std::string& name, const Shape& shape) {
  return 4 + name.size() + 4 + 8 * shape.size() + 8 + 8 * shape_numel(shape);
}

namespace {

void write_record(io::Writer& w, const std::string& name, const Shape& shape, std::span<const double> data) {
  w.str(name);
  w.u32(static_cast<std::uint32_t>(shape.size()));
  for (std::size_t d : shape) w.u64(d);
  w.u64(data.size());
  for (double x : data) w.f64(x);
}

struct Record {
  Shape shape;
  std::vector<double> data;
};

std::map<std::string, Record> read_records(io::Reader& r) {
  const std::uint32_t n = r.u32();
  std::map<std::string, Record> out;
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string name = r.str();
    Record rec;
    const std::uint32_t rank = r.u32();
    if (rank > 8) throw Error(ErrorCode::kCorruption, "tensor '" + name + "' claims rank " + std::to_string(rank));
    for (std::uint32_t d = 0; d < rank; ++d) rec.shape.push_back(r.u64());
    const std::uint64_t count = r.u64();
    if (count != shape_numel(rec.shape) || count > r.remaining() / 8) {
      throw Error(ErrorCode::kCorruption, "tensor '" + name + "' record length " + std::to_string(count) +
                                              " does not match shape " + shape_string(rec.shape));
    }
    rec.data.resize(count);
    for (double& x : rec.data) {
      x = r.f64();
      if (!std::isfinite(x)) throw Error(ErrorCode::kCorruption, "tensor '" + name + "' holds a non-finite value");
    }
    if (!out.emplace(std::move(name), std::move(rec)).second) {
      throw Error(ErrorCode::kCorruption, "duplicate tensor record");
    }
  }
  return out;
}

void assign(std::map<std::string, Record>& records, const std::string& name, const Shape& shape,
            std::span<double> dest) {
  auto it = records.find(name);
  if (it == records.end()) throw Error(ErrorCode::kSchema, "checkpoint lacks tensor '" + name + "'");
  if (it->second.shape != shape) {
    throw Error(ErrorCode::kSchema, "tensor '" + name + "' has shape " + shape_string(it->second.shape) +
                                        ", expected " + shape_string(shape));
  }
  std::copy(it->second.data.begin(), it->second.data.end(), dest.begin());
  records.erase(it);
}

void reject_leftovers(const std::map<std::string, Record>& records) {
  if (!records.empty()) {
    throw Error(ErrorCode::kSchema, "checkpoint holds unexpected tensor '" + records.begin()->first + "'");
  }
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const TrainingState& state) {
  io::Writer w;
  w.bytes(kCheckpointMagic, 4);
  w.u8(kCheckpointVersion);
  w.u8(state.optimizer ? kHasOptimizer : 0);
  w.u16(0);
  w.str(state.model.config.to_text());
  w.u64(state.steps_done);
  w.str(state.rng_state);
  const nn::NamedTensors named = state.model.named_parameters();
  w.u32(static_cast<std::uint32_t>(named.size()));
  for (const auto& [name, t] : named) write_record(w, name, t.shape(), t.data());
  if (state.optimizer) {
    const OptimizerState& opt = *state.optimizer;
    const nn::NamedTensors trained = state.model.named_parameters(state.model.config.mode);
    if (trained.size() != opt.first_moment.size()) {
      throw Error(ErrorCode::kContract, "optimizer state does not match the trained parameter set");
    }
    w.u64(opt.step);
    w.u32(static_cast<std::uint32_t>(2 * trained.size()));
    for (std::size_t i = 0; i < trained.size(); ++i) {
      write_record(w, "m/" + trained[i].first, trained[i].second.shape(), opt.first_moment[i]);
      write_record(w, "v/" + trained[i].first, trained[i].second.shape(), opt.second_moment[i]);
    }
  }
  return w.buffer();
}

TrainingState decode_checkpoint(std::vector<std::uint8_t> bytes) {
  io::Reader r(std::move(bytes));
  if (r.remaining() < 8) throw Error(ErrorCode::kFormat, "file too short for a checkpoint header");
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0) throw Error(ErrorCode::kFormat, "not a checkpoint (bad magic)");
  const std::uint8_t version = r.u8();
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::kFormat, "unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint8_t flags = r.u8();
  r.u16();

  TrainingState state;
  const TrainConfig config = TrainConfig::parse(r.str());
  state.steps_done = r.u64();
  state.rng_state = r.str();
  state.model = Model::init(config);

  std::map<std::string, Record> records = read_records(r);
  for (auto& [name, t] : state.model.named_parameters()) assign(records, name, t.shape(), t.mutable_data());
  reject_leftovers(records);

  if (flags & kHasOptimizer) {
    const nn::NamedTensors trained = state.model.named_parameters(config.mode);
    const std::vector<Tensor> params = state.model.parameters(config.mode);
    OptimizerState opt = OptimizerState::for_params(params, {config.lr, config.adam_beta1, config.adam_beta2,
                                                             config.adam_eps, config.weight_decay});
    opt.step = r.u64();
    std::map<std::string, Record> moments = read_records(r);
    for (std::size_t i = 0; i < trained.size(); ++i) {
      const Shape& shape = trained[i].second.shape();
      assign(moments, "m/" + trained[i].first, shape, opt.first_moment[i]);
      assign(moments, "v/" + trained[i].first, shape, opt.second_moment[i]);
    }
    reject_leftovers(moments);
    state.optimizer = std::move(opt);
  }
  if (r.remaining() != 0) {
    throw Error(ErrorCode::kCorruption, std::to_string(r.remaining()) + " trailing bytes after checkpoint body");
  }
  return state;
}

void save_checkpoint(const TrainingState& state, const std::string& path) {
  io::write_file(path, encode_checkpoint(state));
}

TrainingState load_checkpoint(const std::string& path) { return decode_checkpoint(io::read_file(path)); }

}  // namespace idr::train
