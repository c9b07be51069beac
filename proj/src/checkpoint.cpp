#include "dina/checkpoint.hpp"

#include <cmath>

#include "dina/binary_io.hpp"
#include "dina/errors.hpp"

namespace dina {

namespace {

template <typename T>
std::vector<StoredParameter> store(const ParameterSet<T>& ps) {
  std::vector<StoredParameter> out;
  for (const auto& e : ps.entries()) {
    out.push_back({e.name, e.kind, e.tensor.shape(), std::vector<float>(e.tensor.data().begin(), e.tensor.data().end())});
  }
  return out;
}

template <typename T>
void load_into(ParameterSet<T>& ps, const std::vector<StoredParameter>& stored, const std::string& tower) {
  auto& entries = ps.entries();
  if (entries.size() != stored.size()) {
    throw FormatError("checkpoint: " + tower + " tower has " + std::to_string(stored.size()) +
                      " parameters, architecture expects " + std::to_string(entries.size()));
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& s = stored[i];
    if (s.name != entries[i].name || s.shape != entries[i].tensor.shape() || s.kind != entries[i].kind) {
      throw FormatError("checkpoint: parameter '" + s.name + "' " + shape_string(s.shape) + " does not match '" +
                        entries[i].name + "' " + shape_string(entries[i].tensor.shape()));
    }
    auto dst = entries[i].tensor.mutable_data();
    std::copy(s.values.begin(), s.values.end(), dst.begin());
  }
}

template <std::size_t K>
void put(ByteWriter& w, const std::array<int, K>& a) {
  for (int v : a) w.u32(static_cast<std::uint32_t>(v));
}

template <std::size_t K>
void get(ByteReader& r, std::array<int, K>& a) {
  for (int& v : a) v = static_cast<int>(r.u32());
}

void put_tower(ByteWriter& w, const std::string& name, const std::vector<StoredParameter>& params) {
  w.str32(name);
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    w.str32(p.name);
    w.u8(p.kind == ParamKind::Weight ? 0 : 1);
    w.u8(static_cast<std::uint8_t>(p.shape.size()));
    for (int d : p.shape) w.u32(static_cast<std::uint32_t>(d));
    w.floats(p.values);
  }
}

std::vector<StoredParameter> get_tower(ByteReader& r, const std::string& expected) {
  const std::string name = r.str32();
  if (name != expected) throw FormatError("checkpoint: expected tower '" + expected + "', found '" + name + "'");
  const std::uint32_t count = r.u32();
  std::vector<StoredParameter> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    StoredParameter p;
    p.name = r.str32();
    const std::uint8_t kind = r.u8();
    if (kind > 1) throw FormatError("checkpoint: bad parameter kind for " + p.name);
    p.kind = kind == 0 ? ParamKind::Weight : ParamKind::Bias;
    const std::uint8_t rank = r.u8();
    std::size_t n = 1;
    for (std::uint8_t d = 0; d < rank; ++d) {
      p.shape.push_back(static_cast<int>(r.u32()));
      n *= static_cast<std::size_t>(p.shape.back());
    }
    if (n * sizeof(float) > r.remaining()) throw FormatError("checkpoint: parameter " + p.name + " truncated");
    p.values.resize(n);
    r.floats(p.values);
    for (float v : p.values) {
      if (!std::isfinite(v)) throw DataError("checkpoint: non-finite value in " + p.name);
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

Checkpoint make_checkpoint(const DinaModel& model, const TrainResult* result, const SplitIndex* split,
                           int dataset_stimuli) {
  Checkpoint c;
  c.config = model.config();
  c.image = store(model.image().params());
  c.neural = store(model.neural().params());
  if (result) {
    c.rng_state = result->rng_state;
    c.best_val_loss = result->best_val_loss;
    c.best_epoch = result->best_epoch;
  }
  if (split) {
    c.dataset_stimuli = dataset_stimuli;
    c.test_ids = split->test_ids;
  }
  return c;
}

DinaModel restore_model(const Checkpoint& ckpt) {
  DinaModel model(ckpt.config);
  load_into(model.image().params(), ckpt.image, "image");
  load_into(model.neural().params(), ckpt.neural, "neural");
  return model;
}

std::string encode_checkpoint(const Checkpoint& c) {
  ByteWriter w;
  w.bytes("DINC");
  w.u16(kCheckpointVersion);
  const auto& im = c.config.image;
  put(w, im.stage_blocks);
  put(w, im.stage_channels);
  put(w, im.heads);
  w.u32(static_cast<std::uint32_t>(im.global_downsample));
  w.u32(static_cast<std::uint32_t>(im.ffn_ratio));
  w.u32(static_cast<std::uint32_t>(im.head_hidden));
  put(w, im.input_hw);
  put(w, im.output_hw);
  w.u32(static_cast<std::uint32_t>(c.config.neural.neurons));
  w.u32(static_cast<std::uint32_t>(c.config.neural.d_model));
  w.u32(static_cast<std::uint32_t>(c.config.neural.mlp_hidden));
  w.u64(c.config.seed);
  put_tower(w, "image", c.image);
  put_tower(w, "neural", c.neural);
  w.str32(c.rng_state);
  w.f64(c.best_val_loss);
  w.u32(static_cast<std::uint32_t>(c.best_epoch));
  w.u32(static_cast<std::uint32_t>(c.dataset_stimuli));
  w.u32(static_cast<std::uint32_t>(c.test_ids.size()));
  for (int id : c.test_ids) w.u32(static_cast<std::uint32_t>(id));
  return w.take();
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  ByteReader r(bytes, "checkpoint");
  if (r.bytes(4) != "DINC") throw FormatError("checkpoint: bad magic (not a DINC file)");
  const std::uint16_t version = r.u16();
  if (version != kCheckpointVersion) throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  Checkpoint c;
  auto& im = c.config.image;
  get(r, im.stage_blocks);
  get(r, im.stage_channels);
  get(r, im.heads);
  im.global_downsample = static_cast<int>(r.u32());
  im.ffn_ratio = static_cast<int>(r.u32());
  im.head_hidden = static_cast<int>(r.u32());
  get(r, im.input_hw);
  get(r, im.output_hw);
  c.config.neural.neurons = static_cast<int>(r.u32());
  c.config.neural.d_model = static_cast<int>(r.u32());
  c.config.neural.mlp_hidden = static_cast<int>(r.u32());
  c.config.seed = r.u64();
  c.image = get_tower(r, "image");
  c.neural = get_tower(r, "neural");
  c.rng_state = r.str32();
  c.best_val_loss = r.f64();
  c.best_epoch = static_cast<int>(r.u32());
  c.dataset_stimuli = static_cast<int>(r.u32());
  const std::uint32_t tests = r.u32();
  if (static_cast<std::size_t>(tests) * 4 > r.remaining()) throw FormatError("checkpoint: test id list truncated");
  for (std::uint32_t i = 0; i < tests; ++i) {
    const std::uint32_t id = r.u32();
    if (static_cast<int>(id) >= c.dataset_stimuli) throw FormatError("checkpoint: test id out of range");
    c.test_ids.push_back(static_cast<int>(id));
  }
  if (r.remaining() != 0) throw FormatError("checkpoint: " + std::to_string(r.remaining()) + " trailing bytes");
  try {
    im.validate();
    c.config.neural.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint: stored config is invalid: ") + e.what());
  }
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

}  // namespace dina
