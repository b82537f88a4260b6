#include "kinship/model_io.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "kinship/errors.hpp"

namespace kinship {
namespace {

constexpr char kMagic[4] = {'K', 'I', 'N', 'C'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { uint(v, 2); }
  void u32(std::uint32_t v) { uint(v, 4); }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v), 8); }
  void f64s(std::span<const double> v) {
    for (double x : v) f64(x);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }
  std::span<const std::uint8_t> view() const { return out_; }

 private:
  void uint(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(uint(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(uint(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(uint(4)); }
  double f64() { return std::bit_cast<double>(uint(8)); }
  void f64s(std::span<double> out) {
    for (double& x : out) x = f64();
  }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  std::uint64_t uint(int n) {
    if (remaining() < static_cast<std::size_t>(n)) throw ModelFormatError("model file truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

bool owns_layer(const ComparatorConfig& c, std::size_t expert) {
  return expert == 0 || c.layer_of(expert) != c.layer_of(expert - 1);
}

}  // namespace

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - pos, 1u << 30));
    crc = ::crc32(crc, bytes.data() + pos, chunk);
    pos += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> serialize_model(const ComparatorParams& params) {
  check_params(params);
  const auto& c = params.config;
  Writer w;
  w.bytes(kMagic, 4);
  w.u16(kModelVersion);
  w.u32(static_cast<std::uint32_t>(c.embedding_dim));
  w.u32(static_cast<std::uint32_t>(c.hidden));
  w.u8(static_cast<std::uint8_t>(c.activation));
  w.f64(c.dropout);
  w.u8(static_cast<std::uint8_t>(c.sharing));
  w.u8(static_cast<std::uint8_t>(c.n_experts()));
  for (auto r : c.relations) w.u8(static_cast<std::uint8_t>(relation_index(r)));
  w.u8(params.attention ? 1 : 0);

  for (std::size_t i = 0; i < c.n_experts(); ++i) {
    const bool owns = owns_layer(c, i);
    const auto& layer = params.layers[c.layer_of(i)];
    if (owns) {
      w.f64s(layer.weight.data);
      w.f64s(layer.bias);
    }
    w.f64s(params.outputs[i].weight);
    w.f64(params.outputs[i].bias);
    if (owns && c.activation == Activation::PReLU) w.f64(layer.slope);
  }
  if (params.attention) {
    w.f64s(params.attention->weight.data);
    w.f64s(params.attention->bias);
  }
  w.u8(params.threshold ? 1 : 0);
  w.f64(params.threshold.value_or(0.0));
  w.u32(crc32_of(w.view()));
  return w.take();
}

ComparatorParams deserialize_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 10) throw ModelFormatError("model file truncated");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw ModelFormatError("bad magic: not a KINC model file");
  const std::uint16_t version = static_cast<std::uint16_t>(bytes[4] | (bytes[5] << 8));
  if (version != kModelVersion) {
    throw ModelFormatError("unsupported model version " + std::to_string(version));
  }
  const auto payload = bytes.first(bytes.size() - 4);
  Reader tail(bytes.last(4));
  if (tail.u32() != crc32_of(payload)) throw ModelFormatError("checksum mismatch");

  Reader r(payload.subspan(6));
  ComparatorParams params;
  auto& c = params.config;
  c.embedding_dim = r.u32();
  c.hidden = r.u32();
  const auto act = r.u8();
  if (act > static_cast<std::uint8_t>(Activation::Tanh)) throw ModelFormatError("unknown activation code");
  c.activation = static_cast<Activation>(act);
  c.dropout = r.f64();
  const auto sharing = r.u8();
  if (sharing > static_cast<std::uint8_t>(SharingMode::EntirelyLocal)) {
    throw ModelFormatError("unknown sharing mode code");
  }
  c.sharing = static_cast<SharingMode>(sharing);
  const std::size_t n = r.u8();
  c.relations.clear();
  for (std::size_t i = 0; i < n; ++i) {
    const auto idx = r.u8();
    if (idx >= kRelationCount) throw ModelFormatError("relation index out of range");
    c.relations.push_back(relation_from_index(idx));
  }
  const bool has_attention = r.u8() != 0;
  try {
    c.validate();
  } catch (const ValidationError& e) {
    throw ModelFormatError(std::string("invalid header: ") + e.what());
  }

  // Bound the allocation by what the file can actually hold.
  std::size_t needed = 0;
  for (std::size_t l = 0; l < c.n_layers(); ++l) needed += c.hidden * (c.layer_input_dim(l) + 1);
  needed += n * (c.hidden + 1);
  if (has_attention) needed += n * (c.input_dim() + 1);
  if (needed > r.remaining() / 8) throw ModelFormatError("model file truncated");

  params.layers.resize(c.n_layers());
  params.outputs.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool owns = owns_layer(c, i);
    auto& layer = params.layers[c.layer_of(i)];
    if (owns) {
      layer.weight = Matrix(c.hidden, c.layer_input_dim(c.layer_of(i)));
      layer.bias.resize(c.hidden);
      r.f64s(layer.weight.data);
      r.f64s(layer.bias);
    }
    auto& out = params.outputs[i];
    out.weight.resize(c.hidden);
    r.f64s(out.weight);
    out.bias = r.f64();
    if (owns && c.activation == Activation::PReLU) layer.slope = r.f64();
  }
  if (has_attention) {
    AttentionHead head{Matrix(n, c.input_dim()), Vector(n)};
    r.f64s(head.weight.data);
    r.f64s(head.bias);
    params.attention = std::move(head);
  }
  const bool has_threshold = r.u8() != 0;
  const double threshold = r.f64();
  if (has_threshold) params.threshold = threshold;
  if (r.remaining() != 0) throw ModelFormatError("trailing bytes after metadata");
  try {
    check_params(params);
  } catch (const Error& e) {
    throw ModelFormatError(std::string("invalid parameters: ") + e.what());
  }
  return params;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void save_model(const ComparatorParams& params, const std::filesystem::path& path) {
  const auto bytes = serialize_model(params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}

ComparatorParams load_model(const std::filesystem::path& path) {
  return deserialize_model(read_file_bytes(path));
}

std::uint32_t file_crc32(const std::filesystem::path& path) {
  return crc32_of(read_file_bytes(path));
}

}  // namespace kinship
