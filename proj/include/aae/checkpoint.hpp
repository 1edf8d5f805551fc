#pragma once

// Length-prefixed binary container used for model checkpoints.
//
//   file    := magic section*
//   magic   := "AAECKPT1"
//   section := u32 name_len, name bytes, u64 payload_len, payload bytes
//
// All integers and doubles are little-endian; doubles are stored as their raw
// IEEE-754 bits, so a save/load cycle is bit-exact.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "aae/errors.hpp"
#include "aae/neural.hpp"

namespace aae::io {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

inline constexpr std::string_view kCheckpointMagic = "AAECKPT1";

class ByteWriter {
 public:
  template <typename T>
  void put(T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* p = reinterpret_cast<const char*>(&value);
    bytes_.append(p, sizeof(T));
  }
  void put_bytes(std::string_view s) { bytes_.append(s); }
  void put_doubles(const double* data, std::size_t n) {
    bytes_.append(reinterpret_cast<const char*>(data), n * sizeof(double));
  }
  std::string take() { return std::move(bytes_); }

 private:
  std::string bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    T value;
    need(sizeof(T));
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::string_view get_bytes(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void get_doubles(double* out, std::size_t n) {
    need(n * sizeof(double));
    std::memcpy(out, bytes_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw DataError("checkpoint: truncated section");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

struct SectionFile {
  std::vector<std::pair<std::string, std::string>> sections;

  void add(std::string name, std::string payload) { sections.emplace_back(std::move(name), std::move(payload)); }

  const std::string& at(std::string_view name) const {
    for (const auto& [n, p] : sections)
      if (n == name) return p;
    throw DataError("checkpoint: missing section '" + std::string(name) + "'");
  }

  std::string serialize() const {
    ByteWriter w;
    w.put_bytes(kCheckpointMagic);
    for (const auto& [name, payload] : sections) {
      w.put(static_cast<std::uint32_t>(name.size()));
      w.put_bytes(name);
      w.put(static_cast<std::uint64_t>(payload.size()));
      w.put_bytes(payload);
    }
    return w.take();
  }

  static SectionFile parse(std::string_view bytes) {
    if (bytes.substr(0, kCheckpointMagic.size()) != kCheckpointMagic) {
      throw DataError("checkpoint: bad magic");
    }
    ByteReader r(bytes.substr(kCheckpointMagic.size()));
    SectionFile f;
    while (!r.done()) {
      const auto name_len = r.get<std::uint32_t>();
      std::string name(r.get_bytes(name_len));
      const auto payload_len = r.get<std::uint64_t>();
      f.add(std::move(name), std::string(r.get_bytes(payload_len)));
    }
    return f;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    const auto bytes = serialize();
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for '" + path + "'");
  }

  static SectionFile load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse(bytes);
  }
};

/// Per layer: in, out, activation tag, alpha, row-major weights, bias.
inline std::string encode_network(const nn::Network& net) {
  ByteWriter w;
  w.put(static_cast<std::uint32_t>(net.layers().size()));
  for (const auto& l : net.layers()) {
    w.put(static_cast<std::uint32_t>(l.in_dim()));
    w.put(static_cast<std::uint32_t>(l.out_dim()));
    w.put(static_cast<std::uint8_t>(l.activation.kind));
    w.put(l.activation.alpha);
    for (long r = 0; r < l.weights.rows(); ++r)
      for (long c = 0; c < l.weights.cols(); ++c) w.put(l.weights(r, c));
    w.put_doubles(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
  }
  return w.take();
}

inline nn::Network decode_network(std::string_view bytes) {
  ByteReader r(bytes);
  const auto n_layers = r.get<std::uint32_t>();
  std::vector<nn::DenseLayer> layers;
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    const auto in = r.get<std::uint32_t>();
    const auto out = r.get<std::uint32_t>();
    const auto tag = r.get<std::uint8_t>();
    if (tag > static_cast<std::uint8_t>(nn::ActivationKind::identity)) {
      throw DataError("checkpoint: unknown activation tag " + std::to_string(tag));
    }
    nn::DenseLayer layer;
    layer.activation = {static_cast<nn::ActivationKind>(tag), r.get<double>()};
    layer.weights.resize(out, in);
    for (long row = 0; row < layer.weights.rows(); ++row)
      for (long c = 0; c < layer.weights.cols(); ++c) layer.weights(row, c) = r.get<double>();
    layer.bias.resize(out);
    r.get_doubles(layer.bias.data(), out);
    layers.push_back(std::move(layer));
  }
  if (!r.done()) throw DataError("checkpoint: trailing bytes in network section");
  return nn::Network(std::move(layers));
}

/// FNV-1a, used for schema/config fingerprints in metadata.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xF];
  return s;
}

}  // namespace aae::io
