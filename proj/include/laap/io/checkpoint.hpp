#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "laap/data/wordvec.hpp"
#include "laap/model/network.hpp"

namespace laap {

inline constexpr char kCheckpointMagic[8] = {'L', 'A', 'A', 'P', 'C', 'K', 'P', '1'};

namespace detail {

inline void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline uint64_t get_u64(const char* p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

inline uint64_t double_bits(double d) {
  uint64_t v;
  std::memcpy(&v, &d, sizeof(v));
  return v;
}

inline double bits_double(uint64_t v) {
  double d;
  std::memcpy(&d, &v, sizeof(d));
  return d;
}

inline std::string hex64(uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

}  // namespace detail

// On-disk model snapshot: magic, little-endian manifest length, JSON manifest
// (config, vocabulary, parameter layout, blob hash), then every parameter as
// little-endian float64 in registration order.
struct Checkpoint {
  RunConfig config;
  std::vector<std::string> vocab_words;
  uint64_t rng_state = 0;
  int epoch = -1;
  nlohmann::json metrics;
  std::vector<std::pair<std::string, Shape>> param_shapes;
  std::vector<double> blob;
};

inline void save_checkpoint(const std::string& path, const LaapNetwork& net, uint64_t rng_state,
                            int epoch, const nlohmann::json& metrics = {}) {
  nlohmann::json manifest;
  manifest["config"] = net.config();
  manifest["answer_vocab"] = net.vocab().words;
  manifest["rng_state"] = rng_state;
  manifest["epoch"] = epoch;
  if (!metrics.is_null()) manifest["metrics"] = metrics;
  nlohmann::json shapes = nlohmann::json::array();
  for (const auto& [name, t] : net.params().items())
    shapes.push_back({{"name", name}, {"shape", t.shape()}});
  manifest["params"] = std::move(shapes);

  const std::vector<double> blob = net.params().flatten();
  std::string body;
  body.reserve(blob.size() * 8);
  for (double v : blob) detail::put_u64(body, detail::double_bits(v));
  manifest["blob_hash"] = detail::hex64(detail::fnv1a64(body.data(), body.size(), 0));

  const std::string text = manifest.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  std::string len;
  detail::put_u64(len, text.size());
  out.write(len.data(), static_cast<std::streamsize>(len.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out) throw IoError("checkpoint write failed: " + path);
}

inline Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (raw.size() < sizeof(kCheckpointMagic) + 8 ||
      std::memcmp(raw.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0)
    throw CorruptionError("not a checkpoint file: " + path);
  const uint64_t text_len = detail::get_u64(raw.data() + sizeof(kCheckpointMagic));
  const size_t header = sizeof(kCheckpointMagic) + 8;
  if (raw.size() < header + text_len) throw CorruptionError("truncated checkpoint manifest");

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(raw.substr(header, text_len));
  } catch (const nlohmann::json::exception& e) {
    throw CorruptionError(std::string("unreadable checkpoint manifest: ") + e.what());
  }

  Checkpoint ck;
  try {
    ck.config = manifest.at("config").get<RunConfig>();
    ck.vocab_words = manifest.at("answer_vocab").get<std::vector<std::string>>();
    ck.rng_state = manifest.at("rng_state").get<uint64_t>();
    ck.epoch = manifest.at("epoch").get<int>();
    if (manifest.contains("metrics")) ck.metrics = manifest.at("metrics");
    for (const auto& p : manifest.at("params"))
      ck.param_shapes.emplace_back(p.at("name").get<std::string>(), p.at("shape").get<Shape>());
  } catch (const nlohmann::json::exception& e) {
    throw CorruptionError(std::string("incomplete checkpoint manifest: ") + e.what());
  }

  size_t total = 0;
  for (const auto& [name, shape] : ck.param_shapes) {
    size_t n = 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    total += n;
  }
  const std::string body = raw.substr(header + text_len);
  if (body.size() != total * 8)
    throw CorruptionError("checkpoint blob holds " + std::to_string(body.size() / 8) +
                          " values, manifest declares " + std::to_string(total));
  const std::string expect = manifest.at("blob_hash").get<std::string>();
  if (detail::hex64(detail::fnv1a64(body.data(), body.size(), 0)) != expect)
    throw CorruptionError("checkpoint blob hash mismatch (file damaged?)");

  ck.blob.reserve(total);
  for (size_t i = 0; i < total; ++i)
    ck.blob.push_back(detail::bits_double(detail::get_u64(body.data() + 8 * i)));
  return ck;
}

inline LaapNetwork load_network(const Checkpoint& ck) {
  LaapNetwork net(ck.config, AnswerVocab::from_words(ck.vocab_words));
  const auto& items = net.params().items();
  if (items.size() != ck.param_shapes.size())
    throw CorruptionError("checkpoint declares " + std::to_string(ck.param_shapes.size()) +
                          " parameters, model has " + std::to_string(items.size()));
  for (size_t i = 0; i < items.size(); ++i) {
    const auto& [name, t] = items[i];
    const auto& [ck_name, ck_shape] = ck.param_shapes[i];
    if (name != ck_name)
      throw CorruptionError("checkpoint parameter order mismatch: " + ck_name + " vs " + name);
    if (t.shape() != ck_shape)
      throw CorruptionError("checkpoint shape mismatch for parameter " + name);
  }
  net.params().load_flat(ck.blob);
  return net;
}

}  // namespace laap
