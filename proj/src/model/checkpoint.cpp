// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mc/model/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>

#include "json.hpp"
#include "mc/error.hpp"
#include "mc/hash.hpp"

namespace mc::model {

namespace {

constexpr std::string_view kMagic = "MCCKPT01";

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64(std::string_view in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[i])) << (8 * i);
  return v;
}

void put_f32(std::string& out, float f) {
  const auto bits = std::bit_cast<std::uint32_t>(f);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

float get_f32(const char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return std::bit_cast<float>(bits);
}

}  // namespace

std::string serialize_checkpoint(const TransformerModel& model) {
  const auto tensors = model.params().tensors();
  const auto names = Parameters::tensor_names(model.config());
  nlohmann::json header;
  header["format_version"] = kCheckpointFormatVersion;
  header["config"] = model.config();
  auto& list = header["tensors"] = nlohmann::json::array();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    list.push_back({{"name", names[i]}, {"size", tensors[i].size()}});
  }
  const std::string h = header.dump();
  std::string out(kMagic);
  put_u64(out, h.size());
  out += h;
  for (auto t : tensors) {
    for (double x : t) put_f32(out, static_cast<float>(x));
  }
  return out;
}

TransformerModel deserialize_checkpoint(std::string_view bytes) {
  if (bytes.size() < kMagic.size() + 8 || bytes.substr(0, kMagic.size()) != kMagic) {
    throw ParseError("checkpoint: bad magic");
  }
  const std::uint64_t hlen = get_u64(bytes.substr(kMagic.size(), 8));
  const std::size_t body = kMagic.size() + 8;
  if (bytes.size() < body + hlen) throw ParseError("checkpoint: truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(body, hlen));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint header: ") + e.what());
  }
  if (header.value("format_version", 0) != kCheckpointFormatVersion) {
    throw ParseError("checkpoint: unsupported format version");
  }
  const ModelConfig config = header.at("config").get<ModelConfig>();
  config.validate();
  Parameters params = Parameters::zeros(config);
  auto tensors = params.tensors();
  const auto& list = header.at("tensors");
  if (list.size() != tensors.size()) throw ParseError("checkpoint: tensor count mismatch");
  std::size_t offset = body + hlen;
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (list[i].at("size").get<std::size_t>() != tensors[i].size()) {
      throw ParseError("checkpoint: size mismatch for " + list[i].at("name").get<std::string>());
    }
    if (bytes.size() < offset + 4 * tensors[i].size()) throw ParseError("checkpoint: truncated data");
    for (double& x : tensors[i]) {
      x = static_cast<double>(get_f32(bytes.data() + offset));
      offset += 4;
    }
  }
  if (offset != bytes.size()) throw ParseError("checkpoint: trailing bytes");
  return TransformerModel(config, std::move(params));
}

void save_checkpoint(const TransformerModel& model, const std::filesystem::path& path) {
  write_file(path, serialize_checkpoint(model));
}

TransformerModel load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(read_file(path));
}

std::string checkpoint_hash(const TransformerModel& model) {
  return sha256_hex(serialize_checkpoint(model));
}

}  // namespace mc::model
