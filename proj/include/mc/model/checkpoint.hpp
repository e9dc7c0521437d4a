// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MC_MODEL_CHECKPOINT_HPP_
#define MC_MODEL_CHECKPOINT_HPP_

#include <filesystem>
#include <string>
#include <string_view>

#include "mc/model/transformer.hpp"

namespace mc::model {

// Checkpoint layout:
//   bytes 0..7   magic "MCCKPT01"
//   bytes 8..15  little-endian uint64 header length H
//   next H bytes UTF-8 JSON {"format_version":1,"config":{...},
//                "tensors":[{"name":..,"size":..},...]}
//   remainder    little-endian float32 values of every tensor in
//                Parameters::tensors() order, each in column-major order.
inline constexpr int kCheckpointFormatVersion = 1;

std::string serialize_checkpoint(const TransformerModel& model);
TransformerModel deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const TransformerModel& model, const std::filesystem::path& path);
// Throws ParseError on malformed files.
TransformerModel load_checkpoint(const std::filesystem::path& path);

// SHA-256 of the serialized checkpoint, lowercase hex.
std::string checkpoint_hash(const TransformerModel& model);

}  // namespace mc::model

#endif  // MC_MODEL_CHECKPOINT_HPP_
