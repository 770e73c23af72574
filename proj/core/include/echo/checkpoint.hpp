// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "echo/encoder.hpp"

namespace echo {

// On-disk layout: 8-byte magic "ECHCKPT1", u64 little-endian manifest
// length, JSON manifest, then one raw little-endian float64 blob per tensor
// at the manifest-declared offsets. The manifest embeds the model config and
// (for train_state checkpoints) the training section.
inline constexpr char kCheckpointMagic[8] = {'E', 'C', 'H', 'C', 'K', 'P', 'T', '1'};
inline constexpr int kCheckpointFormatVersion = 1;

struct CheckpointData {
  std::string kind; // "encoder" | "train_state"
  EchoConfig model;
  std::map<std::string, nn::Tensor> tensors;
  std::string train_json; // serialized training section; empty for encoder kind
};

void write_checkpoint_file(const std::string& path, const CheckpointData& data);
CheckpointData read_checkpoint_file(const std::string& path);

void save_encoder_checkpoint(const std::string& path, const EncoderParams& ep);

// Loads encoder weights from either checkpoint kind. For train_state files,
// source picks "student" (default for "auto") or "teacher".
EncoderParams load_encoder_checkpoint(const std::string& path,
                                      const std::string& source = "auto");

// Content hash over config and every tensor (embedding-cache key component).
uint64_t params_checksum(const EncoderParams& ep);

}  // namespace echo
