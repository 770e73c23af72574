// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "echo/bandsplit.hpp"
#include "echo/dsp.hpp"
#include "echo/params.hpp"
#include "echo/patching.hpp"
#include "echo/rng.hpp"

namespace echo {

// Model hyper-parameters. Library defaults are the "small" variant; the CLI
// defaults to "toy" which is the largest configuration that trains in
// minutes on a few CPU cores.
struct EchoConfig {
  int embed_dim = 384;
  int depth = 12;
  int heads = 6;
  int mlp_ratio = 4;
  int band_width = 32;   // W, spectrogram bins per sub-band
  int patch_len = 32;    // L, frames per temporal patch
  int patch_stride = 16; // L/2
  double gamma = 100.0;  // frequency PE scaling factor
  double ln_eps = 1e-5;
  int max_patches = 4096; // temporal PE table rows; longer inputs extend analytically
  StftConfig stft;
  std::string variant = "small";

  // toy: d=64/depth=4/heads=4, tiny: d=192/depth=12/heads=3,
  // small: d=384/depth=12/heads=6, base: d=768/depth=12/heads=12
  static EchoConfig preset(const std::string& name);

  void validate() const;
  BandSplitConfig band_split_config() const { return {band_width, embed_dim, gamma}; }
  PatchConfig patch_config() const { return {patch_len, patch_stride}; }
};

// All model state: learnable tensors plus the fixed sinusoidal temporal PE
// table. The table is serialized with checkpoints but never trained.
struct EncoderParams {
  EchoConfig config;
  nn::ParamStore params;
  std::vector<double> temporal_pe; // max_patches x embed_dim, row-major

  const double* temporal_pe_row(int p) const {
    return temporal_pe.data() + static_cast<size_t>(p) * config.embed_dim;
  }
};

// Standard fixed sinusoidal table: row p, column 2i = sin(p / 10000^(2i/d)),
// column 2i+1 = cos(...).
std::vector<double> temporal_pe_table(int max_patches, int d);

// Seeded initialization: truncated-normal std 0.02 for projection and
// attention/MLP weights and the CLS/mask tokens, zeros for biases, ones for
// LN gains. Each tensor draws from its own named sub-stream, so the result
// is independent of construction order.
EncoderParams init_encoder_params(const EchoConfig& cfg, Rng& rng);

enum class ParamInit { kTruncNormal, kZeros, kOnes };

struct ParamSpec {
  std::string name;
  std::vector<int> shape;
  ParamInit init;
};

// The full learnable-tensor schema for a config: patch_proj.{weight,bias},
// cls_token, mask_token, blocks.NN.{ln1,ln2}.{gain,bias},
// blocks.NN.attn.{wq,bq,wk,bk,wv,bv,wo,bo}, blocks.NN.mlp.{w1,b1,w2,b2},
// final_ln.{gain,bias}. Checkpoint loading validates against this list.
std::vector<ParamSpec> encoder_param_schema(const EchoConfig& cfg);

std::string block_param_prefix(int block);

struct SubbandEncoding {
  nn::Tensor cls;    // 1 x d, after final LN
  nn::Tensor tokens; // P x d, after final LN
  // Token rows (CLS excluded) after each transformer block, before the final
  // LN; filled only when capture_block_outputs is set. Used for teacher
  // targets.
  std::vector<nn::Tensor> block_tokens;
};

// Projects patches, applies masking (mask token replaces the projection;
// frequency and temporal PEs are added to masked and unmasked tokens alike),
// prepends CLS and runs the transformer stack. mask, when present, must have
// exactly one entry per patch; nonzero means masked.
SubbandEncoding encode_subband(const SubBand& band, const EncoderParams& ep,
                               const std::vector<uint8_t>* mask = nullptr,
                               bool capture_block_outputs = false);

struct SignalEmbedding {
  std::vector<double> values; // K * d, CLS_1 .. CLS_K in ascending band order
  int K = 0;
  int d = 0;
  int sample_rate_hz = 0;
  double duration_s = 0.0;
};

// Full inference pipeline: normalize -> STFT -> band split -> per-band
// encoding -> CLS concatenation. One embedding per signal regardless of
// duration; length depends only on (fs, window_ms, W, d).
SignalEmbedding encode_signal(const Waveform& w, const EncoderParams& ep);

// Concatenates per-band CLS vectors after validating that bands arrive in
// ascending, contiguous frequency order (a permuted BandSet is an error, not
// a silent reorder).
SignalEmbedding concat_cls(const BandSet& bands, const std::vector<std::vector<double>>& cls,
                           int d, double duration_s);

}  // namespace echo
