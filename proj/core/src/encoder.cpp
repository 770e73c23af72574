// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "echo/encoder.hpp"

#include <cmath>
#include <cstdio>

#include "echo/errors.hpp"
#include "echo/ops.hpp"

namespace echo {

EchoConfig EchoConfig::preset(const std::string& name) {
  EchoConfig cfg;
  cfg.variant = name;
  if (name == "toy") {
    cfg.embed_dim = 64;
    cfg.depth = 4;
    cfg.heads = 4;
  } else if (name == "tiny") {
    cfg.embed_dim = 192;
    cfg.depth = 12;
    cfg.heads = 3;
  } else if (name == "small") {
    cfg.embed_dim = 384;
    cfg.depth = 12;
    cfg.heads = 6;
  } else if (name == "base") {
    cfg.embed_dim = 768;
    cfg.depth = 12;
    cfg.heads = 12;
  } else {
    throw ConfigError("unknown model variant '" + name + "' (toy|tiny|small|base)");
  }
  return cfg;
}

void EchoConfig::validate() const {
  if (embed_dim < 2 || embed_dim % 2 != 0) throw ConfigError("embed_dim must be even and >= 2");
  if (heads < 1 || embed_dim % heads != 0)
    throw ConfigError("embed_dim must be divisible by heads");
  if (depth < 1) throw ConfigError("depth must be >= 1");
  if (mlp_ratio < 1) throw ConfigError("mlp_ratio must be >= 1");
  if (band_width < 1) throw ConfigError("band_width must be >= 1");
  if (patch_len < 1 || patch_stride < 1 || patch_stride > patch_len)
    throw ConfigError("patch geometry: need 1 <= patch_stride <= patch_len");
  if (gamma <= 0.0) throw ConfigError("gamma must be > 0");
  if (ln_eps <= 0.0) throw ConfigError("ln_eps must be > 0");
  if (max_patches < 1) throw ConfigError("max_patches must be >= 1");
  stft.validate();
}

std::vector<double> temporal_pe_table(int max_patches, int d) {
  std::vector<double> table(static_cast<size_t>(max_patches) * d);
  for (int p = 0; p < max_patches; ++p) {
    double* row = table.data() + static_cast<size_t>(p) * d;
    for (int i = 0; i < d / 2; ++i) {
      double angle = p / std::pow(10000.0, (2.0 * i) / d);
      row[2 * i] = std::sin(angle);
      row[2 * i + 1] = std::cos(angle);
    }
  }
  return table;
}

std::string block_param_prefix(int block) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "blocks.%02d.", block);
  return buf;
}

std::vector<ParamSpec> encoder_param_schema(const EchoConfig& cfg) {
  cfg.validate();
  const int d = cfg.embed_dim;
  const int kernel = cfg.band_width * cfg.patch_len;
  std::vector<ParamSpec> specs;

  auto weight = [&](std::string name, std::vector<int> shape) {
    specs.push_back({std::move(name), std::move(shape), ParamInit::kTruncNormal});
  };
  auto zeros = [&](std::string name, std::vector<int> shape) {
    specs.push_back({std::move(name), std::move(shape), ParamInit::kZeros});
  };
  auto ones = [&](std::string name, std::vector<int> shape) {
    specs.push_back({std::move(name), std::move(shape), ParamInit::kOnes});
  };

  weight("patch_proj.weight", {kernel, d});
  zeros("patch_proj.bias", {d});
  weight("cls_token", {1, d});
  weight("mask_token", {1, d});
  for (int b = 0; b < cfg.depth; ++b) {
    const std::string p = block_param_prefix(b);
    ones(p + "ln1.gain", {d});
    zeros(p + "ln1.bias", {d});
    for (const char* w : {"attn.wq", "attn.wk", "attn.wv", "attn.wo"}) weight(p + w, {d, d});
    for (const char* z : {"attn.bq", "attn.bk", "attn.bv", "attn.bo"}) zeros(p + z, {d});
    ones(p + "ln2.gain", {d});
    zeros(p + "ln2.bias", {d});
    weight(p + "mlp.w1", {d, cfg.mlp_ratio * d});
    zeros(p + "mlp.b1", {cfg.mlp_ratio * d});
    weight(p + "mlp.w2", {cfg.mlp_ratio * d, d});
    zeros(p + "mlp.b2", {d});
  }
  ones("final_ln.gain", {d});
  zeros("final_ln.bias", {d});
  return specs;
}

EncoderParams init_encoder_params(const EchoConfig& cfg, Rng& rng) {
  EncoderParams ep;
  ep.config = cfg;
  ep.temporal_pe = temporal_pe_table(cfg.max_patches, cfg.embed_dim);

  Rng init = rng.fork("init");
  for (const ParamSpec& spec : encoder_param_schema(cfg)) {
    switch (spec.init) {
      case ParamInit::kTruncNormal: {
        Rng r = init.fork(spec.name);
        ep.params.put(spec.name, nn::Tensor::randn_trunc(spec.shape, 0.02, r, true));
        break;
      }
      case ParamInit::kZeros:
        ep.params.put(spec.name, nn::Tensor::zeros(spec.shape, true));
        break;
      case ParamInit::kOnes:
        ep.params.put(spec.name, nn::Tensor::full(spec.shape, 1.0, true));
        break;
    }
  }
  return ep;
}

namespace {

nn::BlockParams block_params(const EncoderParams& ep, int block) {
  const std::string p = block_param_prefix(block);
  nn::BlockParams bp;
  bp.ln1_gain = ep.params.at(p + "ln1.gain");
  bp.ln1_bias = ep.params.at(p + "ln1.bias");
  bp.attn.wq = ep.params.at(p + "attn.wq");
  bp.attn.bq = ep.params.at(p + "attn.bq");
  bp.attn.wk = ep.params.at(p + "attn.wk");
  bp.attn.bk = ep.params.at(p + "attn.bk");
  bp.attn.wv = ep.params.at(p + "attn.wv");
  bp.attn.bv = ep.params.at(p + "attn.bv");
  bp.attn.wo = ep.params.at(p + "attn.wo");
  bp.attn.bo = ep.params.at(p + "attn.bo");
  bp.ln2_gain = ep.params.at(p + "ln2.gain");
  bp.ln2_bias = ep.params.at(p + "ln2.bias");
  bp.mlp_w1 = ep.params.at(p + "mlp.w1");
  bp.mlp_b1 = ep.params.at(p + "mlp.b1");
  bp.mlp_w2 = ep.params.at(p + "mlp.w2");
  bp.mlp_b2 = ep.params.at(p + "mlp.b2");
  return bp;
}

// Rows [0, P) of the temporal PE, extending past the stored table when a very
// long signal needs it.
nn::Tensor temporal_pe_rows(const EncoderParams& ep, int P) {
  const int d = ep.config.embed_dim;
  std::vector<double> rows(static_cast<size_t>(P) * d);
  const int stored = std::min(P, ep.config.max_patches);
  std::copy(ep.temporal_pe.begin(), ep.temporal_pe.begin() + static_cast<size_t>(stored) * d,
            rows.begin());
  if (P > stored) {
    std::vector<double> tail = temporal_pe_table(P, d);
    std::copy(tail.begin() + static_cast<size_t>(stored) * d, tail.end(),
              rows.begin() + static_cast<size_t>(stored) * d);
  }
  return nn::Tensor::from_vector(std::move(rows), {P, d});
}

}  // namespace

SubbandEncoding encode_subband(const SubBand& band, const EncoderParams& ep,
                               const std::vector<uint8_t>* mask, bool capture_block_outputs) {
  const EchoConfig& cfg = ep.config;
  const int d = cfg.embed_dim;
  if (band.W != cfg.band_width) {
    throw InvalidInputError("encode_subband: band width " + std::to_string(band.W) +
                            " does not match configured " + std::to_string(cfg.band_width));
  }
  if (static_cast<int>(band.freq_pe.size()) != d) {
    throw InvalidInputError("encode_subband: band freq_pe dim " +
                            std::to_string(band.freq_pe.size()) + " does not match embed_dim " +
                            std::to_string(d));
  }

  PatchSequence seq = extract_patches(band, cfg.patch_config());
  const int P = seq.num_patches;
  if (mask && static_cast<int>(mask->size()) != P) {
    throw UsageError("encode_subband: mask length " + std::to_string(mask->size()) +
                     " does not match patch count " + std::to_string(P));
  }

  nn::Tensor patches = nn::Tensor::from_vector(std::move(seq.rows), {P, seq.row_dim});
  nn::Tensor tok = nn::linear(patches, ep.params.at("patch_proj.weight"),
                              ep.params.at("patch_proj.bias"));

  if (mask) {
    bool any = false;
    for (uint8_t m : *mask) any |= (m != 0);
    if (any) {
      std::vector<double> keep(P), drop(P);
      for (int i = 0; i < P; ++i) {
        keep[i] = (*mask)[i] ? 0.0 : 1.0;
        drop[i] = (*mask)[i] ? 1.0 : 0.0;
      }
      // masked rows get the mask token instead of their projection
      nn::Tensor drop_col = nn::Tensor::from_vector(std::move(drop), {P, 1});
      tok = nn::add(nn::mul_rows(tok, keep), nn::matmul(drop_col, ep.params.at("mask_token")));
    }
  }

  nn::Tensor freq_pe = nn::Tensor::from_vector(band.freq_pe, {d});
  tok = nn::add_row_broadcast(tok, freq_pe);
  tok = nn::add(tok, temporal_pe_rows(ep, P));

  // CLS carries no content PE; it learns band identity through attention
  nn::Tensor x = nn::concat_rows({ep.params.at("cls_token"), tok});

  SubbandEncoding out;
  for (int b = 0; b < cfg.depth; ++b) {
    x = nn::transformer_block(x, block_params(ep, b), cfg.heads, cfg.ln_eps);
    if (capture_block_outputs) out.block_tokens.push_back(nn::slice_rows(x, 1, P));
  }
  x = nn::layer_norm(x, ep.params.at("final_ln.gain"), ep.params.at("final_ln.bias"), cfg.ln_eps);
  out.cls = nn::slice_rows(x, 0, 1);
  out.tokens = nn::slice_rows(x, 1, P);
  return out;
}

SignalEmbedding concat_cls(const BandSet& bands, const std::vector<std::vector<double>>& cls,
                           int d, double duration_s) {
  if (bands.bands.size() != cls.size())
    throw UsageError("concat_cls: band/CLS count mismatch");
  for (size_t k = 0; k < bands.bands.size(); ++k) {
    const SubBand& b = bands.bands[k];
    if (b.band_index != static_cast<int>(k) || b.bin_start != static_cast<int>(k) * b.W) {
      throw InvalidInputError("concat_cls: bands out of ascending frequency order at index " +
                              std::to_string(k));
    }
    if (static_cast<int>(cls[k].size()) != d)
      throw UsageError("concat_cls: CLS dim mismatch at band " + std::to_string(k));
  }
  SignalEmbedding emb;
  emb.K = bands.K;
  emb.d = d;
  emb.sample_rate_hz = bands.sample_rate_hz;
  emb.duration_s = duration_s;
  emb.values.reserve(static_cast<size_t>(bands.K) * d);
  for (const auto& c : cls) emb.values.insert(emb.values.end(), c.begin(), c.end());
  return emb;
}

SignalEmbedding encode_signal(const Waveform& w, const EncoderParams& ep) {
  nn::NoGradGuard ng;
  Waveform norm = normalize_waveform(w);
  Spectrogram spec = stft_magnitude(norm, ep.config.stft);
  BandSet bands = split_bands(spec, ep.config.band_split_config());

  std::vector<std::vector<double>> cls;
  cls.reserve(bands.bands.size());
  for (const SubBand& band : bands.bands) {
    SubbandEncoding enc = encode_subband(band, ep);
    cls.push_back(enc.cls.values());
  }
  return concat_cls(bands, cls, ep.config.embed_dim, w.duration_s());
}

}  // namespace echo
