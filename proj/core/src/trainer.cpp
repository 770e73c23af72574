// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "echo/trainer.hpp"

#include <cmath>
#include <cstring>

#include "echo/audio_io.hpp"
#include "echo/checkpoint.hpp"
#include "echo/errors.hpp"
#include "echo/ops.hpp"
#include "json_convert.hpp"

namespace echo {

TrainConfig TrainConfig::toy() {
  TrainConfig c;
  c.total_steps = 2000;
  c.batch_size = 32;
  c.warmup_steps = 200;
  c.clip_switch_step = 300;
  c.base_lr = 3e-4;   // 3.75e-5 effective at batch 32
  c.min_lr = 3.75e-6; // keeps the full recipe's 10:1 peak-to-floor decay
  c.ema_alpha = 0.999;
  return c;
}

void TrainConfig::validate() const {
  if (total_steps < 1) throw ConfigError("total_steps must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (base_lr <= 0.0) throw ConfigError("base_lr must be > 0");
  if (warmup_steps < 0 || warmup_steps > total_steps)
    throw ConfigError("warmup_steps must be in [0, total_steps]");
  if (min_lr < 0.0) throw ConfigError("min_lr must be >= 0");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
  if (clip_norm_initial <= 0.0 || clip_norm_after <= 0.0)
    throw ConfigError("clip norms must be > 0");
  if (clip_switch_step < 0) throw ConfigError("clip_switch_step must be >= 0");
  if (ema_alpha < 0.0 || ema_alpha > 1.0) throw ConfigError("ema_alpha must be in [0, 1]");
  if (mask_ratio < 0.0 || mask_ratio > 1.0) throw ConfigError("mask_ratio must be in [0, 1]");
  if (loss_weight < 0.0) throw ConfigError("loss_weight must be >= 0");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
}

std::vector<uint8_t> make_mask(int num_patches, double ratio, Rng& rng) {
  if (num_patches < 0) throw InvalidInputError("make_mask: negative patch count");
  if (ratio < 0.0 || ratio > 1.0) throw ConfigError("make_mask: ratio must be in [0, 1]");
  std::vector<uint8_t> mask(static_cast<size_t>(num_patches), 0);
  const size_t count = static_cast<size_t>(std::llround(ratio * num_patches));
  for (size_t idx : rng.sample_without_replacement(static_cast<size_t>(num_patches), count)) {
    mask[idx] = 1;
  }
  return mask;
}

void ema_update(nn::ParamStore& teacher, const nn::ParamStore& student, double alpha) {
  if (!teacher.schema_matches(student)) {
    throw UsageError("ema_update: teacher/student parameter schemas differ");
  }
  auto t = teacher.begin();
  auto s = student.begin();
  for (; t != teacher.end(); ++t, ++s) {
    double* tv = t->second.data();
    const double* sv = s->second.data();
    const size_t n = t->second.numel();
    for (size_t i = 0; i < n; ++i) tv[i] = alpha * tv[i] + (1.0 - alpha) * sv[i];
  }
}

TeacherTargets teacher_targets(const SubBand& band, const EncoderParams& teacher) {
  nn::NoGradGuard ng;
  SubbandEncoding enc = encode_subband(band, teacher, nullptr, /*capture_block_outputs=*/true);

  TeacherTargets out;
  out.d = teacher.config.embed_dim;
  out.P = enc.block_tokens.front().rows();
  const size_t n = static_cast<size_t>(out.P) * out.d;

  out.frame_targets.assign(n, 0.0);
  for (const nn::Tensor& bt : enc.block_tokens) {
    const double* v = bt.data();
    for (size_t i = 0; i < n; ++i) out.frame_targets[i] += v[i];
  }
  const double inv_depth = 1.0 / static_cast<double>(enc.block_tokens.size());
  for (double& v : out.frame_targets) v *= inv_depth;

  out.global_target.assign(out.d, 0.0);
  for (int p = 0; p < out.P; ++p) {
    const double* row = out.frame_targets.data() + static_cast<size_t>(p) * out.d;
    for (int j = 0; j < out.d; ++j) out.global_target[j] += row[j];
  }
  const double inv_p = 1.0 / static_cast<double>(out.P);
  for (double& v : out.global_target) v *= inv_p;
  return out;
}

LossParts compute_loss(const nn::Tensor& student_cls, const nn::Tensor& student_tokens,
                       const TeacherTargets& targets, const std::vector<uint8_t>& mask,
                       double lambda) {
  if (student_tokens.rows() != targets.P || student_tokens.cols() != targets.d ||
      student_cls.cols() != targets.d) {
    throw UsageError("compute_loss: student/target shapes disagree");
  }
  if (static_cast<int>(mask.size()) != targets.P) {
    throw UsageError("compute_loss: mask length does not match patch count");
  }

  LossParts parts;
  nn::Tensor global_target =
      nn::Tensor::from_vector(targets.global_target, {1, targets.d});
  parts.global = nn::mse(student_cls, global_target);

  std::vector<int> masked;
  for (int p = 0; p < targets.P; ++p) {
    if (mask[p]) masked.push_back(p);
  }
  if (masked.empty()) {
    parts.frame = nn::Tensor::scalar(0.0);
  } else {
    std::vector<double> rows(masked.size() * static_cast<size_t>(targets.d));
    for (size_t i = 0; i < masked.size(); ++i) {
      std::memcpy(rows.data() + i * targets.d,
                  targets.frame_targets.data() + static_cast<size_t>(masked[i]) * targets.d,
                  sizeof(double) * targets.d);
    }
    nn::Tensor frame_target = nn::Tensor::from_vector(
        std::move(rows), {static_cast<int>(masked.size()), targets.d});
    parts.frame = nn::mse(nn::gather_rows(student_tokens, masked), frame_target);
  }
  parts.total = nn::add(parts.global, nn::scale(parts.frame, lambda));
  return parts;
}

double lr_at(int64_t step, const TrainConfig& cfg) {
  if (step < 0 || step > cfg.total_steps) throw UsageError("lr_at: step out of range");
  const double scaled = cfg.base_lr * cfg.batch_size / 256.0;
  if (step < cfg.warmup_steps) {
    return scaled * static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
  }
  if (step == cfg.warmup_steps) return scaled; // exact endpoint
  if (step == cfg.total_steps) return cfg.min_lr;
  const double progress = static_cast<double>(step - cfg.warmup_steps) /
                          static_cast<double>(cfg.total_steps - cfg.warmup_steps);
  return cfg.min_lr + (scaled - cfg.min_lr) * 0.5 * (1.0 + std::cos(M_PI * progress));
}

double clip_threshold(int64_t step, const TrainConfig& cfg) {
  return step >= cfg.clip_switch_step ? cfg.clip_norm_after : cfg.clip_norm_initial;
}

double clip_gradients(nn::ParamStore& params, int64_t step, const TrainConfig& cfg) {
  double sq = 0.0;
  for (const auto& [name, t] : params) {
    const auto& g = t.impl()->grad;
    for (double v : g) sq += v * v;
  }
  const double norm = std::sqrt(sq);
  const double threshold = clip_threshold(step, cfg);
  if (norm > threshold && norm > 0.0) {
    const double scale = threshold / norm;
    for (auto& [name, t] : params) {
      for (double& v : t.impl()->grad) v *= scale;
    }
  }
  return norm;
}

AdamState init_adam_state(const nn::ParamStore& params) {
  AdamState opt;
  for (const auto& [name, t] : params) {
    opt.m.put(name, nn::Tensor::zeros(t.shape()));
    opt.v.put(name, nn::Tensor::zeros(t.shape()));
  }
  return opt;
}

bool weight_decay_exempt(const std::string& name) {
  return name.find("_token") != std::string::npos ||
         name.find("ln1.") != std::string::npos ||
         name.find("ln2.") != std::string::npos ||
         name.find("final_ln.") != std::string::npos;
}

void adamw_step(nn::ParamStore& params, AdamState& opt, double lr, const TrainConfig& cfg) {
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;

  opt.t += 1;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(opt.t));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(opt.t));

  for (auto& [name, p] : params) {
    auto& grad = p.impl()->grad;
    double* theta = p.data();
    double* m = opt.m.at(name).data();
    double* v = opt.v.at(name).data();
    const double wd = weight_decay_exempt(name) ? 0.0 : cfg.weight_decay;
    const size_t n = p.numel();
    for (size_t i = 0; i < n; ++i) {
      const double g = grad.empty() ? 0.0 : grad[i];
      m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g;
      v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      theta[i] -= lr * (mhat / (std::sqrt(vhat) + kEps) + wd * theta[i]);
    }
  }
}

TrainState init_train_state(const EchoConfig& model, const TrainConfig& cfg) {
  cfg.validate();
  TrainState state;
  state.cfg = cfg;
  Rng root(cfg.seed);
  state.student = init_encoder_params(model, root);
  state.teacher.config = model;
  state.teacher.params = state.student.params.clone(/*requires_grad=*/false);
  state.teacher.temporal_pe = state.student.temporal_pe;
  state.opt = init_adam_state(state.student.params);
  state.data_rng = root.fork("data");
  state.mask_rng = root.fork("mask");
  return state;
}

SubbandPool build_subband_pool(const std::vector<std::string>& audio_paths,
                               const EchoConfig& model, int csv_fallback_rate_hz) {
  model.validate();
  SubbandPool pool;
  for (const std::string& path : audio_paths) {
    Waveform w = path.size() > 4 && path.substr(path.size() - 4) == ".csv"
                     ? read_csv(path, csv_fallback_rate_hz)
                     : read_wav(path);
    if (pool.sample_rate_hz == 0) {
      pool.sample_rate_hz = w.sample_rate_hz;
    } else if (pool.sample_rate_hz != w.sample_rate_hz) {
      throw ConfigError("training pool mixes sampling rates (" +
                        std::to_string(pool.sample_rate_hz) + " vs " +
                        std::to_string(w.sample_rate_hz) + " in " + path + ")");
    }
    Spectrogram spec = stft_magnitude(normalize_waveform(w), model.stft);
    BandSet bands = split_bands(spec, model.band_split_config());
    for (SubBand& b : bands.bands) pool.bands.push_back(std::move(b));
  }
  if (pool.bands.empty()) throw InvalidInputError("training pool is empty");
  return pool;
}

StepMetrics train_step(TrainState& state, const SubbandPool& pool) {
  if (pool.bands.empty()) throw UsageError("train_step: empty sub-band pool");
  const TrainConfig& cfg = state.cfg;
  const int64_t step = state.step + 1;
  const int B = cfg.batch_size;

  state.student.params.zero_grads();

  StepMetrics metrics;
  metrics.step = step;
  const double inv_b = 1.0 / static_cast<double>(B);
  for (int b = 0; b < B; ++b) {
    const SubBand& band =
        pool.bands[state.data_rng.uniform_int(pool.bands.size())];
    TeacherTargets targets = teacher_targets(band, state.teacher);
    std::vector<uint8_t> mask = make_mask(targets.P, cfg.mask_ratio, state.mask_rng);
    SubbandEncoding enc = encode_subband(band, state.student, &mask);
    LossParts parts = compute_loss(enc.cls, enc.tokens, targets, mask, cfg.loss_weight);

    const double total = parts.total.item();
    if (!std::isfinite(total)) {
      throw NumericError("non-finite loss at step " + std::to_string(step) +
                         " (sample " + std::to_string(b) + ", lr " +
                         std::to_string(lr_at(step, cfg)) + ", accumulated grad norm " +
                         std::to_string(clip_gradients(state.student.params, step, cfg)) + ")");
    }
    metrics.total += total * inv_b;
    metrics.global += parts.global.item() * inv_b;
    metrics.frame += parts.frame.item() * inv_b;
    nn::scale(parts.total, inv_b).backward();
  }

  metrics.grad_norm = clip_gradients(state.student.params, step, cfg);
  metrics.lr = lr_at(step, cfg);
  adamw_step(state.student.params, state.opt, metrics.lr, cfg);
  ema_update(state.teacher.params, state.student.params, cfg.ema_alpha);
  state.step = step;
  return metrics;
}

void run_training(TrainState& state, const SubbandPool& pool,
                  const std::function<void(const StepMetrics&)>& on_metrics,
                  const std::function<void(const TrainState&)>& on_checkpoint) {
  const int64_t total = state.cfg.total_steps;
  while (state.step < total) {
    StepMetrics m = train_step(state, pool);
    if (on_metrics) on_metrics(m);
    if (on_checkpoint && state.cfg.checkpoint_every > 0 && state.step < total &&
        state.step % state.cfg.checkpoint_every == 0) {
      on_checkpoint(state);
    }
  }
  if (on_checkpoint) on_checkpoint(state);
}

void save_train_state(const std::string& path, const TrainState& state) {
  CheckpointData data;
  data.kind = "train_state";
  data.model = state.student.config;
  for (const auto& [name, t] : state.student.params) data.tensors.emplace("student/" + name, t);
  for (const auto& [name, t] : state.teacher.params) data.tensors.emplace("teacher/" + name, t);
  for (const auto& [name, t] : state.opt.m) data.tensors.emplace("opt/m/" + name, t);
  for (const auto& [name, t] : state.opt.v) data.tensors.emplace("opt/v/" + name, t);
  data.tensors.emplace(
      "temporal_pe",
      nn::Tensor::from_vector(state.student.temporal_pe,
                              {state.student.config.max_patches, state.student.config.embed_dim}));

  json train;
  train["step"] = state.step;
  train["opt_t"] = state.opt.t;
  train["config"] = to_json(state.cfg);
  train["rng"] = json{{"data", state.data_rng.serialize()}, {"mask", state.mask_rng.serialize()}};
  data.train_json = train.dump();

  write_checkpoint_file(path, data);
}

TrainState load_train_state(const std::string& path) {
  CheckpointData data = read_checkpoint_file(path);
  if (data.kind != "train_state") {
    throw CheckpointError(CheckpointError::Kind::kWrongKind,
                          path + ": expected a train_state checkpoint, got " + data.kind);
  }
  if (data.train_json.empty()) {
    throw CheckpointError(CheckpointError::Kind::kTruncated,
                          path + ": train_state manifest lacks the train section");
  }

  auto take = [&](const std::string& name, const std::vector<int>& shape) {
    auto it = data.tensors.find(name);
    if (it == data.tensors.end()) {
      throw CheckpointError(CheckpointError::Kind::kMissingTensor,
                            path + ": missing tensor " + name);
    }
    if (it->second.shape() != shape) {
      throw CheckpointError(CheckpointError::Kind::kShapeMismatch,
                            path + ": tensor " + name + " has shape " +
                                nn::shape_str(it->second.shape()) + ", expected " +
                                nn::shape_str(shape));
    }
    return it->second;
  };

  TrainState state;
  state.student.config = data.model;
  state.teacher.config = data.model;
  for (const ParamSpec& spec : encoder_param_schema(data.model)) {
    nn::Tensor s = take("student/" + spec.name, spec.shape);
    s.set_requires_grad(true);
    state.student.params.put(spec.name, s);
    state.teacher.params.put(spec.name, take("teacher/" + spec.name, spec.shape));
    state.opt.m.put(spec.name, take("opt/m/" + spec.name, spec.shape));
    state.opt.v.put(spec.name, take("opt/v/" + spec.name, spec.shape));
  }
  state.student.temporal_pe =
      take("temporal_pe", {data.model.max_patches, data.model.embed_dim}).values();
  state.teacher.temporal_pe = state.student.temporal_pe;

  json train = parse_json_text(data.train_json, path + " train section");
  state.step = get_int(train, "step", "train");
  state.opt.t = get_int(train, "opt_t", "train");
  apply_train_config(state.cfg, train.at("config"), "train.config");
  const json& rng = train.at("rng");
  state.data_rng = Rng::deserialize(get_str(rng, "data", "train.rng"));
  state.mask_rng = Rng::deserialize(get_str(rng, "mask", "train.rng"));
  return state;
}

}  // namespace echo
