// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "echo/encoder.hpp"

namespace echo {

struct TrainConfig {
  int64_t total_steps = 400000;
  int batch_size = 256;
  double base_lr = 1e-4; // at reference batch 256; scaled by batch_size/256
  int64_t warmup_steps = 40000;
  double min_lr = 1e-5;
  double weight_decay = 0.05;
  double clip_norm_initial = 1.0;
  double clip_norm_after = 0.3;
  int64_t clip_switch_step = 60000; // threshold drops at this step, inclusive
  double ema_alpha = 0.999;         // within [0.99, 0.999]
  double mask_ratio = 0.8;
  double loss_weight = 1.0; // lambda on the frame loss
  uint64_t seed = 0;
  int64_t checkpoint_every = 0; // 0: only the final checkpoint

  // Proportional miniature of the full recipe: 2000 steps, warmup 200,
  // clip switch 300, batch 32. base_lr and ema_alpha are re-tuned for the
  // short schedule (see NOTICE in README).
  static TrainConfig toy();

  void validate() const;
};

std::vector<uint8_t> make_mask(int num_patches, double ratio, Rng& rng);

// theta_t <- alpha * theta_t + (1 - alpha) * theta_s, elementwise.
void ema_update(nn::ParamStore& teacher, const nn::ParamStore& student, double alpha);

struct TeacherTargets {
  std::vector<double> global_target; // d
  std::vector<double> frame_targets; // P x d, mean over block outputs
  int P = 0;
  int d = 0;
};

// Unmasked teacher forward; frame targets are the elementwise average of all
// transformer block outputs at token positions (CLS excluded), the global
// target is the mean of the frame targets over time. No gradients flow.
TeacherTargets teacher_targets(const SubBand& band, const EncoderParams& teacher);

struct LossParts {
  nn::Tensor total;  // global + lambda * frame
  nn::Tensor global; // MSE(student CLS, global target)
  nn::Tensor frame;  // MSE over masked token positions; 0 when none masked
};

LossParts compute_loss(const nn::Tensor& student_cls, const nn::Tensor& student_tokens,
                       const TeacherTargets& targets, const std::vector<uint8_t>& mask,
                       double lambda);

// Linear warmup to base_lr * batch/256, then cosine decay to min_lr.
double lr_at(int64_t step, const TrainConfig& cfg);

double clip_threshold(int64_t step, const TrainConfig& cfg);

// Scales every gradient so the global L2 norm does not exceed the staged
// threshold. Returns the pre-clip norm.
double clip_gradients(nn::ParamStore& params, int64_t step, const TrainConfig& cfg);

struct AdamState {
  nn::ParamStore m;
  nn::ParamStore v;
  int64_t t = 0; // completed updates, for bias correction
};

AdamState init_adam_state(const nn::ParamStore& params);

// Whether a parameter is exempt from weight decay (LN gains/biases and the
// CLS/mask tokens).
bool weight_decay_exempt(const std::string& name);

// Decoupled-weight-decay Adam update (beta1 0.9, beta2 0.999, eps 1e-8) over
// the accumulated gradients.
void adamw_step(nn::ParamStore& params, AdamState& opt, double lr, const TrainConfig& cfg);

struct StepMetrics {
  int64_t step = 0;
  double total = 0.0;
  double global = 0.0;
  double frame = 0.0;
  double lr = 0.0;
  double grad_norm = 0.0; // pre-clip
};

struct TrainState {
  EncoderParams student;
  EncoderParams teacher; // same config, schema-identical store
  AdamState opt;
  int64_t step = 0; // completed steps
  TrainConfig cfg;
  Rng data_rng{0};
  Rng mask_rng{0};
};

TrainState init_train_state(const EchoConfig& model, const TrainConfig& cfg);

// All sub-bands of the training files, precomputed once. Pool order follows
// file order, then band index; batches sample uniformly with replacement.
struct SubbandPool {
  std::vector<SubBand> bands;
  int sample_rate_hz = 0;
};

SubbandPool build_subband_pool(const std::vector<std::string>& audio_paths,
                               const EchoConfig& model, int csv_fallback_rate_hz = 0);

// One optimizer step on a batch sampled from the pool via state.data_rng.
// Throws NumericError with diagnostics if the loss goes non-finite.
StepMetrics train_step(TrainState& state, const SubbandPool& pool);

// Runs steps state.step+1 .. cfg.total_steps. on_metrics fires every step;
// on_checkpoint fires per cfg.checkpoint_every and once at the end.
void run_training(TrainState& state, const SubbandPool& pool,
                  const std::function<void(const StepMetrics&)>& on_metrics,
                  const std::function<void(const TrainState&)>& on_checkpoint);

// Train-state checkpoints: student, teacher, optimizer moments, RNG streams
// and step counter; resume restores them bit-exactly.
void save_train_state(const std::string& path, const TrainState& state);
TrainState load_train_state(const std::string& path);

}  // namespace echo
