// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Single command-line entry point: corpus generation, training, embedding,
// evaluation, band inspection and the numeric self-check.
//
// Exit codes: 0 success, 2 config/usage, 3 I/O or checkpoint, 4 numeric
// failure, 5 failed self-check.

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "echo/audio_io.hpp"
#include "echo/bandsplit.hpp"
#include "echo/checkpoint.hpp"
#include "echo/config.hpp"
#include "echo/dsp.hpp"
#include "echo/encoder.hpp"
#include "echo/errors.hpp"
#include "echo/evaluation.hpp"
#include "echo/harness.hpp"
#include "echo/ops.hpp"
#include "echo/params.hpp"
#include "echo/rng.hpp"
#include "echo/tensor.hpp"
#include "echo/trainer.hpp"
#include "echo/version.hpp"
#include "json_convert.hpp"

namespace {

using echo::json;

struct GenDataOpts {
  std::string preset;
  std::string spec_path;
  std::string out_dir;
  uint64_t seed = 0;
};

int run_gen_data(const GenDataOpts& o) {
  if (o.preset.empty() == o.spec_path.empty()) {
    throw echo::UsageError("gen-data needs exactly one of --preset or --spec");
  }
  std::string grid;
  if (!o.preset.empty()) {
    if (o.preset == "reference-anomaly") {
      grid = echo::reference_anomaly_grid();
    } else if (o.preset == "reference-classification") {
      grid = echo::reference_classification_grid();
    } else {
      throw echo::ConfigError("unknown preset '" + o.preset +
                              "' (reference-anomaly | reference-classification)");
    }
  } else {
    grid = echo::read_text_file(o.spec_path);
  }
  const echo::DatasetManifest m = echo::generate_corpus(grid, o.out_dir, o.seed);
  std::printf("echo %s gen-data: %zu files, task %s\n", echo::kVersion, m.files.size(),
              m.task.c_str());
  std::printf("wrote %s/manifest.json\n", o.out_dir.c_str());
  return 0;
}

struct TrainOpts {
  std::string data_path;
  std::string out_dir;
  std::string config_path;
  std::vector<std::string> sets;
  uint64_t seed = 0;
  bool seed_given = false;
  std::string resume_path;
};

int run_train(const TrainOpts& o) {
  echo::TrainState state;
  if (!o.resume_path.empty()) {
    if (!o.config_path.empty() || !o.sets.empty() || o.seed_given) {
      throw echo::UsageError("--resume restores the saved config; drop --config/--set/--seed");
    }
    state = echo::load_train_state(o.resume_path);
    if (state.step >= state.cfg.total_steps) {
      throw echo::UsageError("checkpoint is already at step " + std::to_string(state.step) +
                             " of " + std::to_string(state.cfg.total_steps));
    }
  } else {
    echo::RunConfig rc;
    if (!o.config_path.empty()) echo::apply_config_file(rc, o.config_path);
    for (const std::string& s : o.sets) echo::apply_set_override(rc, s);
    if (o.seed_given) rc.train.seed = o.seed;
    rc.model.validate();
    rc.train.validate();
    state = echo::init_train_state(rc.model, rc.train);
  }

  const echo::DatasetManifest manifest = echo::load_manifest(o.data_path);
  const echo::SubbandPool pool =
      echo::build_subband_pool(manifest.train_paths(), state.student.config);
  std::printf("echo %s train: %zu sub-bands in pool, steps %" PRId64 "..%" PRId64 "\n",
              echo::kVersion, pool.bands.size(), state.step + 1, state.cfg.total_steps);

  std::filesystem::create_directories(o.out_dir);
  const std::string metrics_path = o.out_dir + "/metrics.jsonl";
  std::ofstream metrics;
  if (state.step == 0) {
    metrics.open(metrics_path, std::ios::trunc);
    json header;
    header["schema"] = "echo-train-metrics/1";
    header["tool_version"] = echo::kVersion;
    header["model"] = echo::to_json(state.student.config);
    header["train"] = echo::to_json(state.cfg);
    metrics << header.dump() << "\n";
  } else {
    metrics.open(metrics_path, std::ios::app);
  }
  if (!metrics) throw echo::IoError("cannot open '" + metrics_path + "' for writing");

  const int64_t total = state.cfg.total_steps;
  auto on_metrics = [&](const echo::StepMetrics& sm) {
    json line;
    line["step"] = sm.step;
    line["total"] = sm.total;
    line["global"] = sm.global;
    line["frame"] = sm.frame;
    line["lr"] = sm.lr;
    line["grad_norm"] = sm.grad_norm;
    metrics << line.dump() << "\n";
    if (sm.step % 100 == 0 || sm.step == total) {
      std::printf("step %" PRId64 "/%" PRId64 "  total %.6f  global %.6f  frame %.6f  lr %.3e\n",
                  sm.step, total, sm.total, sm.global, sm.frame, sm.lr);
      std::fflush(stdout);
    }
  };
  auto on_checkpoint = [&](const echo::TrainState& st) {
    if (st.step == st.cfg.total_steps) {
      echo::save_train_state(o.out_dir + "/train_state_final.echckpt", st);
      echo::save_encoder_checkpoint(o.out_dir + "/encoder_final.echckpt", st.student);
    } else {
      char name[48];
      std::snprintf(name, sizeof(name), "ckpt_step%06" PRId64 ".echckpt", st.step);
      echo::save_train_state(o.out_dir + "/" + name, st);
    }
  };

  echo::run_training(state, pool, on_metrics, on_checkpoint);
  metrics.flush();
  if (!metrics) throw echo::IoError("write failed for '" + metrics_path + "'");
  std::printf("wrote %s/train_state_final.echckpt and %s/encoder_final.echckpt\n",
              o.out_dir.c_str(), o.out_dir.c_str());
  return 0;
}

struct EmbedOpts {
  std::string ckpt_path;
  std::string weights = "auto";
  std::string data_path;
  std::string out_path;
  std::string cache_path;
  int threads = 1;
};

int run_embed(const EmbedOpts& o) {
  const echo::EncoderParams ep = echo::load_encoder_checkpoint(o.ckpt_path, o.weights);
  const echo::DatasetManifest manifest = echo::load_manifest(o.data_path);
  const echo::EmbedResult result =
      echo::embed_corpus(manifest, ep, o.cache_path, o.threads);
  echo::write_embeddings(o.out_path, manifest, result, ep);
  std::printf("echo %s embed: %zu signals, cached %d, computed %d\n", echo::kVersion,
              manifest.files.size(), result.cached, result.computed);
  std::printf("wrote %s and %s.bin\n", o.out_path.c_str(), o.out_path.c_str());
  return 0;
}

struct EvalOpts {
  std::string ckpt_path;
  std::string weights = "auto";
  std::string data_path;
  std::string report_path;
  std::string csv_path;
  std::string cache_path;
  std::string config_path;
  std::vector<std::string> sets;
  int threads = 1;
  // Flag overrides; applied only when passed (counts tracked by CLI11).
  int k = 0;
  std::string metric;
  double max_fpr = 0.0;
  std::string aggregate;
  std::string cv;
  int folds = 0;
  uint64_t seed = 0;
  bool k_given = false, metric_given = false, max_fpr_given = false;
  bool aggregate_given = false, cv_given = false, folds_given = false, seed_given = false;
};

echo::EvalConfig resolve_eval_config(const EvalOpts& o) {
  echo::RunConfig rc;
  if (!o.config_path.empty()) echo::apply_config_file(rc, o.config_path);
  for (const std::string& s : o.sets) echo::apply_set_override(rc, s);
  if (o.k_given) rc.eval.k = o.k;
  if (o.metric_given) rc.eval.metric = echo::distance_from_name(o.metric);
  if (o.max_fpr_given) rc.eval.max_fpr = o.max_fpr;
  if (o.aggregate_given) rc.eval.aggregate = o.aggregate;
  if (o.cv_given) rc.eval.cv = o.cv;
  if (o.folds_given) rc.eval.folds = o.folds;
  if (o.seed_given) rc.eval.seed = o.seed;
  rc.eval.validate();
  return rc.eval;
}

void write_report(const echo::EvalReport& rep, const std::string& report_path,
                  const std::string& csv_path) {
  echo::write_text_file(report_path, rep.to_json());
  if (!csv_path.empty()) echo::write_text_file(csv_path, rep.to_csv());
  std::printf("wrote %s\n", report_path.c_str());
  if (!csv_path.empty()) std::printf("wrote %s\n", csv_path.c_str());
}

int run_eval_anomaly(const EvalOpts& o) {
  const echo::EvalConfig eval = resolve_eval_config(o);
  const echo::EncoderParams ep = echo::load_encoder_checkpoint(o.ckpt_path, o.weights);
  const echo::DatasetManifest manifest = echo::load_manifest(o.data_path);
  const echo::EvalReport rep =
      echo::run_anomaly_benchmark(manifest, ep, eval, o.cache_path, o.threads);
  std::printf("echo %s eval-anomaly: %zu machines\n", echo::kVersion, rep.groups.size());
  for (const echo::GroupScores& g : rep.groups) {
    std::printf("  %-12s auc %.4f  pauc %.4f  (train %d, test %d)\n", g.name.c_str(), g.auc,
                g.pauc, g.n_train, g.n_test);
  }
  std::printf("aggregate (%s): auc %.4f  pauc %.4f  combined %.4f\n", eval.aggregate.c_str(),
              rep.aggregate.mean_auc, rep.aggregate.mean_pauc, rep.aggregate.combined);
  write_report(rep, o.report_path, o.csv_path);
  return 0;
}

int run_eval_classify(const EvalOpts& o) {
  const echo::EvalConfig eval = resolve_eval_config(o);
  const echo::EncoderParams ep = echo::load_encoder_checkpoint(o.ckpt_path, o.weights);
  const echo::DatasetManifest manifest = echo::load_manifest(o.data_path);
  const echo::EvalReport rep =
      echo::run_classification_benchmark(manifest, ep, eval, o.cache_path, o.threads);
  std::printf("echo %s eval-classify: %d predictions over %zu classes (%zu folds)\n",
              echo::kVersion, rep.n_predictions, rep.classes.size(), rep.folds.size());
  std::printf("pooled: accuracy %.4f  macro-p %.4f  macro-r %.4f  macro-f1 %.4f\n",
              rep.pooled.accuracy, rep.pooled.macro_precision, rep.pooled.macro_recall,
              rep.pooled.macro_f1);
  write_report(rep, o.report_path, o.csv_path);
  return 0;
}

struct BandDumpOpts {
  std::string in_path;
  int rate = 0;
  std::string config_path;
  std::vector<std::string> sets;
};

int run_band_dump(const BandDumpOpts& o) {
  echo::RunConfig rc;
  if (!o.config_path.empty()) echo::apply_config_file(rc, o.config_path);
  for (const std::string& s : o.sets) echo::apply_set_override(rc, s);
  rc.model.validate();

  const bool is_csv = o.in_path.size() >= 4 &&
                      o.in_path.compare(o.in_path.size() - 4, 4, ".csv") == 0;
  const echo::Waveform w =
      is_csv ? echo::read_csv(o.in_path, o.rate) : echo::read_wav(o.in_path);
  const echo::Spectrogram spec =
      echo::stft_magnitude(echo::normalize_waveform(w), rc.model.stft);
  const echo::BandSet bands = echo::split_bands(spec, rc.model.band_split_config());

  json header;
  header["tool_version"] = echo::kVersion;
  header["model"] = echo::to_json(rc.model);
  header["sample_rate_hz"] = spec.sample_rate_hz;
  header["n_fft"] = spec.n_fft;
  header["F"] = spec.F;
  header["T"] = spec.T;
  header["K"] = bands.K;
  std::cout << header.dump() << "\n";
  for (const echo::SubBand& b : bands.bands) {
    json line;
    line["k"] = b.band_index;
    line["bin_start"] = b.bin_start;
    line["bin_end"] = b.bin_end;
    line["center_freq_hz"] = b.center_freq_hz;
    line["p"] = b.normalized_position;
    std::cout << line.dump() << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// self-check: fast numeric validation of the gradient engine, the PE scheme
// and the STFT front end. Any failed row exits with code 5.

struct CheckRow {
  std::string name;
  bool pass = false;
  std::string detail;
};

CheckRow check_stft_bins() {
  CheckRow row{"stft bin width 40 Hz at 16/32/48 kHz", true, ""};
  echo::StftConfig cfg;
  for (int fs : {16000, 32000, 48000}) {
    const int n_fft = cfg.window_len_samples(fs);
    const double bin = static_cast<double>(fs) / n_fft;
    if (n_fft % 2 != 0 || std::abs(bin - 40.0) > 1e-12) {
      row.pass = false;
      row.detail = "fs " + std::to_string(fs) + ": bin " + std::to_string(bin);
      return row;
    }
  }
  // A pure 440 Hz tone must peak at bin round(440/40) = 11.
  echo::Waveform w;
  w.sample_rate_hz = 16000;
  w.samples.resize(3200);
  for (size_t i = 0; i < w.samples.size(); ++i) {
    w.samples[i] = std::sin(2.0 * 3.14159265358979323846 * 440.0 * i / 16000.0);
  }
  const echo::Spectrogram spec = echo::stft_magnitude(w, cfg);
  int argmax = 0;
  for (int f = 1; f < spec.F; ++f) {
    if (spec.at(f, 0) > spec.at(argmax, 0)) argmax = f;
  }
  if (argmax != 11) {
    row.pass = false;
    row.detail = "440 Hz tone peaked at bin " + std::to_string(argmax);
  }
  return row;
}

CheckRow check_pe_cross_rate() {
  CheckRow row{"frequency PE agrees across rates at equal p", true, ""};
  // Bands chosen so the physical center frequency scales with fs and p is the
  // same real number: center bins 100.5 / 201 / 301.5 at n_fft 400/800/1200.
  const double p16 = echo::normalized_position(echo::center_frequency(85, 117, 16000, 400), 16000);
  const double p32 =
      echo::normalized_position(echo::center_frequency(192, 211, 32000, 800), 32000);
  const double p48 =
      echo::normalized_position(echo::center_frequency(297, 307, 48000, 1200), 48000);
  const std::vector<double> a = echo::frequency_pe(p16, 64, 100.0);
  const std::vector<double> b = echo::frequency_pe(p32, 64, 100.0);
  const std::vector<double> c = echo::frequency_pe(p48, 64, 100.0);
  double max_diff = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    max_diff = std::max(max_diff, std::abs(a[i] - b[i]));
    max_diff = std::max(max_diff, std::abs(a[i] - c[i]));
  }
  if (max_diff > 1e-12) {
    row.pass = false;
    row.detail = "max diff " + std::to_string(max_diff);
  }
  return row;
}

CheckRow fd_row(const std::string& name, const std::function<echo::nn::Tensor()>& loss,
                const std::vector<std::pair<std::string, echo::nn::Tensor>>& params,
                int coords = 20) {
  CheckRow row{name, true, ""};
  echo::Rng rng(1234);
  const echo::nn::GradCheckReport rep =
      echo::nn::finite_difference_check(loss, params, rng, coords);
  row.pass = rep.pass;
  if (!rep.pass && !rep.failures.empty()) {
    const echo::nn::GradCheckIssue& f = rep.failures.front();
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s[%zu]: analytic %.3e vs numeric %.3e (rel %.2e)",
                  f.param.c_str(), f.index, f.analytic, f.numeric, f.rel_err);
    row.detail = buf;
  }
  return row;
}

std::vector<CheckRow> gradient_checks() {
  using echo::nn::Tensor;
  std::vector<CheckRow> rows;
  echo::Rng rng(7);

  {
    Tensor x = Tensor::randn_trunc({3, 4}, 1.0, rng, false);
    Tensor w = Tensor::randn_trunc({4, 5}, 0.5, rng, true);
    Tensor b = Tensor::randn_trunc({5}, 0.5, rng, true);
    rows.push_back(fd_row(
        "gradcheck: linear + gelu",
        [=]() { return echo::nn::mean_all(echo::nn::gelu(echo::nn::linear(x, w, b))); },
        {{"w", w}, {"b", b}}));
  }
  {
    Tensor x = Tensor::randn_trunc({4, 6}, 1.0, rng, true);
    Tensor g = Tensor::randn_trunc({6}, 0.5, rng, true);
    Tensor bi = Tensor::randn_trunc({6}, 0.5, rng, true);
    Tensor target = Tensor::randn_trunc({4, 6}, 1.0, rng, false);
    rows.push_back(fd_row(
        "gradcheck: layer norm",
        [=]() { return echo::nn::mse(echo::nn::layer_norm(x, g, bi, 1e-5), target); },
        {{"x", x}, {"g", g}, {"bi", bi}}));
  }
  {
    echo::nn::AttentionParams p;
    Tensor x = Tensor::randn_trunc({3, 4}, 1.0, rng, true);
    p.wq = Tensor::randn_trunc({4, 4}, 0.5, rng, true);
    p.wk = Tensor::randn_trunc({4, 4}, 0.5, rng, true);
    p.wv = Tensor::randn_trunc({4, 4}, 0.5, rng, true);
    p.wo = Tensor::randn_trunc({4, 4}, 0.5, rng, true);
    p.bq = Tensor::randn_trunc({4}, 0.5, rng, true);
    p.bk = Tensor::randn_trunc({4}, 0.5, rng, true);
    p.bv = Tensor::randn_trunc({4}, 0.5, rng, true);
    p.bo = Tensor::randn_trunc({4}, 0.5, rng, true);
    Tensor target = Tensor::randn_trunc({3, 4}, 1.0, rng, false);
    rows.push_back(fd_row(
        "gradcheck: multi-head attention",
        [=]() { return echo::nn::mse(echo::nn::multi_head_attention(x, p, 2), target); },
        {{"x", x},
         {"wq", p.wq},
         {"wk", p.wk},
         {"wv", p.wv},
         {"wo", p.wo},
         {"bq", p.bq},
         {"bk", p.bk},
         {"bv", p.bv},
         {"bo", p.bo}}));
  }
  {
    // Tiny end-to-end encoder: every parameter participates in the loss.
    echo::EchoConfig cfg = echo::EchoConfig::preset("toy");
    cfg.embed_dim = 16;
    cfg.depth = 2;
    cfg.heads = 2;
    cfg.band_width = 8;
    cfg.patch_len = 8;
    cfg.patch_stride = 4;
    cfg.variant = "custom";
    cfg.validate();
    echo::Rng init(99);
    echo::EncoderParams ep = echo::init_encoder_params(cfg, init);

    echo::SubBand band;
    band.band_index = 0;
    band.bin_start = 0;
    band.bin_end = 8;
    band.W = 8;
    band.T = 12;
    band.mags.resize(96);
    echo::Rng mrng(5);
    for (double& v : band.mags) v = mrng.uniform();
    band.center_freq_hz = 1000.0;
    band.normalized_position = 0.125;
    band.freq_pe = echo::frequency_pe(0.125, 16, cfg.gamma);

    std::vector<uint8_t> mask = {1, 0};  // P = 2 patches, one masked
    Tensor cls_target = Tensor::zeros({1, 16}, false);
    Tensor tok_target = Tensor::zeros({2, 16}, false);

    std::vector<std::pair<std::string, Tensor>> params;
    for (const auto& [name, t] : ep.params) params.emplace_back(name, t);

    auto loss = [&ep, &band, mask, cls_target, tok_target]() {
      const echo::SubbandEncoding enc = echo::encode_subband(band, ep, &mask);
      return echo::nn::add(echo::nn::mse(enc.cls, cls_target),
                           echo::nn::mse(enc.tokens, tok_target));
    };
    rows.push_back(fd_row("gradcheck: tiny encoder end to end", loss, params, 4));
  }
  return rows;
}

CheckRow check_ema() {
  CheckRow row{"EMA degenerate alphas and convexity", true, ""};
  echo::nn::ParamStore teacher;
  echo::nn::ParamStore student;
  teacher.put("w", echo::nn::Tensor::from_vector({2.0, -1.0}, {2}, false));
  student.put("w", echo::nn::Tensor::from_vector({4.0, 3.0}, {2}, false));

  echo::nn::ParamStore t1 = teacher.clone(false);
  echo::ema_update(t1, student, 1.0);
  if (t1.at("w").values()[0] != 2.0 || t1.at("w").values()[1] != -1.0) {
    row.pass = false;
    row.detail = "alpha=1 changed the teacher";
    return row;
  }
  echo::nn::ParamStore t0 = teacher.clone(false);
  echo::ema_update(t0, student, 0.0);
  if (t0.at("w").values()[0] != 4.0 || t0.at("w").values()[1] != 3.0) {
    row.pass = false;
    row.detail = "alpha=0 did not copy the student";
    return row;
  }
  echo::nn::ParamStore tm = teacher.clone(false);
  echo::ema_update(tm, student, 0.99);
  if (std::abs(tm.at("w").values()[0] - 2.02) > 1e-15) {
    row.pass = false;
    row.detail = "alpha=0.99 arithmetic off";
  }
  return row;
}

CheckRow check_lr_schedule() {
  CheckRow row{"lr schedule endpoints exact", true, ""};
  echo::TrainConfig cfg = echo::TrainConfig::toy();
  const double scaled = cfg.base_lr * cfg.batch_size / 256.0;
  if (echo::lr_at(cfg.warmup_steps, cfg) != scaled) {
    row.pass = false;
    row.detail = "warmup endpoint not exact";
    return row;
  }
  if (echo::lr_at(cfg.total_steps, cfg) != cfg.min_lr) {
    row.pass = false;
    row.detail = "final step not exactly min_lr";
    return row;
  }
  double prev = echo::lr_at(cfg.warmup_steps, cfg);
  for (int64_t s = cfg.warmup_steps + 1; s <= cfg.total_steps; s += 100) {
    const double cur = echo::lr_at(s, cfg);
    if (cur > prev + 1e-15) {
      row.pass = false;
      row.detail = "decay not monotone at step " + std::to_string(s);
      return row;
    }
    prev = cur;
  }
  return row;
}

int run_self_check(bool inject_gradient_fault) {
  std::printf("echo %s self-check\n", echo::kVersion);
  if (inject_gradient_fault) {
    echo::nn::detail::perturb_gelu_gradient = true;
  }
  std::vector<CheckRow> rows;
  rows.push_back(check_stft_bins());
  rows.push_back(check_pe_cross_rate());
  for (CheckRow& r : gradient_checks()) rows.push_back(std::move(r));
  rows.push_back(check_ema());
  rows.push_back(check_lr_schedule());
  echo::nn::detail::perturb_gelu_gradient = false;

  int failed = 0;
  for (const CheckRow& r : rows) {
    if (r.pass) {
      std::printf("[ ok ] %s\n", r.name.c_str());
    } else {
      ++failed;
      std::printf("[FAIL] %s%s%s\n", r.name.c_str(), r.detail.empty() ? "" : ": ",
                  r.detail.c_str());
    }
  }
  std::printf("self-check: %zu/%zu passed\n", rows.size() - failed, rows.size());
  return failed == 0 ? 0 : 5;
}

void add_eval_flags(CLI::App* cmd, EvalOpts& o) {
  cmd->add_option("--ckpt", o.ckpt_path, "encoder or train-state checkpoint")->required();
  cmd->add_option("--weights", o.weights, "auto|student|teacher (train-state checkpoints)")
      ->check(CLI::IsMember({"auto", "student", "teacher"}));
  cmd->add_option("--data", o.data_path, "dataset manifest.json")->required();
  cmd->add_option("--report", o.report_path, "output report JSON path")->required();
  cmd->add_option("--csv", o.csv_path, "optional CSV summary path");
  cmd->add_option("--cache", o.cache_path, "embedding cache path (JSONL + .bin)");
  cmd->add_option("--config", o.config_path, "JSON config file (eval section)");
  cmd->add_option("--set", o.sets, "override, e.g. eval.k=3")->take_all();
  cmd->add_option("--threads", o.threads, "embedding worker threads")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--k", o.k, "KNN neighbor count")->each([&](const std::string&) {
    o.k_given = true;
  });
  cmd->add_option("--metric", o.metric, "euclidean|cosine")->each([&](const std::string&) {
    o.metric_given = true;
  });
  cmd->add_option("--max-fpr", o.max_fpr, "partial AUC cutoff")->each([&](const std::string&) {
    o.max_fpr_given = true;
  });
  cmd->add_option("--aggregate", o.aggregate, "arithmetic|harmonic")
      ->each([&](const std::string&) { o.aggregate_given = true; });
  cmd->add_option("--cv", o.cv, "loocv|kfold")->each([&](const std::string&) {
    o.cv_given = true;
  });
  cmd->add_option("--folds", o.folds, "fold count for kfold")->each([&](const std::string&) {
    o.folds_given = true;
  });
  cmd->add_option("--seed", o.seed, "shuffle seed for kfold")->each([&](const std::string&) {
    o.seed_given = true;
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ECHO: frequency-aware hierarchical encoder for machine signals"};
  app.set_version_flag("--version", std::string("echo ") + echo::kVersion);
  app.require_subcommand(1);

  GenDataOpts gen;
  CLI::App* gen_cmd = app.add_subcommand("gen-data", "generate a synthetic corpus");
  gen_cmd->add_option("--preset", gen.preset, "reference-anomaly|reference-classification");
  gen_cmd->add_option("--spec", gen.spec_path, "generation grid JSON file");
  gen_cmd->add_option("--out", gen.out_dir, "output directory")->required();
  gen_cmd->add_option("--seed", gen.seed, "corpus seed");

  TrainOpts tr;
  CLI::App* tr_cmd = app.add_subcommand("train", "self-supervised pre-training");
  tr_cmd->add_option("--data", tr.data_path, "dataset manifest.json")->required();
  tr_cmd->add_option("--out", tr.out_dir, "output directory")->required();
  tr_cmd->add_option("--config", tr.config_path, "JSON config file (model/train sections)");
  tr_cmd->add_option("--set", tr.sets, "override, e.g. train.total_steps=100")->take_all();
  tr_cmd->add_option("--seed", tr.seed, "training seed")->each([&](const std::string&) {
    tr.seed_given = true;
  });
  tr_cmd->add_option("--resume", tr.resume_path, "train-state checkpoint to resume");

  EmbedOpts em;
  CLI::App* em_cmd = app.add_subcommand("embed", "embed a corpus with a trained encoder");
  em_cmd->add_option("--ckpt", em.ckpt_path, "encoder or train-state checkpoint")->required();
  em_cmd->add_option("--weights", em.weights, "auto|student|teacher")
      ->check(CLI::IsMember({"auto", "student", "teacher"}));
  em_cmd->add_option("--data", em.data_path, "dataset manifest.json")->required();
  em_cmd->add_option("--out", em.out_path, "output embeddings path (JSONL + .bin)")->required();
  em_cmd->add_option("--cache", em.cache_path, "embedding cache path");
  em_cmd->add_option("--threads", em.threads, "worker threads")->check(CLI::PositiveNumber);

  EvalOpts ea;
  CLI::App* ea_cmd = app.add_subcommand("eval-anomaly", "KNN anomaly detection benchmark");
  add_eval_flags(ea_cmd, ea);

  EvalOpts ec;
  CLI::App* ec_cmd = app.add_subcommand("eval-classify", "KNN fault classification benchmark");
  add_eval_flags(ec_cmd, ec);

  BandDumpOpts bd;
  CLI::App* bd_cmd = app.add_subcommand("band-dump", "print sub-band layout for a signal");
  bd_cmd->add_option("--in", bd.in_path, "input .wav or .csv signal")->required();
  bd_cmd->add_option("--rate", bd.rate, "sampling rate fallback for CSV inputs");
  bd_cmd->add_option("--config", bd.config_path, "JSON config file (model section)");
  bd_cmd->add_option("--set", bd.sets, "override, e.g. model.band_width=16")->take_all();

  bool inject_fault = false;
  CLI::App* sc_cmd = app.add_subcommand("self-check", "numeric self-validation suite");
  sc_cmd->add_flag("--inject-gradient-fault", inject_fault,
                   "corrupt one backward rule (negative control)")
      ->group("");  // hidden

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen_cmd->parsed()) return run_gen_data(gen);
    if (tr_cmd->parsed()) return run_train(tr);
    if (em_cmd->parsed()) return run_embed(em);
    if (ea_cmd->parsed()) return run_eval_anomaly(ea);
    if (ec_cmd->parsed()) return run_eval_classify(ec);
    if (bd_cmd->parsed()) return run_band_dump(bd);
    if (sc_cmd->parsed()) return run_self_check(inject_fault);
  } catch (const echo::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const echo::InvalidInputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const echo::UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const echo::CheckpointError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const echo::IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const echo::NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "unexpected error: %s\n", e.what());
    return 1;
  }
  return 0;
}
