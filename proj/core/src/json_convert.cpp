// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "json_convert.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace echo {

namespace {

[[noreturn]] void bad_type(const std::string& path, const std::string& key, const char* want) {
  throw ConfigError("config key '" + path + "." + key + "' must be " + want);
}

}  // namespace

double get_num(const json& obj, const std::string& key, const std::string& path) {
  const json& v = obj.at(key);
  if (!v.is_number()) bad_type(path, key, "a number");
  return v.get<double>();
}

int64_t get_int(const json& obj, const std::string& key, const std::string& path) {
  const json& v = obj.at(key);
  if (!v.is_number_integer()) bad_type(path, key, "an integer");
  return v.get<int64_t>();
}

bool get_bool(const json& obj, const std::string& key, const std::string& path) {
  const json& v = obj.at(key);
  if (!v.is_boolean()) bad_type(path, key, "a boolean");
  return v.get<bool>();
}

std::string get_str(const json& obj, const std::string& key, const std::string& path) {
  const json& v = obj.at(key);
  if (!v.is_string()) bad_type(path, key, "a string");
  return v.get<std::string>();
}

void reject_unknown_keys(const json& obj, const std::vector<std::string>& known,
                         const std::string& path) {
  if (!obj.is_object()) throw ConfigError("config node '" + path + "' must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
      throw ConfigError("unknown config key '" + path + "." + it.key() + "'");
    }
  }
}

json to_json(const EchoConfig& cfg) {
  return json{{"embed_dim", cfg.embed_dim},
              {"depth", cfg.depth},
              {"heads", cfg.heads},
              {"mlp_ratio", cfg.mlp_ratio},
              {"band_width", cfg.band_width},
              {"patch_len", cfg.patch_len},
              {"patch_stride", cfg.patch_stride},
              {"gamma", cfg.gamma},
              {"ln_eps", cfg.ln_eps},
              {"max_patches", cfg.max_patches},
              {"window_ms", cfg.stft.window_ms},
              {"hop_ms", cfg.stft.hop_ms},
              {"log_compress", cfg.stft.log_compress},
              {"variant", cfg.variant}};
}

void apply_echo_config(EchoConfig& cfg, const json& obj, const std::string& path) {
  static const std::vector<std::string> known = {
      "embed_dim", "depth",       "heads",       "mlp_ratio",  "band_width",
      "patch_len", "patch_stride", "gamma",      "ln_eps",     "max_patches",
      "window_ms", "hop_ms",      "log_compress", "variant"};
  reject_unknown_keys(obj, known, path);
  if (obj.contains("variant")) {
    // "custom" names no preset; the explicit keys below carry the geometry.
    const std::string variant = get_str(obj, "variant", path);
    if (variant == "custom") {
      cfg.variant = variant;
    } else {
      cfg = EchoConfig::preset(variant);
    }
  }
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const std::string& k = it.key();
    if (k == "variant") continue;
    if (k == "embed_dim") cfg.embed_dim = static_cast<int>(get_int(obj, k, path));
    else if (k == "depth") cfg.depth = static_cast<int>(get_int(obj, k, path));
    else if (k == "heads") cfg.heads = static_cast<int>(get_int(obj, k, path));
    else if (k == "mlp_ratio") cfg.mlp_ratio = static_cast<int>(get_int(obj, k, path));
    else if (k == "band_width") cfg.band_width = static_cast<int>(get_int(obj, k, path));
    else if (k == "patch_len") cfg.patch_len = static_cast<int>(get_int(obj, k, path));
    else if (k == "patch_stride") cfg.patch_stride = static_cast<int>(get_int(obj, k, path));
    else if (k == "gamma") cfg.gamma = get_num(obj, k, path);
    else if (k == "ln_eps") cfg.ln_eps = get_num(obj, k, path);
    else if (k == "max_patches") cfg.max_patches = static_cast<int>(get_int(obj, k, path));
    else if (k == "window_ms") cfg.stft.window_ms = get_num(obj, k, path);
    else if (k == "hop_ms") cfg.stft.hop_ms = get_num(obj, k, path);
    else if (k == "log_compress") cfg.stft.log_compress = get_bool(obj, k, path);
  }
}

json to_json(const TrainConfig& cfg) {
  return json{{"total_steps", cfg.total_steps},
              {"batch_size", cfg.batch_size},
              {"base_lr", cfg.base_lr},
              {"warmup_steps", cfg.warmup_steps},
              {"min_lr", cfg.min_lr},
              {"weight_decay", cfg.weight_decay},
              {"clip_norm_initial", cfg.clip_norm_initial},
              {"clip_norm_after", cfg.clip_norm_after},
              {"clip_switch_step", cfg.clip_switch_step},
              {"ema_alpha", cfg.ema_alpha},
              {"mask_ratio", cfg.mask_ratio},
              {"loss_weight", cfg.loss_weight},
              {"seed", cfg.seed},
              {"checkpoint_every", cfg.checkpoint_every}};
}

void apply_train_config(TrainConfig& cfg, const json& obj, const std::string& path) {
  static const std::vector<std::string> known = {
      "total_steps",      "batch_size",      "base_lr",        "warmup_steps",
      "min_lr",           "weight_decay",    "clip_norm_initial", "clip_norm_after",
      "clip_switch_step", "ema_alpha",       "mask_ratio",     "loss_weight",
      "seed",             "checkpoint_every", "preset"};
  reject_unknown_keys(obj, known, path);
  if (obj.contains("preset")) {
    std::string p = get_str(obj, "preset", path);
    if (p == "toy") cfg = TrainConfig::toy();
    else if (p == "full") cfg = TrainConfig{};
    else throw ConfigError("config key '" + path + ".preset' must be toy or full");
  }
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const std::string& k = it.key();
    if (k == "preset") continue;
    if (k == "total_steps") cfg.total_steps = get_int(obj, k, path);
    else if (k == "batch_size") cfg.batch_size = static_cast<int>(get_int(obj, k, path));
    else if (k == "base_lr") cfg.base_lr = get_num(obj, k, path);
    else if (k == "warmup_steps") cfg.warmup_steps = get_int(obj, k, path);
    else if (k == "min_lr") cfg.min_lr = get_num(obj, k, path);
    else if (k == "weight_decay") cfg.weight_decay = get_num(obj, k, path);
    else if (k == "clip_norm_initial") cfg.clip_norm_initial = get_num(obj, k, path);
    else if (k == "clip_norm_after") cfg.clip_norm_after = get_num(obj, k, path);
    else if (k == "clip_switch_step") cfg.clip_switch_step = get_int(obj, k, path);
    else if (k == "ema_alpha") cfg.ema_alpha = get_num(obj, k, path);
    else if (k == "mask_ratio") cfg.mask_ratio = get_num(obj, k, path);
    else if (k == "loss_weight") cfg.loss_weight = get_num(obj, k, path);
    else if (k == "seed") cfg.seed = static_cast<uint64_t>(get_int(obj, k, path));
    else if (k == "checkpoint_every") cfg.checkpoint_every = get_int(obj, k, path);
  }
}

json to_json(const EvalConfig& cfg) {
  return json{{"k", cfg.k},
              {"metric", distance_name(cfg.metric)},
              {"l2_normalize", cfg.l2_normalize},
              {"max_fpr", cfg.max_fpr},
              {"aggregate", cfg.aggregate},
              {"cv", cfg.cv},
              {"folds", cfg.folds},
              {"seed", cfg.seed}};
}

void apply_eval_config(EvalConfig& cfg, const json& obj, const std::string& path) {
  static const std::vector<std::string> known = {"k",         "metric", "l2_normalize",
                                                 "max_fpr",   "aggregate", "cv",
                                                 "folds",     "seed"};
  reject_unknown_keys(obj, known, path);
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const std::string& k = it.key();
    if (k == "k") cfg.k = static_cast<int>(get_int(obj, k, path));
    else if (k == "metric") cfg.metric = distance_from_name(get_str(obj, k, path));
    else if (k == "l2_normalize") cfg.l2_normalize = get_bool(obj, k, path);
    else if (k == "max_fpr") cfg.max_fpr = get_num(obj, k, path);
    else if (k == "aggregate") cfg.aggregate = get_str(obj, k, path);
    else if (k == "cv") cfg.cv = get_str(obj, k, path);
    else if (k == "folds") cfg.folds = static_cast<int>(get_int(obj, k, path));
    else if (k == "seed") cfg.seed = static_cast<uint64_t>(get_int(obj, k, path));
  }
}

json parse_json_text(const std::string& text, const std::string& what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError(what + ": malformed JSON");
  return j;
}

json load_json_file(const std::string& path) {
  return parse_json_text(read_text_file(path), path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (!in.good() && !in.eof()) throw IoError("read failed for " + path);
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  out.flush();
  if (!out.good()) throw IoError("write failed for " + path);
}

}  // namespace echo
