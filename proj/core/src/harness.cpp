// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "echo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "echo/audio_io.hpp"
#include "echo/checkpoint.hpp"
#include "echo/errors.hpp"
#include "echo/rng.hpp"
#include "echo/version.hpp"
#include "json_convert.hpp"

namespace echo {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::string index_tag(const char* prefix, int i) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%03d", prefix, i);
  return buf;
}

std::string index_name(const char* prefix, int i) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%03d.wav", prefix, i);
  return buf;
}

bool valid_anomaly_kind(const std::string& kind) {
  return kind == "none" || kind == "extra_harmonic" || kind == "impulse_train" ||
         kind == "amplitude_mod" || kind == "noise_boost";
}

}  // namespace

void SynthSpec::validate() const {
  if (sample_rate_hz < 1000) {
    throw ConfigError("synth: sample_rate_hz must be >= 1000, got " +
                      std::to_string(sample_rate_hz));
  }
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) {
    throw ConfigError("synth: duration_s must be positive and finite");
  }
  if (!(base_rotation_hz > 0.0) || base_rotation_hz * num_harmonics >= 0.5 * sample_rate_hz) {
    throw ConfigError("synth: harmonics must stay below Nyquist");
  }
  if (num_harmonics < 1) throw ConfigError("synth: num_harmonics must be >= 1");
  if (!(harmonic_decay > 0.0) || harmonic_decay > 1.0) {
    throw ConfigError("synth: harmonic_decay must lie in (0, 1]");
  }
  if (!std::isfinite(noise_snr_db)) throw ConfigError("synth: noise_snr_db must be finite");
  if (!valid_anomaly_kind(anomaly_kind)) {
    throw ConfigError("synth: unknown anomaly_kind '" + anomaly_kind + "'");
  }
  if (!(anomaly_strength >= 0.0) || !std::isfinite(anomaly_strength)) {
    throw ConfigError("synth: anomaly_strength must be >= 0");
  }
}

Waveform synth_signal(const SynthSpec& spec) {
  spec.validate();
  const int n = static_cast<int>(std::llround(spec.duration_s * spec.sample_rate_hz));
  const double fs = spec.sample_rate_hz;

  Rng rng(spec.seed);
  const double f0 = spec.base_rotation_hz * (1.0 + 0.03 * rng.uniform(-1.0, 1.0));
  std::vector<double> amps(spec.num_harmonics);
  std::vector<double> phases(spec.num_harmonics);
  for (int h = 0; h < spec.num_harmonics; ++h) {
    amps[h] = 0.25 * std::pow(spec.harmonic_decay, h);
    phases[h] = rng.uniform(0.0, kTwoPi);
  }

  std::vector<double> x(n, 0.0);
  for (int i = 0; i < n; ++i) {
    const double t = i / fs;
    double v = 0.0;
    for (int h = 0; h < spec.num_harmonics; ++h) {
      v += amps[h] * std::sin(kTwoPi * (h + 1) * f0 * t + phases[h]);
    }
    x[i] = v;
  }

  // Reference power of the clean stack. Noise scaling keys off this value
  // even after a perturbation, so an anomaly and its normal twin share the
  // exact same noise floor.
  double sig_power = 0.0;
  for (double v : x) sig_power += v * v;
  sig_power = n > 0 ? sig_power / n : 0.0;
  const double base_noise_power = sig_power * std::pow(10.0, -spec.noise_snr_db / 10.0);

  // Fault perturbations draw from their own stream; with strength 0 (or kind
  // "none") the signal is bit-identical to the unperturbed one.
  Rng arng = rng.fork("anomaly");
  const double s = spec.anomaly_strength;
  if (spec.anomaly_kind == "extra_harmonic" && s > 0.0) {
    const double ratio = 2.5 + static_cast<double>(arng.uniform_int(3));
    const double amp = s * 0.5 * amps[0];
    const double phi = arng.uniform(0.0, kTwoPi);
    for (int i = 0; i < n; ++i) {
      x[i] += amp * std::sin(kTwoPi * ratio * f0 * (i / fs) + phi);
    }
  } else if (spec.anomaly_kind == "impulse_train" && s > 0.0) {
    const double rate_hz = std::max(4.0, 0.35 * f0);
    const double period = fs / rate_hz;
    const double tau = 0.002;
    const double res_hz = 0.25 * fs;
    const int burst_len = std::max(1, static_cast<int>(std::llround(0.006 * fs)));
    const double amp0 = s * 3.0 * std::sqrt(sig_power);
    for (double pos = arng.uniform(0.0, period); pos < n; pos += period) {
      const double amp = amp0 * (0.8 + 0.4 * arng.uniform());
      const int start = static_cast<int>(pos);
      for (int j = 0; j < burst_len && start + j < n; ++j) {
        const double t = j / fs;
        x[start + j] += amp * std::exp(-t / tau) * std::sin(kTwoPi * res_hz * t);
      }
    }
  } else if (spec.anomaly_kind == "amplitude_mod" && s > 0.0) {
    const double f_mod = arng.uniform(8.0, 20.0);
    const double depth = std::min(0.95, 0.6 * s);
    const double phi = arng.uniform(0.0, kTwoPi);
    for (int i = 0; i < n; ++i) {
      x[i] *= 1.0 + depth * std::sin(kTwoPi * f_mod * (i / fs) + phi);
    }
  } else if (spec.anomaly_kind == "noise_boost" && s > 0.0) {
    const double boosted = sig_power * std::pow(10.0, -(spec.noise_snr_db - 6.0 * s) / 10.0);
    const double extra = boosted - base_noise_power;
    if (extra > 0.0) {
      const double sd = std::sqrt(extra);
      for (int i = 0; i < n; ++i) x[i] += sd * arng.normal();
    }
  }

  Rng nrng = rng.fork("noise");
  const double noise_sd = std::sqrt(base_noise_power);
  for (int i = 0; i < n; ++i) x[i] += noise_sd * nrng.normal();

  Waveform w;
  w.samples = std::move(x);
  w.sample_rate_hz = spec.sample_rate_hz;
  return w;
}

double kurtosis(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double m2 = 0.0;
  double m4 = 0.0;
  for (double v : x) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m4 += d2 * d2;
  }
  m2 /= n;
  m4 /= n;
  if (m2 < 1e-24) return 0.0;
  return m4 / (m2 * m2);
}

std::string DatasetManifest::file_path(size_t i) const {
  if (root.empty() || root == ".") return files[i].path;
  return root + "/" + files[i].path;
}

std::vector<std::string> DatasetManifest::train_paths() const {
  std::vector<std::string> out;
  for (size_t i = 0; i < files.size(); ++i) {
    if (files[i].split == "train") out.push_back(file_path(i));
  }
  return out;
}

void DatasetManifest::validate() const {
  if (task != "anomaly" && task != "classification") {
    throw ConfigError("manifest: task must be anomaly or classification, got '" + task + "'");
  }
  if (files.empty()) throw ConfigError("manifest: no files listed");
  for (const FileEntry& f : files) {
    if (f.path.empty()) throw ConfigError("manifest: entry with empty path");
    if (f.split != "train" && f.split != "test") {
      throw ConfigError("manifest: split must be train or test for '" + f.path + "'");
    }
    if (f.label.empty() || f.machine.empty()) {
      throw ConfigError("manifest: empty label or machine for '" + f.path + "'");
    }
    if (task == "anomaly" && f.split == "train" && f.label != "normal") {
      throw ConfigError("manifest: anomaly train split must be all-normal, '" + f.path +
                        "' is labeled '" + f.label + "'");
    }
  }
}

DatasetManifest load_manifest(const std::string& path) {
  const json doc = load_json_file(path);
  if (!doc.is_object()) throw ConfigError("manifest: top level must be an object");
  reject_unknown_keys(doc, {"schema", "task", "tool_version", "seed", "generator", "files"},
                      "manifest");
  DatasetManifest m;
  const std::string schema = get_str(doc, "schema", "manifest");
  if (schema != "echo-dataset/1") {
    throw ConfigError("manifest: unsupported schema '" + schema + "'");
  }
  m.task = get_str(doc, "task", "manifest");
  if (doc.contains("seed")) m.seed = static_cast<uint64_t>(get_int(doc, "seed", "manifest"));
  if (doc.contains("generator")) m.generator_json = doc.at("generator").dump();
  if (!doc.contains("files") || !doc.at("files").is_array()) {
    throw ConfigError("manifest: missing files array");
  }
  for (const json& e : doc.at("files")) {
    if (!e.is_object()) throw ConfigError("manifest: files entries must be objects");
    reject_unknown_keys(e, {"path", "split", "label", "machine"}, "manifest.files");
    FileEntry f;
    f.path = get_str(e, "path", "manifest.files");
    f.split = get_str(e, "split", "manifest.files");
    f.label = get_str(e, "label", "manifest.files");
    f.machine = get_str(e, "machine", "manifest.files");
    m.files.push_back(std::move(f));
  }
  m.root = std::filesystem::path(path).parent_path().string();
  if (m.root.empty()) m.root = ".";
  m.validate();
  return m;
}

void save_manifest(const DatasetManifest& m, const std::string& path) {
  m.validate();
  json doc;
  doc["schema"] = "echo-dataset/1";
  doc["task"] = m.task;
  doc["tool_version"] = kVersion;
  doc["seed"] = m.seed;
  if (!m.generator_json.empty()) {
    doc["generator"] = parse_json_text(m.generator_json, "manifest generator echo");
  }
  json files = json::array();
  for (const FileEntry& f : m.files) {
    json e;
    e["path"] = f.path;
    e["split"] = f.split;
    e["label"] = f.label;
    e["machine"] = f.machine;
    files.push_back(std::move(e));
  }
  doc["files"] = std::move(files);
  write_text_file(path, doc.dump(2) + "\n");
}

namespace {

// Shared scalar knobs for one machine/class row of a generation grid.
struct GridRow {
  std::string name;
  double base_rotation_hz = 30.0;
  int num_harmonics = 8;
  double harmonic_decay = 0.7;
  double noise_snr_db = 10.0;
  double anomaly_strength = 1.0;
};

GridRow parse_grid_row(const json& e, const std::string& path) {
  GridRow r;
  r.name = get_str(e, "name", path);
  if (r.name.empty() || r.name.find('/') != std::string::npos) {
    throw ConfigError(path + ": name must be a nonempty path segment");
  }
  if (e.contains("base_rotation_hz")) r.base_rotation_hz = get_num(e, "base_rotation_hz", path);
  if (e.contains("num_harmonics")) {
    r.num_harmonics = static_cast<int>(get_int(e, "num_harmonics", path));
  }
  if (e.contains("harmonic_decay")) r.harmonic_decay = get_num(e, "harmonic_decay", path);
  if (e.contains("noise_snr_db")) r.noise_snr_db = get_num(e, "noise_snr_db", path);
  if (e.contains("anomaly_strength")) r.anomaly_strength = get_num(e, "anomaly_strength", path);
  return r;
}

SynthSpec base_spec(const GridRow& r, int sample_rate_hz, double duration_s) {
  SynthSpec s;
  s.sample_rate_hz = sample_rate_hz;
  s.duration_s = duration_s;
  s.base_rotation_hz = r.base_rotation_hz;
  s.num_harmonics = r.num_harmonics;
  s.harmonic_decay = r.harmonic_decay;
  s.noise_snr_db = r.noise_snr_db;
  return s;
}

void write_signal(const std::string& out_dir, const std::string& rel, const SynthSpec& spec) {
  const std::filesystem::path full = std::filesystem::path(out_dir) / rel;
  std::filesystem::create_directories(full.parent_path());
  write_wav_f32(full.string(), synth_signal(spec));
}

}  // namespace

DatasetManifest generate_corpus(const std::string& grid_json, const std::string& out_dir,
                                uint64_t seed) {
  const json grid = parse_json_text(grid_json, "generation grid");
  if (!grid.is_object()) throw ConfigError("grid: top level must be an object");
  reject_unknown_keys(
      grid, {"task", "sample_rate_hz", "duration_s", "machines", "classes", "per_class"}, "grid");
  const std::string task = get_str(grid, "task", "grid");

  DatasetManifest m;
  m.task = task;
  m.seed = seed;
  json echo_cfg = grid;
  echo_cfg["seed"] = seed;
  m.generator_json = echo_cfg.dump();

  Rng root(seed);

  if (task == "anomaly") {
    const int fs = static_cast<int>(get_int(grid, "sample_rate_hz", "grid"));
    const double dur = get_num(grid, "duration_s", "grid");
    if (!grid.contains("machines") || !grid.at("machines").is_array() ||
        grid.at("machines").empty()) {
      throw ConfigError("grid: anomaly task needs a nonempty machines array");
    }
    for (const json& e : grid.at("machines")) {
      reject_unknown_keys(e,
                          {"name", "base_rotation_hz", "num_harmonics", "harmonic_decay",
                           "noise_snr_db", "anomaly_strength", "train_normals", "test_normals",
                           "test_anomalies", "anomaly_kinds"},
                          "grid.machines");
      const GridRow row = parse_grid_row(e, "grid.machines");
      const int n_train = static_cast<int>(get_int(e, "train_normals", "grid.machines"));
      const int n_test_n = static_cast<int>(get_int(e, "test_normals", "grid.machines"));
      const int n_test_a = static_cast<int>(get_int(e, "test_anomalies", "grid.machines"));
      if (n_train < 1 || n_test_n < 0 || n_test_a < 0) {
        throw ConfigError("grid.machines: counts must be positive (train) / non-negative");
      }
      std::vector<std::string> kinds;
      if (e.contains("anomaly_kinds")) {
        for (const json& k : e.at("anomaly_kinds")) {
          if (!k.is_string()) throw ConfigError("grid.machines.anomaly_kinds: must be strings");
          kinds.push_back(k.get<std::string>());
        }
      }
      if (kinds.empty()) kinds = {"extra_harmonic", "impulse_train"};
      for (const std::string& k : kinds) {
        if (!valid_anomaly_kind(k) || k == "none") {
          throw ConfigError("grid.machines.anomaly_kinds: unknown kind '" + k + "'");
        }
      }

      const Rng mrng = root.fork(row.name);
      for (int i = 0; i < n_train; ++i) {
        SynthSpec s = base_spec(row, fs, dur);
        s.seed = mrng.fork(index_tag("train_normal", i)).seed();
        const std::string rel = row.name + "/train/normal/" + index_name("normal", i);
        write_signal(out_dir, rel, s);
        m.files.push_back({rel, "train", "normal", row.name});
      }
      for (int i = 0; i < n_test_n; ++i) {
        SynthSpec s = base_spec(row, fs, dur);
        s.seed = mrng.fork(index_tag("test_normal", i)).seed();
        const std::string rel = row.name + "/test/normal/" + index_name("normal", i);
        write_signal(out_dir, rel, s);
        m.files.push_back({rel, "test", "normal", row.name});
      }
      for (int i = 0; i < n_test_a; ++i) {
        SynthSpec s = base_spec(row, fs, dur);
        s.seed = mrng.fork(index_tag("test_anomaly", i)).seed();
        s.anomaly_kind = kinds[static_cast<size_t>(i) % kinds.size()];
        s.anomaly_strength = row.anomaly_strength;
        const std::string rel = row.name + "/test/anomaly/" + index_name("anomaly", i);
        write_signal(out_dir, rel, s);
        m.files.push_back({rel, "test", "anomaly", row.name});
      }
    }
  } else if (task == "classification") {
    const int fs = static_cast<int>(get_int(grid, "sample_rate_hz", "grid"));
    const double dur = get_num(grid, "duration_s", "grid");
    const int per_class = static_cast<int>(get_int(grid, "per_class", "grid"));
    if (per_class < 2) throw ConfigError("grid: per_class must be >= 2");
    if (!grid.contains("classes") || !grid.at("classes").is_array() ||
        grid.at("classes").empty()) {
      throw ConfigError("grid: classification task needs a nonempty classes array");
    }
    for (const json& e : grid.at("classes")) {
      reject_unknown_keys(e,
                          {"name", "base_rotation_hz", "num_harmonics", "harmonic_decay",
                           "noise_snr_db", "anomaly_strength", "anomaly_kind"},
                          "grid.classes");
      const GridRow row = parse_grid_row(e, "grid.classes");
      std::string kind = "none";
      if (e.contains("anomaly_kind")) kind = get_str(e, "anomaly_kind", "grid.classes");
      if (!valid_anomaly_kind(kind)) {
        throw ConfigError("grid.classes: unknown anomaly_kind '" + kind + "'");
      }
      const Rng crng = root.fork(row.name);
      for (int i = 0; i < per_class; ++i) {
        SynthSpec s = base_spec(row, fs, dur);
        s.seed = crng.fork(index_tag("file", i)).seed();
        s.anomaly_kind = kind;
        s.anomaly_strength = row.anomaly_strength;
        const std::string rel = row.name + "/" + index_name("sig", i);
        write_signal(out_dir, rel, s);
        m.files.push_back({rel, "train", row.name, row.name});
      }
    }
  } else {
    throw ConfigError("grid: task must be anomaly or classification, got '" + task + "'");
  }

  m.root = out_dir;
  save_manifest(m, (std::filesystem::path(out_dir) / "manifest.json").string());
  return m;
}

std::string reference_anomaly_grid() {
  // Four machine archetypes, 50 files each: rotation rate, spectral tilt and
  // SNR vary per machine, and each pairs two fault modes.
  return R"({
  "task": "anomaly",
  "sample_rate_hz": 16000,
  "duration_s": 1.0,
  "machines": [
    {"name": "fan", "base_rotation_hz": 24.0, "num_harmonics": 10, "harmonic_decay": 0.75,
     "noise_snr_db": 16.0, "train_normals": 30, "test_normals": 10, "test_anomalies": 10,
     "anomaly_kinds": ["extra_harmonic", "noise_boost"], "anomaly_strength": 1.0},
    {"name": "pump", "base_rotation_hz": 47.0, "num_harmonics": 8, "harmonic_decay": 0.65,
     "noise_snr_db": 18.0, "train_normals": 30, "test_normals": 10, "test_anomalies": 10,
     "anomaly_kinds": ["impulse_train", "extra_harmonic"], "anomaly_strength": 1.0},
    {"name": "slider", "base_rotation_hz": 33.0, "num_harmonics": 12, "harmonic_decay": 0.8,
     "noise_snr_db": 20.0, "train_normals": 30, "test_normals": 10, "test_anomalies": 10,
     "anomaly_kinds": ["amplitude_mod", "impulse_train"], "anomaly_strength": 1.0},
    {"name": "valve", "base_rotation_hz": 61.0, "num_harmonics": 6, "harmonic_decay": 0.6,
     "noise_snr_db": 17.0, "train_normals": 30, "test_normals": 10, "test_anomalies": 10,
     "anomaly_kinds": ["noise_boost", "amplitude_mod"], "anomaly_strength": 1.0}
  ]
})";
}

std::string reference_classification_grid() {
  // One shared machine archetype; the class is the fault mode.
  return R"({
  "task": "classification",
  "sample_rate_hz": 16000,
  "duration_s": 1.0,
  "per_class": 20,
  "classes": [
    {"name": "healthy", "base_rotation_hz": 30.0, "num_harmonics": 8, "harmonic_decay": 0.7,
     "noise_snr_db": 10.0, "anomaly_kind": "none"},
    {"name": "imbalance", "base_rotation_hz": 30.0, "num_harmonics": 8, "harmonic_decay": 0.7,
     "noise_snr_db": 10.0, "anomaly_kind": "extra_harmonic", "anomaly_strength": 1.2},
    {"name": "bearing", "base_rotation_hz": 30.0, "num_harmonics": 8, "harmonic_decay": 0.7,
     "noise_snr_db": 10.0, "anomaly_kind": "impulse_train", "anomaly_strength": 1.2},
    {"name": "looseness", "base_rotation_hz": 30.0, "num_harmonics": 8, "harmonic_decay": 0.7,
     "noise_snr_db": 10.0, "anomaly_kind": "amplitude_mod", "anomaly_strength": 1.5}
  ]
})";
}

namespace {

struct EmbRow {
  std::vector<float> vec;
  int sample_rate_hz = 0;
  int num_bands = 0;
  bool from_cache = false;
  bool ok = false;
  std::string error;
};

std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for '" + path + "'");
  return bytes;
}

uint64_t vec_hash(const std::vector<float>& v) {
  return fnv1a64(v.data(), v.size() * sizeof(float));
}

struct CacheEntry {
  uint64_t key = 0;
  int sample_rate_hz = 0;
  int num_bands = 0;
  std::vector<float> vec;
};

// Cache layout: <path> is a JSONL index (schema header line, then one record
// per id), <path>.bin the concatenated float32 vectors. Records carry the
// content key and a hash of their slice, so stale or tampered entries fall
// back to recomputation instead of poisoning results.
std::map<std::string, CacheEntry> load_cache(const std::string& path) {
  std::map<std::string, CacheEntry> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string blob;
  {
    std::ifstream bin(path + ".bin", std::ios::binary);
    if (!bin) return out;
    blob.assign((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
  }
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception&) {
      return {};
    }
    if (!header_seen) {
      header_seen = true;
      if (!rec.is_object() || rec.value("schema", "") != "echo-embcache/1") return {};
      continue;
    }
    if (!rec.is_object()) continue;
    try {
      CacheEntry e;
      const std::string id = rec.at("id").get<std::string>();
      e.key = std::stoull(rec.at("key").get<std::string>(), nullptr, 16);
      e.sample_rate_hz = rec.at("fs").get<int>();
      e.num_bands = rec.at("K").get<int>();
      const size_t offset = rec.at("offset").get<size_t>();
      const size_t length = rec.at("length").get<size_t>();
      const uint64_t want_hash = std::stoull(rec.at("hash").get<std::string>(), nullptr, 16);
      const size_t byte_off = offset * sizeof(float);
      const size_t byte_len = length * sizeof(float);
      if (byte_off + byte_len > blob.size()) continue;
      e.vec.resize(length);
      std::memcpy(e.vec.data(), blob.data() + byte_off, byte_len);
      if (vec_hash(e.vec) != want_hash) continue;
      out[id] = std::move(e);
    } catch (const std::exception&) {
      continue;
    }
  }
  return out;
}

void save_cache(const std::string& path, const DatasetManifest& manifest,
                const std::vector<EmbRow>& rows, const std::vector<uint64_t>& keys) {
  std::string index;
  std::string blob;
  {
    json header;
    header["schema"] = "echo-embcache/1";
    header["tool_version"] = kVersion;
    index += header.dump() + "\n";
  }
  size_t offset = 0;
  for (size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].ok) continue;
    json rec;
    rec["id"] = manifest.files[i].path;
    rec["key"] = to_hex(keys[i]);
    rec["fs"] = rows[i].sample_rate_hz;
    rec["K"] = rows[i].num_bands;
    rec["offset"] = offset;
    rec["length"] = rows[i].vec.size();
    rec["hash"] = to_hex(vec_hash(rows[i].vec));
    index += rec.dump() + "\n";
    blob.append(reinterpret_cast<const char*>(rows[i].vec.data()),
                rows[i].vec.size() * sizeof(float));
    offset += rows[i].vec.size();
  }
  write_text_file(path, index);
  std::ofstream bin(path + ".bin", std::ios::binary | std::ios::trunc);
  if (!bin) throw IoError("cannot open '" + path + ".bin' for writing");
  bin.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!bin) throw IoError("write failed for '" + path + ".bin'");
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

EmbedResult embed_corpus(const DatasetManifest& manifest, const EncoderParams& params,
                         const std::string& cache_path, int threads) {
  manifest.validate();
  params.config.validate();
  if (threads < 1) throw ConfigError("embed: threads must be >= 1");

  const uint64_t ckpt_sum = params_checksum(params);
  const std::string cfg_dump = to_json(params.config).dump();
  const uint64_t base_key =
      fnv1a64(cfg_dump.data(), cfg_dump.size(), fnv1a64(&ckpt_sum, sizeof(ckpt_sum)));

  std::map<std::string, CacheEntry> cache;
  if (!cache_path.empty()) cache = load_cache(cache_path);

  const size_t n = manifest.files.size();
  std::vector<EmbRow> rows(n);
  std::vector<uint64_t> keys(n, 0);

  auto process = [&](size_t i) {
    EmbRow& row = rows[i];
    try {
      const std::string full = manifest.file_path(i);
      const std::string bytes = read_file_bytes(full);
      keys[i] = fnv1a64(bytes.data(), bytes.size(), base_key);

      const auto it = cache.find(manifest.files[i].path);
      if (it != cache.end() && it->second.key == keys[i]) {
        row.vec = it->second.vec;
        row.sample_rate_hz = it->second.sample_rate_hz;
        row.num_bands = it->second.num_bands;
        row.from_cache = true;
        row.ok = true;
        return;
      }

      const Waveform w =
          ends_with(full, ".csv") ? read_csv(full) : read_wav(full);
      const SignalEmbedding emb = encode_signal(w, params);
      row.vec.resize(emb.values.size());
      for (size_t j = 0; j < emb.values.size(); ++j) {
        row.vec[j] = static_cast<float>(emb.values[j]);
      }
      row.sample_rate_hz = emb.sample_rate_hz;
      row.num_bands = emb.K;
      row.ok = true;
    } catch (const Error& ex) {
      row.error = ex.what();
    }
  };

  if (threads == 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) process(i);
  } else {
    std::atomic<size_t> next{0};
    auto worker = [&]() {
      for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) process(i);
    };
    std::vector<std::thread> pool;
    const int count = std::min<int>(threads, static_cast<int>(n));
    pool.reserve(count);
    for (int t = 0; t < count; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  std::vector<std::string> failures;
  for (size_t i = 0; i < n; ++i) {
    if (!rows[i].ok) failures.push_back(manifest.files[i].path + ": " + rows[i].error);
  }
  if (!failures.empty()) {
    std::string msg = "failed to embed " + std::to_string(failures.size()) + " file(s): ";
    for (size_t i = 0; i < failures.size() && i < 5; ++i) {
      if (i > 0) msg += "; ";
      msg += failures[i];
    }
    if (failures.size() > 5) msg += "; ...";
    throw IoError(msg);
  }

  if (!cache_path.empty()) save_cache(cache_path, manifest, rows, keys);

  EmbedResult result;
  std::map<int, size_t> group_of;  // ascending by rate, std::map keeps order
  for (size_t i = 0; i < n; ++i) {
    group_of.emplace(rows[i].sample_rate_hz, 0);
  }
  {
    size_t g = 0;
    for (auto& [rate, idx] : group_of) {
      idx = g++;
      RateGroup group;
      group.sample_rate_hz = rate;
      result.groups.push_back(std::move(group));
    }
  }
  for (size_t i = 0; i < n; ++i) {
    RateGroup& g = result.groups[group_of.at(rows[i].sample_rate_hz)];
    std::vector<double> wide(rows[i].vec.begin(), rows[i].vec.end());
    g.set.append(manifest.files[i].path, wide, manifest.files[i].label);
    g.file_index.push_back(i);
    if (rows[i].from_cache) {
      ++result.cached;
    } else {
      ++result.computed;
    }
  }

  if (manifest.task == "anomaly" && result.groups.size() > 1) {
    throw ConfigError("anomaly corpora must share one sampling rate; found " +
                      std::to_string(result.groups.size()));
  }
  return result;
}

void write_embeddings(const std::string& path, const DatasetManifest& manifest,
                      const EmbedResult& result, const EncoderParams& params) {
  // Rows are written in manifest order regardless of rate grouping.
  struct Loc {
    const RateGroup* group = nullptr;
    int row = 0;
  };
  std::vector<Loc> locs(manifest.files.size());
  for (const RateGroup& g : result.groups) {
    for (size_t r = 0; r < g.file_index.size(); ++r) {
      locs[g.file_index[r]] = {&g, static_cast<int>(r)};
    }
  }

  const int d = params.config.embed_dim;
  std::string index;
  std::string blob;
  {
    json header;
    header["schema"] = "echo-embeddings/1";
    header["tool_version"] = kVersion;
    header["model"] = to_json(params.config);
    header["params_checksum"] = to_hex(params_checksum(params));
    header["count"] = manifest.files.size();
    header["blob"] = std::filesystem::path(path + ".bin").filename().string();
    index += header.dump() + "\n";
  }
  size_t offset = 0;
  for (size_t i = 0; i < manifest.files.size(); ++i) {
    const Loc& loc = locs[i];
    if (loc.group == nullptr) throw UsageError("embeddings do not cover the manifest");
    const EmbeddingSet& set = loc.group->set;
    const double* src = set.row(loc.row);
    std::vector<float> vec(set.E);
    for (int j = 0; j < set.E; ++j) vec[j] = static_cast<float>(src[j]);

    json rec;
    rec["id"] = manifest.files[i].path;
    rec["label"] = manifest.files[i].label;
    rec["machine"] = manifest.files[i].machine;
    rec["split"] = manifest.files[i].split;
    rec["fs"] = loc.group->sample_rate_hz;
    rec["K"] = set.E / d;
    rec["d"] = d;
    rec["offset"] = offset;
    rec["length"] = vec.size();
    index += rec.dump() + "\n";
    blob.append(reinterpret_cast<const char*>(vec.data()), vec.size() * sizeof(float));
    offset += vec.size();
  }
  write_text_file(path, index);
  std::ofstream bin(path + ".bin", std::ios::binary | std::ios::trunc);
  if (!bin) throw IoError("cannot open '" + path + ".bin' for writing");
  bin.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!bin) throw IoError("write failed for '" + path + ".bin'");
}

namespace {

EmbeddingSet subset(const EmbeddingSet& set, const std::vector<size_t>& rows) {
  EmbeddingSet out;
  for (size_t r : rows) {
    std::vector<double> vec(set.row(static_cast<int>(r)),
                            set.row(static_cast<int>(r)) + set.E);
    out.append(set.ids[r], vec, set.labels[r]);
  }
  return out;
}

std::vector<double> row_vec(const EmbeddingSet& set, size_t r) {
  return std::vector<double>(set.row(static_cast<int>(r)),
                             set.row(static_cast<int>(r)) + set.E);
}

EvalReport base_report(const std::string& task, const EvalConfig& eval,
                       const EncoderParams& params) {
  EvalReport rep;
  rep.task = task;
  rep.tool_version = kVersion;
  rep.config = eval;
  rep.model_config_json = to_json(params.config).dump();
  return rep;
}

}  // namespace

EvalReport run_anomaly_benchmark(const DatasetManifest& manifest, const EncoderParams& params,
                                 const EvalConfig& eval, const std::string& cache_path,
                                 int threads) {
  if (manifest.task != "anomaly") {
    throw ConfigError("eval-anomaly: manifest task is '" + manifest.task + "'");
  }
  eval.validate();
  const EmbedResult er = embed_corpus(manifest, params, cache_path, threads);
  const RateGroup& g = er.groups.front();

  std::set<std::string> machine_names;
  for (const FileEntry& f : manifest.files) machine_names.insert(f.machine);

  EvalReport rep = base_report("anomaly", eval, params);
  for (const std::string& name : machine_names) {
    std::vector<size_t> train_rows;
    std::vector<size_t> test_rows;
    for (size_t r = 0; r < g.file_index.size(); ++r) {
      const FileEntry& f = manifest.files[g.file_index[r]];
      if (f.machine != name) continue;
      (f.split == "train" ? train_rows : test_rows).push_back(r);
    }
    if (train_rows.empty() || test_rows.empty()) {
      throw ConfigError("eval-anomaly: machine '" + name + "' needs train and test files");
    }
    const EmbeddingSet train = subset(g.set, train_rows);

    std::vector<double> neg;
    std::vector<double> pos;
    for (size_t r : test_rows) {
      const double score =
          knn_anomaly_score(train, row_vec(g.set, r), eval.k, eval.metric, eval.l2_normalize);
      const FileEntry& f = manifest.files[g.file_index[r]];
      (f.label == "anomaly" ? pos : neg).push_back(score);
    }
    if (neg.empty() || pos.empty()) {
      throw ConfigError("eval-anomaly: machine '" + name +
                        "' needs both normal and anomaly test files");
    }
    GroupScores gs;
    gs.name = name;
    gs.auc = roc_auc(neg, pos);
    gs.pauc = partial_auc(neg, pos, eval.max_fpr);
    gs.n_train = train.M;
    gs.n_test = static_cast<int>(test_rows.size());
    rep.groups.push_back(std::move(gs));
  }
  rep.aggregate = aggregate_scores(rep.groups, eval.aggregate);
  rep.n_predictions = 0;
  for (const GroupScores& gs : rep.groups) rep.n_predictions += gs.n_test;
  return rep;
}

EvalReport run_classification_benchmark(const DatasetManifest& manifest,
                                        const EncoderParams& params, const EvalConfig& eval,
                                        const std::string& cache_path, int threads) {
  if (manifest.task != "classification") {
    throw ConfigError("eval-classify: manifest task is '" + manifest.task + "'");
  }
  eval.validate();
  const EmbedResult er = embed_corpus(manifest, params, cache_path, threads);

  std::set<std::string> class_set;
  for (const FileEntry& f : manifest.files) class_set.insert(f.label);
  EvalReport rep = base_report("classification", eval, params);
  rep.classes.assign(class_set.begin(), class_set.end());

  std::vector<std::string> all_true;
  std::vector<std::string> all_pred;
  int fold_id = 0;
  for (const RateGroup& g : er.groups) {
    const size_t n = static_cast<size_t>(g.set.M);
    const std::vector<Split> splits = eval.cv == "loocv"
                                          ? loocv_splits(n)
                                          : kfold_splits(n, eval.folds, eval.seed);
    for (const Split& split : splits) {
      const EmbeddingSet train = subset(g.set, split.train);
      std::vector<std::string> fold_true;
      std::vector<std::string> fold_pred;
      for (size_t r : split.test) {
        const std::string pred =
            knn_classify(train, row_vec(g.set, r), eval.k, eval.metric, eval.l2_normalize);
        fold_true.push_back(g.set.labels[r]);
        fold_pred.push_back(pred);
      }
      FoldScores fs;
      fs.fold = fold_id++;
      fs.n_test = static_cast<int>(split.test.size());
      fs.metrics = classification_metrics(fold_true, fold_pred, rep.classes);
      rep.folds.push_back(std::move(fs));
      all_true.insert(all_true.end(), fold_true.begin(), fold_true.end());
      all_pred.insert(all_pred.end(), fold_pred.begin(), fold_pred.end());
    }
  }
  rep.pooled = classification_metrics(all_true, all_pred, rep.classes);
  rep.n_predictions = static_cast<int>(all_true.size());
  return rep;
}

}  // namespace echo
