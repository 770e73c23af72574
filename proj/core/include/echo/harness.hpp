// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "echo/encoder.hpp"
#include "echo/evaluation.hpp"

namespace echo {

// One synthetic machine signal: a harmonic stack with per-file phase and
// rotation jitter in white noise, plus an optional fault perturbation. Fully
// reproducible from (spec, seed); the perturbation draws from its own forked
// stream, so an anomaly and its normal counterpart share the same base
// signal.
struct SynthSpec {
  int sample_rate_hz = 16000;
  double duration_s = 1.0;
  double base_rotation_hz = 30.0;
  int num_harmonics = 8;
  double harmonic_decay = 0.7;
  double noise_snr_db = 10.0;
  std::string anomaly_kind = "none"; // extra_harmonic|impulse_train|amplitude_mod|noise_boost
  double anomaly_strength = 1.0;
  uint64_t seed = 0;

  void validate() const;
};

Waveform synth_signal(const SynthSpec& spec);

// Fourth standardized moment (population); impulse faults push it well above
// the harmonic-stack baseline.
double kurtosis(const std::vector<double>& x);

struct FileEntry {
  std::string path; // relative to the manifest directory
  std::string split; // train|test
  std::string label; // normal|anomaly or a class name
  std::string machine; // grouping key (machine or class)
};

struct DatasetManifest {
  std::string root; // directory holding manifest + files
  std::string task; // anomaly|classification
  std::vector<FileEntry> files;
  std::string generator_json; // config echo from gen-data, may be empty
  uint64_t seed = 0;

  std::string file_path(size_t i) const;
  std::vector<std::string> train_paths() const;
  void validate() const; // anomaly train split must be all-normal
};

DatasetManifest load_manifest(const std::string& path);
void save_manifest(const DatasetManifest& m, const std::string& path);

// Renders the spec-grid JSON (see reference grids for the schema) into
// WAV files plus manifest.json under out_dir.
DatasetManifest generate_corpus(const std::string& grid_json, const std::string& out_dir,
                                uint64_t seed);

// Built-in corpus presets: four machines, fs 16 kHz, about 200 signals total
// for the anomaly grid; four fault classes for the classification grid.
std::string reference_anomaly_grid();
std::string reference_classification_grid();

// Embeddings grouped by sampling rate (embedding length is rate-dependent).
// Anomaly corpora must be single-rate; classification corpora may span rates
// and are evaluated per group.
struct RateGroup {
  int sample_rate_hz = 0;
  EmbeddingSet set;
  std::vector<size_t> file_index; // manifest index per row
};

struct EmbedResult {
  std::vector<RateGroup> groups; // ascending sampling rate
  int cached = 0;
  int computed = 0;
};

// Embeds every manifest file (values quantized to float32). cache_path, when
// nonempty, names a JSONL+blob pair keyed by (params checksum, config, file
// bytes); valid entries skip the encoder, tampered ones are recomputed.
EmbedResult embed_corpus(const DatasetManifest& manifest, const EncoderParams& params,
                         const std::string& cache_path = "", int threads = 1);

// Embedding file: JSONL manifest (header + one record per signal) next to a
// float32 little-endian blob at <path>.bin.
void write_embeddings(const std::string& path, const DatasetManifest& manifest,
                      const EmbedResult& result, const EncoderParams& params);

EvalReport run_anomaly_benchmark(const DatasetManifest& manifest, const EncoderParams& params,
                                 const EvalConfig& eval, const std::string& cache_path = "",
                                 int threads = 1);

EvalReport run_classification_benchmark(const DatasetManifest& manifest,
                                        const EncoderParams& params, const EvalConfig& eval,
                                        const std::string& cache_path = "", int threads = 1);

}  // namespace echo
