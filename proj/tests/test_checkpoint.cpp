// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "echo/checkpoint.hpp"
#include "echo/encoder.hpp"
#include "echo/errors.hpp"
#include "echo/rng.hpp"

namespace {

echo::EchoConfig tiny_config() {
  echo::EchoConfig cfg = echo::EchoConfig::preset("toy");
  cfg.embed_dim = 12;
  cfg.depth = 2;
  cfg.heads = 2;
  cfg.band_width = 6;
  cfg.patch_len = 6;
  cfg.patch_stride = 3;
  cfg.max_patches = 32;
  cfg.variant = "custom";
  return cfg;
}

std::string temp_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "echo_ckpt_test";
  std::filesystem::create_directories(dir);
  return dir.string();
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  REQUIRE(out.good());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

echo::CheckpointError::Kind load_kind(const std::string& path) {
  try {
    (void)echo::load_encoder_checkpoint(path);
  } catch (const echo::CheckpointError& e) {
    return e.kind();
  }
  FAIL("expected CheckpointError");
  return echo::CheckpointError::Kind::kBadMagic;
}

}  // namespace

TEST_CASE("encoder checkpoint round-trips bit exactly") {
  const std::string dir = temp_dir();
  const std::string path = dir + "/encoder.echckpt";
  const echo::EchoConfig cfg = tiny_config();
  echo::Rng rng(42);
  const echo::EncoderParams ep = echo::init_encoder_params(cfg, rng);
  echo::save_encoder_checkpoint(path, ep);

  const echo::EncoderParams back = echo::load_encoder_checkpoint(path);
  CHECK(back.config.embed_dim == cfg.embed_dim);
  CHECK(back.config.depth == cfg.depth);
  CHECK(back.config.heads == cfg.heads);
  CHECK(back.config.band_width == cfg.band_width);
  CHECK(back.config.variant == cfg.variant);
  CHECK(back.temporal_pe == ep.temporal_pe);
  REQUIRE(back.params.size() == ep.params.size());
  for (const auto& [name, t] : ep.params) {
    REQUIRE(back.params.contains(name));
    CHECK(back.params.at(name).values() == t.values());
    CHECK(back.params.at(name).shape() == t.shape());
    CHECK(back.params.at(name).requires_grad());
  }
  // Same content, same checksum; a changed weight changes it.
  CHECK(echo::params_checksum(back) == echo::params_checksum(ep));
  echo::EncoderParams mutated;  // deep copy: tensors share storage otherwise
  mutated.config = back.config;
  mutated.temporal_pe = back.temporal_pe;
  mutated.params = back.params.clone(true);
  mutated.params.at("cls_token").values()[0] += 1e-9;
  CHECK(echo::params_checksum(mutated) != echo::params_checksum(ep));

  // Saving the loaded copy reproduces the file byte for byte.
  const std::string path2 = dir + "/encoder2.echckpt";
  echo::save_encoder_checkpoint(path2, back);
  CHECK(read_bytes(path) == read_bytes(path2));
}

TEST_CASE("corrupted magic is reported as kBadMagic") {
  const std::string dir = temp_dir();
  const std::string path = dir + "/bad_magic.echckpt";
  echo::Rng rng(1);
  echo::save_encoder_checkpoint(path, echo::init_encoder_params(tiny_config(), rng));
  std::string bytes = read_bytes(path);
  bytes[0] = 'X';
  write_bytes(path, bytes);
  CHECK(load_kind(path) == echo::CheckpointError::Kind::kBadMagic);
}

TEST_CASE("format version bump is reported as kVersionMismatch") {
  const std::string dir = temp_dir();
  const std::string path = dir + "/bad_version.echckpt";
  echo::Rng rng(2);
  echo::save_encoder_checkpoint(path, echo::init_encoder_params(tiny_config(), rng));
  std::string bytes = read_bytes(path);
  const std::string needle = "\"format_version\":1";
  const size_t pos = bytes.find(needle);
  REQUIRE(pos != std::string::npos);
  bytes[pos + needle.size() - 1] = '9';  // same byte count, manifest_len holds
  write_bytes(path, bytes);
  CHECK(load_kind(path) == echo::CheckpointError::Kind::kVersionMismatch);
}

TEST_CASE("truncated files are reported as kTruncated") {
  const std::string dir = temp_dir();
  const std::string path = dir + "/trunc.echckpt";
  echo::Rng rng(3);
  echo::save_encoder_checkpoint(path, echo::init_encoder_params(tiny_config(), rng));
  const std::string bytes = read_bytes(path);
  write_bytes(path, bytes.substr(0, bytes.size() - 16));
  CHECK(load_kind(path) == echo::CheckpointError::Kind::kTruncated);
  write_bytes(path, bytes.substr(0, 7));  // shorter than the magic itself
  CHECK(load_kind(path) == echo::CheckpointError::Kind::kTruncated);
}

TEST_CASE("a missing tensor is reported as kMissingTensor") {
  const std::string dir = temp_dir();
  const std::string path = dir + "/missing.echckpt";
  const echo::EchoConfig cfg = tiny_config();
  echo::Rng rng(4);
  const echo::EncoderParams ep = echo::init_encoder_params(cfg, rng);

  echo::CheckpointData data;
  data.kind = "encoder";
  data.model = cfg;
  for (const auto& [name, t] : ep.params) {
    if (name == "mask_token") continue;
    data.tensors.emplace(name, t);
  }
  data.tensors.emplace("temporal_pe",
                       echo::nn::Tensor::from_vector(ep.temporal_pe,
                                                     {cfg.max_patches, cfg.embed_dim}));
  echo::write_checkpoint_file(path, data);
  CHECK(load_kind(path) == echo::CheckpointError::Kind::kMissingTensor);
}

TEST_CASE("a wrong tensor shape is reported as kShapeMismatch") {
  const std::string dir = temp_dir();
  const std::string path = dir + "/shape.echckpt";
  const echo::EchoConfig cfg = tiny_config();
  echo::Rng rng(5);
  const echo::EncoderParams ep = echo::init_encoder_params(cfg, rng);

  echo::CheckpointData data;
  data.kind = "encoder";
  data.model = cfg;
  for (const auto& [name, t] : ep.params) data.tensors.emplace(name, t);
  data.tensors.at("cls_token") =
      echo::nn::Tensor::zeros({2, cfg.embed_dim});  // should be 1 x d
  data.tensors.emplace("temporal_pe",
                       echo::nn::Tensor::from_vector(ep.temporal_pe,
                                                     {cfg.max_patches, cfg.embed_dim}));
  echo::write_checkpoint_file(path, data);
  CHECK(load_kind(path) == echo::CheckpointError::Kind::kShapeMismatch);
}

TEST_CASE("asking an encoder checkpoint for teacher weights is kWrongKind") {
  const std::string dir = temp_dir();
  const std::string path = dir + "/kind.echckpt";
  echo::Rng rng(6);
  echo::save_encoder_checkpoint(path, echo::init_encoder_params(tiny_config(), rng));
  try {
    (void)echo::load_encoder_checkpoint(path, "teacher");
    FAIL("expected CheckpointError");
  } catch (const echo::CheckpointError& e) {
    CHECK(e.kind() == echo::CheckpointError::Kind::kWrongKind);
  }
}

TEST_CASE("missing file raises IoError, not CheckpointError") {
  CHECK_THROWS_AS((void)echo::load_encoder_checkpoint("/nonexistent/nope.echckpt"),
                  echo::IoError);
}
