// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "echo/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "echo/rng.hpp"
#include "echo/version.hpp"
#include "json_convert.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs assume a little-endian host");

namespace echo {

namespace {

using Kind = CheckpointError::Kind;

void put_u64(std::string& out, uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

}  // namespace

void write_checkpoint_file(const std::string& path, const CheckpointData& data) {
  json manifest;
  manifest["format_version"] = kCheckpointFormatVersion;
  manifest["kind"] = data.kind;
  manifest["tool_version"] = kVersion;
  manifest["model"] = to_json(data.model);
  if (!data.train_json.empty()) {
    manifest["train"] = parse_json_text(data.train_json, "train section");
  }

  json tensors = json::array();
  uint64_t offset = 0;
  for (const auto& [name, t] : data.tensors) { // std::map: sorted order
    uint64_t bytes = static_cast<uint64_t>(t.numel()) * sizeof(double);
    tensors.push_back(json{{"name", name},
                           {"shape", t.shape()},
                           {"dtype", "f64"},
                           {"byte_offset", offset},
                           {"byte_length", bytes}});
    offset += bytes;
  }
  manifest["tensors"] = std::move(tensors);

  std::string head = manifest.dump();
  std::string out;
  out.reserve(8 + 8 + head.size() + offset);
  out.append(kCheckpointMagic, 8);
  put_u64(out, head.size());
  out += head;
  for (const auto& [name, t] : data.tensors) {
    out.append(reinterpret_cast<const char*>(t.data()), t.numel() * sizeof(double));
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  f.flush();
  if (!f.good()) throw IoError("write failed for " + path);
}

CheckpointData read_checkpoint_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint " + path);
  std::string raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  if (raw.size() < 16) throw CheckpointError(Kind::kTruncated, path + ": file too short");
  if (std::memcmp(raw.data(), kCheckpointMagic, 8) != 0) {
    throw CheckpointError(Kind::kBadMagic, path + ": not a checkpoint (bad magic)");
  }
  uint64_t head_len = 0;
  std::memcpy(&head_len, raw.data() + 8, 8);
  if (16 + head_len > raw.size()) {
    throw CheckpointError(Kind::kTruncated, path + ": manifest extends past end of file");
  }

  json manifest = json::parse(raw.substr(16, head_len), nullptr, false);
  if (manifest.is_discarded()) {
    throw CheckpointError(Kind::kTruncated, path + ": manifest is not valid JSON");
  }
  int version = manifest.value("format_version", -1);
  if (version != kCheckpointFormatVersion) {
    throw CheckpointError(Kind::kVersionMismatch,
                          path + ": unsupported format_version " + std::to_string(version));
  }

  CheckpointData data;
  data.kind = get_str(manifest, "kind", "manifest");
  if (!manifest.contains("model")) {
    throw CheckpointError(Kind::kTruncated, path + ": manifest has no model section");
  }
  apply_echo_config(data.model, manifest.at("model"), "model");
  if (manifest.contains("train")) data.train_json = manifest.at("train").dump();

  const char* blob = raw.data() + 16 + head_len;
  const uint64_t blob_len = raw.size() - 16 - head_len;
  if (!manifest.contains("tensors") || !manifest["tensors"].is_array()) {
    throw CheckpointError(Kind::kTruncated, path + ": manifest has no tensor table");
  }
  for (const json& entry : manifest["tensors"]) {
    std::string name = get_str(entry, "name", "tensors");
    std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
    uint64_t off = entry.at("byte_offset").get<uint64_t>();
    uint64_t len = entry.at("byte_length").get<uint64_t>();

    size_t numel = 1;
    for (int s : shape) {
      if (s < 0) throw CheckpointError(Kind::kShapeMismatch, path + ": negative dim in " + name);
      numel *= static_cast<size_t>(s);
    }
    if (len != numel * sizeof(double)) {
      throw CheckpointError(Kind::kShapeMismatch,
                            path + ": tensor " + name + " shape/byte_length disagree");
    }
    if (off + len > blob_len) {
      throw CheckpointError(Kind::kTruncated, path + ": tensor " + name + " exceeds blob");
    }
    std::vector<double> values(numel);
    std::memcpy(values.data(), blob + off, len);
    data.tensors.emplace(std::move(name),
                         nn::Tensor::from_vector(std::move(values), std::move(shape)));
  }
  return data;
}

void save_encoder_checkpoint(const std::string& path, const EncoderParams& ep) {
  CheckpointData data;
  data.kind = "encoder";
  data.model = ep.config;
  for (const auto& [name, t] : ep.params) data.tensors.emplace(name, t);
  data.tensors.emplace("temporal_pe",
                       nn::Tensor::from_vector(ep.temporal_pe,
                                               {ep.config.max_patches, ep.config.embed_dim}));
  write_checkpoint_file(path, data);
}

namespace {

// Pulls one tensor out of the checkpoint, validating presence and shape.
nn::Tensor take_tensor(const CheckpointData& data, const std::string& name,
                       const std::vector<int>& shape, const std::string& path) {
  auto it = data.tensors.find(name);
  if (it == data.tensors.end()) {
    throw CheckpointError(Kind::kMissingTensor, path + ": missing tensor " + name);
  }
  if (it->second.shape() != shape) {
    throw CheckpointError(Kind::kShapeMismatch,
                          path + ": tensor " + name + " has shape " +
                              nn::shape_str(it->second.shape()) + ", expected " +
                              nn::shape_str(shape));
  }
  return it->second;
}

}  // namespace

EncoderParams load_encoder_checkpoint(const std::string& path, const std::string& source) {
  if (source != "auto" && source != "student" && source != "teacher") {
    throw ConfigError("checkpoint source must be auto, student or teacher");
  }
  CheckpointData data = read_checkpoint_file(path);

  std::string prefix;
  if (data.kind == "train_state") {
    prefix = (source == "teacher") ? "teacher/" : "student/";
  } else if (data.kind == "encoder") {
    if (source == "teacher") {
      throw CheckpointError(Kind::kWrongKind,
                            path + ": encoder checkpoints carry no teacher weights");
    }
  } else {
    throw CheckpointError(Kind::kWrongKind, path + ": unknown checkpoint kind " + data.kind);
  }

  EncoderParams ep;
  ep.config = data.model;
  for (const ParamSpec& spec : encoder_param_schema(data.model)) {
    nn::Tensor t = take_tensor(data, prefix + spec.name, spec.shape, path);
    t.set_requires_grad(true);
    ep.params.put(spec.name, t);
  }
  nn::Tensor pe = take_tensor(data, "temporal_pe",
                              {data.model.max_patches, data.model.embed_dim}, path);
  ep.temporal_pe = pe.values();
  return ep;
}

uint64_t params_checksum(const EncoderParams& ep) {
  const std::string cfg_text = to_json(ep.config).dump();
  uint64_t h = fnv1a64(std::string_view(cfg_text));
  for (const auto& [name, t] : ep.params) {
    h = fnv1a64(name.data(), name.size(), h);
    h = fnv1a64(t.data(), t.numel() * sizeof(double), h);
  }
  h = fnv1a64(ep.temporal_pe.data(), ep.temporal_pe.size() * sizeof(double), h);
  return h;
}

}  // namespace echo
