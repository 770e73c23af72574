// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "echo/config.hpp"

#include "echo/errors.hpp"
#include "json_convert.hpp"

namespace echo {

namespace {

void apply_config_obj(RunConfig& cfg, const json& doc, const std::string& what) {
  if (!doc.is_object()) throw ConfigError(what + ": top level must be an object");
  reject_unknown_keys(doc, {"model", "train", "eval"}, what);
  if (doc.contains("model")) apply_echo_config(cfg.model, doc.at("model"), what + ".model");
  if (doc.contains("train")) apply_train_config(cfg.train, doc.at("train"), what + ".train");
  if (doc.contains("eval")) apply_eval_config(cfg.eval, doc.at("eval"), what + ".eval");
}

}  // namespace

void apply_config_file(RunConfig& cfg, const std::string& path) {
  apply_config_obj(cfg, load_json_file(path), path);
}

void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& what) {
  apply_config_obj(cfg, parse_json_text(text, what), what);
}

void apply_set_override(RunConfig& cfg, const std::string& assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("--set expects section.key=value, got '" + assignment + "'");
  }
  const std::string key_path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  const size_t dot = key_path.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 >= key_path.size()) {
    throw ConfigError("--set expects section.key=value, got '" + assignment + "'");
  }
  const std::string section = key_path.substr(0, dot);
  const std::string key = key_path.substr(dot + 1);

  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;  // bare strings need no quotes on the command line
  }
  json obj;
  obj[key] = value;

  if (section == "model") {
    apply_echo_config(cfg.model, obj, "--set model");
  } else if (section == "train") {
    apply_train_config(cfg.train, obj, "--set train");
  } else if (section == "eval") {
    apply_eval_config(cfg.eval, obj, "--set eval");
  } else {
    throw ConfigError("--set section must be model, train or eval, got '" + section + "'");
  }
}

std::string run_config_json(const RunConfig& cfg) {
  json doc;
  doc["model"] = to_json(cfg.model);
  doc["train"] = to_json(cfg.train);
  doc["eval"] = to_json(cfg.eval);
  return doc.dump(2) + "\n";
}

}  // namespace echo
