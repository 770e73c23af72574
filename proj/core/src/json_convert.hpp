// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Internal JSON <-> config conversions. Not installed; public headers stay
// free of the vendored json dependency.

#pragma once

#include <string>

#include "echo/encoder.hpp"
#include "echo/errors.hpp"
#include "echo/evaluation.hpp"
#include "echo/trainer.hpp"
#include "json.hpp"

namespace echo {

using nlohmann::json;

double get_num(const json& obj, const std::string& key, const std::string& path);
int64_t get_int(const json& obj, const std::string& key, const std::string& path);
bool get_bool(const json& obj, const std::string& key, const std::string& path);
std::string get_str(const json& obj, const std::string& key, const std::string& path);

// Throws ConfigError naming the first key of obj not in the known list.
void reject_unknown_keys(const json& obj, const std::vector<std::string>& known,
                         const std::string& path);

json to_json(const EchoConfig& cfg);
json to_json(const TrainConfig& cfg);
json to_json(const EvalConfig& cfg);

// Partial application: only keys present in obj are assigned, so file and
// flag overrides compose. A "variant"/"preset" key resets the struct to its
// preset before the remaining keys apply.
void apply_echo_config(EchoConfig& cfg, const json& obj, const std::string& path);
void apply_train_config(TrainConfig& cfg, const json& obj, const std::string& path);
void apply_eval_config(EvalConfig& cfg, const json& obj, const std::string& path);

json parse_json_text(const std::string& text, const std::string& what);
json load_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace echo
