// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>

#include "echo/encoder.hpp"
#include "echo/evaluation.hpp"
#include "echo/trainer.hpp"

namespace echo {

// Everything a CLI run needs; sections apply independently so one file can
// configure several subcommands.
struct RunConfig {
  EchoConfig model = EchoConfig::preset("toy");
  TrainConfig train = TrainConfig::toy();
  EvalConfig eval;
};

// Merges a JSON config file ({"model": {...}, "train": {...}, "eval": {...}})
// into cfg. Only present keys are assigned; unknown keys raise ConfigError
// naming their path.
void apply_config_file(RunConfig& cfg, const std::string& path);
void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& what);

// One --set override, "section.key=value". The value parses as JSON when it
// can (numbers, booleans) and falls back to a plain string.
void apply_set_override(RunConfig& cfg, const std::string& assignment);

// Effective config echo, serialized deterministically (sorted keys).
std::string run_config_json(const RunConfig& cfg);

}  // namespace echo
