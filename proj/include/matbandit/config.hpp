// Copyright 2026 The matbandit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Experiment configuration files.
//
// One `key = value` per line; `#` starts a comment. Values are numbers,
// double-quoted strings, true/false, lists `[a, b]`, tuples `(a, b)` and
// tables `{key = value, ...}`. A value may span lines while a bracket is
// open. Unknown keys are rejected. Matrix indices in targets are 1-based:
//
//   targets = [{label = "T2", entries = [(1, 1, 1.0), (2, 2, 2.0), (3, 3, -3.0)]}]
//
// The full key list is in README.md.

#pragma once

#include <string>
#include <string_view>

#include "matbandit/common.hpp"
#include "matbandit/harness.hpp"

namespace matbandit {

class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Applies the keys in `text` on top of default_experiment_config(). A file
/// that sets `targets` replaces the default target list. The result is
/// validated.
ExperimentConfig parse_config(std::string_view text);

ExperimentConfig load_config(const std::string& path);

/// Text that parse_config maps back to an equal configuration.
std::string format_config(const ExperimentConfig& config);

}  // namespace matbandit
