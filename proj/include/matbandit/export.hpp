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

// Serialization of aggregate results. Schemas are described in README.md.

#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>

#include "matbandit/harness.hpp"

namespace matbandit {

class ExportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Metrics written per (checkpoint, arm, target) cell in CSV output.
inline constexpr std::array<std::string_view, 5> kCsvMetrics = {
    "coverage", "mean_ci_length", "z_mean", "z_variance", "mean_sd_hat"};

inline constexpr std::string_view kCsvHeader = "n,arm,target,metric,value";

/// Pretty-printed JSON. Non-finite numbers are written as null.
std::string to_json(const AggregateResult& result);
AggregateResult from_json(std::string_view text);

/// One row per (n, arm, target, metric) followed by one `sd_abs_error` row per
/// point of the variance-error curve. Numbers use 17 significant digits.
std::string to_csv(const AggregateResult& result);

/// Writes `result` as "json" or "csv" to `path`; "-" writes to stdout.
void export_results(const AggregateResult& result, const std::string& format,
                    const std::string& path);

}  // namespace matbandit
