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

#include "matbandit/export.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>

#include <json.hpp>

namespace matbandit {

namespace {

using nlohmann::json;

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double read_number(const json& j, const char* key) {
  const json& v = j.at(key);
  if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return v.get<double>();
}

json histogram_json(const Histogram& h) {
  return json{{"lo", h.lo},
              {"hi", h.hi},
              {"edges", h.edges()},
              {"counts", h.counts},
              {"underflow", h.underflow},
              {"overflow", h.overflow},
              {"missing", h.missing}};
}

Histogram read_histogram(const json& j) {
  Histogram h;
  h.lo = j.at("lo").get<double>();
  h.hi = j.at("hi").get<double>();
  h.counts = j.at("counts").get<std::vector<long>>();
  h.underflow = j.at("underflow").get<long>();
  h.overflow = j.at("overflow").get<long>();
  h.missing = j.at("missing").get<long>();
  return h;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string to_json(const AggregateResult& r) {
  json cells = json::array();
  for (const auto& c : r.cells) {
    cells.push_back(json{{"n", c.n},
                         {"arm", c.arm},
                         {"target", c.target},
                         {"trials", c.trials},
                         {"m_true", number(c.m_true)},
                         {"coverage", number(c.coverage)},
                         {"mean_ci_length", number(c.mean_length)},
                         {"z_mean", number(c.mean_standardized)},
                         {"z_variance", number(c.var_standardized)},
                         {"mean_sd_hat", number(c.mean_sd_hat)},
                         {"true_sd", c.true_sd ? number(*c.true_sd) : json(nullptr)},
                         {"histogram", histogram_json(c.histogram)}});
  }
  json curve = json::array();
  for (const auto& p : r.sd_error_curve) {
    curve.push_back(json{{"n", p.n},
                         {"arm", p.arm},
                         {"target", p.target},
                         {"mean_abs_error", number(p.mean_abs_error)},
                         {"std_error", number(p.std_error)}});
  }
  json sgd = json::array();
  for (const auto& p : r.sgd_error) {
    sgd.push_back(
        json{{"n", p.n}, {"arm", p.arm}, {"mean", number(p.mean)}, {"median", number(p.median)}});
  }
  const json doc{{"schema_version", r.schema_version},
                 {"run",
                  {{"d1", r.info.d1},
                   {"d2", r.info.d2},
                   {"r", r.info.r},
                   {"n", r.info.n},
                   {"epsilon", r.info.epsilon},
                   {"level", r.info.level},
                   {"base_seed", r.info.base_seed},
                   {"truth_seed", r.info.truth_seed},
                   {"resample_truth", r.info.resample_truth}}},
                 {"n_trials", r.n_trials},
                 {"failed_trials", r.failed_trials},
                 {"failures", r.failures},
                 {"cells", cells},
                 {"sd_error_curve", curve},
                 {"sgd_error", sgd},
                 {"mean_cumulative_reward", number(r.mean_cumulative_reward)}};
  return doc.dump(2) + "\n";
}

AggregateResult from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ExportError(std::string("invalid JSON: ") + e.what());
  }
  try {
    AggregateResult r;
    r.schema_version = doc.at("schema_version").get<int>();
    if (r.schema_version != AggregateResult::kSchemaVersion) {
      throw ExportError("unsupported schema_version " + std::to_string(r.schema_version));
    }
    const json& run = doc.at("run");
    r.info.d1 = run.at("d1").get<int>();
    r.info.d2 = run.at("d2").get<int>();
    r.info.r = run.at("r").get<int>();
    r.info.n = run.at("n").get<long>();
    r.info.epsilon = run.at("epsilon").get<double>();
    r.info.level = run.at("level").get<double>();
    r.info.base_seed = run.at("base_seed").get<std::uint64_t>();
    r.info.truth_seed = run.at("truth_seed").get<std::uint64_t>();
    r.info.resample_truth = run.at("resample_truth").get<bool>();
    r.n_trials = doc.at("n_trials").get<long>();
    r.failed_trials = doc.at("failed_trials").get<long>();
    r.failures = doc.at("failures").get<std::vector<std::string>>();
    for (const auto& c : doc.at("cells")) {
      CellSummary s;
      s.n = c.at("n").get<long>();
      s.arm = c.at("arm").get<std::string>();
      s.target = c.at("target").get<std::string>();
      s.trials = c.at("trials").get<long>();
      s.m_true = read_number(c, "m_true");
      s.coverage = read_number(c, "coverage");
      s.mean_length = read_number(c, "mean_ci_length");
      s.mean_standardized = read_number(c, "z_mean");
      s.var_standardized = read_number(c, "z_variance");
      s.mean_sd_hat = read_number(c, "mean_sd_hat");
      if (!c.at("true_sd").is_null()) s.true_sd = c.at("true_sd").get<double>();
      s.histogram = read_histogram(c.at("histogram"));
      r.cells.push_back(std::move(s));
    }
    for (const auto& p : doc.at("sd_error_curve")) {
      r.sd_error_curve.push_back(SdErrorPoint{p.at("n").get<long>(), p.at("arm").get<std::string>(),
                                              p.at("target").get<std::string>(),
                                              read_number(p, "mean_abs_error"),
                                              read_number(p, "std_error")});
    }
    for (const auto& p : doc.at("sgd_error")) {
      r.sgd_error.push_back(SgdErrorPoint{p.at("n").get<long>(), p.at("arm").get<std::string>(),
                                          read_number(p, "mean"), read_number(p, "median")});
    }
    r.mean_cumulative_reward = read_number(doc, "mean_cumulative_reward");
    return r;
  } catch (const json::exception& e) {
    throw ExportError(std::string("malformed result document: ") + e.what());
  }
}

std::string to_csv(const AggregateResult& r) {
  std::string out(kCsvHeader);
  out += "\n";
  auto row = [&](long n, const std::string& arm, const std::string& target,
                 std::string_view metric, double value) {
    out += std::to_string(n) + "," + csv_field(arm) + "," + csv_field(target) + "," +
           std::string(metric) + "," + csv_number(value) + "\n";
  };
  for (const auto& c : r.cells) {
    const std::array<double, kCsvMetrics.size()> values = {
        c.coverage, c.mean_length, c.mean_standardized, c.var_standardized, c.mean_sd_hat};
    for (std::size_t k = 0; k < kCsvMetrics.size(); ++k) {
      row(c.n, c.arm, c.target, kCsvMetrics[k], values[k]);
    }
  }
  for (const auto& p : r.sd_error_curve) row(p.n, p.arm, p.target, "sd_abs_error", p.mean_abs_error);
  return out;
}

void export_results(const AggregateResult& result, const std::string& format,
                    const std::string& path) {
  std::string text;
  if (format == "json") {
    text = to_json(result);
  } else if (format == "csv") {
    text = to_csv(result);
  } else {
    throw ExportError("unknown output format '" + format + "' (expected csv or json)");
  }
  if (path == "-") {
    std::cout << text;
    std::cout.flush();
    if (!std::cout) throw ExportError("failed writing to stdout");
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ExportError("cannot open '" + path + "' for writing");
  out << text;
  out.close();
  if (!out) throw ExportError("failed writing '" + path + "'");
}

}  // namespace matbandit
