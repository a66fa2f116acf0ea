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

// matbandit command-line driver.
//
//   matbandit run       --config FILE [--trials N] [--seed S] [--threads K]
//                       [--out PATH] [--format csv|json]
//   matbandit curve     --config FILE [--checkpoints 50:2000:50] ...
//   matbandit oracle-s2 --config FILE [--samples N] [--seed S]

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <json.hpp>

#include "matbandit/config.hpp"
#include "matbandit/export.hpp"
#include "matbandit/harness.hpp"
#include "matbandit/inference.hpp"
#include "matbandit/rng.hpp"

namespace {

using namespace matbandit;

struct CommonFlags {
  std::string config_path;
  std::optional<long> trials;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<double> level;
  std::optional<double> epsilon;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "experiment config file")->check(CLI::ExistingFile);
  cmd->add_option("--trials", f.trials, "number of Monte Carlo trials")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.seed, "base seed; trial k uses seed + k");
  cmd->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--out", f.out, "output path, - for stdout");
  cmd->add_option("--format", f.format, "output format")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--level", f.level, "confidence level");
  cmd->add_option("--epsilon", f.epsilon, "exploration rate");
}

ExperimentConfig resolve(const CommonFlags& f) {
  ExperimentConfig c = f.config_path.empty() ? default_experiment_config()
                                             : load_config(f.config_path);
  if (f.trials) c.n_trials = *f.trials;
  if (f.seed) c.base_seed = *f.seed;
  if (f.threads) c.threads = *f.threads;
  if (f.out) c.output_path = *f.out;
  if (f.format) c.output_format = *f.format;
  if (f.level) c.level = *f.level;
  if (f.epsilon) c.epsilon = *f.epsilon;
  if (c.output_path.empty()) c.output_path = "-";
  c.validate();
  return c;
}

std::vector<long> parse_range(const std::string& spec) {
  long lo = 0, hi = 0, step = 0;
  char tail = 0;
  if (std::sscanf(spec.c_str(), "%ld:%ld:%ld%c", &lo, &hi, &step, &tail) != 3 || lo < 1 ||
      hi < lo || step < 1) {
    throw InvalidArgument("--checkpoints expects FIRST:LAST:STEP, e.g. 50:2000:50");
  }
  std::vector<long> out;
  for (long n = lo; n <= hi; n += step) out.push_back(n);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online inference for low-rank matrix contextual bandits"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  auto* run = app.add_subcommand("run", "Monte Carlo coverage experiment");
  add_common(run, run_flags);

  CommonFlags curve_flags;
  std::string checkpoints = "50:2000:50";
  long curve_samples = 1'000'000;
  auto* curve = app.add_subcommand("curve", "standard-deviation estimation error curve");
  add_common(curve, curve_flags);
  curve->add_option("--checkpoints", checkpoints, "FIRST:LAST:STEP")->capture_default_str();
  curve->add_option("--oracle-samples", curve_samples, "Monte Carlo samples for sigma S")
      ->capture_default_str();

  CommonFlags oracle_flags;
  long oracle_samples = 1'000'000;
  auto* oracle = app.add_subcommand("oracle-s2", "Monte Carlo S^2 of the ground truth");
  add_common(oracle, oracle_flags);
  oracle->add_option("--samples", oracle_samples, "Monte Carlo samples")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const ExperimentConfig c = resolve(run_flags);
      export_results(run_experiment(c), c.output_format, c.output_path);
    } else if (*curve) {
      ExperimentConfig c = resolve(curve_flags);
      c.oracle_samples = curve_samples;
      c.checkpoints.clear();
      c.sd_checkpoints = parse_range(checkpoints);
      c.n = c.sd_checkpoints.back();
      export_results(run_experiment(c), c.output_format, c.output_path);
    } else if (*oracle) {
      ExperimentConfig c = resolve(oracle_flags);
      const GroundTruth truth = make_ground_truth(c, c.truth_seed);
      nlohmann::json rows = nlohmann::json::array();
      for (std::size_t k = 0; k < c.targets.size(); ++k) {
        for (Arm a : kArms) {
          Rng rng(derive_seed(c.base_seed, 2 * k + index(a)));
          const auto s2 = true_S2_oracle(truth, c.targets[k].T, a, c.epsilon, oracle_samples, rng);
          rows.push_back({{"arm", arm_label(a)},
                          {"target", c.targets[k].label},
                          {"s2", s2.value},
                          {"std_error", s2.std_error},
                          {"samples", s2.samples},
                          {"sigma_s", truth.sigma(a) * std::sqrt(s2.value)},
                          {"tangent_norm_sq", tangent_norm_squared(truth, c.targets[k].T, a)},
                          {"m_true", frobenius_inner(truth.dense(a), c.targets[k].T)}});
        }
      }
      std::cout << rows.dump(2) << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "matbandit: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
