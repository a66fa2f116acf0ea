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

// End-to-end online inference driver and Monte Carlo experiment runner.
//
// A trial runs, per step t: observe X_t, compute pi_t from the t-1 SGD
// estimates, draw a_t, realize y_t, fold the step into the debiased average
// (using the t-1 SGD estimates), update the pulled arm's factors, and add the
// step's terms to the variance accumulators. Projections, point estimates
// and intervals are formed at the requested checkpoints.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "matbandit/common.hpp"
#include "matbandit/inference.hpp"
#include "matbandit/lowrank_sgd.hpp"
#include "matbandit/model.hpp"

namespace matbandit {

struct InitConfig {
  long n0 = 2000;
  std::optional<double> lambda;  ///< unset: 2 sigma_i sqrt(d / n0_i)
  int max_iter = 500;
  double tol = 1e-6;
};

struct ExperimentConfig {
  TruthSpec truth;
  long n = 3000;
  double epsilon = 0.1;
  /// eta_t = 0.1 max(t, 300)^-0.99.
  StepSizeSchedule schedule{0.1, 0.99, 300.0};
  InitConfig init;
  std::vector<InferenceTarget> targets;
  double level = 0.95;

  long n_trials = 1;
  std::uint64_t base_seed = 1;
  std::uint64_t truth_seed = 1;
  bool resample_truth = false;
  int threads = 1;

  /// Steps at which full inference is recorded; n is always added.
  std::vector<long> checkpoints;
  /// Steps at which sigma_hat * S_hat is recorded.
  std::vector<long> sd_checkpoints;
  /// Monte Carlo samples for the true sigma_i S_i; 0 skips it.
  long oracle_samples = 0;

  std::string output_path;
  std::string output_format = "json";

  void validate() const;
  /// Sorted, de-duplicated inference checkpoints including n.
  std::vector<long> inference_checkpoints() const;
  std::vector<long> sd_checkpoint_list() const;
};

/// The configuration of the simulation study: d = 50, r = 3, unit singular
/// values, sigma = 0.1, epsilon = 0.1, eta_t = 0.1 max(t, 300)^-0.99,
/// T = e1 e1^T.
ExperimentConfig default_experiment_config();

/// T1 = e1 e1^T and T2 = e1 e1^T + 2 e2 e2^T - 3 e3 e3^T.
InferenceTarget single_entry_target(int d1, int d2);
InferenceTarget three_entry_target(int d1, int d2);

/// Estimate for one (arm or contrast, target) at a checkpoint.
struct Estimate {
  double m_hat = 0.0;
  double m_true = 0.0;
  double sigma_hat = 0.0;  ///< NaN when n = 0
  double s_hat = 0.0;
  std::optional<IntervalEstimate> interval;  ///< absent when n = 0
  bool covered = false;
  double standardized = 0.0;  ///< sqrt(n) (m_hat - m_true) / (sigma_hat S_hat)
  double m_sgd = 0.0;         ///< <M_sgd, T> at the checkpoint
  double m_unbs = 0.0;        ///< <M_unbs, T> before the rank-r projection

  bool operator==(const Estimate&) const = default;
};

struct CheckpointResult {
  long n = 0;
  PerArm<std::vector<Estimate>> arms;  ///< [arm][target]
  std::vector<Estimate> difference;    ///< m^(1) - m^(0) per target
  PerArm<double> sgd_error{};          ///< ||M_sgd - M||_F
};

struct SdSnapshot {
  long n = 0;
  PerArm<std::vector<double>> sd_hat;  ///< sigma_hat S_hat [arm][target]
};

struct TrialResult {
  std::uint64_t seed = 0;
  std::vector<CheckpointResult> checkpoints;  ///< ascending n
  std::vector<SdSnapshot> sd_snapshots;
  PerArm<std::vector<double>> true_sd;        ///< sigma_i S_i; empty if not computed
  PerArm<double> init_error{};
  PerArm<bool> init_converged{};
  PerArm<long> pulls{};
  double cumulative_reward = 0.0;

  const CheckpointResult& final_checkpoint() const { return checkpoints.back(); }
  PerArm<double> final_sgd_error() const { return final_checkpoint().sgd_error; }
};

/// Raised by run_trial with the failing step attached.
class TrialError : public std::runtime_error {
 public:
  TrialError(long step, const std::string& what)
      : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

/// Raised when the per-step operations run out of order. Never caught as a
/// trial failure.
class StepOrderError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Raised when more than 1% of trials fail.
class ExperimentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ground truth for an experiment (from truth_seed) or for one trial when
/// resample_truth is set.
GroundTruth make_ground_truth(const ExperimentConfig& config, std::uint64_t seed);

/// sigma_i * sqrt(S_i^2) per (arm, target) from the Monte Carlo oracle.
PerArm<std::vector<double>> true_standard_deviations(const ExperimentConfig& config,
                                                     const GroundTruth& truth, long samples,
                                                     std::uint64_t seed);

/// Observation hook called after every step; used by tests.
struct StepObserver {
  std::function<void(long t, const Matrix& x, double pi, Arm a, double y)> on_step;
};

TrialResult run_trial(const ExperimentConfig& config, const GroundTruth& truth,
                      std::uint64_t seed, const StepObserver* observer = nullptr);

struct Histogram {
  double lo = -4.0;
  double hi = 4.0;
  std::vector<long> counts;  ///< equal-width bins over [lo, hi]
  long underflow = 0;
  long overflow = 0;
  long missing = 0;  ///< non-finite statistics

  static Histogram make(int bins = 61, double lo = -4.0, double hi = 4.0);
  void add(double value);
  std::vector<double> edges() const;
  long total() const;
  bool operator==(const Histogram&) const = default;
};

/// Monte Carlo summary of one (checkpoint, arm, target) cell. `arm` is "0",
/// "1" or "diff" for the two-arm contrast.
struct CellSummary {
  long n = 0;
  std::string arm;
  std::string target;
  long trials = 0;
  double m_true = 0.0;
  double coverage = 0.0;
  double mean_length = 0.0;
  double mean_standardized = 0.0;
  double var_standardized = 0.0;
  double mean_sd_hat = 0.0;
  std::optional<double> true_sd;
  Histogram histogram;

  bool operator==(const CellSummary&) const = default;
};

/// Mean |sigma_hat S_hat - sigma S| over trials at one checkpoint.
struct SdErrorPoint {
  long n = 0;
  std::string arm;
  std::string target;
  double mean_abs_error = 0.0;
  double std_error = 0.0;

  bool operator==(const SdErrorPoint&) const = default;
};

struct SgdErrorPoint {
  long n = 0;
  std::string arm;
  double mean = 0.0;
  double median = 0.0;

  bool operator==(const SgdErrorPoint&) const = default;
};

struct RunInfo {
  int d1 = 0;
  int d2 = 0;
  int r = 0;
  long n = 0;
  double epsilon = 0.0;
  double level = 0.0;
  std::uint64_t base_seed = 0;
  std::uint64_t truth_seed = 0;
  bool resample_truth = false;

  bool operator==(const RunInfo&) const = default;
};

struct AggregateResult {
  static constexpr int kSchemaVersion = 1;

  int schema_version = kSchemaVersion;
  RunInfo info;
  long n_trials = 0;      ///< successful trials
  long failed_trials = 0;
  std::vector<std::string> failures;
  std::vector<CellSummary> cells;
  std::vector<SdErrorPoint> sd_error_curve;
  std::vector<SgdErrorPoint> sgd_error;
  double mean_cumulative_reward = 0.0;

  bool operator==(const AggregateResult&) const = default;

  const CellSummary& cell(long n, const std::string& arm, const std::string& target) const;
  const SdErrorPoint& sd_error(long n, const std::string& arm, const std::string& target) const;
};

std::string arm_label(Arm a);

/// Order-preserving summary of completed trials.
AggregateResult aggregate_trials(const ExperimentConfig& config,
                                 const std::vector<TrialResult>& trials, long failed = 0,
                                 std::vector<std::string> failures = {});

struct ExperimentOutput {
  AggregateResult aggregate;
  std::vector<TrialResult> trials;  ///< successful trials in seed order
};

/// n_trials trials with seeds base_seed + k on up to `threads` workers. The
/// result does not depend on the number of workers.
ExperimentOutput run_experiment_detailed(const ExperimentConfig& config);
AggregateResult run_experiment(const ExperimentConfig& config);

/// Per-checkpoint mean |sigma_hat_i S_hat_i - sigma_i S_i|; runs to the
/// largest checkpoint. Uses 10^6 oracle samples when the config has none.
std::vector<SdErrorPoint> variance_error_curve(const ExperimentConfig& config,
                                               const std::vector<long>& checkpoints);

/// Runs body(k) for k in [0, count) on up to `threads` workers.
void parallel_for(long count, int threads, const std::function<void(long)>& body);

}  // namespace matbandit
