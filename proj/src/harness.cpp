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

#include "matbandit/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "matbandit/debias.hpp"
#include "matbandit/init.hpp"
#include "matbandit/policy.hpp"
#include "matbandit/rng.hpp"

namespace matbandit {

namespace {

// Sub-stream identifiers for derive_seed.
constexpr std::uint64_t kTruthStream = 1;
constexpr std::uint64_t kTrialStream = 2;
constexpr std::uint64_t kOracleStream = 1000;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<long> sorted_unique(std::vector<long> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

/// Enforces the within-step order. In particular the debiasing update must
/// see the SGD estimates from before this step's SGD update.
class StepSequencer {
 public:
  enum class Phase { idle, context, decided, rewarded, debiased, updated };

  void advance(Phase next) {
    const auto expected = phase_ == Phase::updated ? Phase::context
                                                   : static_cast<Phase>(static_cast<int>(phase_) + 1);
    if (next != expected || (phase_ == Phase::idle && next != Phase::context)) {
      throw StepOrderError("step phases out of order");
    }
    if (next == Phase::debiased && sgd_version_ != version_at_context_) {
      throw StepOrderError("debiasing would consume an already-updated SGD estimate");
    }
    if (next == Phase::context) version_at_context_ = sgd_version_;
    if (next == Phase::updated) ++sgd_version_;
    phase_ = next;
  }

 private:
  Phase phase_ = Phase::idle;
  long sgd_version_ = 0;
  long version_at_context_ = 0;
};

Estimate make_estimate(double m_hat, double m_true, double sigma_hat, double s_hat, long n,
                       double level) {
  Estimate e;
  e.m_hat = m_hat;
  e.m_true = m_true;
  if (n < 1) {
    e.sigma_hat = kNaN;
    e.s_hat = kNaN;
    e.standardized = kNaN;
    return e;
  }
  e.sigma_hat = sigma_hat;
  e.s_hat = s_hat;
  e.interval = confidence_interval(m_hat, sigma_hat, s_hat, n, level);
  e.covered = e.interval->contains(m_true);
  e.standardized = std::sqrt(static_cast<double>(n)) * (m_hat - m_true) / (sigma_hat * s_hat);
  return e;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

void ExperimentConfig::validate() const {
  if (truth.d1 < 1 || truth.d2 < 1 || truth.r < 1 || truth.r > std::min(truth.d1, truth.d2)) {
    throw InvalidArgument("config: need 1 <= r <= min(d1, d2)");
  }
  if (n < 0) throw InvalidArgument("config: n must be >= 0");
  PolicyConfig{epsilon}.validate();
  schedule.validate();
  if (init.n0 < 2) throw InvalidArgument("config: init_n0 must be >= 2");
  if (init.lambda && *init.lambda < 0.0) throw InvalidArgument("config: init_lambda must be >= 0");
  if (init.max_iter < 1) throw InvalidArgument("config: init_max_iter must be >= 1");
  if (!(init.tol > 0.0)) throw InvalidArgument("config: init_tol must be positive");
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("config: level must lie in (0, 1)");
  if (n_trials < 1) throw InvalidArgument("config: n_trials must be >= 1");
  if (threads < 1) throw InvalidArgument("config: threads must be >= 1");
  if (truth.sigma_0 < 0.0 || truth.sigma_1 < 0.0) {
    throw InvalidArgument("config: noise levels must be nonnegative");
  }
  for (const auto& t : targets) t.validate(truth.d1, truth.d2);
  for (long c : checkpoints) {
    if (c < 0 || c > n) throw InvalidArgument("config: checkpoints must lie in [0, n]");
  }
  for (long c : sd_checkpoints) {
    if (c < 1 || c > n) throw InvalidArgument("config: sd_checkpoints must lie in [1, n]");
  }
  if (oracle_samples < 0) throw InvalidArgument("config: oracle_samples must be >= 0");
  if (output_format != "json" && output_format != "csv") {
    throw InvalidArgument("config: format must be json or csv");
  }
}

std::vector<long> ExperimentConfig::inference_checkpoints() const {
  std::vector<long> out = checkpoints;
  out.push_back(n);
  return sorted_unique(std::move(out));
}

std::vector<long> ExperimentConfig::sd_checkpoint_list() const {
  return sorted_unique(sd_checkpoints);
}

InferenceTarget single_entry_target(int d1, int d2) {
  return InferenceTarget::from_entries(d1, d2, {{0, 0, 1.0}}, "T1");
}

InferenceTarget three_entry_target(int d1, int d2) {
  return InferenceTarget::from_entries(d1, d2, {{0, 0, 1.0}, {1, 1, 2.0}, {2, 2, -3.0}}, "T2");
}

ExperimentConfig default_experiment_config() {
  ExperimentConfig c;
  c.targets.push_back(single_entry_target(c.truth.d1, c.truth.d2));
  return c;
}

GroundTruth make_ground_truth(const ExperimentConfig& config, std::uint64_t seed) {
  Rng rng(derive_seed(seed, kTruthStream));
  return generate_ground_truth(config.truth, rng);
}

PerArm<std::vector<double>> true_standard_deviations(const ExperimentConfig& config,
                                                     const GroundTruth& truth, long samples,
                                                     std::uint64_t seed) {
  PerArm<std::vector<double>> out;
  const std::size_t nt = config.targets.size();
  for (Arm a : kArms) out[a].assign(nt, 0.0);
  // One independent stream per (arm, target) keeps the values independent of
  // the worker count.
  parallel_for(static_cast<long>(2 * nt), config.threads, [&](long job) {
    const Arm a = job % 2 == 0 ? Arm::zero : Arm::one;
    const std::size_t k = static_cast<std::size_t>(job / 2);
    Rng rng(derive_seed(seed, kOracleStream + static_cast<std::uint64_t>(job)));
    const auto s2 = true_S2_oracle(truth, config.targets[k].T, a, config.epsilon, samples, rng);
    out[a][k] = truth.sigma(a) * std::sqrt(s2.value);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Single trial

TrialResult run_trial(const ExperimentConfig& config, const GroundTruth& truth,
                      std::uint64_t seed, const StepObserver* observer) {
  const int d1 = truth.d1();
  const int d2 = truth.d2();
  const int r = truth.rank();
  const auto& targets = config.targets;
  const std::size_t nt = targets.size();

  TrialResult result;
  result.seed = seed;
  Rng rng(derive_seed(seed, kTrialStream));

  // Offline exploration and initialization.
  ArmFactors factors;
  PerArm<Matrix> m_sgd;
  {
    const OfflineBatch batch = collect_offline(truth, config.init.n0, rng);
    for (Arm a : kArms) {
      const long count = batch.count(a);
      if (count < 1) throw TrialError(0, "offline phase produced no samples for an arm");
      NuclearNormOptions opts;
      opts.lambda = config.init.lambda.value_or(
          default_nuclear_lambda(truth.sigma(a), d1, d2, count));
      opts.max_iter = config.init.max_iter;
      opts.tol = config.init.tol;
      const auto fit = nuclear_norm_estimate(batch.arms[a], opts);
      result.init_error[a] = (fit.estimate - truth.dense(a)).norm();
      result.init_converged[a] = fit.converged;
      try {
        factors[a] = factorize_init(fit.estimate, r);
      } catch (const std::exception& e) {
        throw TrialError(0, e.what());
      }
      m_sgd[a] = current_estimate(factors[a]);
    }
  }

  UnbiasedEstimator unbiased(m_sgd);
  VarianceAccumulators acc(nt);
  StepSequencer sequencer;

  PerArm<std::vector<double>> m_true;
  for (Arm a : kArms) {
    for (const auto& t : targets) m_true[a].push_back(frobenius_inner(truth.dense(a), t.T));
  }

  const auto inference_at = config.inference_checkpoints();
  const auto sd_at = config.sd_checkpoint_list();
  auto next_inference = inference_at.begin();
  auto next_sd = sd_at.begin();

  auto record_inference = [&](long t) {
    CheckpointResult cp;
    cp.n = t;
    PerArm<std::vector<double>> m_hat;
    for (Arm a : kArms) {
      const Matrix m_proj = project_topr(unbiased.estimate(a), r);
      cp.sgd_error[a] = (m_sgd[a] - truth.dense(a)).norm();
      for (std::size_t k = 0; k < nt; ++k) {
        const double est = point_estimate(m_proj, targets[k]);
        m_hat[a].push_back(est);
        const double sigma_hat = t > 0 ? std::sqrt(acc.sigma2_hat(a)) : kNaN;
        const double s_hat = t > 0 ? std::sqrt(acc.s2_hat(a, k)) : kNaN;
        Estimate e = make_estimate(est, m_true[a][k], sigma_hat, s_hat, t, config.level);
        e.m_sgd = frobenius_inner(m_sgd[a], targets[k].T);
        e.m_unbs = frobenius_inner(unbiased.estimate(a), targets[k].T);
        cp.arms[a].push_back(std::move(e));
      }
    }
    for (std::size_t k = 0; k < nt; ++k) {
      Estimate diff;
      diff.m_hat = m_hat[Arm::one][k] - m_hat[Arm::zero][k];
      diff.m_true = m_true[Arm::one][k] - m_true[Arm::zero][k];
      diff.m_sgd = cp.arms[Arm::one][k].m_sgd - cp.arms[Arm::zero][k].m_sgd;
      diff.m_unbs = cp.arms[Arm::one][k].m_unbs - cp.arms[Arm::zero][k].m_unbs;
      if (t > 0) {
        const auto ci = difference_statistic(m_hat[Arm::one][k], m_hat[Arm::zero][k], acc, k,
                                             config.level);
        diff.sigma_hat = ci.sigma_hat;
        diff.s_hat = ci.s_hat;
        diff.interval = ci;
        diff.covered = ci.contains(diff.m_true);
        diff.standardized =
            std::sqrt(static_cast<double>(t)) * (diff.m_hat - diff.m_true) / ci.sigma_hat;
      } else {
        diff.sigma_hat = diff.s_hat = diff.standardized = kNaN;
      }
      cp.difference.push_back(std::move(diff));
    }
    result.checkpoints.push_back(std::move(cp));
  };

  if (next_inference != inference_at.end() && *next_inference == 0) {
    record_inference(0);
    ++next_inference;
  }

  for (long t = 1; t <= config.n; ++t) {
    try {
      sequencer.advance(StepSequencer::Phase::context);
      const Matrix x = sample_context(d1, d2, rng);

      sequencer.advance(StepSequencer::Phase::decided);
      const double pi = propensity(m_sgd[Arm::one], m_sgd[Arm::zero], x, config.epsilon);
      const Arm a = draw_action(pi, rng);

      sequencer.advance(StepSequencer::Phase::rewarded);
      const double y = realize_reward(truth, x, a, rng).y;
      result.cumulative_reward += y;
      ++result.pulls[a];

      sequencer.advance(StepSequencer::Phase::debiased);
      unbiased.step(m_sgd, x, y, a, pi);
      acc.accumulate_sigma2(y, m_sgd, x, a, pi);

      // Projections come from the pulled arm's factors before its update.
      const SvdByproducts bp = compute_byproducts(factors[a]);
      const ProjectionPair proj = projections_from_byproducts(factors[a], bp);
      acc.accumulate_S2(x, proj, a, pi, targets);

      sequencer.advance(StepSequencer::Phase::updated);
      sgd_update(factors, x, y, a, pi, config.schedule(t), bp);
      m_sgd[a] = current_estimate(factors[a]);

      if (observer != nullptr && observer->on_step) observer->on_step(t, x, pi, a, y);
    } catch (const StepOrderError&) {
      throw;
    } catch (const std::exception& e) {
      throw TrialError(t, e.what());
    }

    if (next_sd != sd_at.end() && *next_sd == t) {
      SdSnapshot snap;
      snap.n = t;
      for (Arm a : kArms) {
        for (std::size_t k = 0; k < nt; ++k) snap.sd_hat[a].push_back(acc.sd_hat(a, k));
      }
      result.sd_snapshots.push_back(std::move(snap));
      ++next_sd;
    }
    if (next_inference != inference_at.end() && *next_inference == t) {
      try {
        record_inference(t);
      } catch (const std::exception& e) {
        throw TrialError(t, e.what());
      }
      ++next_inference;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Aggregation

std::string arm_label(Arm a) { return a == Arm::one ? "1" : "0"; }

Histogram Histogram::make(int bins, double lo, double hi) {
  Histogram h;
  h.lo = lo;
  h.hi = hi;
  h.counts.assign(bins, 0);
  return h;
}

void Histogram::add(double value) {
  if (!std::isfinite(value)) {
    ++missing;
  } else if (value < lo) {
    ++underflow;
  } else if (value > hi) {
    ++overflow;
  } else {
    const auto bins = static_cast<long>(counts.size());
    auto k = static_cast<long>((value - lo) / (hi - lo) * static_cast<double>(bins));
    counts[std::clamp(k, 0L, bins - 1)] += 1;
  }
}

std::vector<double> Histogram::edges() const {
  std::vector<double> out;
  const auto bins = counts.size();
  for (std::size_t k = 0; k <= bins; ++k) {
    out.push_back(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(bins));
  }
  return out;
}

long Histogram::total() const {
  long s = underflow + overflow + missing;
  for (long c : counts) s += c;
  return s;
}

const CellSummary& AggregateResult::cell(long n, const std::string& arm,
                                         const std::string& target) const {
  for (const auto& c : cells) {
    if (c.n == n && c.arm == arm && c.target == target) return c;
  }
  throw InvalidArgument("no cell for n=" + std::to_string(n) + " arm=" + arm + " target=" + target);
}

const SdErrorPoint& AggregateResult::sd_error(long n, const std::string& arm,
                                              const std::string& target) const {
  for (const auto& p : sd_error_curve) {
    if (p.n == n && p.arm == arm && p.target == target) return p;
  }
  throw InvalidArgument("no sd error point for n=" + std::to_string(n));
}

namespace {

CellSummary summarize(long n, std::string arm, std::string target,
                      const std::vector<const Estimate*>& estimates) {
  CellSummary s;
  s.n = n;
  s.arm = std::move(arm);
  s.target = std::move(target);
  s.trials = static_cast<long>(estimates.size());
  s.histogram = Histogram::make();
  if (estimates.empty()) return s;
  s.m_true = estimates.front()->m_true;

  double covered = 0.0, length = 0.0, z_sum = 0.0, sd_sum = 0.0;
  long with_interval = 0;
  for (const Estimate* e : estimates) {
    s.histogram.add(e->standardized);
    if (!e->interval) continue;
    ++with_interval;
    covered += e->covered ? 1.0 : 0.0;
    length += e->interval->length();
    z_sum += e->standardized;
    sd_sum += e->sigma_hat * e->s_hat;
  }
  if (with_interval == 0) {
    s.coverage = s.mean_length = s.mean_standardized = s.var_standardized = s.mean_sd_hat = kNaN;
    return s;
  }
  const double m = static_cast<double>(with_interval);
  s.coverage = covered / m;
  s.mean_length = length / m;
  s.mean_standardized = z_sum / m;
  s.mean_sd_hat = sd_sum / m;
  double ss = 0.0;
  for (const Estimate* e : estimates) {
    if (!e->interval) continue;
    const double dz = e->standardized - s.mean_standardized;
    ss += dz * dz;
  }
  s.var_standardized = with_interval > 1 ? ss / (m - 1.0) : kNaN;
  return s;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return kNaN;
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<long>(mid), v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<long>(mid));
  return 0.5 * (lo + hi);
}

}  // namespace

AggregateResult aggregate_trials(const ExperimentConfig& config,
                                 const std::vector<TrialResult>& trials, long failed,
                                 std::vector<std::string> failures) {
  AggregateResult agg;
  agg.info = RunInfo{config.truth.d1, config.truth.d2, config.truth.r,  config.n,
                     config.epsilon,  config.level,    config.base_seed, config.truth_seed,
                     config.resample_truth};
  agg.n_trials = static_cast<long>(trials.size());
  agg.failed_trials = failed;
  agg.failures = std::move(failures);
  if (trials.empty()) return agg;

  const std::size_t nt = config.targets.size();
  const auto& first = trials.front();

  for (std::size_t c = 0; c < first.checkpoints.size(); ++c) {
    const long n = first.checkpoints[c].n;
    for (std::size_t k = 0; k < nt; ++k) {
      const std::string& label = config.targets[k].label;
      for (Arm a : kArms) {
        std::vector<const Estimate*> es;
        for (const auto& tr : trials) es.push_back(&tr.checkpoints[c].arms[a][k]);
        CellSummary cell = summarize(n, arm_label(a), label, es);
        if (!first.true_sd[a].empty() && !config.resample_truth) cell.true_sd = first.true_sd[a][k];
        agg.cells.push_back(std::move(cell));
      }
      std::vector<const Estimate*> es;
      for (const auto& tr : trials) es.push_back(&tr.checkpoints[c].difference[k]);
      agg.cells.push_back(summarize(n, "diff", label, es));
    }
    for (Arm a : kArms) {
      std::vector<double> errs;
      for (const auto& tr : trials) errs.push_back(tr.checkpoints[c].sgd_error[a]);
      double mean = 0.0;
      for (double e : errs) mean += e;
      mean /= static_cast<double>(errs.size());
      agg.sgd_error.push_back(SgdErrorPoint{n, arm_label(a), mean, median_of(errs)});
    }
  }

  if (!first.true_sd[Arm::zero].empty()) {
    for (std::size_t c = 0; c < first.sd_snapshots.size(); ++c) {
      const long n = first.sd_snapshots[c].n;
      for (std::size_t k = 0; k < nt; ++k) {
        for (Arm a : kArms) {
          double sum = 0.0, sum_sq = 0.0;
          for (const auto& tr : trials) {
            const double err = std::abs(tr.sd_snapshots[c].sd_hat[a][k] - tr.true_sd[a][k]);
            sum += err;
            sum_sq += err * err;
          }
          const double m = static_cast<double>(trials.size());
          const double mean = sum / m;
          const double var = m > 1.0 ? std::max(0.0, (sum_sq - m * mean * mean) / (m - 1.0)) : 0.0;
          agg.sd_error_curve.push_back(
              SdErrorPoint{n, arm_label(a), config.targets[k].label, mean, std::sqrt(var / m)});
        }
      }
    }
  }

  double reward = 0.0;
  for (const auto& tr : trials) reward += tr.cumulative_reward;
  agg.mean_cumulative_reward = reward / static_cast<double>(trials.size());
  return agg;
}

// ---------------------------------------------------------------------------
// Experiments

void parallel_for(long count, int threads, const std::function<void(long)>& body) {
  const long workers = std::max(1L, std::min<long>(threads, count));
  if (workers == 1) {
    for (long k = 0; k < count; ++k) body(k);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  for (long w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (long k = next++; k < count; k = next++) {
        try {
          body(k);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  }
  pool.clear();
  if (error) std::rethrow_exception(error);
}

ExperimentOutput run_experiment_detailed(const ExperimentConfig& config) {
  config.validate();

  std::optional<GroundTruth> shared_truth;
  PerArm<std::vector<double>> shared_sd;
  if (!config.resample_truth) {
    shared_truth = make_ground_truth(config, config.truth_seed);
    if (config.oracle_samples > 0) {
      shared_sd = true_standard_deviations(config, *shared_truth, config.oracle_samples,
                                           config.truth_seed);
    }
  }

  const long count = config.n_trials;
  std::vector<std::optional<TrialResult>> slots(count);
  std::vector<std::string> errors(count);
  // Oracle parallelism is handled per trial, so trials use the worker pool.
  ExperimentConfig inner = config;
  inner.threads = 1;
  parallel_for(count, config.threads, [&](long k) {
    const std::uint64_t seed = config.base_seed + static_cast<std::uint64_t>(k);
    try {
      if (shared_truth) {
        TrialResult tr = run_trial(config, *shared_truth, seed);
        tr.true_sd = shared_sd;
        slots[k] = std::move(tr);
      } else {
        const GroundTruth truth = make_ground_truth(config, seed);
        TrialResult tr = run_trial(config, truth, seed);
        if (config.oracle_samples > 0) {
          tr.true_sd = true_standard_deviations(inner, truth, config.oracle_samples, seed);
        }
        slots[k] = std::move(tr);
      }
    } catch (const StepOrderError&) {
      throw;
    } catch (const std::exception& e) {
      errors[k] = "seed " + std::to_string(seed) + ": " + e.what();
    }
  });

  ExperimentOutput out;
  std::vector<std::string> failures;
  for (long k = 0; k < count; ++k) {
    if (slots[k]) {
      out.trials.push_back(std::move(*slots[k]));
    } else {
      failures.push_back(errors[k]);
    }
  }
  const long failed = static_cast<long>(failures.size());
  if (static_cast<double>(failed) > 0.01 * static_cast<double>(count)) {
    throw ExperimentError(std::to_string(failed) + " of " + std::to_string(count) +
                          " trials failed; first: " + failures.front());
  }
  out.aggregate = aggregate_trials(config, out.trials, failed, std::move(failures));
  return out;
}

AggregateResult run_experiment(const ExperimentConfig& config) {
  return run_experiment_detailed(config).aggregate;
}

std::vector<SdErrorPoint> variance_error_curve(const ExperimentConfig& config,
                                               const std::vector<long>& checkpoints) {
  if (checkpoints.empty()) throw InvalidArgument("variance_error_curve: no checkpoints");
  ExperimentConfig c = config;
  c.sd_checkpoints = checkpoints;
  c.n = *std::max_element(checkpoints.begin(), checkpoints.end());
  c.checkpoints.clear();
  if (c.oracle_samples == 0) c.oracle_samples = 1'000'000;
  return run_experiment(c).sd_error_curve;
}

}  // namespace matbandit
