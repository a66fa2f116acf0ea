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

// Acceptance run. Prints one PASS/FAIL line per criterion, and copies the
// lines to the file named by the optional first argument. The exit status is
// nonzero only if a criterion could not be evaluated (an exception or an
// unwritable report); a criterion that runs and misses its tolerance is a
// FAIL line with status 0. Takes about an hour on one core.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "matbandit/debias.hpp"
#include "matbandit/export.hpp"
#include "matbandit/harness.hpp"
#include "matbandit/init.hpp"
#include "matbandit/policy.hpp"
#include "oracles.hpp"

namespace mb = matbandit;
using mb::Arm;
using mb::Matrix;
using mb::Vector;

namespace {

// Problem instance shared by the reference-table runs.
constexpr std::uint64_t kTruthSeed = 218;

// Criterion 1.
constexpr long kTrials1 = 1000;
constexpr double kCoverage1[2] = {0.929, 0.936};
constexpr double kLength1[2] = {0.011, 0.006};
constexpr double kCoverageTol1 = 0.03;
constexpr double kLengthRelTol = 0.30;
// Criterion 2.
constexpr long kTrials2 = 500;
constexpr double kCoverage2[2] = {0.931, 0.930};
constexpr double kLength2[2] = {0.039, 0.026};
constexpr double kCoverageTol2 = 0.04;
// Criterion 3.
constexpr long kTrials3 = 500;
constexpr double kCoverage3[2] = {0.917, 0.921};
constexpr double kCoverageTol3 = 0.04;
constexpr double kRank7Slack = 0.02;
// Criterion 4.
constexpr double kMaxAbsMean4 = 0.1;
constexpr double kVarLo4 = 0.85;
constexpr double kVarHi4 = 1.2;
// Criterion 5.
constexpr long kTrials5 = 100;
constexpr long kOracleSamples5 = 1000000;
// Criterion 6.
constexpr double kFactoredTol6 = 1e-8;
constexpr double kSeconds6 = 10.0;
// Criterion 7.
constexpr long kDraws7 = 100000;
constexpr double kDebiasSe7 = 4.0;
constexpr double kGradientSe7 = 3.0;
// Criterion 8.
constexpr double kOracleSe8 = 3.0;
constexpr double kExact8 = 1e-8;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [miss]");
  }
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

void progress(const std::string& msg) {
  std::fprintf(stderr, "[acceptance] %s\n", msg.c_str());
  std::fflush(stderr);
}

int worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

mb::ExperimentConfig reference_config(int r, long trials) {
  mb::ExperimentConfig c = mb::default_experiment_config();
  c.truth.r = r;
  c.truth.singular_values_0.assign(r, 1.0);
  c.truth.singular_values_1.assign(r, 1.0);
  c.truth_seed = kTruthSeed;
  c.n_trials = trials;
  c.threads = worker_count();
  return c;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---------------------------------------------------------------------------

struct RankThreeRun {
  mb::ExperimentConfig config;
  mb::ExperimentOutput output;
};

RankThreeRun run_rank_three() {
  RankThreeRun run;
  run.config = reference_config(3, kTrials1);
  run.config.targets.push_back(mb::three_entry_target(50, 50));
  run.config.checkpoints = {1000};
  progress("rank 3: " + std::to_string(kTrials1) + " trials");
  const auto start = std::chrono::steady_clock::now();
  run.output = mb::run_experiment_detailed(run.config);
  progress("rank 3 done in " + fmt("%.0f", seconds_since(start)) + " s");
  return run;
}

Outcome criterion_1(const RankThreeRun& run) {
  Outcome o;
  const auto& agg = run.output.aggregate;
  for (int a = 0; a < 2; ++a) {
    const auto& cell = agg.cell(3000, std::to_string(a), "T1");
    o.require(std::abs(cell.coverage - kCoverage1[a]) <= kCoverageTol1,
              "arm " + std::to_string(a) + " coverage " + fmt("%.3f", cell.coverage));
    o.require(std::abs(cell.mean_length / kLength1[a] - 1.0) <= kLengthRelTol,
              "length " + fmt("%.4f", cell.mean_length));
  }
  o.require(agg.failed_trials == 0, std::to_string(agg.failed_trials) + " failed trials");
  return o;
}

Outcome criterion_2(const RankThreeRun& run) {
  Outcome o;
  const std::vector<mb::TrialResult> first(run.output.trials.begin(),
                                           run.output.trials.begin() + kTrials2);
  const auto agg = mb::aggregate_trials(run.config, first);
  for (int a = 0; a < 2; ++a) {
    const auto& cell = agg.cell(3000, std::to_string(a), "T2");
    o.require(std::abs(cell.coverage - kCoverage2[a]) <= kCoverageTol2,
              "arm " + std::to_string(a) + " coverage " + fmt("%.3f", cell.coverage));
    o.require(std::abs(cell.mean_length / kLength2[a] - 1.0) <= kLengthRelTol,
              "length " + fmt("%.4f", cell.mean_length));
  }
  return o;
}

Outcome criterion_3(const RankThreeRun& rank3) {
  Outcome o;
  for (int r : {5, 7}) {
    mb::ExperimentConfig c = reference_config(r, kTrials3);
    progress("rank " + std::to_string(r) + ": " + std::to_string(kTrials3) + " trials");
    const auto start = std::chrono::steady_clock::now();
    const auto agg = mb::run_experiment(c);
    progress("rank " + std::to_string(r) + " done in " + fmt("%.0f", seconds_since(start)) +
             " s");
    for (int a = 0; a < 2; ++a) {
      const std::string arm = std::to_string(a);
      const double cov = agg.cell(3000, arm, "T1").coverage;
      if (r == 5) {
        o.require(std::abs(cov - kCoverage3[a]) <= kCoverageTol3,
                  "r=5 arm " + arm + " coverage " + fmt("%.3f", cov));
      } else {
        const double cov3 = rank3.output.aggregate.cell(3000, arm, "T1").coverage;
        o.require(cov <= cov3 + kRank7Slack, "r=7 arm " + arm + " coverage " + fmt("%.3f", cov) +
                                                 " vs r=3 " + fmt("%.3f", cov3));
      }
    }
  }
  return o;
}

Outcome criterion_4(const RankThreeRun& run) {
  Outcome o;
  const auto& agg = run.output.aggregate;
  const auto& late = agg.cell(3000, "1", "T1");
  const auto& early = agg.cell(1000, "1", "T1");
  o.require(std::abs(late.mean_standardized) < kMaxAbsMean4,
            "arm 1 n=3000 mean " + fmt("%.3f", late.mean_standardized));
  o.require(late.var_standardized >= kVarLo4 && late.var_standardized <= kVarHi4,
            "variance " + fmt("%.3f", late.var_standardized));
  o.require(std::abs(late.var_standardized - 1.0) < std::abs(early.var_standardized - 1.0),
            "n=1000 variance " + fmt("%.3f", early.var_standardized));
  const auto& arm0 = agg.cell(3000, "0", "T1");
  o.detail += "; arm 0 n=3000 mean " + fmt("%.3f", arm0.mean_standardized) + " variance " +
              fmt("%.3f", arm0.var_standardized) + " (reported only)";
  return o;
}

Outcome criterion_5() {
  Outcome o;
  mb::ExperimentConfig c = reference_config(3, kTrials5);
  c.oracle_samples = kOracleSamples5;
  std::vector<long> checkpoints;
  for (long n = 50; n <= 2000; n += 50) checkpoints.push_back(n);
  progress("variance-error curve: " + std::to_string(kTrials5) + " trials");
  const auto start = std::chrono::steady_clock::now();
  const auto curve = mb::variance_error_curve(c, checkpoints);
  progress("curve done in " + fmt("%.0f", seconds_since(start)) + " s");
  auto at = [&](long n, const std::string& arm) {
    for (const auto& p : curve) {
      if (p.n == n && p.arm == arm && p.target == "T1") return p.mean_abs_error;
    }
    return std::nan("");
  };
  for (const std::string arm : {"0", "1"}) {
    const double e200 = at(200, arm);
    const double e2000 = at(2000, arm);
    o.require(e2000 < e200, "arm " + arm + " error n=200 " + fmt("%.4f", e200) + " n=2000 " +
                                fmt("%.4f", e2000));
  }
  return o;
}

Outcome criterion_6() {
  Outcome o;
  const int d = 10, r = 2, steps = 50;
  const double eps = 0.5;
  double worst = 0.0;
  const auto start = std::chrono::steady_clock::now();
  for (std::uint64_t traj = 0; traj < 100; ++traj) {
    mb::Rng rng(mb::derive_seed(99, traj));
    mb::PerArm<Matrix> truth;
    for (Arm a : mb::kArms) {
      truth[a] = rng.gaussian_matrix(d, r) * rng.gaussian_matrix(d, r).transpose() / d;
    }
    mb::ArmFactors fast;
    for (Arm a : mb::kArms) {
      fast[a] = {truth[a] * Matrix::Identity(d, r) + 0.3 * rng.gaussian_matrix(d, r),
                 Matrix::Identity(d, r) + 0.3 * rng.gaussian_matrix(d, r)};
    }
    mb::ArmFactors slow = fast;
    for (int t = 1; t <= steps; ++t) {
      const Matrix x = rng.gaussian_matrix(d, d);
      const double pi = mb::propensity(mb::current_estimate(fast[Arm::one]),
                                       mb::current_estimate(fast[Arm::zero]), x, eps);
      const Arm a = mb::draw_action(pi, rng);
      const double y = mb::frobenius_inner(truth[a], x) + 0.1 * rng.normal();
      const double eta = 0.005 * std::pow(t, -0.6);
      mb::sgd_update(fast, x, y, a, pi, eta);
      slow = oracle::renormalized_step(slow, x, y, a, pi, eta);
      for (Arm b : mb::kArms) {
        worst = std::max(worst, oracle::relative_error(mb::current_estimate(fast[b]),
                                                       mb::current_estimate(slow[b])));
      }
    }
  }
  const double secs = seconds_since(start);
  o.require(worst < kFactoredTol6, "worst relative error " + fmt("%.2e", worst));
  o.require(secs < kSeconds6, "runtime " + fmt("%.2f", secs) + " s");
  return o;
}

Outcome criterion_7() {
  Outcome o;
  const int d = 8, r = 2;
  const double eps = 0.1, sigma = 0.1;
  mb::TruthSpec spec;
  spec.d1 = spec.d2 = d;
  spec.r = r;
  spec.singular_values_0 = spec.singular_values_1 = {1.0, 1.0};
  mb::Rng rng(7);
  const mb::GroundTruth truth = mb::generate_ground_truth(spec, rng);
  const mb::PerArm<Matrix> past{truth.dense(Arm::zero) + 0.2 * rng.gaussian_matrix(d, d),
                                truth.dense(Arm::one) + 0.2 * rng.gaussian_matrix(d, d)};

  // Debiasing increments with the past frozen.
  double worst_debias = 0.0;
  {
    mb::PerArm<Matrix> sum{Matrix::Zero(d, d), Matrix::Zero(d, d)};
    mb::PerArm<Matrix> sq{Matrix::Zero(d, d), Matrix::Zero(d, d)};
    for (long k = 0; k < kDraws7; ++k) {
      const Matrix x = mb::sample_context(d, d, rng);
      const double pi = mb::propensity(past[Arm::one], past[Arm::zero], x, eps);
      const Arm a = mb::draw_action(pi, rng);
      const double y = mb::realize_reward(truth, x, a, rng).y;
      for (Arm arm : mb::kArms) {
        const Matrix inc = mb::debias_surrogate(past[arm], x, y, arm, a, pi) - truth.dense(arm);
        sum[arm] += inc;
        sq[arm] += inc.cwiseProduct(inc);
      }
    }
    const double n = static_cast<double>(kDraws7);
    for (Arm arm : mb::kArms) {
      const Matrix mean = sum[arm] / n;
      const Matrix se = ((sq[arm] / n - mean.cwiseProduct(mean)) / (n - 1.0)).cwiseSqrt();
      worst_debias = std::max(worst_debias, mean.cwiseAbs().cwiseQuotient(se).maxCoeff());
    }
  }
  o.require(worst_debias <= kDebiasSe7,
            "debias increment max |mean|/SE " + fmt("%.2f", worst_debias));

  // Inverse-weighted gradient against the plain population gradient.
  double worst_grad = 0.0;
  for (Arm arm : mb::kArms) {
    const mb::FactorPair f = mb::factorize_init(past[arm], r);
    const Matrix uv = f.U * f.V.transpose();
    const Eigen::Index k = f.U.size() + f.V.size();
    Vector s1 = Vector::Zero(k), q1 = Vector::Zero(k), s2 = Vector::Zero(k), q2 = Vector::Zero(k);
    mb::Rng weighted(11), plain(12);
    auto gradient = [&](const Matrix& x, double y, double w) {
      const double res = mb::frobenius_inner(uv, x) - y;
      const Matrix gu = w * res * x * f.V;
      const Matrix gv = w * res * x.transpose() * f.U;
      Vector g(k);
      g << Eigen::Map<const Vector>(gu.data(), gu.size()),
          Eigen::Map<const Vector>(gv.data(), gv.size());
      return g;
    };
    for (long i = 0; i < kDraws7; ++i) {
      const Matrix x = weighted.gaussian_matrix(d, d);
      const double pi = mb::propensity(past[Arm::one], past[Arm::zero], x, eps);
      const Arm a = mb::draw_action(pi, weighted);
      const double y = truth.mean_reward(a, x) + sigma * weighted.normal();
      const Vector g = a == arm ? gradient(x, y, 1.0 / mb::selection_probability(arm, pi))
                                : Vector::Zero(k);
      s1 += g;
      q1 += g.cwiseAbs2();
      const Matrix xp = plain.gaussian_matrix(d, d);
      const Vector gp = gradient(xp, truth.mean_reward(arm, xp) + sigma * plain.normal(), 1.0);
      s2 += gp;
      q2 += gp.cwiseAbs2();
    }
    const double n = static_cast<double>(kDraws7);
    const Vector m1 = s1 / n, m2 = s2 / n;
    const Vector v1 = (q1 / n - m1.cwiseAbs2()) / (n - 1.0);
    const Vector v2 = (q2 / n - m2.cwiseAbs2()) / (n - 1.0);
    worst_grad = std::max(
        worst_grad, (m1 - m2).cwiseAbs().cwiseQuotient((v1 + v2).cwiseSqrt()).maxCoeff());
  }
  o.require(worst_grad <= kGradientSe7, "gradient max |diff|/SE " + fmt("%.2f", worst_grad));
  return o;
}

Outcome criterion_8() {
  Outcome o;
  const mb::ExperimentConfig c = reference_config(3, 1);
  const mb::GroundTruth truth = mb::make_ground_truth(c, kTruthSeed);
  mb::Rng rng(8);
  double worst_z = 0.0;
  for (const auto& target : {mb::single_entry_target(50, 50), mb::three_entry_target(50, 50)}) {
    for (Arm a : mb::kArms) {
      const auto mc = mb::true_S2_oracle(truth, target.T, a, 1.0, 200000, rng);
      const double exact = oracle::closed_form_S2(truth, target.T, a, 1.0);
      worst_z = std::max(worst_z, std::abs(mc.value - exact) / mc.std_error);
    }
  }
  o.require(worst_z <= kOracleSe8, "S2 oracle max |diff|/SE " + fmt("%.2f", worst_z));

  double worst_proj = 0.0, worst_prox = 0.0, worst_p = 0.0;
  for (int k = 0; k < 50; ++k) {
    const Matrix m = rng.gaussian_matrix(12, 3) * rng.gaussian_matrix(3, 10) +
                     0.2 * rng.gaussian_matrix(12, 10);
    worst_proj = std::max(worst_proj,
                          oracle::relative_error(mb::project_topr(m, 3), oracle::sandwich_topr(m, 3)));
    const double tau = rng.uniform() * oracle::singular_values(m)(0);
    worst_prox = std::max(worst_prox, (mb::singular_value_soft_threshold(m, tau) -
                                       oracle::soft_threshold(m, tau)).norm());
    const mb::FactorPair f = oracle::random_factors(12, 10, 3, rng);
    const auto proj = mb::projections_from_byproducts(f, mb::compute_byproducts(f));
    for (const Matrix& p : {proj.left.matrix(), proj.right.matrix()}) {
      worst_p = std::max({worst_p, (p * p - p).norm(), (p.transpose() - p).norm(),
                          std::abs(p.trace() - 3.0)});
    }
  }
  o.require(worst_proj < kExact8, "project_topr error " + fmt("%.1e", worst_proj));
  o.require(worst_prox < kExact8, "prox error " + fmt("%.1e", worst_prox));
  o.require(worst_p < kExact8, "projection identities " + fmt("%.1e", worst_p));
  return o;
}

Outcome criterion_9() {
  Outcome o;
  mb::ExperimentConfig c = reference_config(2, 12);
  c.truth.d1 = c.truth.d2 = 12;
  c.targets = {mb::single_entry_target(12, 12), mb::three_entry_target(12, 12)};
  c.n = 400;
  c.init.n0 = 600;
  c.checkpoints = {0, 200};
  c.sd_checkpoints = {100, 400};
  c.oracle_samples = 5000;
  c.threads = 1;
  const std::string first = mb::to_json(mb::run_experiment(c));
  const std::string again = mb::to_json(mb::run_experiment(c));
  c.threads = 4;
  const std::string threaded = mb::to_json(mb::run_experiment(c));
  o.require(first == again, "repeat run identical");
  o.require(first == threaded, "1 vs 4 threads identical (" + std::to_string(first.size()) +
                                   " bytes)");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::FILE* file = nullptr;
  if (argc > 1) {
    file = std::fopen(argv[1], "w");
    if (file == nullptr) {
      std::fprintf(stderr, "cannot open %s\n", argv[1]);
      return 1;
    }
  }
  int failures = 0;
  int errors = 0;
  auto emit = [&](const std::string& line) {
    std::printf("%s\n", line.c_str());
    std::fflush(stdout);
    if (file != nullptr) {
      std::fprintf(file, "%s\n", line.c_str());
      std::fflush(file);
    }
  };
  auto report = [&](int id, const Outcome& o) {
    emit(std::string(o.pass ? "PASS" : "FAIL") + " criterion " + std::to_string(id) + ": " +
         o.detail);
    if (!o.pass) ++failures;
  };
  auto errored = [&](int id, const std::exception& e) {
    report(id, Outcome{false, std::string("error: ") + e.what()});
    ++errors;
  };
  auto guarded = [&](int id, const std::function<Outcome()>& body) {
    try {
      report(id, body());
    } catch (const std::exception& e) {
      errored(id, e);
    }
  };

  guarded(6, criterion_6);
  guarded(7, criterion_7);
  guarded(8, criterion_8);
  guarded(9, criterion_9);

  RankThreeRun rank3;
  bool have_rank3 = true;
  try {
    rank3 = run_rank_three();
  } catch (const std::exception& e) {
    have_rank3 = false;
    for (int id : {1, 2, 3, 4}) errored(id, e);
  }
  if (have_rank3) {
    guarded(1, [&] { return criterion_1(rank3); });
    guarded(2, [&] { return criterion_2(rank3); });
    guarded(4, [&] { return criterion_4(rank3); });
    guarded(3, [&] { return criterion_3(rank3); });
  }
  guarded(5, criterion_5);

  emit(std::to_string(failures) + " of 9 criteria failed, " + std::to_string(errors) +
       " could not be evaluated");
  if (file != nullptr) std::fclose(file);
  return errors == 0 ? 0 : 1;
}
