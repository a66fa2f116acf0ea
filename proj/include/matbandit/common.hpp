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

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace matbandit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// The two actions of the bandit. Arm::one is the arm whose selection
/// probability is the propensity pi.
enum class Arm : std::uint8_t { zero = 0, one = 1 };

inline constexpr std::array<Arm, 2> kArms = {Arm::zero, Arm::one};

constexpr std::size_t index(Arm a) { return static_cast<std::size_t>(a); }
constexpr Arm other(Arm a) { return a == Arm::one ? Arm::zero : Arm::one; }

/// Probability that `a` is selected when arm one has propensity `pi`,
/// i.e. i*pi + (1-i)*(1-pi).
constexpr double selection_probability(Arm a, double pi) {
  return a == Arm::one ? pi : 1.0 - pi;
}

/// Per-arm container indexed by Arm.
template <typename T>
struct PerArm {
  std::array<T, 2> values{};

  T& operator[](Arm a) { return values[index(a)]; }
  const T& operator[](Arm a) const { return values[index(a)]; }
};

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A factor Gram matrix lost rank; the SGD trajectory can no longer be
/// renormalized.
class DegenerateFactorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a propensity makes an inverse weight undefined.
class PropensityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Non-finite values appeared in an estimator.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Frobenius inner product <A, B> = trace(A^T B).
template <typename A, typename B>
double frobenius_inner(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  return a.cwiseProduct(b).sum();
}

}  // namespace matbandit
