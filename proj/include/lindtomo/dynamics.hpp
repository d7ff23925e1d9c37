// Copyright 2026 The lindtomo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "lindtomo/lindblad.hpp"
#include "lindtomo/pauli.hpp"
#include "lindtomo/rng.hpp"

namespace lindtomo {

/// Generator acting on column-major vec(op); 4^n x 4^n.
struct Superoperator {
  int n = 0;
  Eigen::MatrixXcd matrix;

  Eigen::MatrixXcd apply(const Eigen::MatrixXcd& op) const;
};

Eigen::VectorXcd vectorize(const Eigen::MatrixXcd& op);
Eigen::MatrixXcd unvectorize(const Eigen::VectorXcd& v);

Superoperator build_superoperator(const LindbladModel& m, int cap = kDenseCap);

/// exp(t L)(op) for an arbitrary operator; no state checks.
Eigen::MatrixXcd propagate_operator(const Superoperator& s, const Eigen::MatrixXcd& op, double t);

/// exp(t L)(rho0). rho0 must be a density matrix (within 1e-9).
Eigen::MatrixXcd propagate(const LindbladModel& m, const Eigen::MatrixXcd& rho0, double t);
Eigen::MatrixXcd propagate(const Superoperator& s, const Eigen::MatrixXcd& rho0, double t);

/// (1/2^n) Tr(P exp(tL)(Q)).
double exact_ptm_element(const LindbladModel& m, const PauliString& p, const PauliString& q,
                         double t);

/// Pauli transfer matrix exp(t G) of the idling channel, real 4^n x 4^n.
Eigen::MatrixXd pauli_transfer_matrix(const LindbladModel& m, double t);

/// Memoized PTMs for one model. Safe for concurrent use; returned matrices
/// are immutable and outlive the cache entry.
class PropagatorCache {
 public:
  explicit PropagatorCache(LindbladModel m);

  const LindbladModel& model() const { return model_; }
  int qubits() const { return model_.qubits(); }
  std::shared_ptr<const Eigen::MatrixXd> ptm(double t) const;
  std::size_t size() const;

 private:
  LindbladModel model_;
  Eigen::MatrixXd generator_;
  mutable std::mutex mutex_;
  mutable std::map<double, std::shared_ptr<const Eigen::MatrixXd>> entries_;
};

/// Per-qubit SPAM: confusion rows are the true outcome (0, 1), columns the
/// reported outcome; thermal_population is the chance of preparing the
/// orthogonal eigenstate.
struct NoiseModel {
  std::vector<Eigen::Matrix2d> confusion;
  std::vector<double> thermal_population;

  static NoiseModel ideal(int n);
  /// Same confusion p(1|0), p(0|1) and thermal population on every qubit.
  static NoiseModel uniform(int n, double p1_given_0, double p0_given_1, double thermal);

  int qubits() const { return static_cast<int>(confusion.size()); }
  bool is_ideal() const;
  /// Throws ContractViolation on non-stochastic rows or thermal >= 0.5.
  void validate() const;
};

/// Tensor product of Pauli eigenstates; bit (n-1-k) of `negative` selects
/// the -1 eigenstate on site k.
struct ProductState {
  PauliString letters;
  std::uint32_t negative = 0;

  int qubits() const { return letters.size(); }
  int sign(int site) const;
  /// "+X-Z" style label.
  std::string label() const;
  static ProductState parse(std::string_view label);

  friend bool operator==(const ProductState&, const ProductState&) = default;
};

Eigen::MatrixXcd product_density(const ProductState& s);

/// Measurement record; bit (n-1-k) is the outcome on site k.
struct ShotOutcome {
  int n = 0;
  std::uint32_t bits = 0;

  int bit(int site) const { return static_cast<int>((bits >> (n - 1 - site)) & 1U); }
  int sign(int site) const { return bit(site) ? -1 : 1; }
  std::vector<int> bit_vector() const;
  std::vector<int> sign_vector() const;
};

/// Ideal expectations <B_U> of every sub-product of the measured letters;
/// index U is a site mask in the same bit convention as PauliString.
std::vector<double> subset_expectations(const Eigen::MatrixXd& ptm, const ProductState& init,
                                        const PauliString& basis);

/// Exact distribution of reported outcomes, including thermal preparation
/// and confusion.
std::vector<double> outcome_distribution(const Eigen::MatrixXd& ptm, const ProductState& init,
                                         const PauliString& basis, const NoiseModel& noise);

/// Shot sampler bound to one PTM, preparation letters and measurement basis.
/// Distributions for each preparation sign pattern are built on first use.
class SettingSampler {
 public:
  SettingSampler(const Eigen::MatrixXd& ptm, const PauliString& letters, const PauliString& basis,
                 const NoiseModel& noise);

  /// Draw order: n thermal uniforms (when thermal noise is on), one Born
  /// uniform, n confusion uniforms (when confusion is non-ideal).
  ShotOutcome sample(std::uint32_t negative, Stream& rng);

  /// Ideal (noise-free) outcome probabilities for one sign pattern.
  std::vector<double> probabilities(std::uint32_t negative) const;

 private:
  const std::vector<double>& cdf(std::uint32_t negative);

  int n_;
  const NoiseModel* noise_;
  bool thermal_on_ = false;
  bool confusion_on_ = false;
  Eigen::MatrixXd weights_;  // weights_(U, T) = R[B_U, L_T]
  std::vector<std::vector<double>> cdfs_;
};

/// One shot of the full simulation; builds the PTM for t on each call.
ShotOutcome sample_shot(const LindbladModel& m, const ProductState& init, double t,
                        const PauliString& basis, const NoiseModel& noise, Stream& rng);

/// Confusion-contracted single-qubit expectation.
double apply_spam_to_expectation(const NoiseModel& noise, int qubit, double value);
/// Inverse of apply_spam_to_expectation; throws DomainError when singular.
double invert_spam_expectation(const NoiseModel& noise, int qubit, double value);

/// Fast Walsh-Hadamard transform in place; length must be a power of two.
void walsh_hadamard(std::span<double> v);

}  // namespace lindtomo
