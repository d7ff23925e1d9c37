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
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lindtomo/pauli.hpp"

namespace lindtomo {

enum class ParamKind : std::uint8_t {
  kCoherent,             // a_P
  kDissipativeDiagonal,  // D_{P,P}
  kDissipativeReal,      // Re D_{P,Q}, P < Q
  kDissipativeImag,      // Im D_{P,Q}, P < Q
};

/// One real slot of the parameter vector. `p`, `q` are Pauli indices
/// (q == p for coherent and diagonal slots).
struct ParamInfo {
  ParamKind kind;
  std::uint32_t p;
  std::uint32_t q;

  std::string label(int n) const;
  /// Number of qubits touched by the term(s) the slot multiplies.
  int locality(int n) const;
};

/// The set of free Lindblad coefficients.
///
/// Parameter layout (frozen): coherent terms in Pauli order; then every
/// diagonal D_{P,P}; then each off-diagonal pair P < Q in (P, Q) order as
/// Re D_{P,Q} followed by Im D_{P,Q}.
class ModelTemplate {
 public:
  using Pair = std::pair<std::uint32_t, std::uint32_t>;

  /// All 4^n - 1 coherent and (4^n - 1)^2 dissipative terms.
  static ModelTemplate full(int n);
  /// On-site dissipation plus coherent terms of weight <= k.
  static ModelTemplate local(int n, int k);
  /// "full", "local1", "local2", "local3".
  static ModelTemplate from_name(int n, std::string_view name);
  static ModelTemplate custom(int n, std::vector<PauliString> coherent,
                              std::vector<std::pair<PauliString, PauliString>> dissipative,
                              std::string name = "custom");

  int qubits() const { return n_; }
  const std::string& name() const { return name_; }

  std::span<const std::uint32_t> coherent_terms() const { return coherent_; }
  /// Ordered (P, Q) pairs, sorted, closed under transposition.
  std::span<const Pair> dissipative_terms() const { return dissipative_; }
  /// Sorted Pauli strings that appear in any dissipative pair; the row and
  /// column index set of the dissipation matrix.
  std::span<const std::uint32_t> dissipative_basis() const { return diss_basis_; }
  std::optional<std::size_t> dissipative_position(std::uint32_t pauli) const;

  const std::vector<ParamInfo>& layout() const { return layout_; }
  std::size_t param_count() const { return layout_.size(); }
  std::vector<std::string> labels() const;

  bool has_coherent(std::uint32_t p) const;
  bool has_dissipative(std::uint32_t p, std::uint32_t q) const;

  friend bool operator==(const ModelTemplate& a, const ModelTemplate& b) {
    return a.n_ == b.n_ && a.coherent_ == b.coherent_ && a.dissipative_ == b.dissipative_;
  }

 private:
  ModelTemplate(int n, std::string name, std::vector<std::uint32_t> coherent,
                std::vector<Pair> dissipative);

  int n_ = 0;
  std::string name_;
  std::vector<std::uint32_t> coherent_;
  std::vector<Pair> dissipative_;
  std::vector<std::uint32_t> diss_basis_;
  std::vector<ParamInfo> layout_;
};

std::size_t param_count(const ModelTemplate& t);

/// 4^n (4^n - 1), the size of the unrestricted parameterization.
std::uint64_t full_param_count(int n);

using TemplatePtr = std::shared_ptr<const ModelTemplate>;

struct ParameterVector {
  TemplatePtr layout;
  Eigen::VectorXd values;

  std::vector<std::string> labels() const { return layout->labels(); }
};

/// Time-independent Lindblad generator in the Pauli basis,
///   L(rho) = -i sum_P a_P [P, rho] + sum_{P,Q} D_{P,Q} (P rho Q - {QP, rho}/2).
/// Units: a in rad/us (hbar = 1), D in 1/us.
class LindbladModel {
 public:
  explicit LindbladModel(TemplatePtr t);
  /// `coherent` is indexed like t->coherent_terms(); `dissipation` like
  /// t->dissipative_basis(). Throws ContractViolation when D is not
  /// Hermitian or has weight outside the template.
  LindbladModel(TemplatePtr t, Eigen::VectorXd coherent, Eigen::MatrixXcd dissipation);

  static LindbladModel from_parameter_vector(const ParameterVector& v);
  ParameterVector to_parameter_vector() const;

  int qubits() const { return tmpl_->qubits(); }
  const ModelTemplate& model_template() const { return *tmpl_; }
  const TemplatePtr& template_ptr() const { return tmpl_; }
  const Eigen::VectorXd& coherent() const { return coherent_; }
  const Eigen::MatrixXcd& dissipation() const { return dissipation_; }

  double coherent_coefficient(const PauliString& p) const;
  Complex dissipation_entry(const PauliString& p, const PauliString& q) const;

  friend bool operator==(const LindbladModel& a, const LindbladModel& b) {
    return *a.tmpl_ == *b.tmpl_ && a.coherent_ == b.coherent_ &&
           a.dissipation_ == b.dissipation_;
  }

 private:
  TemplatePtr tmpl_;
  Eigen::VectorXd coherent_;
  Eigen::MatrixXcd dissipation_;
};

/// Incremental construction of a LindbladModel; keeps D Hermitian.
class ModelBuilder {
 public:
  explicit ModelBuilder(TemplatePtr t);
  ModelBuilder& coherent(std::string_view p, double value);
  ModelBuilder& coherent(const PauliString& p, double value);
  /// Sets D_{P,Q} = value and D_{Q,P} = conj(value).
  ModelBuilder& dissipation(std::string_view p, std::string_view q, Complex value);
  ModelBuilder& dissipation(const PauliString& p, const PauliString& q, Complex value);
  LindbladModel build() const;

 private:
  TemplatePtr tmpl_;
  Eigen::VectorXd coherent_;
  Eigen::MatrixXcd dissipation_;
};

/// Image of one basis Pauli under a basis generator. Every basis generator
/// maps a Pauli string S to a real multiple of a single Pauli string.
struct PauliTerm {
  double coefficient = 0.0;
  std::uint32_t index = 0;
};

/// The fixed superoperator L_j multiplying parameter slot j, so that
/// L = sum_j p_j L_j.
class BasisGenerator {
 public:
  BasisGenerator(int n, ParamInfo info) : n_(n), info_(info) {}

  const ParamInfo& info() const { return info_; }
  /// L_j(S) expanded in the Pauli basis; nullopt when it vanishes.
  std::optional<PauliTerm> act(std::uint32_t s) const;
  /// Dense evaluation L_j(op), independent of act().
  Eigen::MatrixXcd apply(const Eigen::MatrixXcd& op) const;

 private:
  int n_;
  ParamInfo info_;
};

std::vector<BasisGenerator> basis_generators(const ModelTemplate& t);

/// Sitewise Pauli-algebra image of S under slot `info`.
std::optional<PauliTerm> act_on_pauli(int n, const ParamInfo& info, std::uint32_t s);

/// Dense L(op), evaluated term by term from the Pauli expansion.
Eigen::MatrixXcd apply_generator(const LindbladModel& m, const Eigen::MatrixXcd& op);

/// Real Pauli-basis generator G_{R,S} = (1/2^n) Tr(R L(S)), 4^n x 4^n.
Eigen::MatrixXd pauli_generator(const LindbladModel& m);

struct JumpOperator {
  double rate = 0.0;        // eigenvalue of D
  bool unphysical = false;  // rate < 0
  std::vector<std::uint32_t> basis;
  Eigen::VectorXcd coefficients;  // L = sum_Q coefficients[Q] Q, unit norm

  Eigen::MatrixXcd matrix(int n) const;
};

/// Eigendecomposition D = sum_k rate_k v_k v_k^dagger with L_k = sum_Q (v_k)_Q Q.
/// Eigenvalues with |rate| <= zero_tol * max(1, ||D||) are dropped.
std::vector<JumpOperator> jump_decomposition(const LindbladModel& m, double zero_tol = 1e-12);
std::vector<JumpOperator> jump_decomposition(const Eigen::MatrixXcd& D,
                                             std::span<const std::uint32_t> basis,
                                             double zero_tol = 1e-12);

/// sum_k rate_k (L_k op L_k^dagger - {L_k^dagger L_k, op}/2).
Eigen::MatrixXcd apply_jumps(std::span<const JumpOperator> jumps, int n,
                             const Eigen::MatrixXcd& op);

struct PhysicalityReport {
  double min_eigenvalue = 0.0;
  bool passed = true;
};

PhysicalityReport validate_physical(const LindbladModel& m, double tol = 1e-9);

}  // namespace lindtomo
