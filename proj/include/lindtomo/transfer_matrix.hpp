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
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lindtomo/dynamics.hpp"
#include "lindtomo/execution.hpp"
#include "lindtomo/lindblad.hpp"

namespace lindtomo {

/// One row of the transfer matrix: a prepared input and a measured Pauli.
///
/// State probes (ELT) have M_ij = Tr(B L_j(rho)). Pauli probes (SLT) use the
/// PTM normalization M_ij = (1/2^n) Tr(P L_j(Q)).
struct ProbeConfiguration {
  enum class Kind : std::uint8_t { kState, kPauli };

  Kind kind = Kind::kPauli;
  ProductState state;  // kState only
  PauliString input;   // kPauli only
  PauliString output;

  static ProbeConfiguration state_probe(ProductState s, PauliString out);
  static ProbeConfiguration pauli_probe(PauliString in, PauliString out);

  int qubits() const { return output.size(); }
  double normalization() const;
  /// Sites touched by the probe: supp(output) | supp(input) for Pauli
  /// probes, all sites for state probes.
  std::uint32_t support_mask() const;
  /// Coefficient of Pauli S in the probe input, normalized so that
  /// M_ij = sum_S c_S [coefficient of output in L_j(S)].
  double input_coefficient(const PauliString& s) const;
  std::string label() const;
};

/// Real transfer matrix (every basis generator preserves Hermiticity).
struct TransferMatrix {
  TemplatePtr tmpl;
  std::vector<ProbeConfiguration> probes;
  Eigen::MatrixXd M;

  Eigen::Index rows() const { return M.rows(); }
  Eigen::Index cols() const { return M.cols(); }
};

TransferMatrix build_transfer_matrix(TemplatePtr t, std::vector<ProbeConfiguration> probes,
                                     Execution exec = Execution::kParallel);

/// normalization * Tr(B L_j(A)) by dense evaluation; oracle for n <= 3.
double dense_transfer_entry(const ProbeConfiguration& probe, const BasisGenerator& g);

/// Pauli probes (P, Q), P != I, whose joint support lies inside the support
/// of at least one template parameter, in (P, Q) index order.
std::vector<ProbeConfiguration> pauli_probe_set(const ModelTemplate& t);

struct NullDirection {
  double singular_value = 0.0;
  Eigen::VectorXd vector;
  /// Labels of the parameters carrying most of the direction's weight.
  std::vector<std::string> dominant_labels;
};

struct LearnabilityReport {
  Eigen::Index rank = 0;
  Eigen::Index columns = 0;
  double condition_number = 0.0;  // infinity when rank-deficient
  Eigen::VectorXd singular_values;
  std::vector<NullDirection> null_directions;

  bool full_rank() const { return rank == columns; }
  std::string summary() const;
};

LearnabilityReport learnability_report(const TransferMatrix& tm, double relative_cutoff = 1e-10);

enum class InversionStrategy : std::uint8_t {
  kMinNorm,  // SVD pseudo-inverse of the whole matrix
  kLocal,    // pseudo-inverse of each parameter-support block
};

std::string to_string(InversionStrategy s);
InversionStrategy inversion_strategy_from_string(std::string_view s);

struct InversionOptions {
  InversionStrategy strategy = InversionStrategy::kMinNorm;
  double relative_cutoff = 1e-10;
  double warn_condition = 1e6;
  double fail_condition = 1e10;
};

struct InversionMap {
  Eigen::MatrixXd N;  // params x probes
  double condition_number = 0.0;
  Eigen::Index rank = 0;
  InversionStrategy strategy = InversionStrategy::kMinNorm;
  std::vector<std::string> warnings;

  /// Probe (column) indices with a nonzero weight somewhere in N.
  std::vector<std::size_t> used_probes() const;
};

/// Left inverse with N M = 1. Throws LearnabilityError when M lacks full
/// column rank or is conditioned beyond options.fail_condition.
InversionMap invert(const TransferMatrix& tm, const InversionOptions& options = {});

/// Time series of vectors with per-entry standard errors; rows are times.
struct SignalSeries {
  std::vector<double> times;
  Eigen::MatrixXd values;  // times x components
  Eigen::MatrixXd stderrs;
};

/// P(t) = N E(t), sigma_P^2 = diag(N diag(sigma_E^2) N^T).
SignalSeries transform_signal(const InversionMap& inv, const SignalSeries& e);

void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& row_labels,
                      const std::vector<std::string>& col_labels);
void export_transfer_matrix(std::ostream& os, const TransferMatrix& tm);
void export_inversion_map(std::ostream& os, const TransferMatrix& tm, const InversionMap& inv);

}  // namespace lindtomo
