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

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lindtomo/execution.hpp"
#include "lindtomo/lindblad.hpp"
#include "lindtomo/pauli.hpp"
#include "lindtomo/rng.hpp"

namespace lindtomo {

struct SignalSeries;

/// Polynomial y(t) = sum_k c_k t^k fitted by weighted least squares.
struct FitResult {
  Eigen::VectorXd coefficients;
  Eigen::MatrixXd covariance;
  double chi2 = 0.0;
  int dof = 0;

  double intercept() const { return coefficients[0]; }
  double slope() const { return coefficients.size() > 1 ? coefficients[1] : 0.0; }
  double slope_stderr() const;
  double evaluate(double t) const;
};

/// Throws InsufficientDataError with fewer than degree + 2 points and
/// DomainError on non-positive sigmas.
FitResult chi2_polyfit(std::span<const double> times, std::span<const double> values,
                       std::span<const double> sigmas, int degree = 1);

/// Cosine-spaced tiling of [t_min, t_max]; intervals[j-1] is I_j, running
/// from the top of the range down.
struct ChebyshevPartition {
  double t_min = 0.0;
  double t_max = 0.0;
  int count = 0;
  std::vector<std::pair<double, double>> intervals;

  double center() const { return 0.5 * (t_max + t_min); }
  double half_width() const { return 0.5 * (t_max - t_min); }
  /// Position of the interval holding t; shared boundaries go to the
  /// interval above.
  int locate(double t) const;
};

ChebyshevPartition chebyshev_partition(double t_min, double t_max, int count);

/// i.i.d. draws t = tbar + t_delta cos(pi u), u ~ U[0, 1).
std::vector<double> chebyshev_sample_times(double t_min, double t_max, std::size_t count,
                                           Stream& rng);

struct RobustFitOptions {
  int degree = 1;
  int partitions = 4;
  /// Stop once max_j |q_k(t_j)| drops below this. Non-positive selects
  /// 1e-3 times the data scale max|y|.
  double stop_threshold = 0.0;
  int max_iters = 50;
};

struct RobustFitResult {
  Eigen::VectorXd coefficients;  // p_tot
  Eigen::VectorXd baseline;      // L1 polynomial p
  int iterations = 0;
  bool converged = false;
  double sigma = 0.0;
  double sup_bound = 0.0;
  double derivative_bound_markov = 0.0;     // 3 e sigma / t_min
  double derivative_bound_chebyshev = 0.0;  // 3 sigma tbar / t_delta^2
  double derivative_bound = 0.0;            // min of the two
  ChebyshevPartition partition;

  double slope() const { return coefficients.size() > 1 ? coefficients[1] : 0.0; }
  double evaluate(double t) const;
};

/// Two-phase L1 baseline plus iterated L-infinity corrections on interval
/// medians. `sigma` is the contamination level used for the bounds.
RobustFitResult robust_polyfit(std::span<const double> times, std::span<const double> values,
                               double sigma, const RobustFitOptions& options = {});
/// As above with sigma = max of the per-point standard errors.
RobustFitResult robust_polyfit(std::span<const double> times, std::span<const double> values,
                               std::span<const double> sigmas, const RobustFitOptions& options = {});

/// L1 loss sum_j |I_j| mean_{t_i in I_j} |y_i - p(t_i)|.
double l1_loss(const ChebyshevPartition& part, std::span<const double> times,
               std::span<const double> values, const Eigen::VectorXd& poly);
/// L-infinity loss max_j |p(t_j) - median_{I_j} y| at interval midpoints.
double linf_loss(const ChebyshevPartition& part, std::span<const double> times,
                 std::span<const double> values, const Eigen::VectorXd& poly);

double rice_cdf(double x, double nu, double sigma);
double rice_quantile(double nu, double sigma, double level);
std::pair<double, double> rice_quantiles(double nu, double sigma, double lo = 0.16,
                                         double hi = 0.84);

struct SlopeComponent {
  double value = 0.0;
  double stderr = 0.0;
};

enum class ValueKind : std::uint8_t { kReal, kComplex };

/// A reported Lindblad coefficient: coherent a_P and diagonal D_PP are real,
/// off-diagonal D_PQ complex.
struct ParameterEstimate {
  std::string label;
  ValueKind kind = ValueKind::kReal;
  Complex value;
  double stderr = 0.0;
  bool unequal_errors = false;  // complex components differed; larger used
  double magnitude = 0.0;
  double quantile_lo = 0.0;
  double quantile_hi = 0.0;
};

/// Throws DimensionError when the component count does not match the kind.
ParameterEstimate slope_to_parameter(std::span<const SlopeComponent> components, ValueKind kind,
                                     std::string label = {});

enum class FitMethod : std::uint8_t { kChi2, kRobust };
std::string to_string(FitMethod m);
FitMethod fit_method_from_string(std::string_view s);

struct FitOptions {
  FitMethod method = FitMethod::kChi2;
  int degree = 1;
  bool include_t0 = true;
  RobustFitOptions robust;
};

struct ComponentFit {
  double slope = 0.0;
  double stderr = 0.0;  // chi2 slope error, or the robust derivative bound
  double chi2 = 0.0;
  int dof = 0;
  bool ok = true;
  std::string message;
};

/// Fitted transformed-TM slopes for every parameter slot of a template.
struct ParameterEstimates {
  TemplatePtr tmpl;
  std::string protocol;
  FitMethod method = FitMethod::kChi2;
  Eigen::VectorXd values;
  Eigen::VectorXd stderrs;
  std::vector<ComponentFit> fits;
  std::vector<ParameterEstimate> terms;

  ParameterVector parameter_vector() const { return {tmpl, values}; }
};

/// Fits each component of a transformed series and groups slots into
/// reported terms. Component failures are recorded, not thrown.
ParameterEstimates estimate_from_series(const SignalSeries& transformed, TemplatePtr tmpl,
                                        const FitOptions& options, std::string protocol,
                                        Execution exec = Execution::kParallel);

/// Groups slot values into terms (Re/Im pairs become one complex term).
std::vector<ParameterEstimate> group_terms(const ModelTemplate& t, const Eigen::VectorXd& values,
                                           const Eigen::VectorXd& stderrs);

}  // namespace lindtomo
