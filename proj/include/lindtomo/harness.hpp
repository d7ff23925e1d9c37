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
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lindtomo/dynamics.hpp"
#include "lindtomo/elt.hpp"
#include "lindtomo/fitting.hpp"
#include "lindtomo/io.hpp"
#include "lindtomo/lindblad.hpp"
#include "lindtomo/slt.hpp"
#include "lindtomo/transfer_matrix.hpp"

namespace lindtomo {

inline constexpr int kConfigSchemaVersion = 1;

enum class Protocol : std::uint8_t { kElt, kSlt, kBoth };
std::string to_string(Protocol p);
Protocol protocol_from_string(std::string_view s);

enum class TimeGrid : std::uint8_t { kUniform, kChebyshev };
std::string to_string(TimeGrid g);
TimeGrid time_grid_from_string(std::string_view s);

struct TimesSpec {
  std::size_t count = 20;
  double t_max = 30.0;  // us
  TimeGrid grid = TimeGrid::kUniform;
};

struct NoiseSpec {
  std::string file;  // overrides the uniform values when set
  double p1_given_0 = 0.0;
  double p0_given_1 = 0.0;
  double thermal = 0.0;
};

/// A declarative run. JSON on disk; unknown keys are rejected.
struct RunConfig {
  int schema_version = kConfigSchemaVersion;
  int qubits = 1;
  std::string model_file;
  std::string model_preset;  // used when model_file is empty
  std::string template_name = "full";
  Protocol protocol = Protocol::kBoth;
  TimesSpec times;
  std::size_t shots_per_config = 500;
  std::size_t slt_shots = 3000;  // randomizations per time
  Acquisition acquisition = Acquisition::kShots;
  NoiseSpec noise;
  std::optional<std::uint64_t> seed;
  std::string output_dir = "lindtomo-run";
  FitMethod fit = FitMethod::kChi2;
  int fit_degree = 1;
  InversionStrategy inversion = InversionStrategy::kMinNorm;
  EltRoute route = EltRoute::kAuto;
  bool readout_correction = false;
  bool save_shots = true;  // the binary shot file is 16 bytes per shot
  std::vector<std::size_t> convergence_shots;
  std::filesystem::path base_dir;  // resolves relative paths; not serialized

  /// Budgets per system size: n=1 500 shots over 30 us, n=3 2000 shots over
  /// 1 us, n=5 SLT only with 2.5e7 randomizations over 3 us; 20 times.
  static RunConfig defaults(int n);

  /// Throws ConfigError naming the offending field.
  void validate() const;
  /// Sorted-key JSON without base_dir.
  std::string canonical() const;
  /// FNV-1a of the canonical form without output_dir.
  std::uint64_t hash() const;
  std::filesystem::path resolve(const std::string& p) const;
  std::filesystem::path output_path() const { return resolve(output_dir); }
  std::vector<double> time_grid() const;
  std::uint64_t seed_value() const;
  ArtifactStamp stamp() const { return {hash(), seed_value()}; }
  TemplatePtr analysis_template() const;
  FitOptions fit_options() const;
};

std::uint64_t fnv1a64(std::string_view data);
RunConfig parse_config(std::string_view json, std::filesystem::path base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

// Synthetic ground truths. Units: us and rad/us; values are plausibility
// scaled, not device data.
//   single-transmon  detuning a_Z = 2pi 0.05, T1 = 50 us, D_ZZ = 0.01, 1% thermal
//   two-local        single-transmon sites with jitter, nearest-neighbour ZZ
//                    and XX+YY couplings of 2pi 1-2 kHz
//   weak-coupling    a_Z ~ 2pi 0.2 MHz per site, ZZ couplings of exactly
//                    2pi 2 kHz on nearest and next-nearest chain neighbours
std::vector<std::string> preset_names();
LindbladModel make_preset(std::string_view name, int n, std::uint64_t seed);
/// Pairs (i, j), i < j, carrying a weak-coupling ZZ term.
std::vector<std::pair<int, int>> weak_coupling_pairs(int n);
/// On-site dissipation, all one-site coherent terms and the nine two-site
/// coherent terms on each listed pair.
ModelTemplate coupling_template(int n, const std::vector<std::pair<int, int>>& pairs,
                                std::string name);
/// ModelTemplate::from_name plus "chain-nnn" (coupling_template over
/// weak_coupling_pairs).
TemplatePtr resolve_template(int n, std::string_view name);
inline constexpr double kWeakCoupling = 2.0 * 3.14159265358979323846 * 0.002;

struct GroundTruth {
  LindbladModel model;
  NoiseModel noise;
};
GroundTruth ground_truth(const RunConfig& c);

struct ComparisonRow {
  std::string label;
  double elt = 0.0;
  double elt_stderr = 0.0;
  double slt = 0.0;
  double slt_stderr = 0.0;
  double residual = 0.0;  // elt - slt
  double combined_stderr = 0.0;
};

struct ComparisonSummary {
  std::size_t count = 0;
  double residual_mean = 0.0;
  double residual_std = 0.0;
  double residual_min = 0.0;
  double residual_max = 0.0;
  double mean_elt_stderr = 0.0;
  double mean_slt_stderr = 0.0;
  /// residual_std / mean_elt_stderr; near 1 once SLT noise is negligible.
  double saturation_ratio = 0.0;
  std::size_t within_3sigma = 0;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  ComparisonSummary summary;
};

/// Matches parameters by label; labels present in only one side are skipped.
ComparisonReport compare_estimates(const ParameterEstimates& elt, const ParameterEstimates& slt);
ComparisonSummary summarize(const std::vector<ComparisonRow>& rows);
void write_comparison(std::ostream& os, const ComparisonReport& r,
                      const ArtifactStamp* stamp = nullptr);

struct ExperimentResult {
  RunConfig config;
  LindbladModel truth;
  NoiseModel noise;
  std::optional<EltDataset> elt_data;
  std::vector<ExpectationTrace> traces;
  std::optional<EltAnalysis> elt;
  std::optional<ShadowDataset> shots;
  std::optional<SltAnalysis> slt;
  std::optional<ComparisonReport> comparison;
  std::vector<std::filesystem::path> artifacts;
};

/// Runs the configured protocol(s). With `both`, SLT subsamples the ELT
/// acquisition; with `slt` alone it draws fresh random settings. Artifacts
/// go to the output directory when `write` is set.
ExperimentResult run_experiment(const RunConfig& c, bool write = true);

struct ConvergenceRow {
  std::size_t shots = 0;
  bool ok = true;
  std::string message;
  double residual_std = 0.0;
  double residual_mean = 0.0;
  double mean_elt_stderr = 0.0;
  double mean_slt_stderr = 0.0;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  /// Log-log slope of residual std against N over rows whose residual std
  /// exceeds kPreSaturationRatio times the plateau, the larger of the
  /// saturation level and the mean ELT stderr.
  double slope = 0.0;
  std::size_t slope_points = 0;
  double saturation_level = 0.0;  // residual std at the largest N
  double mean_elt_stderr = 0.0;
};
inline constexpr double kPreSaturationRatio = 3.0;

/// One ELT acquisition; for each N an SLT run on a without-repetition
/// subsample of it. Rows whose SLT lacks agreeing shots are kept with
/// ok = false. N above the per-time shot total throws DataError.
ConvergenceTable convergence_study(const RunConfig& c, const std::vector<std::size_t>& shot_counts);
void write_convergence(std::ostream& os, const ConvergenceTable& t,
                       const ArtifactStamp* stamp = nullptr);

struct CostTargets {
  double epsilon = 0.01;
  double delta = 0.05;
  double shot_time_us = 64.8;  // 2.5e7 x 20 shots in 9 h
  std::size_t time_steps = 20;
  /// When set, ELT shots per configuration are chosen so every
  /// configuration sees as many matching shots as this SLT budget gives.
  std::optional<std::size_t> slt_budget;
};

struct CostEstimate {
  std::uint64_t full_configurations = 0;  // 6^n 3^n
  std::uint64_t configurations = 0;       // needed by the template
  std::size_t coupled_supports = 0;
  std::uint64_t elt_shots_per_config = 0;
  std::uint64_t elt_per_time = 0;  // N_conf N_shot
  std::uint64_t elt_total = 0;
  int worst_weight_sum = 0;
  std::uint64_t slt_per_time = 0;
  std::uint64_t slt_total = 0;
  double elt_hours = 0.0;
  double slt_hours = 0.0;
  std::vector<std::string> assumptions;
};

/// ELT: one full enumeration (18^|S| settings) per maximal term support S,
/// or the full 6^n 3^n enumeration when a support spans every qubit; shots
/// per configuration from Hoeffding on a +-1 observable, or matched to
/// slt_budget. SLT: Hoeffding at the worst weight sum the inversion needs.
CostEstimate cost_estimate(const ModelTemplate& t, const CostTargets& targets);
void write_cost(std::ostream& os, const CostEstimate& c);

enum class PlotKind : std::uint8_t { kMagnitudes, kResiduals, kConvergence, kBlochDeformation };
std::string to_string(PlotKind k);
PlotKind plot_kind_from_string(std::string_view s);

struct BlochSample {
  std::size_t jump = 0;
  double rate = 0.0;
  Eigen::Vector3d before;
  Eigen::Vector3d after;
};

/// Bloch vectors on a Fibonacci sphere propagated for time t under each
/// single jump channel of a one-qubit model.
std::vector<BlochSample> bloch_deformation(const LindbladModel& m, double t,
                                           std::size_t samples = 200);

/// Reads artifacts from a run directory and writes `<kind>.csv` next to
/// them. Returns the written path; a missing artifact throws DataError.
std::filesystem::path emit_plot_data(const std::filesystem::path& run_dir, PlotKind kind,
                                     double bloch_time = 10.0);

struct DecayFit {
  double rate = 0.0;
  double rate_stderr = 0.0;
  double offset = 0.0;     // asymptote
  double amplitude = 0.0;  // y(0) - asymptote
  double chi2 = 0.0;
  bool ok = true;
  std::string message;
};

/// y = offset + amplitude exp(-rate t), rate profiled over [0, 50/t_max]
/// with the linear coefficients solved at each rate; the stderr is the
/// half-width of the delta-chi2 = 1 interval.
DecayFit fit_exponential_decay(std::span<const double> times, std::span<const double> values,
                               std::span<const double> sigmas);

struct T1Crosscheck {
  DecayFit direct;
  double t1_direct = 0.0;
  double t1_direct_stderr = 0.0;
  double model_rate = 0.0;  // -d<Z>/dt per unit <Z>, from the estimates
  double model_rate_stderr = 0.0;
  double t1_model = 0.0;
  double t1_model_stderr = 0.0;
  double z_score = 0.0;  // rate difference in combined sigma
};

/// Compares an exponential fit of a |1> -> Z_k decay trace with the
/// relaxation rate carried by the reconstructed generator.
T1Crosscheck t1_crosscheck(const ExpectationTrace& decay, const ParameterEstimates& estimates,
                           int qubit = 0);

/// Acquires a dedicated long decay trace (qubit k starts in |1>, others in
/// |0>) on a uniform grid to t_max with the configured shots.
ExpectationTrace acquire_decay_trace(const RunConfig& c, const GroundTruth& truth, int qubit,
                                     double t_max);
void write_t1(std::ostream& os, const T1Crosscheck& r, const ArtifactStamp* stamp = nullptr);

}  // namespace lindtomo
