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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lindtomo/dynamics.hpp"
#include "lindtomo/execution.hpp"
#include "lindtomo/fitting.hpp"
#include "lindtomo/lindblad.hpp"
#include "lindtomo/transfer_matrix.hpp"

namespace lindtomo {

/// One ELT setting: a product eigenstate preparation and a measured basis.
struct EltConfiguration {
  ProductState state;
  PauliString basis;

  std::string label() const { return state.label() + ":" + basis.str(); }
};

/// Letters allowed for preparations and for measurement bases.
struct ConfigurationRestriction {
  std::string state_letters = "XYZ";
  std::string basis_letters = "XYZ";
};

/// Configurations with states outermost and bases innermost. States run
/// over +X,-X,+Y,-Y,+Z,-Z per site and bases over X,Y,Z, site 0 most
/// significant in both.
std::vector<EltConfiguration> enumerate_configurations(int n,
                                                       const ConfigurationRestriction& r = {});

enum class Acquisition : std::uint8_t {
  kShots,      // sampled outcomes
  kNoiseless,  // exact outcome distribution, reported with 1/sqrt(N_shot) errors
};

std::string to_string(Acquisition a);
Acquisition acquisition_from_string(std::string_view s);

struct EltPlan {
  int n = 0;
  std::vector<EltConfiguration> configurations;
  std::vector<double> times;
  std::size_t shots_per_config = 0;
  Acquisition acquisition = Acquisition::kShots;

  std::size_t total_shots() const { return configurations.size() * shots_per_config * times.size(); }
  /// Throws ContractViolation on unsorted or negative times, empty sets or
  /// size mismatches.
  void validate() const;
};

EltPlan make_elt_plan(int n, std::vector<double> times, std::size_t shots_per_config,
                      Acquisition acquisition = Acquisition::kShots,
                      const ConfigurationRestriction& r = {});

/// `count` uniformly spaced times on [0, t_max], both ends included.
std::vector<double> uniform_times(double t_max, std::size_t count);

/// Outcome histograms for every (time, configuration). In shot mode the
/// weights are integer counts; in noiseless mode N_shot times the exact
/// outcome probabilities.
class EltDataset {
 public:
  EltDataset(EltPlan plan, std::vector<double> weights);

  const EltPlan& plan() const { return plan_; }
  int qubits() const { return plan_.n; }
  std::size_t outcome_count() const { return std::size_t{1} << plan_.n; }
  std::span<const double> histogram(std::size_t time, std::size_t config) const;
  const std::vector<double>& weights() const { return weights_; }

 private:
  EltPlan plan_;
  std::vector<double> weights_;
};

/// Shot i of configuration c at time index k is drawn from the stream
/// (seed, acquisition, k, c * N_shot + i).
EltDataset acquire_elt(const EltPlan& plan, const LindbladModel& m, const NoiseModel& noise,
                       std::uint64_t seed, Execution exec = Execution::kParallel);

/// Mean single-shot estimates of one diagonal observable of one
/// configuration across all plan times.
struct ExpectationTrace {
  ProbeConfiguration probe;  // state probe with the observable as output
  std::size_t config = 0;
  std::uint32_t observable = 0;  // measured site mask
  std::vector<double> times;
  std::vector<double> values;
  std::vector<double> stderrs;
  std::size_t shots = 0;
};

/// Every non-identity sub-observable of every configuration (marginal
/// reuse). With `readout`, per-site confusion is inverted first.
std::vector<ExpectationTrace> expectation_traces(const EltDataset& data,
                                                 const NoiseModel* readout = nullptr);

/// Mean of prod_{supp Q} s * <P> over the configurations that prepare Q's
/// letters and measure P's letters. Equals the PTM element (1/2^n)Tr(P R(Q))
/// when every sign pattern on supp(Q) is present.
SignalSeries reduce_to_ptm(const std::vector<ExpectationTrace>& traces,
                           const std::vector<ProbeConfiguration>& pauli_probes);

enum class EltRoute : std::uint8_t {
  kAuto,          // direct for n <= 2 with min-norm inversion
  kDirect,        // state-probe transfer matrix from the traces
  kPtmReduction,  // traces reduced to PTM elements, Pauli-probe matrix
};

std::string to_string(EltRoute r);
EltRoute elt_route_from_string(std::string_view s);

struct EltOptions {
  EltRoute route = EltRoute::kAuto;
  InversionOptions inversion;
  FitOptions fit;
  Execution exec = Execution::kParallel;
};

struct EltAnalysis {
  EltRoute route = EltRoute::kDirect;
  TransferMatrix tm;
  InversionMap inversion;
  SignalSeries signal;       // E(t) fed to the inversion
  SignalSeries transformed;  // N E(t)
  ParameterEstimates estimates;
};

EltAnalysis run_elt(const std::vector<ExpectationTrace>& traces, TemplatePtr tmpl,
                    const EltOptions& options = {});

}  // namespace lindtomo
