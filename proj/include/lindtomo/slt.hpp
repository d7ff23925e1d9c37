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
#include <span>
#include <utility>
#include <vector>

#include "lindtomo/dynamics.hpp"
#include "lindtomo/elt.hpp"
#include "lindtomo/execution.hpp"
#include "lindtomo/fitting.hpp"
#include "lindtomo/lindblad.hpp"
#include "lindtomo/rng.hpp"
#include "lindtomo/transfer_matrix.hpp"

namespace lindtomo {

/// One randomized shot: preparation letters and signs, measured basis and
/// outcome, packed as site masks (bit n-1-k is site k).
struct ShadowShot {
  std::uint16_t time_index = 0;
  std::uint8_t n = 0;
  std::uint8_t reserved = 0;
  std::uint16_t init_x = 0;
  std::uint16_t init_z = 0;
  std::uint16_t init_negative = 0;
  std::uint16_t basis_x = 0;
  std::uint16_t basis_z = 0;
  std::uint16_t outcome = 0;  // set bit: measured -1

  static ShadowShot make(std::size_t time_index, const ProductState& init,
                         const PauliString& basis, std::uint32_t outcome_bits);

  PauliString init_letters() const { return PauliString::from_masks(n, init_x, init_z); }
  PauliString basis() const { return PauliString::from_masks(n, basis_x, basis_z); }
  ProductState init() const { return {init_letters(), init_negative}; }
  int init_sign(int site) const { return (init_negative >> (n - 1 - site)) & 1U ? -1 : 1; }
  int outcome_sign(int site) const { return (outcome >> (n - 1 - site)) & 1U ? -1 : 1; }

  friend bool operator==(const ShadowShot&, const ShadowShot&) = default;
};
static_assert(sizeof(ShadowShot) == 16);

struct ShadowSetting {
  ProductState init;
  PauliString basis;
};

/// Per site: init letter and sign uniform and independent, then basis
/// letter uniform. Draws 2n bounded integers from rng.
ShadowSetting draw_configuration(Stream& rng, int n);

/// Q is the prepared side (matched against init letters on supp Q) and P
/// the measured side (matched against basis letters on supp P).
bool agrees(const ShadowShot& shot, const PauliString& p, const PauliString& q);

/// prod_{supp Q} s * prod_{supp P} m * 3^(|P|+|Q|) when the shot agrees,
/// else 0.
double single_shot_estimate(const ShadowShot& shot, const PauliString& p, const PauliString& q);

struct PtmEstimate {
  PauliString p;
  PauliString q;
  double time = 0.0;
  double value = 0.0;
  double stderr = 0.0;
  std::size_t n_agree = 0;
  std::size_t n_used = 0;
};

using PauliPair = std::pair<PauliString, PauliString>;  // (P, Q)

/// Means over all shots (zeros included) for every pair in one pass.
/// Integer accumulation makes the result independent of worker count.
std::vector<PtmEstimate> estimate_ptm_batch(std::span<const ShadowShot> shots,
                                            std::span<const PauliPair> pairs, double time = 0.0,
                                            Execution exec = Execution::kParallel);

/// Smallest N with N >= 2 9^w ln(2/delta) / epsilon^2.
std::uint64_t hoeffding_shots_required(double epsilon, int weight_sum, double delta);

/// Shots grouped by time; shots[k] all carry time_index k.
struct ShadowDataset {
  int n = 0;
  std::vector<double> times;
  std::vector<std::vector<ShadowShot>> shots;

  std::size_t total_shots() const;
};

/// Shot i at time index k: setting from (seed, shadow-settings, k, i),
/// outcome from (seed, shadow-outcomes, k, i).
ShadowDataset simulate_slt(const LindbladModel& m, const NoiseModel& noise,
                           std::vector<double> times, std::size_t shots_per_time,
                           std::uint64_t seed, Execution exec = Execution::kParallel);

/// Draws shots_per_time distinct shots per time from a full-enumeration
/// ELT acquisition, stream (seed, subsampling, k).
ShadowDataset subsample_from_elt(const EltDataset& data, std::size_t shots_per_time,
                                 std::uint64_t seed);

struct SltOptions {
  InversionOptions inversion;
  FitOptions fit;
  Execution exec = Execution::kParallel;
};

struct SltAnalysis {
  TransferMatrix tm;
  InversionMap inversion;
  std::vector<std::size_t> needed;  // probe indices with nonzero weight in N
  std::vector<std::vector<PtmEstimate>> ptm;  // per time, per needed probe
  SignalSeries signal;
  SignalSeries transformed;
  ParameterEstimates estimates;
};

SltAnalysis run_slt(const ShadowDataset& data, TemplatePtr tmpl, const SltOptions& options = {});

}  // namespace lindtomo
