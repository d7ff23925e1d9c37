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
#include <string>
#include <vector>

#include "lindtomo/dynamics.hpp"
#include "lindtomo/elt.hpp"
#include "lindtomo/fitting.hpp"
#include "lindtomo/lindblad.hpp"
#include "lindtomo/slt.hpp"

namespace lindtomo {

/// Provenance written into every artifact header.
struct ArtifactStamp {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
};

std::string format_double(double x);
double parse_double(std::string_view s);
std::string hex64(std::uint64_t x);

/// Splits one delimited line; no quoting, since labels never contain commas.
std::vector<std::string> split_fields(std::string_view line, char delim = ',');

// Model files are `key = value` lines; `#` starts a comment.
//
//   qubits = 1
//   template = full            (full, localK, or custom)
//   units.coherent = rad/us
//   units.dissipation = 1/us
//   a[Z] = 0.314159
//   D[Z;Z] = 0.01
//   D[X;Y] = 0 -0.005          (real imag; D[Y;X] is implied)
//
// A custom template consists of exactly the terms listed.
void write_model(std::ostream& os, const LindbladModel& m, const ArtifactStamp* stamp = nullptr);
LindbladModel read_model(std::istream& is);
LindbladModel load_model(const std::filesystem::path& path);
void save_model(const std::filesystem::path& path, const LindbladModel& m,
                const ArtifactStamp* stamp = nullptr);

//   qubits = 2
//   confusion[0] = 0.02 0.03   (p(1|0) p(0|1))
//   thermal[0] = 0.01
void write_noise(std::ostream& os, const NoiseModel& noise);
NoiseModel read_noise(std::istream& is);
NoiseModel load_noise(const std::filesystem::path& path);

/// Columns: state,basis,observable,time,mean,stderr,shots.
void write_traces(std::ostream& os, const std::vector<ExpectationTrace>& traces,
                  const EltPlan& plan, const ArtifactStamp* stamp = nullptr);
/// Rows sharing (state, basis, observable) form one trace; configurations
/// are numbered in order of first appearance.
std::vector<ExpectationTrace> read_traces(std::istream& is);

// Binary shot file, all integers little-endian:
//   char[8]  "LTSHOT01"
//   u32      qubits
//   u32      time count T
//   u64      config hash
//   u64      seed
//   f64[T]   times
//   u64[T]   shots per time
//   records, grouped by time, 16 bytes each:
//     u16 time index, u8 qubits, u8 zero,
//     u16 init x mask, u16 init z mask, u16 init sign mask,
//     u16 basis x mask, u16 basis z mask, u16 outcome mask
// Site k is mask bit (qubits - 1 - k); a set sign or outcome bit means -1.
inline constexpr char kShotMagic[8] = {'L', 'T', 'S', 'H', 'O', 'T', '0', '1'};

void write_shots_binary(std::ostream& os, const ShadowDataset& data,
                        const ArtifactStamp* stamp = nullptr);
ShadowDataset read_shots_binary(std::istream& is, ArtifactStamp* stamp = nullptr);

/// Columns: time_index,init,basis,outcome with labels like "+X-Z", "ZY", "01".
/// `# qubits=` and `# times=` header lines carry the dataset shape.
void write_shots_csv(std::ostream& os, const ShadowDataset& data,
                     const ArtifactStamp* stamp = nullptr);
ShadowDataset read_shots_csv(std::istream& is);

struct EstimateRecord {
  std::string label;
  double slope = 0.0;
  double stderr = 0.0;
  double magnitude = 0.0;
  double q16 = 0.0;
  double q84 = 0.0;
  std::string method;
  double chi2_dof = 0.0;
};

/// One row per parameter slot. Columns:
/// label,slope,stderr,magnitude,q16,q84,method,chi2_dof.
void write_estimates(std::ostream& os, const ParameterEstimates& e,
                     const ArtifactStamp* stamp = nullptr);
std::vector<EstimateRecord> read_estimates(std::istream& is);
std::vector<EstimateRecord> estimate_records(const ParameterEstimates& e);

/// Grouped terms (complex D entries on one row).
/// Columns: label,kind,real,imag,stderr,magnitude,q16,q84,unequal_errors.
void write_terms(std::ostream& os, const ParameterEstimates& e,
                 const ArtifactStamp* stamp = nullptr);

/// PTM elements the inversion map needs. Columns: probe,output,input.
void write_needed_pairs(std::ostream& os, const SltAnalysis& a);

}  // namespace lindtomo
