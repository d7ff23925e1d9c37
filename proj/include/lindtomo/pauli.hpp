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

#include <complex>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace lindtomo {

using Complex = std::complex<double>;

/// Single-site Pauli letter. The numeric codes fix the enumeration order
/// I < X < Y < Z used for every vector and matrix index in the library.
enum class Pauli : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

char to_char(Pauli p);
Pauli pauli_from_char(char c);

/// Largest qubit count representable by PauliString.
inline constexpr int kMaxQubits = 16;

/// Default cap on n for dense 2^n x 2^n realizations.
inline constexpr int kDenseCap = 5;

/// Tensor product of n single-site Paulis, packed as X/Z bit masks.
///
/// Site 0 is the leftmost letter of the textual form and the most
/// significant digit of index(); it maps to bit (n-1) of the masks and to
/// the most significant bit of computational-basis indices.
class PauliString {
 public:
  PauliString() = default;
  explicit PauliString(int n);

  static PauliString parse(std::string_view text);
  static PauliString from_index(int n, std::uint64_t index);
  static PauliString from_masks(int n, std::uint32_t x, std::uint32_t z);

  int size() const { return n_; }
  Pauli at(int site) const;
  void set(int site, Pauli p);

  std::uint32_t x_mask() const { return x_; }
  std::uint32_t z_mask() const { return z_; }
  std::uint32_t support_mask() const { return x_ | z_; }
  int y_count() const;

  int weight() const;
  bool is_identity() const { return (x_ | z_) == 0; }
  bool commutes_with(const PauliString& other) const;

  /// Position in the lexicographic enumeration of {I,X,Y,Z}^n.
  std::uint64_t index() const;
  std::string str() const;

  friend bool operator==(const PauliString&, const PauliString&) = default;
  friend std::strong_ordering operator<=>(const PauliString& a,
                                          const PauliString& b);

 private:
  int n_ = 0;
  std::uint32_t x_ = 0;
  std::uint32_t z_ = 0;
};

/// Pauli string with a phase i^power, power in {0,1,2,3}.
struct PhasedPauli {
  int power = 0;
  PauliString string;

  Complex phase() const;
};

/// Exact product a*b with phase tracking.
PhasedPauli multiply(const PauliString& a, const PauliString& b);
PhasedPauli multiply(const PhasedPauli& a, const PhasedPauli& b);

int weight(const PauliString& p);

/// Qubit positions carrying a non-identity letter, ascending.
std::vector<int> support(const PauliString& p);

/// All 4^n strings in index order.
std::vector<PauliString> enumerate_paulis(int n);

/// Number of Pauli strings 4^n.
std::uint64_t pauli_count(int n);

/// Action on computational basis states: P|b> = phase(b) |b ^ x_mask>.
Complex basis_phase(const PauliString& p, std::uint32_t b);

Eigen::MatrixXcd to_matrix(const PauliString& p, int cap = kDenseCap);

/// (1/2^n) Tr(P m).
Complex hilbert_schmidt(const PauliString& p, const Eigen::MatrixXcd& m);

}  // namespace lindtomo
