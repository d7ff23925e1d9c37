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

#include "lindtomo/pauli.hpp"

#include <bit>

#include "lindtomo/error.hpp"

namespace lindtomo {
namespace {

constexpr Complex kIPowers[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};

std::uint32_t site_bit(int n, int site) { return 1u << (n - 1 - site); }

void check_qubits(int n) {
  if (n < 0 || n > kMaxQubits) {
    throw CapacityError("PauliString supports 0.." + std::to_string(kMaxQubits) +
                        " qubits, got " + std::to_string(n));
  }
}

}  // namespace

char to_char(Pauli p) {
  static constexpr char kLetters[4] = {'I', 'X', 'Y', 'Z'};
  return kLetters[static_cast<int>(p)];
}

Pauli pauli_from_char(char c) {
  switch (c) {
    case 'I': return Pauli::I;
    case 'X': return Pauli::X;
    case 'Y': return Pauli::Y;
    case 'Z': return Pauli::Z;
    default:
      throw DomainError(std::string("invalid Pauli letter '") + c + "'");
  }
}

PauliString::PauliString(int n) : n_(n) { check_qubits(n); }

PauliString PauliString::parse(std::string_view text) {
  PauliString p(static_cast<int>(text.size()));
  for (int k = 0; k < p.n_; ++k) p.set(k, pauli_from_char(text[k]));
  return p;
}

PauliString PauliString::from_index(int n, std::uint64_t index) {
  PauliString p(n);
  for (int k = n - 1; k >= 0; --k) {
    p.set(k, static_cast<Pauli>(index & 3u));
    index >>= 2;
  }
  if (index != 0) throw DomainError("Pauli index out of range for n");
  return p;
}

PauliString PauliString::from_masks(int n, std::uint32_t x, std::uint32_t z) {
  PauliString p(n);
  const std::uint32_t full = n == 32 ? ~0u : ((1u << n) - 1u);
  if ((x | z) & ~full) throw DomainError("Pauli masks exceed qubit count");
  p.x_ = x;
  p.z_ = z;
  return p;
}

Pauli PauliString::at(int site) const {
  const std::uint32_t bit = site_bit(n_, site);
  const bool x = x_ & bit;
  const bool z = z_ & bit;
  if (x && z) return Pauli::Y;
  if (x) return Pauli::X;
  if (z) return Pauli::Z;
  return Pauli::I;
}

void PauliString::set(int site, Pauli p) {
  if (site < 0 || site >= n_) throw DimensionError("site out of range");
  const std::uint32_t bit = site_bit(n_, site);
  x_ &= ~bit;
  z_ &= ~bit;
  if (p == Pauli::X || p == Pauli::Y) x_ |= bit;
  if (p == Pauli::Z || p == Pauli::Y) z_ |= bit;
}

int PauliString::y_count() const { return std::popcount(x_ & z_); }

int PauliString::weight() const { return std::popcount(x_ | z_); }

bool PauliString::commutes_with(const PauliString& other) const {
  if (other.n_ != n_) throw DimensionError("Pauli size mismatch");
  return ((std::popcount(x_ & other.z_) + std::popcount(z_ & other.x_)) & 1) == 0;
}

std::uint64_t PauliString::index() const {
  std::uint64_t idx = 0;
  for (int k = 0; k < n_; ++k) idx = (idx << 2) | static_cast<std::uint64_t>(at(k));
  return idx;
}

std::string PauliString::str() const {
  std::string s(static_cast<std::size_t>(n_), 'I');
  for (int k = 0; k < n_; ++k) s[k] = to_char(at(k));
  return s;
}

std::strong_ordering operator<=>(const PauliString& a, const PauliString& b) {
  if (auto c = a.n_ <=> b.n_; c != 0) return c;
  return a.index() <=> b.index();
}

Complex PhasedPauli::phase() const { return kIPowers[power & 3]; }

PhasedPauli multiply(const PauliString& a, const PauliString& b) {
  if (a.size() != b.size()) throw DimensionError("Pauli size mismatch in multiply");
  // P = i^{#Y} X^x Z^z sitewise; moving Z^{za} past X^{xb} costs (-1)^{za.xb}.
  const auto c = PauliString::from_masks(a.size(), a.x_mask() ^ b.x_mask(),
                                         a.z_mask() ^ b.z_mask());
  int power = a.y_count() + b.y_count() - c.y_count() +
              2 * std::popcount(a.z_mask() & b.x_mask());
  return {((power % 4) + 4) % 4, c};
}

PhasedPauli multiply(const PhasedPauli& a, const PhasedPauli& b) {
  PhasedPauli r = multiply(a.string, b.string);
  r.power = (r.power + a.power + b.power) & 3;
  return r;
}

int weight(const PauliString& p) { return p.weight(); }

std::vector<int> support(const PauliString& p) {
  std::vector<int> sites;
  for (int k = 0; k < p.size(); ++k)
    if (p.at(k) != Pauli::I) sites.push_back(k);
  return sites;
}

std::uint64_t pauli_count(int n) { return std::uint64_t{1} << (2 * n); }

std::vector<PauliString> enumerate_paulis(int n) {
  std::vector<PauliString> all;
  all.reserve(pauli_count(n));
  for (std::uint64_t i = 0; i < pauli_count(n); ++i)
    all.push_back(PauliString::from_index(n, i));
  return all;
}

Complex basis_phase(const PauliString& p, std::uint32_t b) {
  int power = p.y_count() + 2 * std::popcount(p.z_mask() & b);
  return kIPowers[power & 3];
}

Eigen::MatrixXcd to_matrix(const PauliString& p, int cap) {
  if (p.size() > cap)
    throw CapacityError("dense Pauli matrix requested for n=" +
                        std::to_string(p.size()) + " above cap " +
                        std::to_string(cap));
  const std::uint32_t dim = 1u << p.size();
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
  for (std::uint32_t b = 0; b < dim; ++b) m(b ^ p.x_mask(), b) = basis_phase(p, b);
  return m;
}

Complex hilbert_schmidt(const PauliString& p, const Eigen::MatrixXcd& m) {
  const std::uint32_t dim = 1u << p.size();
  if (m.rows() != dim || m.cols() != dim)
    throw DimensionError("hilbert_schmidt: matrix is not 2^n x 2^n");
  Complex tr = 0;
  for (std::uint32_t c = 0; c < dim; ++c) tr += basis_phase(p, c) * m(c, c ^ p.x_mask());
  return tr / static_cast<double>(dim);
}

}  // namespace lindtomo
