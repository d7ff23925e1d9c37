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

#include "lindtomo/dynamics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "lindtomo/error.hpp"

namespace lindtomo {
namespace {

constexpr Complex kI{0.0, 1.0};

// Pauli index of every sub-product of a full-weight string, keyed by the
// site mask (bit j of the mask is site n-1-j).
std::vector<std::uint32_t> subset_indices(const PauliString& s) {
  const int n = s.size();
  std::vector<std::uint32_t> idx(std::size_t{1} << n, 0);
  for (std::uint32_t u = 1; u < idx.size(); ++u) {
    const int j = std::countr_zero(u);
    const auto code = static_cast<std::uint32_t>(s.at(n - 1 - j));
    idx[u] = idx[u & (u - 1)] + (code << (2 * j));
  }
  return idx;
}

void require_full_weight(const PauliString& s, const char* what) {
  if (s.weight() != s.size())
    throw DomainError(std::string(what) + " letters must be X, Y or Z on every qubit");
}

Eigen::MatrixXd gather_weights(const Eigen::MatrixXd& ptm, const PauliString& letters,
                               const PauliString& basis) {
  const int n = letters.size();
  if (basis.size() != n) throw DimensionError("basis and preparation sizes differ");
  if (ptm.rows() != static_cast<Eigen::Index>(pauli_count(n)) || ptm.cols() != ptm.rows())
    throw DimensionError("PTM size does not match qubit count");
  require_full_weight(letters, "preparation");
  require_full_weight(basis, "measurement basis");
  const auto in = subset_indices(letters);
  const auto out = subset_indices(basis);
  const auto k = static_cast<Eigen::Index>(in.size());
  Eigen::MatrixXd w(k, k);
  for (Eigen::Index u = 0; u < k; ++u)
    for (Eigen::Index t = 0; t < k; ++t) w(u, t) = ptm(out[u], in[t]);
  return w;
}

// e_U = sum_T (prod_{k in T} c_k) w(U, T), with c_k the per-site sign factor.
std::vector<double> expectations_from_weights(const Eigen::MatrixXd& w,
                                              std::span<const double> site_factor) {
  const auto k = static_cast<std::size_t>(w.rows());
  std::vector<double> coeff(k, 1.0);
  for (std::uint32_t t = 1; t < k; ++t) {
    const int j = std::countr_zero(t);
    coeff[t] = coeff[t & (t - 1)] * site_factor[j];
  }
  std::vector<double> e(k, 0.0);
  for (std::size_t u = 0; u < k; ++u) {
    double acc = 0.0;
    for (std::size_t t = 0; t < k; ++t) acc += coeff[t] * w(u, t);
    e[u] = acc;
  }
  return e;
}

std::vector<double> sign_factors(int n, std::uint32_t negative) {
  std::vector<double> f(n);
  for (int j = 0; j < n; ++j) f[j] = ((negative >> j) & 1U) ? -1.0 : 1.0;
  return f;
}

std::vector<double> distribution_from_expectations(std::vector<double> e) {
  walsh_hadamard(e);
  const double scale = 1.0 / static_cast<double>(e.size());
  for (auto& p : e) p *= scale;
  return e;
}

void check_density(const Eigen::MatrixXcd& rho, int n) {
  const Eigen::Index dim = Eigen::Index{1} << n;
  if (rho.rows() != dim || rho.cols() != dim)
    throw DimensionError("density matrix is not 2^n x 2^n");
  constexpr double tol = 1e-9;
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > tol)
    throw ContractViolation("initial state is not Hermitian");
  if (std::abs(rho.trace() - Complex(1.0, 0.0)) > tol)
    throw ContractViolation("initial state does not have unit trace");
  const Eigen::MatrixXcd h = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(h, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -tol)
    throw ContractViolation("initial state is not positive semidefinite");
}

}  // namespace

void walsh_hadamard(std::span<double> v) {
  const std::size_t len = v.size();
  if (len == 0 || (len & (len - 1)) != 0) throw DimensionError("WHT length must be 2^k");
  for (std::size_t h = 1; h < len; h <<= 1)
    for (std::size_t i = 0; i < len; i += 2 * h)
      for (std::size_t j = i; j < i + h; ++j) {
        const double a = v[j];
        const double b = v[j + h];
        v[j] = a + b;
        v[j + h] = a - b;
      }
}

Eigen::VectorXcd vectorize(const Eigen::MatrixXcd& op) {
  return Eigen::Map<const Eigen::VectorXcd>(op.data(), op.size());
}

Eigen::MatrixXcd unvectorize(const Eigen::VectorXcd& v) {
  const auto dim = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
  if (dim * dim != v.size()) throw DimensionError("vector length is not a square");
  return Eigen::Map<const Eigen::MatrixXcd>(v.data(), dim, dim);
}

Eigen::MatrixXcd Superoperator::apply(const Eigen::MatrixXcd& op) const {
  if (op.size() != matrix.cols()) throw DimensionError("operator does not match superoperator");
  return unvectorize(matrix * vectorize(op));
}

Superoperator build_superoperator(const LindbladModel& m, int cap) {
  const int n = m.qubits();
  if (n > cap) throw CapacityError("superoperator requested above dense cap");
  const Eigen::Index dim = Eigen::Index{1} << n;
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(dim, dim);
  Superoperator s{n, Eigen::MatrixXcd::Zero(dim * dim, dim * dim)};
  const ModelTemplate& t = m.model_template();

  // vec(A X B) = (B^T kron A) vec(X).
  const auto coherent = t.coherent_terms();
  for (std::size_t k = 0; k < coherent.size(); ++k) {
    const double a = m.coherent()[static_cast<Eigen::Index>(k)];
    if (a == 0.0) continue;
    const Eigen::MatrixXcd p = to_matrix(PauliString::from_index(n, coherent[k]), cap);
    s.matrix += (-kI * a) * (Eigen::kroneckerProduct(id, p) -
                             Eigen::kroneckerProduct(p.transpose(), id))
                                .eval();
  }
  const auto basis = t.dissipative_basis();
  std::vector<Eigen::MatrixXcd> mats;
  for (auto b : basis) mats.push_back(to_matrix(PauliString::from_index(n, b), cap));
  Eigen::MatrixXcd anti = Eigen::MatrixXcd::Zero(dim, dim);
  const Eigen::MatrixXcd& d = m.dissipation();
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
      if (d(i, j) == Complex{}) continue;
      s.matrix += d(i, j) * Eigen::kroneckerProduct(mats[j].transpose(), mats[i]).eval();
      anti += d(i, j) * mats[j] * mats[i];
    }
  s.matrix -= 0.5 * (Eigen::kroneckerProduct(id, anti) +
                     Eigen::kroneckerProduct(anti.transpose(), id))
                        .eval();
  return s;
}

Eigen::MatrixXcd propagate_operator(const Superoperator& s, const Eigen::MatrixXcd& op, double t) {
  if (t < 0.0) throw DomainError("propagation time must be non-negative");
  if (op.size() != s.matrix.cols()) throw DimensionError("operator does not match superoperator");
  if (t == 0.0) return op;
  const Eigen::MatrixXcd e = (t * s.matrix).exp();
  return unvectorize(e * vectorize(op));
}

Eigen::MatrixXcd propagate(const Superoperator& s, const Eigen::MatrixXcd& rho0, double t) {
  if (t < 0.0) throw DomainError("propagation time must be non-negative");
  check_density(rho0, s.n);
  return propagate_operator(s, rho0, t);
}

Eigen::MatrixXcd propagate(const LindbladModel& m, const Eigen::MatrixXcd& rho0, double t) {
  if (t < 0.0) throw DomainError("propagation time must be non-negative");
  return propagate(build_superoperator(m), rho0, t);
}

double exact_ptm_element(const LindbladModel& m, const PauliString& p, const PauliString& q,
                         double t) {
  if (p.size() != m.qubits() || q.size() != m.qubits())
    throw DimensionError("Pauli strings do not match model size");
  const Superoperator s = build_superoperator(m);
  const Eigen::MatrixXcd img = propagate_operator(s, to_matrix(q), t);
  return hilbert_schmidt(p, img).real();
}

Eigen::MatrixXd pauli_transfer_matrix(const LindbladModel& m, double t) {
  if (t < 0.0) throw DomainError("propagation time must be non-negative");
  const Eigen::MatrixXd g = pauli_generator(m);
  if (t == 0.0) return Eigen::MatrixXd::Identity(g.rows(), g.cols());
  return (t * g).exp();
}

PropagatorCache::PropagatorCache(LindbladModel m)
    : model_(std::move(m)), generator_(pauli_generator(model_)) {}

std::shared_ptr<const Eigen::MatrixXd> PropagatorCache::ptm(double t) const {
  if (t < 0.0) throw DomainError("propagation time must be non-negative");
  std::lock_guard lock(mutex_);
  auto it = entries_.find(t);
  if (it != entries_.end()) return it->second;
  auto r = std::make_shared<Eigen::MatrixXd>(
      t == 0.0 ? Eigen::MatrixXd::Identity(generator_.rows(), generator_.cols())
               : Eigen::MatrixXd((t * generator_).exp()));
  entries_.emplace(t, r);
  return r;
}

std::size_t PropagatorCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

NoiseModel NoiseModel::ideal(int n) { return uniform(n, 0.0, 0.0, 0.0); }

NoiseModel NoiseModel::uniform(int n, double p1_given_0, double p0_given_1, double thermal) {
  Eigen::Matrix2d c;
  c << 1.0 - p1_given_0, p1_given_0, p0_given_1, 1.0 - p0_given_1;
  NoiseModel noise{std::vector<Eigen::Matrix2d>(n, c), std::vector<double>(n, thermal)};
  noise.validate();
  return noise;
}

bool NoiseModel::is_ideal() const {
  for (const auto& c : confusion)
    if (c(0, 1) != 0.0 || c(1, 0) != 0.0) return false;
  for (double p : thermal_population)
    if (p != 0.0) return false;
  return true;
}

void NoiseModel::validate() const {
  if (thermal_population.size() != confusion.size())
    throw ContractViolation("noise model has mismatched per-qubit lists");
  for (const auto& c : confusion) {
    for (int r = 0; r < 2; ++r) {
      if (c(r, 0) < 0 || c(r, 0) > 1 || c(r, 1) < 0 || c(r, 1) > 1)
        throw ContractViolation("confusion entries must lie in [0, 1]");
      if (std::abs(c(r, 0) + c(r, 1) - 1.0) > 1e-12)
        throw ContractViolation("confusion rows must sum to 1");
    }
  }
  for (double p : thermal_population)
    if (!(p >= 0.0 && p < 0.5)) throw ContractViolation("thermal population must be in [0, 0.5)");
}

int ProductState::sign(int site) const {
  const int n = letters.size();
  return ((negative >> (n - 1 - site)) & 1U) ? -1 : 1;
}

std::string ProductState::label() const {
  std::string out;
  for (int k = 0; k < letters.size(); ++k) {
    out += sign(k) < 0 ? '-' : '+';
    out += to_char(letters.at(k));
  }
  return out;
}

ProductState ProductState::parse(std::string_view label) {
  if (label.empty() || label.size() % 2 != 0)
    throw DomainError("state label must be sign/letter pairs, got '" + std::string(label) + "'");
  const int n = static_cast<int>(label.size() / 2);
  ProductState s{PauliString(n), 0};
  for (int k = 0; k < n; ++k) {
    const char sign = label[2 * k];
    if (sign != '+' && sign != '-') throw DomainError("state label sign must be + or -");
    const Pauli p = pauli_from_char(label[2 * k + 1]);
    if (p == Pauli::I) throw DomainError("state label letters must be X, Y or Z");
    s.letters.set(k, p);
    if (sign == '-') s.negative |= 1U << (n - 1 - k);
  }
  return s;
}

Eigen::MatrixXcd product_density(const ProductState& s) {
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Identity(1, 1);
  for (int k = 0; k < s.qubits(); ++k) {
    PauliString one(1);
    one.set(0, s.letters.at(k));
    const Eigen::MatrixXcd local =
        0.5 * (Eigen::MatrixXcd::Identity(2, 2) + static_cast<double>(s.sign(k)) * to_matrix(one));
    rho = Eigen::kroneckerProduct(rho, local).eval();
  }
  return rho;
}

std::vector<int> ShotOutcome::bit_vector() const {
  std::vector<int> out(n);
  for (int k = 0; k < n; ++k) out[k] = bit(k);
  return out;
}

std::vector<int> ShotOutcome::sign_vector() const {
  std::vector<int> out(n);
  for (int k = 0; k < n; ++k) out[k] = sign(k);
  return out;
}

std::vector<double> subset_expectations(const Eigen::MatrixXd& ptm, const ProductState& init,
                                        const PauliString& basis) {
  const Eigen::MatrixXd w = gather_weights(ptm, init.letters, basis);
  const auto f = sign_factors(init.qubits(), init.negative);
  return expectations_from_weights(w, f);
}

std::vector<double> outcome_distribution(const Eigen::MatrixXd& ptm, const ProductState& init,
                                         const PauliString& basis, const NoiseModel& noise) {
  const int n = init.qubits();
  if (noise.qubits() != n) throw DimensionError("noise model size does not match state");
  const Eigen::MatrixXd w = gather_weights(ptm, init.letters, basis);
  auto f = sign_factors(n, init.negative);
  // Thermal flips enter linearly per site: E[s_k] = (1 - 2 p_k) s_k.
  for (int j = 0; j < n; ++j) f[j] *= 1.0 - 2.0 * noise.thermal_population[n - 1 - j];
  auto p = distribution_from_expectations(expectations_from_weights(w, f));
  for (int j = 0; j < n; ++j) {
    const Eigen::Matrix2d& c = noise.confusion[n - 1 - j];
    const std::size_t bit = std::size_t{1} << j;
    for (std::size_t b = 0; b < p.size(); ++b) {
      if (b & bit) continue;
      const double p0 = p[b];
      const double p1 = p[b | bit];
      p[b] = p0 * c(0, 0) + p1 * c(1, 0);
      p[b | bit] = p0 * c(0, 1) + p1 * c(1, 1);
    }
  }
  return p;
}

SettingSampler::SettingSampler(const Eigen::MatrixXd& ptm, const PauliString& letters,
                               const PauliString& basis, const NoiseModel& noise)
    : n_(letters.size()), noise_(&noise), weights_(gather_weights(ptm, letters, basis)),
      cdfs_(std::size_t{1} << letters.size()) {
  if (noise.qubits() != n_) throw DimensionError("noise model size does not match state");
  for (double p : noise.thermal_population) thermal_on_ = thermal_on_ || p > 0.0;
  for (const auto& c : noise.confusion) confusion_on_ = confusion_on_ || c(0, 1) > 0 || c(1, 0) > 0;
}

std::vector<double> SettingSampler::probabilities(std::uint32_t negative) const {
  return distribution_from_expectations(
      expectations_from_weights(weights_, sign_factors(n_, negative)));
}

const std::vector<double>& SettingSampler::cdf(std::uint32_t negative) {
  auto& c = cdfs_[negative];
  if (c.empty()) {
    c = probabilities(negative);
    double acc = 0.0;
    for (auto& p : c) {
      acc += std::max(p, 0.0);
      p = acc;
    }
  }
  return c;
}

ShotOutcome SettingSampler::sample(std::uint32_t negative, Stream& rng) {
  std::uint32_t prepared = negative;
  if (thermal_on_) {
    for (int k = 0; k < n_; ++k)
      if (rng.uniform() < noise_->thermal_population[k]) prepared ^= 1U << (n_ - 1 - k);
  }
  const auto& c = cdf(prepared);
  const double u = rng.uniform() * c.back();
  auto it = std::upper_bound(c.begin(), c.end(), u);
  if (it == c.end()) --it;
  auto bits = static_cast<std::uint32_t>(it - c.begin());
  if (confusion_on_) {
    for (int k = 0; k < n_; ++k) {
      const std::uint32_t mask = 1U << (n_ - 1 - k);
      const Eigen::Matrix2d& m = noise_->confusion[k];
      const double flip = (bits & mask) ? m(1, 0) : m(0, 1);
      if (rng.uniform() < flip) bits ^= mask;
    }
  }
  return {n_, bits};
}

ShotOutcome sample_shot(const LindbladModel& m, const ProductState& init, double t,
                        const PauliString& basis, const NoiseModel& noise, Stream& rng) {
  if (init.qubits() != m.qubits()) throw DimensionError("state size does not match model");
  SettingSampler sampler(pauli_transfer_matrix(m, t), init.letters, basis, noise);
  return sampler.sample(init.negative, rng);
}

double apply_spam_to_expectation(const NoiseModel& noise, int qubit, double value) {
  const Eigen::Matrix2d& c = noise.confusion.at(static_cast<std::size_t>(qubit));
  return (1.0 - c(0, 1) - c(1, 0)) * value + (c(1, 0) - c(0, 1));
}

double invert_spam_expectation(const NoiseModel& noise, int qubit, double value) {
  const Eigen::Matrix2d& c = noise.confusion.at(static_cast<std::size_t>(qubit));
  const double contraction = 1.0 - c(0, 1) - c(1, 0);
  if (std::abs(contraction) < 1e-12) throw DomainError("confusion matrix is singular");
  return (value - (c(1, 0) - c(0, 1))) / contraction;
}

}  // namespace lindtomo
