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

#include <doctest.h>

#include <cmath>
#include <random>

#include <unsupported/Eigen/KroneckerProduct>

#include "lindtomo/dynamics.hpp"
#include "lindtomo/error.hpp"
#include "support/test_util.hpp"

using namespace lindtomo;
using lindtomo::testing::make_template;
using lindtomo::testing::random_density;
using lindtomo::testing::random_matrix;
using lindtomo::testing::random_model;

namespace {

TemplatePtr full1() { return make_template(ModelTemplate::full(1)); }

LindbladModel amplitude_damping(double gamma) {
  return ModelBuilder(full1())
      .dissipation("X", "X", gamma / 4)
      .dissipation("Y", "Y", gamma / 4)
      .dissipation("X", "Y", Complex(0, -gamma / 4))
      .build();
}

// Born probabilities by dense propagation and explicit projectors.
std::vector<double> dense_probabilities(const LindbladModel& m, const ProductState& init,
                                        const PauliString& basis, double t) {
  const int n = m.qubits();
  const Eigen::MatrixXcd rho = propagate(m, product_density(init), t);
  std::vector<double> p(std::size_t{1} << n);
  for (std::uint32_t b = 0; b < p.size(); ++b) {
    Eigen::MatrixXcd proj = Eigen::MatrixXcd::Identity(1, 1);
    for (int k = 0; k < n; ++k) {
      PauliString one(1);
      one.set(0, basis.at(k));
      const double s = ((b >> (n - 1 - k)) & 1U) ? -1.0 : 1.0;
      proj = Eigen::kroneckerProduct(proj, (0.5 * (Eigen::MatrixXcd::Identity(2, 2) + s * to_matrix(one))).eval()).eval();
    }
    p[b] = (proj * rho).trace().real();
  }
  return p;
}

ProductState random_state(int n, std::mt19937_64& gen) {
  ProductState s{PauliString(n), 0};
  for (int k = 0; k < n; ++k) s.letters.set(k, static_cast<Pauli>(1 + gen() % 3));
  s.negative = static_cast<std::uint32_t>(gen() % (1U << n));
  return s;
}

PauliString random_basis(int n, std::mt19937_64& gen) {
  PauliString b(n);
  for (int k = 0; k < n; ++k) b.set(k, static_cast<Pauli>(1 + gen() % 3));
  return b;
}

}  // namespace

TEST_CASE("superoperator of the zero model vanishes") {
  const auto s = build_superoperator(LindbladModel(full1()));
  CHECK(s.matrix.rows() == 4);
  CHECK(s.matrix.norm() == 0.0);
}

TEST_CASE("dephasing superoperator spectrum") {
  const double g = 0.3;
  const auto s = build_superoperator(ModelBuilder(full1()).dissipation("Z", "Z", g).build());
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> eig(s.matrix);
  std::vector<double> ev;
  for (auto v : eig.eigenvalues()) {
    CHECK(std::abs(v.imag()) < 1e-14);
    ev.push_back(v.real());
  }
  std::sort(ev.begin(), ev.end());
  CHECK(ev[0] == doctest::Approx(-2 * g));
  CHECK(ev[1] == doctest::Approx(-2 * g));
  CHECK(std::abs(ev[2]) < 1e-14);
  CHECK(std::abs(ev[3]) < 1e-14);
}

TEST_CASE("superoperator agrees with apply_generator") {
  std::mt19937_64 gen(4);
  for (int n = 1; n <= 2; ++n) {
    auto t = make_template(ModelTemplate::full(n));
    const auto m = random_model(t, gen, 1.0, false);
    const auto s = build_superoperator(m);
    for (int k = 0; k < 20; ++k) {
      const auto op = random_matrix(n, gen);
      CHECK((s.apply(op) - apply_generator(m, op)).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  auto t6 = make_template(ModelTemplate::local(6, 1));
  CHECK_THROWS_AS(build_superoperator(LindbladModel(t6)), CapacityError);
}

TEST_CASE("propagation closed forms") {
  std::mt19937_64 gen(1);
  const auto m = random_model(full1(), gen);
  const auto rho0 = random_density(1, gen);
  CHECK(propagate(m, rho0, 0.0) == rho0);
  CHECK_THROWS_AS(propagate(m, rho0, -1.0), DomainError);

  const double gamma = 0.02;
  const auto ad = amplitude_damping(gamma);
  const auto one = product_density(ProductState::parse("-Z"));
  for (double t : {0.5, 10.0, 50.0}) {
    const auto rho = propagate(ad, one, t);
    const double z = hilbert_schmidt(PauliString::parse("Z"), rho).real() * 2;
    CHECK(z == doctest::Approx(1 - 2 * std::exp(-gamma * t)).epsilon(1e-12));
  }
  const double g = 0.1;
  const auto deph = ModelBuilder(full1()).dissipation("Z", "Z", g).build();
  const auto plus = product_density(ProductState::parse("+X"));
  for (double t : {0.1, 3.0}) {
    const double x = 2 * hilbert_schmidt(PauliString::parse("X"), propagate(deph, plus, t)).real();
    CHECK(x == doctest::Approx(std::exp(-2 * g * t)).epsilon(1e-12));
    CHECK(exact_ptm_element(deph, PauliString::parse("X"), PauliString::parse("X"), t) ==
          doctest::Approx(std::exp(-2 * g * t)).epsilon(1e-12));
  }
}

TEST_CASE("propagation preserves trace and Hermiticity") {
  std::mt19937_64 gen(17);
  for (int k = 0; k < 50; ++k) {
    const int n = 1 + k % 3;
    auto t = make_template(n < 3 ? ModelTemplate::full(n) : ModelTemplate::local(3, 2));
    const auto m = random_model(t, gen);
    const auto rho = propagate(m, random_density(n, gen), 0.1 + (gen() % 100) / 50.0);
    CHECK(std::abs(rho.trace() - Complex(1, 0)) < 1e-10);
    CHECK((rho - rho.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("semigroup property") {
  std::mt19937_64 gen(8);
  for (int k = 0; k < 10; ++k) {
    const int n = 1 + k % 2;
    const auto m = random_model(make_template(ModelTemplate::full(n)), gen);
    const auto rho = random_density(n, gen);
    const double t1 = 0.3 + 0.1 * k;
    const double t2 = 0.7;
    const auto a = propagate(m, propagate(m, rho, t1), t2);
    const auto b = propagate(m, rho, t1 + t2);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("PTM at t = 0 is the identity, exhaustively") {
  std::mt19937_64 gen(2);
  for (int n = 1; n <= 2; ++n) {
    const auto m = random_model(make_template(ModelTemplate::full(n)), gen);
    for (const auto& p : enumerate_paulis(n))
      for (const auto& q : enumerate_paulis(n))
        CHECK(exact_ptm_element(m, p, q, 0.0) == (p == q ? 1.0 : 0.0));
  }
}

TEST_CASE("PTM route agrees with dense propagation") {
  std::mt19937_64 gen(13);
  for (int n = 1; n <= 3; ++n) {
    auto t = make_template(n < 3 ? ModelTemplate::full(n) : ModelTemplate::local(3, 2));
    const auto m = random_model(t, gen);
    PropagatorCache cache(m);
    const auto r = cache.ptm(0.8);
    CHECK(cache.ptm(0.8) == r);
    CHECK(cache.size() == 1);
    for (int k = 0; k < 10; ++k) {
      const auto p = PauliString::from_index(n, gen() % pauli_count(n));
      const auto q = PauliString::from_index(n, gen() % pauli_count(n));
      CHECK((*r)(p.index(), q.index()) == doctest::Approx(exact_ptm_element(m, p, q, 0.8)).epsilon(1e-10));
    }
    // Exact outcome distribution against explicit projectors.
    const auto init = random_state(n, gen);
    const auto basis = random_basis(n, gen);
    const auto a = outcome_distribution(*r, init, basis, NoiseModel::ideal(n));
    const auto b = dense_probabilities(m, init, basis, 0.8);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-10));
    CHECK((*r)(0, 0) == doctest::Approx(1.0));
  }
}

TEST_CASE("sample_shot examples") {
  const auto zero1 = LindbladModel(full1());
  auto rng = Stream::derive(1, StreamDomain::kTest);
  for (int k = 0; k < 100; ++k)
    CHECK(sample_shot(zero1, ProductState::parse("+Z"), 3.0, PauliString::parse("Z"),
                      NoiseModel::ideal(1), rng).bits == 0);
  const auto zero3 = LindbladModel(make_template(ModelTemplate::local(3, 1)));
  const auto sampler_ptm = pauli_transfer_matrix(zero3, 1.0);
  const auto noise3 = NoiseModel::ideal(3);
  SettingSampler s3(sampler_ptm, PauliString::parse("ZZZ"), PauliString::parse("ZZZ"), noise3);
  for (int k = 0; k < 100; ++k) CHECK(s3.sample(0, rng).bits == 0);

  const auto ptm1 = pauli_transfer_matrix(zero1, 1.0);
  const auto ideal = NoiseModel::ideal(1);
  SettingSampler sx(ptm1, PauliString::parse("X"), PauliString::parse("Z"), ideal);
  int ones = 0;
  const int shots = 100000;
  for (int k = 0; k < shots; ++k) ones += static_cast<int>(sx.sample(0, rng).bits);
  CHECK(std::abs(ones / double(shots) - 0.5) < 4 * std::sqrt(0.25 / shots));

  const auto noisy = NoiseModel::uniform(1, 0.1, 0.0, 0.0);
  SettingSampler sz(ptm1, PauliString::parse("Z"), PauliString::parse("Z"), noisy);
  ones = 0;
  for (int k = 0; k < shots; ++k) ones += static_cast<int>(sz.sample(0, rng).bits);
  CHECK(std::abs(ones / double(shots) - 0.1) < 0.01);

  CHECK_THROWS_AS(SettingSampler(ptm1, PauliString::parse("I"), PauliString::parse("Z"), ideal),
                  DomainError);
}

TEST_CASE("shot outcome sign convention") {
  ShotOutcome o{3, 0b101};
  CHECK(o.bit_vector() == std::vector<int>{1, 0, 1});
  CHECK(o.sign_vector() == std::vector<int>{-1, 1, -1});
}

TEST_CASE("Born sampling matches exact probabilities") {
  std::mt19937_64 gen(99);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 1 + trial % 2;
    const auto m = random_model(make_template(ModelTemplate::full(n)), gen);
    const auto init = random_state(n, gen);
    const auto basis = random_basis(n, gen);
    const auto noise = NoiseModel::ideal(n);
    const auto ptm = pauli_transfer_matrix(m, 0.5);
    const auto exact = dense_probabilities(m, init, basis, 0.5);
    SettingSampler sampler(ptm, init.letters, basis, noise);
    std::vector<int> counts(exact.size(), 0);
    const int shots = 100000;
    for (int k = 0; k < shots; ++k) {
      auto rng = Stream::derive(trial, StreamDomain::kTest, 0, k);
      ++counts[sampler.sample(init.negative, rng).bits];
    }
    for (std::size_t b = 0; b < exact.size(); ++b) {
      const double se = std::sqrt(exact[b] * (1 - exact[b]) / shots);
      CHECK(std::abs(counts[b] / double(shots) - exact[b]) <= 4 * se + 1e-12);
    }
  }
}

TEST_CASE("noisy distribution equals explicit mixture, and sampling follows it") {
  std::mt19937_64 gen(5);
  const int n = 2;
  const auto m = random_model(make_template(ModelTemplate::full(n)), gen);
  NoiseModel noise = NoiseModel::ideal(n);
  noise.thermal_population = {0.05, 0.2};
  noise.confusion[0] << 0.97, 0.03, 0.08, 0.92;
  noise.confusion[1] << 0.9, 0.1, 0.02, 0.98;
  noise.validate();
  const auto init = random_state(n, gen);
  const auto basis = random_basis(n, gen);
  const auto ptm = pauli_transfer_matrix(m, 0.4);

  std::vector<double> oracle(4, 0.0);
  for (std::uint32_t flips = 0; flips < 4; ++flips) {
    double w = 1.0;
    for (int k = 0; k < n; ++k) {
      const double p = noise.thermal_population[k];
      w *= ((flips >> (n - 1 - k)) & 1U) ? p : 1 - p;
    }
    ProductState prepared = init;
    prepared.negative ^= flips;
    const auto ideal = dense_probabilities(m, prepared, basis, 0.4);
    for (std::uint32_t b = 0; b < 4; ++b)
      for (std::uint32_t r = 0; r < 4; ++r) {
        double c = w * ideal[b];
        for (int k = 0; k < n; ++k)
          c *= noise.confusion[k]((b >> (n - 1 - k)) & 1U, (r >> (n - 1 - k)) & 1U);
        oracle[r] += c;
      }
  }
  const auto p = outcome_distribution(ptm, init, basis, noise);
  for (int r = 0; r < 4; ++r) CHECK(p[r] == doctest::Approx(oracle[r]).epsilon(1e-12));

  SettingSampler sampler(ptm, init.letters, basis, noise);
  std::vector<int> counts(4, 0);
  const int shots = 100000;
  for (int k = 0; k < shots; ++k) {
    auto rng = Stream::derive(7, StreamDomain::kTest, 1, k);
    ++counts[sampler.sample(init.negative, rng).bits];
  }
  for (int r = 0; r < 4; ++r)
    CHECK(std::abs(counts[r] / double(shots) - oracle[r]) <=
          4 * std::sqrt(oracle[r] * (1 - oracle[r]) / shots));
}

TEST_CASE("SPAM expectation map") {
  NoiseModel noise = NoiseModel::uniform(1, 0.05, 0.1, 0.0);
  CHECK(apply_spam_to_expectation(noise, 0, 1.0) == doctest::Approx(0.9));
  CHECK(invert_spam_expectation(noise, 0, 0.9) == doctest::Approx(1.0));
  CHECK(apply_spam_to_expectation(NoiseModel::ideal(1), 0, -0.3) == -0.3);
  CHECK(apply_spam_to_expectation(NoiseModel::uniform(1, 0.07, 0.07, 0), 0, 0.0) == 0.0);
  CHECK_THROWS_AS(NoiseModel::uniform(1, 0.0, 0.0, 0.5), ContractViolation);
  CHECK_THROWS_AS(invert_spam_expectation(NoiseModel::uniform(1, 0.5, 0.5, 0), 0, 0.1), DomainError);
}

TEST_CASE("state labels") {
  const auto s = ProductState::parse("+X-Z-Y");
  CHECK(s.qubits() == 3);
  CHECK(s.sign(0) == 1);
  CHECK(s.sign(1) == -1);
  CHECK(s.negative == 0b011);
  CHECK(s.label() == "+X-Z-Y");
  CHECK_THROWS_AS(ProductState::parse("+I"), DomainError);
  CHECK_THROWS_AS(ProductState::parse("X+"), DomainError);
}

TEST_CASE("counter streams are order independent") {
  auto a = Stream::derive(42, StreamDomain::kAcquisition, 3, 17);
  auto b = Stream::derive(42, StreamDomain::kAcquisition, 3, 17);
  auto c = Stream::derive(42, StreamDomain::kAcquisition, 17, 3);
  CHECK(a() == b());
  CHECK(a() != c());
  auto r = Stream::derive(1, StreamDomain::kTest);
  std::vector<int> hist(7, 0);
  for (int k = 0; k < 70000; ++k) ++hist[r.bounded(7)];
  for (int h : hist) CHECK(std::abs(h - 10000) < 400);
  const auto pick = sample_without_replacement(100, 100, r);
  std::vector<std::size_t> sorted = pick;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < 100; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("sparse and dense subset draws agree") {
  for (std::size_t k : {1, 7, 100, 124}) {
    Stream a(77);
    Stream b(77);
    const auto sparse = sample_without_replacement(1000, k, a);
    const auto dense = sample_without_replacement(1000, 1000, b);
    REQUIRE(sparse.size() == k);
    CHECK(std::vector<std::size_t>(dense.begin(), dense.begin() + static_cast<long>(k)) == sparse);
  }
  Stream r(1);
  CHECK_THROWS(sample_without_replacement(10, 11, r));
}
