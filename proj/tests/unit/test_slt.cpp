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

#include <array>
#include <cmath>
#include <random>

#include "doctest.h"
#include "lindtomo/error.hpp"
#include "lindtomo/slt.hpp"
#include "support/test_util.hpp"

using namespace lindtomo;
using lindtomo::testing::make_template;
using lindtomo::testing::random_model;

namespace {

ShadowShot shot1(const char* init, const char* basis, int outcome_sign) {
  return ShadowShot::make(0, ProductState::parse(init), PauliString::parse(basis),
                          outcome_sign < 0 ? 1U : 0U);
}

PauliPair pair(const char* p, const char* q) { return {PauliString::parse(p), PauliString::parse(q)}; }

}  // namespace

TEST_CASE("setting draws are uniform and reproducible") {
  std::array<int, 6> init{};
  std::array<int, 3> basis{};
  Stream rng(42);
  for (int i = 0; i < 100000; ++i) {
    const ShadowSetting s = draw_configuration(rng, 1);
    ++init[static_cast<std::size_t>(2 * (static_cast<int>(s.init.letters.at(0)) - 1) + (s.init.negative & 1U))];
    ++basis[static_cast<std::size_t>(static_cast<int>(s.basis.at(0)) - 1)];
  }
  for (int c : init) CHECK(std::abs(c / 1e5 - 1.0 / 6) < 0.005);
  for (int c : basis) CHECK(std::abs(c / 1e5 - 1.0 / 3) < 0.005);
  Stream a(7);
  Stream b(7);
  for (int i = 0; i < 100; ++i) {
    const ShadowSetting x = draw_configuration(a, 3);
    const ShadowSetting y = draw_configuration(b, 3);
    CHECK(x.init == y.init);
    CHECK(x.basis == y.basis);
  }
}

TEST_CASE("agreement rule") {
  CHECK(agrees(shot1("+Z", "Z", 1), PauliString::parse("Z"), PauliString::parse("Z")));
  CHECK_FALSE(agrees(shot1("+Z", "Z", 1), PauliString::parse("Z"), PauliString::parse("X")));
  const ShadowShot two = ShadowShot::make(0, ProductState::parse("+X+Z"), PauliString::parse("ZY"), 0);
  CHECK(agrees(two, PauliString::parse("ZI"), PauliString::parse("IZ")));
  CHECK_THROWS_AS(agrees(two, PauliString::parse("Z"), PauliString::parse("Z")), DimensionError);
}

TEST_CASE("single-shot estimate values") {
  const PauliString z = PauliString::parse("Z");
  CHECK(single_shot_estimate(shot1("+Z", "Z", 1), z, z) == 9);
  CHECK(single_shot_estimate(shot1("-Z", "Z", 1), z, z) == -9);
  CHECK(single_shot_estimate(shot1("-Z", "Z", -1), z, z) == 9);
  CHECK(single_shot_estimate(shot1("+X", "Z", 1), z, z) == 0);
  CHECK(single_shot_estimate(shot1("+X", "Z", -1), z, PauliString::parse("I")) == -3);
}

TEST_CASE("identity channel and dephasing PTM elements") {
  const auto t = make_template(ModelTemplate::full(1));
  const std::vector<PauliPair> pairs{pair("Z", "Z"), pair("X", "Z"), pair("X", "X")};
  const ShadowDataset zero = simulate_slt(LindbladModel(t), NoiseModel::ideal(1), {0.7}, 1000000, 1);
  const auto e = estimate_ptm_batch(zero.shots[0], pairs, 0.7);
  CHECK(std::abs(e[0].value - 1) < 5 * e[0].stderr);
  CHECK(std::abs(e[1].value) < 5 * e[1].stderr);
  CHECK(e[0].n_used == 1000000);
  const double g = 0.3;
  const LindbladModel deph = ModelBuilder(t).dissipation("Z", "Z", g).build();
  const ShadowDataset d = simulate_slt(deph, NoiseModel::ideal(1), {1.0}, 1000000, 2);
  const auto f = estimate_ptm_batch(d.shots[0], pairs, 1.0);
  CHECK(std::abs(f[2].value - std::exp(-2 * g)) < 5 * f[2].stderr);
}

TEST_CASE("unbiased against exact PTM elements for random models") {
  const auto t = make_template(ModelTemplate::full(1));
  std::mt19937_64 gen(2);
  const std::vector<PauliPair> pairs{pair("X", "X"), pair("Y", "Z"), pair("Z", "I"), pair("Z", "Z"),
                                     pair("X", "Y")};
  for (int trial = 0; trial < 5; ++trial) {
    const LindbladModel m = random_model(t, gen, 0.5);
    const ShadowDataset d = simulate_slt(m, NoiseModel::ideal(1), {0.4}, 200000, 10 + static_cast<std::uint64_t>(trial));
    const auto e = estimate_ptm_batch(d.shots[0], pairs, 0.4);
    for (std::size_t j = 0; j < pairs.size(); ++j)
      CHECK(std::abs(e[j].value - exact_ptm_element(m, pairs[j].first, pairs[j].second, 0.4)) <
            5 * e[j].stderr);
  }
}

TEST_CASE("boundedness, variance bound and agreement rate") {
  const auto t = make_template(ModelTemplate::full(2));
  std::mt19937_64 gen(3);
  const LindbladModel m = random_model(t, gen, 0.5);
  const ShadowDataset d = simulate_slt(m, NoiseModel::uniform(2, 0.02, 0.02, 0.01), {0.3}, 100000, 4);
  std::vector<PauliPair> pairs;
  for (std::uint64_t p = 1; p < 16; p += 2)
    for (std::uint64_t q = 0; q < 16; q += 3)
      pairs.emplace_back(PauliString::from_index(2, p), PauliString::from_index(2, q));
  const auto e = estimate_ptm_batch(d.shots[0], pairs, 0.3);
  for (std::size_t j = 0; j < pairs.size(); ++j) {
    const int w = pairs[j].first.weight() + pairs[j].second.weight();
    const double bound = std::pow(3.0, w);
    double sum = 0;
    double sum2 = 0;
    for (const ShadowShot& s : d.shots[0]) {
      const double x = single_shot_estimate(s, pairs[j].first, pairs[j].second);
      CHECK_UNARY(std::abs(x) <= bound);
      sum += x;
      sum2 += x * x;
    }
    const double n = static_cast<double>(d.shots[0].size());
    CHECK(sum / n == doctest::Approx(e[j].value).epsilon(1e-12));
    CHECK((sum2 / n - (sum / n) * (sum / n)) <= bound * bound);
    const double p = std::pow(1.0 / 3.0, w);
    CHECK(std::abs(static_cast<double>(e[j].n_agree) / n - p) < 4 * std::sqrt(p * (1 - p) / n));
  }
}

TEST_CASE("batched estimates equal separate ones; parallel equals serial") {
  const auto t = make_template(ModelTemplate::full(2));
  std::mt19937_64 gen(5);
  const LindbladModel m = random_model(t, gen, 0.5);
  const ShadowDataset d = simulate_slt(m, NoiseModel::ideal(2), {0.2}, 20000, 6, Execution::kSerial);
  const ShadowDataset dp = simulate_slt(m, NoiseModel::ideal(2), {0.2}, 20000, 6, Execution::kParallel);
  CHECK(d.shots == dp.shots);
  const std::vector<PauliPair> both{pair("ZI", "XI"), pair("IX", "IY")};
  const auto joint = estimate_ptm_batch(d.shots[0], both, 0.2, Execution::kSerial);
  const auto jp = estimate_ptm_batch(d.shots[0], both, 0.2, Execution::kParallel);
  for (std::size_t j = 0; j < 2; ++j) {
    const auto alone = estimate_ptm_batch(d.shots[0], std::span(both).subspan(j, 1), 0.2);
    CHECK(alone[0].value == joint[j].value);
    CHECK(alone[0].stderr == joint[j].stderr);
    CHECK(jp[j].value == joint[j].value);
  }
  CHECK_THROWS_AS(estimate_ptm_batch(std::span<const ShadowShot>(), both), InsufficientDataError);
}

TEST_CASE("Hoeffding shot counts") {
  CHECK(hoeffding_shots_required(0.1, 2, 0.05) ==
        static_cast<std::uint64_t>(std::ceil(2 * 81 * std::log(40.0) / 0.01)));
  CHECK(hoeffding_shots_required(1, 0, 2 / std::exp(2.0)) == 4);
  const auto a = hoeffding_shots_required(0.05, 1, 0.1);
  const auto b = hoeffding_shots_required(0.1, 1, 0.1);
  CHECK(std::abs(static_cast<double>(a) / static_cast<double>(b) - 4) < 0.01);
  CHECK(hoeffding_shots_required(0.1, 3, 0.1) > hoeffding_shots_required(0.1, 2, 0.1));
  CHECK(hoeffding_shots_required(0.1, 2, 0.01) > hoeffding_shots_required(0.1, 2, 0.1));
  CHECK_THROWS_AS(hoeffding_shots_required(0, 1, 0.1), DomainError);
  CHECK_THROWS_AS(hoeffding_shots_required(0.1, 1, 1.0), DomainError);
}

TEST_CASE("subsampling ELT data without repetition") {
  const auto t = make_template(ModelTemplate::full(1));
  std::mt19937_64 gen(8);
  const LindbladModel m = random_model(t, gen, 0.05);
  const EltPlan plan = make_elt_plan(1, uniform_times(2.0, 4), 50);
  const EltDataset elt = acquire_elt(plan, m, NoiseModel::ideal(1), 9);
  const ShadowDataset all = subsample_from_elt(elt, 900, 10);
  // Every shot used once: histograms are rebuilt exactly.
  for (std::size_t k = 0; k < 4; ++k) {
    std::vector<double> h(18 * 2, 0.0);
    for (const ShadowShot& s : all.shots[k]) {
      std::size_t c = 0;
      for (; c < plan.configurations.size(); ++c)
        if (plan.configurations[c].state == s.init() && plan.configurations[c].basis == s.basis()) break;
      h[c * 2 + s.outcome] += 1;
    }
    for (std::size_t c = 0; c < 18; ++c)
      for (std::size_t o = 0; o < 2; ++o) CHECK(h[c * 2 + o] == elt.histogram(k, c)[o]);
  }
  // Full subsample reproduces the full-data estimate regardless of order.
  const ShadowDataset other = subsample_from_elt(elt, 900, 11);
  const SltAnalysis a = run_slt(all, t);
  const SltAnalysis b = run_slt(other, t);
  CHECK(a.estimates.values == b.estimates.values);
  CHECK_THROWS_AS(subsample_from_elt(elt, 901, 1), DataError);
  const ShadowDataset part = subsample_from_elt(elt, 300, 12);
  CHECK(part.total_shots() == 1200);
}

TEST_CASE("end-to-end dephasing and zero model") {
  const auto t = make_template(ModelTemplate::full(1));
  const double g = 0.05;
  const LindbladModel m = ModelBuilder(t).dissipation("Z", "Z", g).build();
  const auto times = uniform_times(1.0, 20);
  const SltAnalysis r = run_slt(simulate_slt(m, NoiseModel::ideal(1), times, 100000, 21), t);
  const auto labels = t->labels();
  const auto dz = std::find(labels.begin(), labels.end(), "D[Z;Z]") - labels.begin();
  CHECK(std::abs(r.estimates.values[dz] - g) < 3 * r.estimates.stderrs[dz]);
  const SltAnalysis z = run_slt(simulate_slt(LindbladModel(t), NoiseModel::ideal(1), times, 100000, 22), t);
  for (Eigen::Index j = 0; j < z.estimates.values.size(); ++j)
    CHECK(std::abs(z.estimates.values[j]) < 3.5 * z.estimates.stderrs[j]);
  CHECK_THROWS_AS(run_slt(simulate_slt(m, NoiseModel::ideal(1), times, 3, 23), t),
                  InsufficientDataError);
  CHECK_THROWS_AS(run_slt(simulate_slt(m, NoiseModel::ideal(1), {1.0, 1.0}, 100, 23), t),
                  InsufficientDataError);
}
