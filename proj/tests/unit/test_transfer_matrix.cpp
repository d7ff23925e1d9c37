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

#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "lindtomo/error.hpp"
#include "lindtomo/transfer_matrix.hpp"
#include "support/test_util.hpp"

using namespace lindtomo;
using lindtomo::testing::make_template;

namespace {

// Tr(B L_j(input)) by dense superoperator action of the unit model e_j.
double oracle_entry(const TemplatePtr& t, const ProbeConfiguration& probe, std::size_t j) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(t->param_count()));
  e[static_cast<Eigen::Index>(j)] = 1.0;
  const LindbladModel unit = LindbladModel::from_parameter_vector({t, e});
  const Eigen::MatrixXcd in = probe.kind == ProbeConfiguration::Kind::kState
                                  ? product_density(probe.state)
                                  : to_matrix(probe.input);
  const Eigen::MatrixXcd out = apply_generator(unit, in);
  const double scale = probe.kind == ProbeConfiguration::Kind::kState
                           ? 1.0
                           : 1.0 / static_cast<double>(1 << t->qubits());
  return scale * (to_matrix(probe.output) * out).trace().real();
}

std::vector<ProbeConfiguration> all_state_probes(int n) {
  std::vector<ProbeConfiguration> probes;
  const char* letters = "XYZ";
  const int nstate = static_cast<int>(std::pow(6, n));
  const int nbasis = static_cast<int>(std::pow(3, n));
  for (int s = 0; s < nstate; ++s) {
    ProductState st{PauliString(n), 0};
    int code = s;
    for (int k = n - 1; k >= 0; --k, code /= 6) {
      st.letters.set(k, PauliString::parse(std::string(1, letters[(code % 6) / 2])).at(0));
      if (code % 2) st.negative |= 1U << (n - 1 - k);
    }
    for (int b = 0; b < nbasis; ++b) {
      PauliString basis(n);
      int bc = b;
      for (int k = n - 1; k >= 0; --k, bc /= 3)
        basis.set(k, PauliString::parse(std::string(1, letters[bc % 3])).at(0));
      probes.push_back(ProbeConfiguration::state_probe(st, basis));
    }
  }
  return probes;
}

}  // namespace

TEST_CASE("state-probe entries match dense superoperator action") {
  for (int n : {1, 2}) {
    const auto t = make_template(n == 1 ? ModelTemplate::full(1) : ModelTemplate::local(2, 1));
    auto probes = all_state_probes(n);
    std::mt19937_64 gen(7);
    std::shuffle(probes.begin(), probes.end(), gen);
    probes.resize(std::min<std::size_t>(probes.size(), 40));
    const TransferMatrix tm = build_transfer_matrix(t, probes, Execution::kSerial);
    for (Eigen::Index i = 0; i < tm.rows(); ++i)
      for (Eigen::Index j = 0; j < tm.cols(); ++j)
        CHECK(tm.M(i, j) ==
              doctest::Approx(oracle_entry(t, tm.probes[static_cast<std::size_t>(i)],
                                           static_cast<std::size_t>(j)))
                  .epsilon(1e-12));
  }
}

TEST_CASE("Pauli-probe entries match dense superoperator action") {
  const auto t = make_template(ModelTemplate::full(2));
  auto probes = pauli_probe_set(*t);
  CHECK(probes.size() == t->param_count());
  std::mt19937_64 gen(11);
  std::shuffle(probes.begin(), probes.end(), gen);
  probes.resize(30);
  const TransferMatrix tm = build_transfer_matrix(t, probes, Execution::kSerial);
  for (Eigen::Index i = 0; i < tm.rows(); ++i)
    for (Eigen::Index j = 0; j < tm.cols(); ++j) {
      const double want = oracle_entry(t, tm.probes[static_cast<std::size_t>(i)],
                                       static_cast<std::size_t>(j));
      CHECK(std::abs(tm.M(i, j) - want) < 1e-12);
      CHECK(std::abs(dense_transfer_entry(tm.probes[static_cast<std::size_t>(i)],
                                          basis_generators(*t)[static_cast<std::size_t>(j)]) -
                     want) < 1e-12);
    }
}

TEST_CASE("parallel and serial builds agree") {
  const auto t = make_template(ModelTemplate::full(2));
  const auto probes = pauli_probe_set(*t);
  const TransferMatrix a = build_transfer_matrix(t, probes, Execution::kSerial);
  const TransferMatrix b = build_transfer_matrix(t, probes, Execution::kParallel);
  CHECK((a.M - b.M).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("full single-qubit template is learnable from all state probes") {
  const auto t = make_template(ModelTemplate::full(1));
  const TransferMatrix tm = build_transfer_matrix(t, all_state_probes(1));
  CHECK(tm.rows() == 18);
  const LearnabilityReport rep = learnability_report(tm);
  CHECK(rep.full_rank());
  CHECK(rep.rank == 12);
  const InversionMap inv = invert(tm);
  CHECK((inv.N * tm.M - Eigen::MatrixXd::Identity(12, 12)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("a degenerate probe set is reported, not inverted") {
  const auto t = make_template(ModelTemplate::full(1));
  std::vector<ProbeConfiguration> probes;
  for (const char* s : {"+Z", "-Z"})
    for (const char* b : {"X", "Y", "Z"})
      probes.push_back(ProbeConfiguration::state_probe(ProductState::parse(s), PauliString::parse(b)));
  const TransferMatrix tm = build_transfer_matrix(t, probes);
  const LearnabilityReport rep = learnability_report(tm);
  CHECK_FALSE(rep.full_rank());
  CHECK(rep.rank < 12);
  CHECK(std::isinf(rep.condition_number));
  REQUIRE_FALSE(rep.null_directions.empty());
  CHECK_FALSE(rep.null_directions.front().dominant_labels.empty());
  CHECK(rep.summary().find("rank") != std::string::npos);
  CHECK_THROWS_AS(invert(tm), LearnabilityError);
}

TEST_CASE("square full-rank matrix: pseudo-inverse is the inverse") {
  const auto t = make_template(ModelTemplate::full(1));
  const TransferMatrix tm = build_transfer_matrix(t, pauli_probe_set(*t));
  REQUIRE(tm.rows() == tm.cols());
  const InversionMap inv = invert(tm);
  const Eigen::MatrixXd direct = tm.M.inverse();
  CHECK((inv.N - direct).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("local inversion is a left inverse and matches min-norm on local templates") {
  const auto t = make_template(ModelTemplate::local(3, 1));
  const TransferMatrix tm = build_transfer_matrix(t, pauli_probe_set(*t));
  const InversionMap mn = invert(tm);
  InversionOptions lo;
  lo.strategy = InversionStrategy::kLocal;
  const InversionMap loc = invert(tm, lo);
  const auto k = static_cast<Eigen::Index>(t->param_count());
  CHECK((loc.N * tm.M - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((mn.N * tm.M - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff() < 1e-10);
  // Each parameter reads only probes inside its own support.
  for (Eigen::Index j = 0; j < k; ++j) {
    const ParamInfo& info = t->layout()[static_cast<std::size_t>(j)];
    const std::uint32_t supp = PauliString::from_index(3, info.p).support_mask() |
                               PauliString::from_index(3, info.q).support_mask();
    for (Eigen::Index i = 0; i < loc.N.cols(); ++i)
      if (loc.N(j, i) != 0.0)
        CHECK((tm.probes[static_cast<std::size_t>(i)].support_mask() & ~supp) == 0U);
  }
  CHECK(loc.used_probes().size() <= tm.probes.size());
}

TEST_CASE("transform_signal is linear and propagates variance") {
  const auto t = make_template(ModelTemplate::full(1));
  const TransferMatrix tm = build_transfer_matrix(t, all_state_probes(1));
  const InversionMap inv = invert(tm);
  std::mt19937_64 gen(3);
  std::normal_distribution<double> g;
  SignalSeries a{{0.0, 1.0}, Eigen::MatrixXd(2, 18), Eigen::MatrixXd::Constant(2, 18, 0.1)};
  SignalSeries b = a;
  for (auto& x : a.values.reshaped()) x = g(gen);
  for (auto& x : b.values.reshaped()) x = g(gen);
  SignalSeries c = a;
  c.values = 2.0 * a.values + 3.0 * b.values;
  const SignalSeries pa = transform_signal(inv, a);
  const SignalSeries pb = transform_signal(inv, b);
  const SignalSeries pc = transform_signal(inv, c);
  CHECK((pc.values - 2.0 * pa.values - 3.0 * pb.values).cwiseAbs().maxCoeff() < 1e-10);
  for (Eigen::Index j = 0; j < 12; ++j)
    CHECK(pa.stderrs(0, j) == doctest::Approx(0.1 * inv.N.row(j).norm()));
  // Exact signal maps back to the model parameters.
  std::mt19937_64 g2(5);
  const LindbladModel m = lindtomo::testing::random_model(t, g2);
  const Eigen::VectorXd theta = m.to_parameter_vector().values;
  SignalSeries e{{1.0}, (tm.M * theta).transpose(), Eigen::MatrixXd::Zero(1, 18)};
  CHECK((transform_signal(inv, e).values.row(0).transpose() - theta).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("CSV export has a header and a row per probe") {
  const auto t = make_template(ModelTemplate::full(1));
  const TransferMatrix tm = build_transfer_matrix(t, pauli_probe_set(*t));
  std::ostringstream os;
  export_transfer_matrix(os, tm);
  const std::string s = os.str();
  CHECK(std::count(s.begin(), s.end(), '\n') == 13);
  CHECK(inversion_strategy_from_string("local") == InversionStrategy::kLocal);
  CHECK_THROWS_AS(inversion_strategy_from_string("bogus"), ConfigError);
}
