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
#include <limits>
#include <random>
#include <sstream>

#include "doctest.h"
#include "lindtomo/error.hpp"
#include "lindtomo/io.hpp"
#include "support/test_util.hpp"

using namespace lindtomo;
using lindtomo::testing::make_template;
using lindtomo::testing::random_model;

TEST_CASE("double formatting round-trips exactly") {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> g(0, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double x = g(gen) * std::pow(10.0, i % 40 - 20);
    CHECK(parse_double(format_double(x)) == x);
  }
  CHECK(std::isnan(parse_double(format_double(std::numeric_limits<double>::quiet_NaN()))));
  CHECK(parse_double(format_double(-std::numeric_limits<double>::infinity())) ==
        -std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(parse_double("1.5x"), DataError);
  CHECK(hex64(0xabcULL) == "0000000000000abc");
  CHECK(split_fields("a, b,,c") == std::vector<std::string>{"a", "b", "", "c"});
}

TEST_CASE("model files round-trip") {
  std::mt19937_64 gen(2);
  for (auto t : {make_template(ModelTemplate::full(2)), make_template(ModelTemplate::local(3, 2))}) {
    const LindbladModel m = random_model(t, gen, 0.3);
    std::stringstream ss;
    const ArtifactStamp stamp{0x1234, 7};
    write_model(ss, m, &stamp);
    CHECK(ss.str().find("units.dissipation = 1/us") != std::string::npos);
    const LindbladModel back = read_model(ss);
    CHECK(back == m);
    CHECK(back.model_template().name() == t->name());
  }
  const auto custom = make_template(ModelTemplate::custom(
      2, {PauliString::parse("ZZ"), PauliString::parse("XI")},
      {{PauliString::parse("ZI"), PauliString::parse("IZ")},
       {PauliString::parse("IZ"), PauliString::parse("ZI")}},
      "pair"));
  const LindbladModel m =
      ModelBuilder(custom).coherent("ZZ", 0.1).dissipation("ZI", "IZ", Complex(0.01, -0.02)).build();
  std::stringstream ss;
  write_model(ss, m);
  const LindbladModel back = read_model(ss);
  CHECK(back == m);
  CHECK(back.dissipation_entry(PauliString::parse("IZ"), PauliString::parse("ZI")) ==
        Complex(0.01, 0.02));
}

TEST_CASE("model file errors") {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return read_model(in);
  };
  CHECK_NOTHROW(parse("qubits = 1\ntemplate = full\na[Z] = 0.3 # comment\nD[Z;Z] = 0.01\n"));
  CHECK_THROWS_AS(parse("template = full\n"), DataError);
  CHECK_THROWS_AS(parse("qubits = 1\nfoo = 1\n"), DataError);
  CHECK_THROWS_AS(parse("qubits = 1\na[ZZ] = 1\n"), DataError);
  CHECK_THROWS_AS(parse("qubits = 2\ntemplate = local1\na[ZZ] = 1\n"), DataError);
  CHECK_THROWS_AS(parse("qubits = 1\nD[Z;Z] = 0.1 0.2\n"), DataError);
  CHECK_THROWS_AS(parse("qubits = 1\na[Z] = 1\na[Z] = 2\n"), DataError);
  CHECK_THROWS_AS(parse("qubits = 1\nunits.coherent = MHz\n"), DataError);
}

TEST_CASE("noise files round-trip") {
  NoiseModel n = NoiseModel::uniform(2, 0.02, 0.05, 0.01);
  n.thermal_population[1] = 0.03;
  std::stringstream ss;
  write_noise(ss, n);
  const NoiseModel back = read_noise(ss);
  for (int k = 0; k < 2; ++k) {
    CHECK(back.confusion[k] == n.confusion[k]);
    CHECK(back.thermal_population[k] == n.thermal_population[k]);
  }
  std::istringstream bad("qubits = 1\nconfusion[0] = -0.1 0.1\n");
  CHECK_THROWS_AS(read_noise(bad), DataError);
}

TEST_CASE("trace files round-trip") {
  const auto t = make_template(ModelTemplate::full(2));
  std::mt19937_64 gen(3);
  const LindbladModel m = random_model(t, gen, 0.1);
  const EltPlan plan = make_elt_plan(2, uniform_times(1.0, 3), 40);
  const auto traces = expectation_traces(acquire_elt(plan, m, NoiseModel::ideal(2), 4));
  std::stringstream ss;
  write_traces(ss, traces, plan);
  const auto back = read_traces(ss);
  REQUIRE(back.size() == traces.size());
  for (std::size_t i = 0; i < traces.size(); ++i) {
    CHECK(back[i].probe.state == traces[i].probe.state);
    CHECK(back[i].probe.output == traces[i].probe.output);
    CHECK(back[i].config == traces[i].config);
    CHECK(back[i].observable == traces[i].observable);
    CHECK(back[i].times == traces[i].times);
    CHECK(back[i].values == traces[i].values);
    CHECK(back[i].stderrs == traces[i].stderrs);
    CHECK(back[i].shots == traces[i].shots);
  }
  std::istringstream bad("state,basis,observable,time,mean,stderr,shots\n+Z,X,Z,0,1,0,10\n");
  CHECK_THROWS_AS(read_traces(bad), DataError);
}

TEST_CASE("shot files round-trip in both layouts") {
  const auto t = make_template(ModelTemplate::full(3));
  std::mt19937_64 gen(5);
  const LindbladModel m = random_model(t, gen, 0.1);
  const ShadowDataset d = simulate_slt(m, NoiseModel::ideal(3), {0.0, 0.5, 1.0}, 500, 6);
  std::stringstream bin;
  const ArtifactStamp stamp{0xfeed, 42};
  write_shots_binary(bin, d, &stamp);
  CHECK(bin.str().size() == 8 + 4 + 4 + 8 + 8 + 3 * 8 + 3 * 8 + 1500 * 16);
  CHECK(bin.str().substr(0, 8) == "LTSHOT01");
  ArtifactStamp read_stamp;
  const ShadowDataset b = read_shots_binary(bin, &read_stamp);
  CHECK(read_stamp.config_hash == 0xfeed);
  CHECK(read_stamp.seed == 42);
  CHECK(b.n == 3);
  CHECK(b.times == d.times);
  CHECK(b.shots == d.shots);

  std::stringstream csv;
  write_shots_csv(csv, d);
  const ShadowDataset c = read_shots_csv(csv);
  CHECK(c.times == d.times);
  CHECK(c.shots == d.shots);

  std::string raw = bin.str();
  std::istringstream truncated(raw.substr(0, raw.size() - 5));
  CHECK_THROWS_AS(read_shots_binary(truncated), DataError);
  raw[0] = 'X';
  std::istringstream magic(raw);
  CHECK_THROWS_AS(read_shots_binary(magic), DataError);
}

TEST_CASE("estimate reports") {
  const auto t = make_template(ModelTemplate::full(1));
  const LindbladModel m = ModelBuilder(t).coherent("Z", 0.2).dissipation("Z", "Z", 0.05).build();
  const SltAnalysis a = run_slt(simulate_slt(m, NoiseModel::ideal(1), uniform_times(1.0, 6), 20000, 7), t);
  std::stringstream ss;
  write_estimates(ss, a.estimates);
  const auto rows = read_estimates(ss);
  const auto direct = estimate_records(a.estimates);
  REQUIRE(rows.size() == 12);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].label == direct[i].label);
    CHECK(rows[i].slope == direct[i].slope);
    CHECK(rows[i].stderr == direct[i].stderr);
    CHECK(rows[i].q16 == direct[i].q16);
    CHECK(rows[i].method == "chi2");
    CHECK(rows[i].q84 >= rows[i].q16);
    CHECK(rows[i].chi2_dof > 0);
  }
  std::stringstream terms;
  write_terms(terms, a.estimates);
  int lines = 0;
  for (std::string line; std::getline(terms, line);) ++lines;
  CHECK(lines == 1 + 9);
  std::stringstream pairs;
  write_needed_pairs(pairs, a);
  lines = 0;
  for (std::string line; std::getline(pairs, line);) ++lines;
  CHECK(lines == 1 + static_cast<int>(a.needed.size()));
}
