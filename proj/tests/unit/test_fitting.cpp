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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "lindtomo/error.hpp"
#include "lindtomo/fitting.hpp"
#include "lindtomo/transfer_matrix.hpp"
#include "support/test_util.hpp"

using namespace lindtomo;

namespace {

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
  return v;
}

double empirical_quantile(std::vector<double>& v, double q) {
  const auto k = static_cast<std::size_t>(q * static_cast<double>(v.size()));
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  return v[k];
}

}  // namespace

TEST_CASE("chi2 fit of an exact line") {
  const auto t = linspace(0, 1, 11);
  std::vector<double> y;
  for (double x : t) y.push_back(2 * x + 1);
  const std::vector<double> s(t.size(), 1.0);
  const FitResult f = chi2_polyfit(t, y, s);
  CHECK(f.slope() == doctest::Approx(2));
  CHECK(f.intercept() == doctest::Approx(1));
  CHECK(f.chi2 == doctest::Approx(0).epsilon(1e-20));
  CHECK(f.dof == 9);
  // Symmetric PSD covariance.
  CHECK(f.covariance(0, 1) == doctest::Approx(f.covariance(1, 0)));
  CHECK(f.covariance.determinant() > 0);
  // Quadratic data is exact at degree 2.
  std::vector<double> y2;
  for (double x : t) y2.push_back(1 - x + 0.5 * x * x);
  const FitResult g = chi2_polyfit(t, y2, s, 2);
  CHECK(g.coefficients[2] == doctest::Approx(0.5));
  CHECK(g.evaluate(0.3) == doctest::Approx(1 - 0.3 + 0.045));
}

TEST_CASE("halving sigmas halves standard errors") {
  const auto t = linspace(0, 2, 9);
  std::vector<double> y(t.size(), 0.0);
  std::mt19937_64 gen(1);
  std::normal_distribution<double> g;
  for (auto& v : y) v = 3 + 0.1 * g(gen);
  const std::vector<double> s1(t.size(), 0.1);
  const std::vector<double> s2(t.size(), 0.05);
  const FitResult a = chi2_polyfit(t, y, s1);
  const FitResult b = chi2_polyfit(t, y, s2);
  CHECK(b.slope_stderr() == doctest::Approx(0.5 * a.slope_stderr()));
  CHECK(std::sqrt(b.covariance(0, 0)) == doctest::Approx(0.5 * std::sqrt(a.covariance(0, 0))));
  CHECK(std::abs(a.slope()) < 3 * a.slope_stderr());
}

TEST_CASE("chi2 input errors") {
  const std::vector<double> t{0, 1};
  const std::vector<double> y{0, 1};
  const std::vector<double> s{1, 1};
  CHECK_THROWS_AS(chi2_polyfit(t, y, s), InsufficientDataError);
  const std::vector<double> t3{0, 1, 2};
  const std::vector<double> y3{0, 1, 2};
  const std::vector<double> z3{1, 0, 1};
  CHECK_THROWS_AS(chi2_polyfit(t3, y3, z3), DomainError);
  const std::vector<double> same{1, 1, 1};
  CHECK_THROWS_AS(chi2_polyfit(same, y3, same), InsufficientDataError);
}

TEST_CASE("chi2 slope coverage is about 68%") {
  std::mt19937_64 gen(2024);
  std::normal_distribution<double> g;
  const auto t = linspace(0, 1, 15);
  const std::vector<double> s(t.size(), 0.2);
  int inside = 0;
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> y;
    for (double x : t) y.push_back(0.5 - 1.5 * x + 0.2 * g(gen));
    const FitResult f = chi2_polyfit(t, y, s);
    if (std::abs(f.slope() + 1.5) <= f.slope_stderr()) ++inside;
  }
  CHECK(inside / 500.0 == doctest::Approx(0.68).epsilon(0.05 / 0.68));
}

TEST_CASE("Chebyshev partition boundaries") {
  const ChebyshevPartition p2 = chebyshev_partition(0, 1, 2);
  REQUIRE(p2.intervals.size() == 2);
  CHECK(p2.intervals[0].first == doctest::Approx(0.5));
  CHECK(p2.intervals[0].second == 1.0);
  CHECK(p2.intervals[1].first == 0.0);
  CHECK(p2.intervals[1].second == doctest::Approx(0.5));
  const ChebyshevPartition p1 = chebyshev_partition(0, 1, 1);
  CHECK(p1.intervals[0] == std::pair<double, double>{0.0, 1.0});
  const ChebyshevPartition p4 = chebyshev_partition(0, 1, 4);
  const double want[] = {1.0, 0.5 * (1 + std::cos(std::numbers::pi / 4)), 0.5,
                         0.5 * (1 - std::cos(std::numbers::pi / 4)), 0.0};
  for (int j = 0; j < 4; ++j) {
    CHECK(p4.intervals[static_cast<std::size_t>(j)].second == doctest::Approx(want[j]));
    CHECK(p4.intervals[static_cast<std::size_t>(j)].first == doctest::Approx(want[j + 1]));
  }
  CHECK(p4.locate(1.0) == 0);
  CHECK(p4.locate(0.0) == 3);
  CHECK(p4.locate(0.5) == 1);  // shared boundary goes to the interval above
  CHECK_THROWS_AS(chebyshev_partition(1, 1, 2), DomainError);
  CHECK_THROWS_AS(chebyshev_partition(0, 1, 0), DomainError);
}

TEST_CASE("Chebyshev sampling follows the arcsine law") {
  Stream rng(99);
  const auto t = chebyshev_sample_times(0, 1, 100000, rng);
  int mid = 0;
  int lo = 0;
  int hi = 0;
  for (double x : t) {
    CHECK_UNARY(x >= 0.0);
    CHECK_UNARY(x <= 1.0);
    mid += x >= 0.4 && x <= 0.6;
    lo += x <= 0.1;
    hi += x >= 0.9;
  }
  CHECK(mid / 1e5 == doctest::Approx(2 * std::asin(0.2) / std::numbers::pi).epsilon(0.01 / 0.128));
  CHECK(std::abs(lo - hi) < 5 * std::sqrt(0.2048 * 1e5));
}

TEST_CASE("robust fit recovers an uncontaminated line") {
  Stream rng(5);
  const auto t = chebyshev_sample_times(0, 1, 40, rng);
  std::vector<double> y;
  for (double x : t) y.push_back(3 * x - 1);
  const RobustFitResult r = robust_polyfit(t, y, 0.0);
  CHECK(r.slope() == doctest::Approx(3).epsilon(1e-8));
  CHECK(r.coefficients[0] == doctest::Approx(-1).epsilon(1e-8));
  CHECK(r.converged);
}

TEST_CASE("robust fit ignores 40% outliers") {
  const auto t = linspace(0, 1, 101);
  std::vector<double> y;
  for (std::size_t i = 0; i < t.size(); ++i) y.push_back(i % 5 < 2 ? 10.0 : t[i]);
  const RobustFitResult r = robust_polyfit(t, y, 0.0);
  for (double x : linspace(0, 1, 201)) CHECK(std::abs(r.evaluate(x) - x) < 1e-6);
}

TEST_CASE("robust sup-norm guarantee under random contamination") {
  std::mt19937_64 gen(77);
  std::uniform_real_distribution<double> u(-1, 1);
  const double sigma = 0.05;
  for (int trial = 0; trial < 100; ++trial) {
    Stream rng(1000 + static_cast<std::uint64_t>(trial));
    const auto t = chebyshev_sample_times(0, 1, 64, rng);
    const double a = 2 * u(gen);
    const double b = 2 * u(gen);
    const ChebyshevPartition part = chebyshev_partition(
        *std::min_element(t.begin(), t.end()), *std::max_element(t.begin(), t.end()), 4);
    std::vector<std::vector<std::size_t>> members(4);
    for (std::size_t i = 0; i < t.size(); ++i)
      members[static_cast<std::size_t>(part.locate(t[i]))].push_back(i);
    std::vector<double> y;
    for (double x : t) y.push_back(a + b * x + sigma * u(gen));
    for (const auto& m : members) {
      REQUIRE_FALSE(m.empty());
      for (std::size_t k = 0; k < (m.size() - 1) / 2; ++k) y[m[k]] = 20 * u(gen);
    }
    const RobustFitResult r = robust_polyfit(t, y, sigma);
    double sup = 0.0;
    for (double x : linspace(part.t_min, part.t_max, 401))
      sup = std::max(sup, std::abs(r.evaluate(x) - a - b * x));
    CHECK(sup <= 3 * sigma + 1e-6);
  }
}

TEST_CASE("robust baseline is L1-optimal against perturbations") {
  std::mt19937_64 gen(8);
  std::normal_distribution<double> g;
  const auto t = linspace(0, 1, 30);
  std::vector<double> y;
  for (double x : t) y.push_back(1 + x + 0.1 * g(gen));
  const RobustFitResult r = robust_polyfit(t, y, 0.1);
  const double best = l1_loss(r.partition, t, y, r.baseline);
  for (int k = 0; k < 50; ++k) {
    Eigen::VectorXd p = r.baseline;
    p[0] += 0.01 * g(gen);
    p[1] += 0.01 * g(gen);
    CHECK(l1_loss(r.partition, t, y, p) >= best - 1e-12);
  }
  CHECK(linf_loss(r.partition, t, y, r.coefficients) <= 3 * 0.1 * 4);
}

TEST_CASE("robust input errors") {
  const std::vector<double> t{0.0, 0.01, 0.02, 1.0};
  const std::vector<double> y{0, 0, 0, 1};
  CHECK_THROWS_AS(robust_polyfit(t, y, 1.0), DomainError);  // middle intervals empty
  RobustFitOptions o;
  o.partitions = 1;
  CHECK_THROWS_AS(robust_polyfit(t, y, 1.0, o), DomainError);
}

TEST_CASE("robust derivative bounds") {
  // [0.25, 0.75] with sigma = 1: tbar = 0.5, tdel = 0.25.
  const auto t = linspace(0.25, 0.75, 20);
  std::vector<double> y(t.size(), 0.0);
  const RobustFitResult r = robust_polyfit(t, y, 1.0);
  CHECK(r.sup_bound == doctest::Approx(3));
  CHECK(r.derivative_bound_chebyshev == doctest::Approx(3 * 0.5 / 0.0625));
  CHECK(r.derivative_bound_markov == doctest::Approx(3 * std::numbers::e / 0.25));
  CHECK(r.derivative_bound == std::min(r.derivative_bound_chebyshev, r.derivative_bound_markov));
  // [0, 1]: t_min = 0 leaves only the Chebyshev form, 3 * 0.5 / 0.25 = 6.
  const auto t0 = linspace(0, 1, 20);
  const RobustFitResult r0 = robust_polyfit(t0, std::vector<double>(20, 0.0), 1.0);
  CHECK(std::isinf(r0.derivative_bound_markov));
  CHECK(r0.derivative_bound == doctest::Approx(6));
}

TEST_CASE("robust and chi2 slopes agree on clean data") {
  std::mt19937_64 gen(31);
  std::normal_distribution<double> g;
  const auto t = linspace(0, 1, 40);
  std::vector<double> y;
  for (double x : t) y.push_back(0.2 + 0.7 * x + 0.05 * g(gen));
  const std::vector<double> s(t.size(), 0.05);
  const FitResult c = chi2_polyfit(t, y, s);
  const RobustFitResult r = robust_polyfit(t, y, std::span<const double>(s));
  CHECK(std::abs(c.slope() - r.slope()) <= 3 * std::hypot(c.slope_stderr(), r.derivative_bound));
}

TEST_CASE("Rayleigh limit of the Rice quantiles") {
  const auto [lo, hi] = rice_quantiles(0, 1);
  CHECK(lo == doctest::Approx(std::sqrt(-2 * std::log(0.84))).epsilon(1e-6));
  CHECK(hi == doctest::Approx(std::sqrt(-2 * std::log(0.16))).epsilon(1e-6));
  CHECK(rice_quantile(0, 1, 0.5) == doctest::Approx(std::sqrt(2 * std::log(2.0))).epsilon(1e-6));
  CHECK(rice_cdf(1.0, 0, 1) == doctest::Approx(1 - std::exp(-0.5)).epsilon(1e-8));
  const auto [glo, ghi] = rice_quantiles(100, 1);
  CHECK(glo == doctest::Approx(100 - 0.9945).epsilon(1e-4));
  CHECK(ghi == doctest::Approx(100 + 0.9945).epsilon(1e-4));
  CHECK_THROWS_AS(rice_quantiles(1, 0), DomainError);
  CHECK(rice_quantile(2, 1, 0.3) < rice_quantile(2, 1, 0.7));
}

TEST_CASE("Rice quantiles match Monte Carlo") {
  std::mt19937_64 gen(123);
  std::normal_distribution<double> g;
  for (double nu : {0.0, 1.0, 5.0})
    for (double sigma : {0.5, 1.0, 2.0}) {
      std::vector<double> mags(1000000);
      for (auto& m : mags) m = std::hypot(nu + sigma * g(gen), sigma * g(gen));
      const auto [lo, hi] = rice_quantiles(nu, sigma);
      CHECK(std::abs(lo - empirical_quantile(mags, 0.16)) < 0.01);
      CHECK(std::abs(hi - empirical_quantile(mags, 0.84)) < 0.01);
    }
}

TEST_CASE("slope_to_parameter") {
  const SlopeComponent real[] = {{5, 1}};
  const ParameterEstimate r = slope_to_parameter(real, ValueKind::kReal, "a[X]");
  CHECK(r.magnitude == 5);
  CHECK(r.quantile_lo == doctest::Approx(rice_quantiles(5, 1).first));
  const SlopeComponent cx[] = {{3, 1}, {4, 1}};
  const ParameterEstimate c = slope_to_parameter(cx, ValueKind::kComplex);
  CHECK(c.magnitude == doctest::Approx(5));
  CHECK_FALSE(c.unequal_errors);
  CHECK(c.quantile_hi == doctest::Approx(rice_quantiles(5, 1).second));
  const SlopeComponent zero[] = {{0, 1}};
  const ParameterEstimate z = slope_to_parameter(zero, ValueKind::kReal);
  CHECK(z.quantile_lo == doctest::Approx(0.5905).epsilon(1e-3));
  CHECK(z.quantile_hi == doctest::Approx(1.914).epsilon(1e-3));
  const SlopeComponent uneq[] = {{1, 1}, {1, 2}};
  const ParameterEstimate u = slope_to_parameter(uneq, ValueKind::kComplex);
  CHECK(u.unequal_errors);
  CHECK(u.stderr == 2);
  CHECK_THROWS_AS(slope_to_parameter(real, ValueKind::kComplex), DimensionError);
}

TEST_CASE("estimate_from_series fits every component") {
  const auto tmpl = lindtomo::testing::make_template(ModelTemplate::full(1));
  const auto k = static_cast<Eigen::Index>(tmpl->param_count());
  Eigen::VectorXd theta = Eigen::VectorXd::LinSpaced(k, -1, 1);
  SignalSeries s;
  s.times = linspace(0, 0.01, 6);
  s.values.resize(6, k);
  s.stderrs = Eigen::MatrixXd::Constant(6, k, 0.01);
  for (Eigen::Index i = 0; i < 6; ++i)
    s.values.row(i) = (0.3 + s.times[static_cast<std::size_t>(i)] * theta.array()).matrix().transpose();
  FitOptions opt;
  for (Execution e : {Execution::kSerial, Execution::kParallel}) {
    const ParameterEstimates est = estimate_from_series(s, tmpl, opt, "test", e);
    CHECK((est.values - theta).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(est.terms.size() == 3 + 3 + 3);
    CHECK(est.terms.back().label == "D[Y;Z]");
  }
  opt.include_t0 = false;
  opt.method = FitMethod::kRobust;
  const ParameterEstimates rob = estimate_from_series(s, tmpl, opt, "test");
  CHECK((rob.values - theta).cwiseAbs().maxCoeff() < 1e-6);
  // Too few points is recorded per component, not thrown.
  SignalSeries tiny = s;
  tiny.times = {0.0, 0.01};
  tiny.values = s.values.topRows(2);
  tiny.stderrs = s.stderrs.topRows(2);
  const ParameterEstimates bad = estimate_from_series(tiny, tmpl, {}, "test");
  CHECK_FALSE(bad.fits[0].ok);
  CHECK(std::isnan(bad.values[0]));
  CHECK(fit_method_from_string("robust") == FitMethod::kRobust);
}
