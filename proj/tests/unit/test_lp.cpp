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

#include "doctest.h"
#include "lindtomo/error.hpp"
#include "lindtomo/lp.hpp"

using namespace lindtomo;

namespace {

// Optimum of a two-variable LP by enumerating constraint-pair vertices.
double brute_force_2d(const LinearProgram& lp) {
  Eigen::MatrixXd a = lp.A;
  Eigen::VectorXd b = lp.b;
  // Non-negativity as explicit rows.
  const Eigen::Index m = a.rows();
  a.conservativeResize(m + 2, 2);
  b.conservativeResize(m + 2);
  a.row(m) << -1, 0;
  a.row(m + 1) << 0, -1;
  b[m] = b[m + 1] = 0;
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = i + 1; j < a.rows(); ++j) {
      Eigen::Matrix2d s;
      s << a.row(i), a.row(j);
      if (std::abs(s.determinant()) < 1e-12) continue;
      const Eigen::Vector2d x = s.partialPivLu().solve(Eigen::Vector2d(b[i], b[j]));
      if (((a * x - b).array() <= 1e-9).all()) best = std::min(best, lp.c.dot(x));
    }
  return best;
}

}  // namespace

TEST_CASE("textbook LP") {
  // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18.
  LinearProgram lp;
  lp.c = Eigen::Vector2d(-3, -5);
  lp.A.resize(3, 2);
  lp.A << 1, 0, 0, 2, 3, 2;
  lp.b = Eigen::Vector3d(4, 12, 18);
  const LpSolution s = solve_lp(lp);
  CHECK(s.objective == doctest::Approx(-36));
  CHECK(s.x[0] == doctest::Approx(2));
  CHECK(s.x[1] == doctest::Approx(6));
}

TEST_CASE("negative right-hand sides need phase one") {
  // min x + y s.t. x + y >= 2, x - y <= 1.
  LinearProgram lp;
  lp.c = Eigen::Vector2d(1, 1);
  lp.A.resize(2, 2);
  lp.A << -1, -1, 1, -1;
  lp.b = Eigen::Vector2d(-2, 1);
  CHECK(solve_lp(lp).objective == doctest::Approx(2));
}

TEST_CASE("free variables reach negative values") {
  // min x s.t. x >= -3 with x free.
  LinearProgram lp;
  lp.c = Eigen::VectorXd::Ones(1);
  lp.A = Eigen::MatrixXd::Constant(1, 1, -1);
  lp.b = Eigen::VectorXd::Constant(1, 3);
  lp.free_variable = {true};
  const LpSolution s = solve_lp(lp);
  CHECK(s.x[0] == doctest::Approx(-3));
}

TEST_CASE("infeasible and unbounded programs are internal errors") {
  LinearProgram inf;
  inf.c = Eigen::VectorXd::Ones(1);
  inf.A.resize(2, 1);
  inf.A << 1, -1;
  inf.b = Eigen::Vector2d(1, -2);  // x <= 1 and x >= 2
  CHECK_THROWS_AS(solve_lp(inf), InternalError);
  LinearProgram unb;
  unb.c = -Eigen::VectorXd::Ones(1);
  unb.A = -Eigen::MatrixXd::Ones(1, 1);
  unb.b = Eigen::VectorXd::Zero(1);
  CHECK_THROWS_AS(solve_lp(unb), InternalError);
}

TEST_CASE("random bounded 2D programs match vertex enumeration") {
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> u(-1, 1);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    LinearProgram lp;
    lp.c = Eigen::Vector2d(u(gen), u(gen));
    lp.A.resize(6, 2);
    lp.b.resize(6);
    for (int i = 0; i < 4; ++i) {
      lp.A.row(i) << u(gen), u(gen);
      lp.b[i] = std::abs(u(gen)) + 0.1 * u(gen);
    }
    lp.A.row(4) << 1, 0;  // box keeps everything bounded
    lp.A.row(5) << 0, 1;
    lp.b[4] = lp.b[5] = 5;
    const double want = brute_force_2d(lp);
    if (!std::isfinite(want)) {
      CHECK_THROWS_AS(solve_lp(lp), InternalError);
      continue;
    }
    CHECK(solve_lp(lp).objective == doctest::Approx(want).epsilon(1e-8));
    ++checked;
  }
  CHECK(checked > 100);
}
