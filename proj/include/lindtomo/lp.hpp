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

#include <vector>

#include <Eigen/Dense>

namespace lindtomo {

/// minimize c^T x subject to A x <= b; each variable is free or x >= 0.
struct LinearProgram {
  Eigen::VectorXd c;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  std::vector<bool> free_variable;  // empty means all non-negative
};

struct LpSolution {
  Eigen::VectorXd x;
  double objective = 0.0;
  int pivots = 0;
};

/// Dense two-phase simplex with Bland's rule. Throws InternalError when the
/// program is infeasible or unbounded.
LpSolution solve_lp(const LinearProgram& lp);

}  // namespace lindtomo
