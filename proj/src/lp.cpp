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

#include "lindtomo/lp.hpp"

#include <cmath>
#include <limits>

#include "lindtomo/error.hpp"

namespace lindtomo {
namespace {

constexpr double kEps = 1e-11;

class Tableau {
 public:
  Tableau(Eigen::MatrixXd t, std::vector<Eigen::Index> basis)
      : t_(std::move(t)), basis_(std::move(basis)) {}

  Eigen::Index rows() const { return t_.rows(); }
  Eigen::Index cols() const { return t_.cols() - 1; }
  double rhs(Eigen::Index i) const { return t_(i, t_.cols() - 1); }
  const std::vector<Eigen::Index>& basis() const { return basis_; }
  int pivots() const { return pivots_; }

  void set_cost(const Eigen::VectorXd& c) {
    cost_ = c;
    z_ = Eigen::VectorXd::Zero(t_.cols());
    z_.head(cols()) = c;
    for (Eigen::Index i = 0; i < rows(); ++i) z_ -= c[basis_[i]] * t_.row(i).transpose();
  }

  double objective() const { return -z_[cols()]; }

  // Runs simplex iterations over columns [0, allowed). Returns false when
  // the problem is unbounded.
  bool optimize(Eigen::Index allowed) {
    for (int guard = 0; guard < 200000; ++guard) {
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < allowed; ++j)
        if (z_[j] < -kEps * (1.0 + std::abs(cost_[j]))) {
          enter = j;
          break;
        }
      if (enter < 0) return true;
      Eigen::Index leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < rows(); ++i) {
        const double a = t_(i, enter);
        if (a <= kEps) continue;
        const double ratio = rhs(i) / a;
        if (ratio < best - 1e-14 ||
            (std::abs(ratio - best) <= 1e-14 && leave >= 0 && basis_[i] < basis_[leave])) {
          best = ratio;
          leave = i;
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
    throw InternalError("simplex iteration limit reached");
  }

  void pivot(Eigen::Index r, Eigen::Index e) {
    t_.row(r) /= t_(r, e);
    for (Eigen::Index i = 0; i < rows(); ++i)
      if (i != r && t_(i, e) != 0.0) t_.row(i) -= t_(i, e) * t_.row(r);
    z_ -= z_[e] * t_.row(r).transpose();
    basis_[r] = e;
    ++pivots_;
  }

  double entry(Eigen::Index i, Eigen::Index j) const { return t_(i, j); }

 private:
  Eigen::MatrixXd t_;
  std::vector<Eigen::Index> basis_;
  Eigen::VectorXd cost_;
  Eigen::VectorXd z_;
  int pivots_ = 0;
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp) {
  const Eigen::Index nv = lp.c.size();
  const Eigen::Index m = lp.A.rows();
  if (lp.A.cols() != nv || lp.b.size() != m) throw DimensionError("LP shapes are inconsistent");
  if (!lp.free_variable.empty() && static_cast<Eigen::Index>(lp.free_variable.size()) != nv)
    throw DimensionError("LP free-variable flags do not match variable count");
  auto is_free = [&](Eigen::Index i) {
    return !lp.free_variable.empty() && lp.free_variable[static_cast<std::size_t>(i)];
  };

  // Column map: free variables split into x+ and x-.
  std::vector<Eigen::Index> pos(static_cast<std::size_t>(nv));
  Eigen::Index ncol = 0;
  for (Eigen::Index i = 0; i < nv; ++i) {
    pos[static_cast<std::size_t>(i)] = ncol;
    ncol += is_free(i) ? 2 : 1;
  }
  const Eigen::Index nstruct = ncol;
  Eigen::Index nart = 0;
  for (Eigen::Index r = 0; r < m; ++r)
    if (lp.b[r] < 0) ++nart;
  const Eigen::Index total = nstruct + m + nart;

  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, total + 1);
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  Eigen::Index art = nstruct + m;
  for (Eigen::Index r = 0; r < m; ++r) {
    const double sgn = lp.b[r] < 0 ? -1.0 : 1.0;
    for (Eigen::Index i = 0; i < nv; ++i) {
      const Eigen::Index c = pos[static_cast<std::size_t>(i)];
      t(r, c) = sgn * lp.A(r, i);
      if (is_free(i)) t(r, c + 1) = -sgn * lp.A(r, i);
    }
    t(r, nstruct + r) = sgn;
    t(r, total) = sgn * lp.b[r];
    if (sgn < 0) {
      t(r, art) = 1.0;
      basis[static_cast<std::size_t>(r)] = art++;
    } else {
      basis[static_cast<std::size_t>(r)] = nstruct + r;
    }
  }

  Tableau tab(std::move(t), std::move(basis));
  Eigen::VectorXd cost = Eigen::VectorXd::Zero(total);
  if (nart > 0) {
    cost.tail(nart).setOnes();
    tab.set_cost(cost);
    if (!tab.optimize(total)) throw InternalError("phase-one LP unbounded");
    if (tab.objective() > 1e-9 * (1.0 + lp.b.cwiseAbs().maxCoeff()))
      throw InternalError("linear program is infeasible");
    for (Eigen::Index r = 0; r < m; ++r) {
      if (tab.basis()[static_cast<std::size_t>(r)] < nstruct + m) continue;
      for (Eigen::Index j = 0; j < nstruct + m; ++j)
        if (std::abs(tab.entry(r, j)) > 1e-9) {
          tab.pivot(r, j);
          break;
        }
    }
  }
  cost.setZero();
  for (Eigen::Index i = 0; i < nv; ++i) {
    const Eigen::Index c = pos[static_cast<std::size_t>(i)];
    cost[c] = lp.c[i];
    if (is_free(i)) cost[c + 1] = -lp.c[i];
  }
  tab.set_cost(cost);
  if (!tab.optimize(nstruct + m)) throw InternalError("linear program is unbounded");

  Eigen::VectorXd col = Eigen::VectorXd::Zero(total);
  for (Eigen::Index r = 0; r < m; ++r) col[tab.basis()[static_cast<std::size_t>(r)]] = tab.rhs(r);
  LpSolution sol;
  sol.x.resize(nv);
  for (Eigen::Index i = 0; i < nv; ++i) {
    const Eigen::Index c = pos[static_cast<std::size_t>(i)];
    sol.x[i] = is_free(i) ? col[c] - col[c + 1] : col[c];
  }
  sol.objective = lp.c.dot(sol.x);
  sol.pivots = tab.pivots();
  return sol;
}

}  // namespace lindtomo
