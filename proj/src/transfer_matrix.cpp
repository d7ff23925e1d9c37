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

#include "lindtomo/transfer_matrix.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "lindtomo/error.hpp"

namespace lindtomo {
namespace {

std::uint32_t param_support(int n, const ParamInfo& info) {
  return PauliString::from_index(n, info.p).support_mask() |
         PauliString::from_index(n, info.q).support_mask();
}

// The unique Pauli S with L_j(S) proportional to `out`.
PauliString preimage(int n, const ParamInfo& info, const PauliString& out) {
  const auto p = PauliString::from_index(n, info.p);
  if (info.kind == ParamKind::kCoherent)
    return PauliString::from_masks(n, out.x_mask() ^ p.x_mask(), out.z_mask() ^ p.z_mask());
  const auto q = PauliString::from_index(n, info.q);
  return PauliString::from_masks(n, out.x_mask() ^ p.x_mask() ^ q.x_mask(),
                                 out.z_mask() ^ p.z_mask() ^ q.z_mask());
}

double entry(const ProbeConfiguration& probe, const ParamInfo& info) {
  const int n = probe.qubits();
  const PauliString s = preimage(n, info, probe.output);
  const double c = probe.input_coefficient(s);
  if (c == 0.0) return 0.0;
  const auto term = act_on_pauli(n, info, static_cast<std::uint32_t>(s.index()));
  if (!term || term->index != probe.output.index()) return 0.0;
  return c * term->coefficient;
}

std::vector<NullDirection> null_directions(const Eigen::MatrixXd& v, const Eigen::VectorXd& sv,
                                           const std::vector<std::string>& labels) {
  std::vector<NullDirection> out;
  for (Eigen::Index k = 0; k < v.cols(); ++k) {
    NullDirection d{sv[k], v.col(k), {}};
    std::vector<Eigen::Index> order(static_cast<std::size_t>(v.rows()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return std::abs(d.vector[a]) > std::abs(d.vector[b]);
    });
    for (Eigen::Index idx : order) {
      if (std::abs(d.vector[idx]) < 0.1 || d.dominant_labels.size() >= 4) break;
      d.dominant_labels.push_back(labels[static_cast<std::size_t>(idx)]);
    }
    out.push_back(std::move(d));
  }
  return out;
}

struct BlockInverse {
  Eigen::MatrixXd pinv;
  double condition = 0.0;
  Eigen::Index rank = 0;
  Eigen::VectorXd sv;      // one per column, descending; zero-padded
  Eigen::MatrixXd null_v;  // right singular vectors at or below the cutoff
  Eigen::VectorXd null_sv;
};

// Connected components of the bipartite row/column sparsity graph. Each
// component is an independent diagonal block of m.
std::vector<std::pair<std::vector<Eigen::Index>, std::vector<Eigen::Index>>> components(
    const Eigen::MatrixXd& m) {
  const Eigen::Index r = m.rows();
  std::vector<Eigen::Index> parent(static_cast<std::size_t>(r + m.cols()));
  std::iota(parent.begin(), parent.end(), Eigen::Index{0});
  auto find = [&](Eigen::Index x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      auto& p = parent[static_cast<std::size_t>(x)];
      p = parent[static_cast<std::size_t>(p)];
      x = p;
    }
    return x;
  };
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < r; ++i)
      if (m(i, j) != 0.0) {
        const Eigen::Index a = find(i);
        const Eigen::Index b = find(r + j);
        if (a != b) parent[static_cast<std::size_t>(a)] = b;
      }
  std::vector<Eigen::Index> slot(parent.size(), -1);
  std::vector<std::pair<std::vector<Eigen::Index>, std::vector<Eigen::Index>>> out;
  for (Eigen::Index x = 0; x < static_cast<Eigen::Index>(parent.size()); ++x) {
    const auto root = static_cast<std::size_t>(find(x));
    if (slot[root] < 0) {
      slot[root] = static_cast<Eigen::Index>(out.size());
      out.emplace_back();
    }
    auto& comp = out[static_cast<std::size_t>(slot[root])];
    (x < r ? comp.first : comp.second).push_back(x < r ? x : x - r);
  }
  return out;
}

// Pseudo-inverse by two-sided Jacobi SVD of each independent block.
// Transfer matrices have large, highly degenerate spectra that split into
// small blocks; the bidiagonal divide-and-conquer SVD in Eigen 3.4.0
// mis-resolves such degenerate spectra.
BlockInverse pseudo_inverse(const Eigen::MatrixXd& m, double relative_cutoff) {
  struct Piece {
    std::vector<Eigen::Index> rows, cols;
    Eigen::VectorXd s;
    Eigen::MatrixXd u, v;
  };
  std::vector<Piece> pieces;
  double smax = 0.0;
  for (auto& [rows, cols] : components(m)) {
    if (cols.empty()) continue;
    Piece p{std::move(rows), std::move(cols), {}, {}, {}};
    const auto k = static_cast<Eigen::Index>(p.cols.size());
    if (p.rows.empty()) {
      p.v = Eigen::MatrixXd::Identity(k, k);
    } else {
      const Eigen::MatrixXd block = m(p.rows, p.cols);
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(block, Eigen::ComputeThinU | Eigen::ComputeFullV);
      p.s = svd.singularValues();
      p.u = svd.matrixU();
      p.v = svd.matrixV();
      if (p.s.size()) smax = std::max(smax, p.s[0]);
    }
    pieces.push_back(std::move(p));
  }
  const double cutoff = relative_cutoff * smax;
  BlockInverse b;
  b.pinv = Eigen::MatrixXd::Zero(m.cols(), m.rows());
  std::vector<double> all;
  std::vector<std::pair<double, Eigen::VectorXd>> null;
  for (const Piece& p : pieces) {
    for (Eigen::Index a = 0; a < p.v.cols(); ++a) {
      const double sa = a < p.s.size() ? p.s[a] : 0.0;
      all.push_back(sa);
      if (sa > cutoff) {
        ++b.rank;
        const Eigen::VectorXd vcol = p.v.col(a) / sa;
        for (std::size_t i = 0; i < p.rows.size(); ++i)
          for (std::size_t j = 0; j < p.cols.size(); ++j)
            b.pinv(p.cols[j], p.rows[i]) += vcol[static_cast<Eigen::Index>(j)] *
                                            p.u(static_cast<Eigen::Index>(i), a);
      } else {
        Eigen::VectorXd full = Eigen::VectorXd::Zero(m.cols());
        for (std::size_t j = 0; j < p.cols.size(); ++j) full[p.cols[j]] = p.v(static_cast<Eigen::Index>(j), a);
        null.emplace_back(sa, std::move(full));
      }
    }
  }
  std::sort(all.begin(), all.end(), std::greater<>());
  b.sv = Eigen::Map<Eigen::VectorXd>(all.data(), static_cast<Eigen::Index>(all.size()));
  std::stable_sort(null.begin(), null.end(),
                   [](const auto& x, const auto& y) { return x.first < y.first; });
  b.null_v.resize(m.cols(), static_cast<Eigen::Index>(null.size()));
  b.null_sv.resize(static_cast<Eigen::Index>(null.size()));
  for (std::size_t k = 0; k < null.size(); ++k) {
    b.null_sv[static_cast<Eigen::Index>(k)] = null[k].first;
    b.null_v.col(static_cast<Eigen::Index>(k)) = null[k].second;
  }
  b.condition = b.rank == m.cols() && b.rank > 0 ? smax / b.sv[b.rank - 1]
                                                 : std::numeric_limits<double>::infinity();
  return b;
}

[[noreturn]] void throw_unlearnable(const std::vector<NullDirection>& dirs, Eigen::Index rank,
                                    Eigen::Index cols) {
  std::ostringstream os;
  os << "transfer matrix has rank " << rank << " < " << cols << "; unlearnable directions:";
  std::size_t shown = 0;
  for (const auto& d : dirs) {
    if (shown++ == 8) {
      os << " ...";
      break;
    }
    os << " {";
    for (std::size_t k = 0; k < d.dominant_labels.size(); ++k)
      os << (k ? "," : "") << d.dominant_labels[k];
    os << "}";
  }
  throw LearnabilityError(os.str());
}

void check_condition(double cond, const InversionOptions& options, std::vector<std::string>& warn) {
  if (cond > options.fail_condition) {
    std::ostringstream os;
    os << "transfer matrix condition number " << cond << " exceeds " << options.fail_condition;
    throw LearnabilityError(os.str());
  }
  if (cond > options.warn_condition) {
    std::ostringstream os;
    os << "transfer matrix condition number " << cond << " exceeds warning threshold "
       << options.warn_condition;
    warn.push_back(os.str());
  }
}

}  // namespace

ProbeConfiguration ProbeConfiguration::state_probe(ProductState s, PauliString out) {
  if (s.qubits() != out.size()) throw DimensionError("probe input and output sizes differ");
  return {Kind::kState, std::move(s), PauliString(out.size()), std::move(out)};
}

ProbeConfiguration ProbeConfiguration::pauli_probe(PauliString in, PauliString out) {
  if (in.size() != out.size()) throw DimensionError("probe input and output sizes differ");
  ProductState none{PauliString(out.size()), 0};
  return {Kind::kPauli, std::move(none), std::move(in), std::move(out)};
}

double ProbeConfiguration::normalization() const {
  return kind == Kind::kState ? 1.0 : std::ldexp(1.0, -qubits());
}

std::uint32_t ProbeConfiguration::support_mask() const {
  if (kind == Kind::kState) return (qubits() == 32 ? 0U : (1U << qubits())) - 1U;
  return output.support_mask() | input.support_mask();
}

double ProbeConfiguration::input_coefficient(const PauliString& s) const {
  if (kind == Kind::kPauli) return s == input ? 1.0 : 0.0;
  const std::uint32_t supp = s.support_mask();
  if ((s.x_mask() ^ (state.letters.x_mask() & supp)) != 0 ||
      (s.z_mask() ^ (state.letters.z_mask() & supp)) != 0)
    return 0.0;
  return (std::popcount(state.negative & supp) & 1) ? -1.0 : 1.0;
}

std::string ProbeConfiguration::label() const {
  if (kind == Kind::kState) return state.label() + ":" + output.str();
  return output.str() + "<" + input.str();
}

TransferMatrix build_transfer_matrix(TemplatePtr t, std::vector<ProbeConfiguration> probes,
                                     Execution exec) {
  if (probes.empty()) throw DimensionError("transfer matrix needs at least one probe");
  const int n = t->qubits();
  for (const auto& p : probes)
    if (p.qubits() != n) throw DimensionError("probe size does not match template");
  const auto& layout = t->layout();
  TransferMatrix tm{t, std::move(probes), {}};
  const auto rows = static_cast<Eigen::Index>(tm.probes.size());
  const auto cols = static_cast<Eigen::Index>(layout.size());
  tm.M.setZero(rows, cols);
  if (exec == Execution::kParallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j)
        tm.M(i, j) = entry(tm.probes[static_cast<std::size_t>(i)], layout[static_cast<std::size_t>(j)]);
  } else {
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j)
        tm.M(i, j) = entry(tm.probes[static_cast<std::size_t>(i)], layout[static_cast<std::size_t>(j)]);
  }
  return tm;
}

double dense_transfer_entry(const ProbeConfiguration& probe, const BasisGenerator& g) {
  const Eigen::MatrixXcd in = probe.kind == ProbeConfiguration::Kind::kState
                                  ? product_density(probe.state)
                                  : to_matrix(probe.input);
  const Eigen::MatrixXcd img = g.apply(in);
  const Complex v = (to_matrix(probe.output) * img).trace() * probe.normalization();
  return v.real();
}

std::vector<ProbeConfiguration> pauli_probe_set(const ModelTemplate& t) {
  const int n = t.qubits();
  std::set<std::uint32_t> supports;
  for (const auto& info : t.layout()) supports.insert(param_support(n, info));
  // Keep only maximal supports.
  std::vector<std::uint32_t> maximal;
  for (auto s : supports) {
    bool covered = false;
    for (auto o : supports) covered = covered || (o != s && (o & s) == s);
    if (!covered) maximal.push_back(s);
  }
  std::vector<ProbeConfiguration> probes;
  const std::uint64_t count = pauli_count(n);
  for (std::uint64_t p = 1; p < count; ++p) {
    const auto ps = PauliString::from_index(n, p);
    for (std::uint64_t q = 0; q < count; ++q) {
      const auto qs = PauliString::from_index(n, q);
      const std::uint32_t s = ps.support_mask() | qs.support_mask();
      bool inside = false;
      for (auto m : maximal) inside = inside || (m & s) == s;
      if (inside) probes.push_back(ProbeConfiguration::pauli_probe(qs, ps));
    }
  }
  return probes;
}

std::string LearnabilityReport::summary() const {
  std::ostringstream os;
  os << "rank " << rank << "/" << columns << ", condition " << condition_number;
  if (!null_directions.empty()) {
    os << ", unlearnable:";
    for (const auto& d : null_directions) {
      os << " {";
      for (std::size_t k = 0; k < d.dominant_labels.size(); ++k)
        os << (k ? "," : "") << d.dominant_labels[k];
      os << "}";
    }
  }
  return os.str();
}

LearnabilityReport learnability_report(const TransferMatrix& tm, double relative_cutoff) {
  LearnabilityReport r;
  r.columns = tm.cols();
  const BlockInverse b = pseudo_inverse(tm.M, relative_cutoff);
  r.rank = b.rank;
  r.singular_values = b.sv;
  r.condition_number = b.condition;
  r.null_directions = null_directions(b.null_v, b.null_sv, tm.tmpl->labels());
  return r;
}

std::string to_string(InversionStrategy s) {
  return s == InversionStrategy::kMinNorm ? "min-norm" : "local";
}

InversionStrategy inversion_strategy_from_string(std::string_view s) {
  if (s == "min-norm") return InversionStrategy::kMinNorm;
  if (s == "local") return InversionStrategy::kLocal;
  throw ConfigError("unknown inversion strategy '" + std::string(s) + "'");
}

std::vector<std::size_t> InversionMap::used_probes() const {
  std::vector<std::size_t> out;
  for (Eigen::Index c = 0; c < N.cols(); ++c)
    if (N.col(c).cwiseAbs().maxCoeff() > 0.0) out.push_back(static_cast<std::size_t>(c));
  return out;
}

InversionMap invert(const TransferMatrix& tm, const InversionOptions& options) {
  InversionMap inv;
  inv.strategy = options.strategy;
  const auto labels = tm.tmpl->labels();
  if (options.strategy == InversionStrategy::kMinNorm) {
    const BlockInverse b = pseudo_inverse(tm.M, options.relative_cutoff);
    if (b.rank < tm.cols()) {
      throw_unlearnable(null_directions(b.null_v, b.null_sv, labels), b.rank, tm.cols());
    }
    inv.N = b.pinv;
    inv.rank = b.rank;
    inv.condition_number = b.condition;
    check_condition(inv.condition_number, options, inv.warnings);
    return inv;
  }

  const int n = tm.tmpl->qubits();
  const auto& layout = tm.tmpl->layout();
  std::vector<std::uint32_t> psupp(layout.size());
  for (std::size_t j = 0; j < layout.size(); ++j) psupp[j] = param_support(n, layout[j]);
  std::vector<std::uint32_t> rsupp(tm.probes.size());
  for (std::size_t i = 0; i < tm.probes.size(); ++i) rsupp[i] = tm.probes[i].support_mask();
  const std::set<std::uint32_t> supports(psupp.begin(), psupp.end());

  inv.N.setZero(tm.cols(), tm.rows());
  for (std::uint32_t s : supports) {
    std::vector<Eigen::Index> rows;
    std::vector<Eigen::Index> cols;
    for (std::size_t i = 0; i < rsupp.size(); ++i)
      if ((rsupp[i] & s) == rsupp[i]) rows.push_back(static_cast<Eigen::Index>(i));
    for (std::size_t j = 0; j < psupp.size(); ++j)
      if ((psupp[j] & s) == psupp[j]) cols.push_back(static_cast<Eigen::Index>(j));
    if (rows.empty()) throw LearnabilityError("no probes inside a parameter support");
    const Eigen::MatrixXd block = tm.M(rows, cols);
    const BlockInverse b = pseudo_inverse(block, options.relative_cutoff);
    if (b.rank < static_cast<Eigen::Index>(cols.size())) {
      std::vector<std::string> sub;
      for (auto c : cols) sub.push_back(labels[static_cast<std::size_t>(c)]);
      throw_unlearnable(null_directions(b.null_v, b.null_sv, sub), b.rank,
                        static_cast<Eigen::Index>(cols.size()));
    }
    inv.condition_number = std::max(inv.condition_number, b.condition);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (psupp[static_cast<std::size_t>(cols[k])] != s) continue;
      for (std::size_t r = 0; r < rows.size(); ++r)
        inv.N(cols[k], rows[r]) = b.pinv(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(r));
    }
  }
  inv.rank = tm.cols();
  const double defect =
      (inv.N * tm.M - Eigen::MatrixXd::Identity(tm.cols(), tm.cols())).cwiseAbs().maxCoeff();
  if (defect > 1e-8)
    throw LearnabilityError(
        "local inversion does not apply: template terms act outside their own support");
  check_condition(inv.condition_number, options, inv.warnings);
  return inv;
}

SignalSeries transform_signal(const InversionMap& inv, const SignalSeries& e) {
  if (e.values.cols() != inv.N.cols() || e.stderrs.cols() != inv.N.cols())
    throw DimensionError("signal length does not match inversion map");
  if (e.values.rows() != static_cast<Eigen::Index>(e.times.size()) ||
      e.stderrs.rows() != e.values.rows())
    throw DimensionError("signal rows do not match times");
  SignalSeries out;
  out.times = e.times;
  out.values = e.values * inv.N.transpose();
  const Eigen::MatrixXd n2 = inv.N.array().square().matrix();
  out.stderrs = ((e.stderrs.array().square().matrix()) * n2.transpose()).array().sqrt().matrix();
  return out;
}

void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& row_labels,
                      const std::vector<std::string>& col_labels) {
  if (static_cast<Eigen::Index>(row_labels.size()) != m.rows() ||
      static_cast<Eigen::Index>(col_labels.size()) != m.cols())
    throw DimensionError("matrix labels do not match shape");
  const auto old = os.precision(17);
  os << "label";
  for (const auto& c : col_labels) os << ',' << c;
  os << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    os << row_labels[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << ',' << m(i, j);
    os << '\n';
  }
  os.precision(old);
}

void export_transfer_matrix(std::ostream& os, const TransferMatrix& tm) {
  std::vector<std::string> rows;
  for (const auto& p : tm.probes) rows.push_back(p.label());
  write_matrix_csv(os, tm.M, rows, tm.tmpl->labels());
}

void export_inversion_map(std::ostream& os, const TransferMatrix& tm, const InversionMap& inv) {
  std::vector<std::string> cols;
  for (const auto& p : tm.probes) cols.push_back(p.label());
  write_matrix_csv(os, inv.N, tm.tmpl->labels(), cols);
}

}  // namespace lindtomo
