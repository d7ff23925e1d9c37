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

#include "lindtomo/lindblad.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "lindtomo/error.hpp"

namespace lindtomo {
namespace {

constexpr Complex kI{0.0, 1.0};

Complex i_power(int k) {
  static constexpr Complex kPowers[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  return kPowers[k & 3];
}

// Coefficient of the single string P^Q^S in P S Q - {QP, S}/2.
Complex sandwich_coefficient(const PauliString& p, const PauliString& q,
                             const PauliString& s) {
  const PhasedPauli psq = multiply(multiply(p, s), PhasedPauli{0, q});
  const PhasedPauli qp = multiply(q, p);
  const PhasedPauli qps = multiply(qp, PhasedPauli{0, s});
  const PhasedPauli sqp = multiply(PhasedPauli{0, s}, qp);
  return i_power(psq.power) - 0.5 * i_power(qps.power) - 0.5 * i_power(sqp.power);
}

Eigen::MatrixXcd dense_sandwich(const Eigen::MatrixXcd& p, const Eigen::MatrixXcd& q,
                                const Eigen::MatrixXcd& op) {
  const Eigen::MatrixXcd qp = q * p;
  return p * op * q - 0.5 * (qp * op + op * qp);
}

void check_square(const Eigen::MatrixXcd& op, int n) {
  const Eigen::Index dim = Eigen::Index{1} << n;
  if (op.rows() != dim || op.cols() != dim)
    throw DimensionError("operator is not 2^n x 2^n for n=" + std::to_string(n));
}

double hermiticity_defect(const Eigen::MatrixXcd& d) {
  if (d.size() == 0) return 0.0;
  return (d - d.adjoint()).cwiseAbs().maxCoeff();
}

}  // namespace

std::string ParamInfo::label(int n) const {
  const std::string ps = PauliString::from_index(n, p).str();
  const std::string qs = PauliString::from_index(n, q).str();
  switch (kind) {
    case ParamKind::kCoherent: return "a[" + ps + "]";
    case ParamKind::kDissipativeDiagonal: return "D[" + ps + ";" + ps + "]";
    case ParamKind::kDissipativeReal: return "ReD[" + ps + ";" + qs + "]";
    case ParamKind::kDissipativeImag: return "ImD[" + ps + ";" + qs + "]";
  }
  return {};
}

int ParamInfo::locality(int n) const {
  const auto a = PauliString::from_index(n, p);
  const auto b = PauliString::from_index(n, q);
  return std::popcount(a.support_mask() | b.support_mask());
}

ModelTemplate::ModelTemplate(int n, std::string name, std::vector<std::uint32_t> coherent,
                             std::vector<Pair> dissipative)
    : n_(n), name_(std::move(name)), coherent_(std::move(coherent)),
      dissipative_(std::move(dissipative)) {
  std::sort(coherent_.begin(), coherent_.end());
  coherent_.erase(std::unique(coherent_.begin(), coherent_.end()), coherent_.end());
  std::sort(dissipative_.begin(), dissipative_.end());
  dissipative_.erase(std::unique(dissipative_.begin(), dissipative_.end()),
                     dissipative_.end());

  for (auto c : coherent_)
    if (c == 0) throw ContractViolation("identity string in coherent terms");
  for (auto [p, q] : dissipative_) {
    if (p == 0 || q == 0) throw ContractViolation("identity string in dissipative terms");
    if (!std::binary_search(dissipative_.begin(), dissipative_.end(), Pair{q, p}))
      throw ContractViolation("dissipative terms are not closed under transposition");
    diss_basis_.push_back(p);
  }
  std::sort(diss_basis_.begin(), diss_basis_.end());
  diss_basis_.erase(std::unique(diss_basis_.begin(), diss_basis_.end()), diss_basis_.end());

  layout_.reserve(coherent_.size() + dissipative_.size());
  for (auto c : coherent_) layout_.push_back({ParamKind::kCoherent, c, c});
  for (auto [p, q] : dissipative_)
    if (p == q) layout_.push_back({ParamKind::kDissipativeDiagonal, p, p});
  for (auto [p, q] : dissipative_) {
    if (p < q) {
      layout_.push_back({ParamKind::kDissipativeReal, p, q});
      layout_.push_back({ParamKind::kDissipativeImag, p, q});
    }
  }
}

ModelTemplate ModelTemplate::full(int n) {
  if (n < 1 || n > kMaxQubits) throw DomainError("template qubit count out of range");
  const auto count = static_cast<std::uint32_t>(pauli_count(n));
  std::vector<std::uint32_t> coherent;
  std::vector<Pair> dissipative;
  coherent.reserve(count - 1);
  dissipative.reserve(static_cast<std::size_t>(count - 1) * (count - 1));
  for (std::uint32_t p = 1; p < count; ++p) {
    coherent.push_back(p);
    for (std::uint32_t q = 1; q < count; ++q) dissipative.emplace_back(p, q);
  }
  return ModelTemplate(n, "full", std::move(coherent), std::move(dissipative));
}

ModelTemplate ModelTemplate::local(int n, int k) {
  if (n < 1 || n > kMaxQubits) throw DomainError("template qubit count out of range");
  if (k < 1) throw DomainError("locality must be >= 1");
  const auto count = static_cast<std::uint32_t>(pauli_count(n));
  std::vector<std::uint32_t> coherent;
  for (std::uint32_t p = 1; p < count; ++p)
    if (PauliString::from_index(n, p).weight() <= k) coherent.push_back(p);
  std::vector<Pair> dissipative;
  for (int site = 0; site < n; ++site) {
    std::vector<std::uint32_t> onsite;
    for (Pauli letter : {Pauli::X, Pauli::Y, Pauli::Z}) {
      PauliString s(n);
      s.set(site, letter);
      onsite.push_back(static_cast<std::uint32_t>(s.index()));
    }
    for (auto p : onsite)
      for (auto q : onsite) dissipative.emplace_back(p, q);
  }
  return ModelTemplate(n, "local" + std::to_string(k), std::move(coherent),
                       std::move(dissipative));
}

ModelTemplate ModelTemplate::from_name(int n, std::string_view name) {
  if (name == "full") return full(n);
  if (name.starts_with("local") && name.size() == 6 && name[5] >= '1' && name[5] <= '9')
    return local(n, name[5] - '0');
  throw ConfigError("unknown model template '" + std::string(name) + "'");
}

ModelTemplate ModelTemplate::custom(int n, std::vector<PauliString> coherent,
                                    std::vector<std::pair<PauliString, PauliString>> dissipative,
                                    std::string name) {
  std::vector<std::uint32_t> c;
  std::vector<Pair> d;
  for (const auto& p : coherent) {
    if (p.size() != n) throw DimensionError("coherent term size mismatch");
    c.push_back(static_cast<std::uint32_t>(p.index()));
  }
  for (const auto& [p, q] : dissipative) {
    if (p.size() != n || q.size() != n) throw DimensionError("dissipative term size mismatch");
    d.emplace_back(static_cast<std::uint32_t>(p.index()), static_cast<std::uint32_t>(q.index()));
  }
  return ModelTemplate(n, std::move(name), std::move(c), std::move(d));
}

std::optional<std::size_t> ModelTemplate::dissipative_position(std::uint32_t pauli) const {
  auto it = std::lower_bound(diss_basis_.begin(), diss_basis_.end(), pauli);
  if (it == diss_basis_.end() || *it != pauli) return std::nullopt;
  return static_cast<std::size_t>(it - diss_basis_.begin());
}

std::vector<std::string> ModelTemplate::labels() const {
  std::vector<std::string> out;
  out.reserve(layout_.size());
  for (const auto& info : layout_) out.push_back(info.label(n_));
  return out;
}

bool ModelTemplate::has_coherent(std::uint32_t p) const {
  return std::binary_search(coherent_.begin(), coherent_.end(), p);
}

bool ModelTemplate::has_dissipative(std::uint32_t p, std::uint32_t q) const {
  return std::binary_search(dissipative_.begin(), dissipative_.end(), Pair{p, q});
}

std::size_t param_count(const ModelTemplate& t) { return t.param_count(); }

std::uint64_t full_param_count(int n) {
  const std::uint64_t d = pauli_count(n);
  return d * (d - 1);
}

LindbladModel::LindbladModel(TemplatePtr t)
    : tmpl_(std::move(t)),
      coherent_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(tmpl_->coherent_terms().size()))),
      dissipation_(Eigen::MatrixXcd::Zero(
          static_cast<Eigen::Index>(tmpl_->dissipative_basis().size()),
          static_cast<Eigen::Index>(tmpl_->dissipative_basis().size()))) {}

LindbladModel::LindbladModel(TemplatePtr t, Eigen::VectorXd coherent,
                             Eigen::MatrixXcd dissipation)
    : tmpl_(std::move(t)), coherent_(std::move(coherent)), dissipation_(std::move(dissipation)) {
  const auto nb = static_cast<Eigen::Index>(tmpl_->dissipative_basis().size());
  if (coherent_.size() != static_cast<Eigen::Index>(tmpl_->coherent_terms().size()))
    throw DimensionError("coherent vector length does not match template");
  if (dissipation_.rows() != nb || dissipation_.cols() != nb)
    throw DimensionError("dissipation matrix shape does not match template");
  const double scale = 1.0 + (nb ? dissipation_.cwiseAbs().maxCoeff() : 0.0);
  if (hermiticity_defect(dissipation_) > 1e-12 * scale)
    throw ContractViolation("dissipation matrix is not Hermitian");
  const auto basis = tmpl_->dissipative_basis();
  for (Eigen::Index i = 0; i < nb; ++i) {
    for (Eigen::Index j = 0; j < nb; ++j) {
      if (dissipation_(i, j) != Complex{} && !tmpl_->has_dissipative(basis[i], basis[j]))
        throw ContractViolation("dissipation entry outside template");
    }
  }
  dissipation_ = 0.5 * (dissipation_ + dissipation_.adjoint()).eval();
}

LindbladModel LindbladModel::from_parameter_vector(const ParameterVector& v) {
  const ModelTemplate& t = *v.layout;
  if (v.values.size() != static_cast<Eigen::Index>(t.param_count()))
    throw DimensionError("parameter vector length does not match template");
  LindbladModel m(v.layout);
  std::size_t coherent_pos = 0;
  for (std::size_t j = 0; j < t.layout().size(); ++j) {
    const ParamInfo& info = t.layout()[j];
    const double x = v.values[static_cast<Eigen::Index>(j)];
    switch (info.kind) {
      case ParamKind::kCoherent:
        m.coherent_[static_cast<Eigen::Index>(coherent_pos++)] = x;
        break;
      case ParamKind::kDissipativeDiagonal: {
        const auto i = static_cast<Eigen::Index>(*t.dissipative_position(info.p));
        m.dissipation_(i, i) = x;
        break;
      }
      case ParamKind::kDissipativeReal: {
        const auto i = static_cast<Eigen::Index>(*t.dissipative_position(info.p));
        const auto k = static_cast<Eigen::Index>(*t.dissipative_position(info.q));
        m.dissipation_(i, k).real(x);
        m.dissipation_(k, i).real(x);
        break;
      }
      case ParamKind::kDissipativeImag: {
        const auto i = static_cast<Eigen::Index>(*t.dissipative_position(info.p));
        const auto k = static_cast<Eigen::Index>(*t.dissipative_position(info.q));
        m.dissipation_(i, k).imag(x);
        m.dissipation_(k, i).imag(-x);
        break;
      }
    }
  }
  return m;
}

ParameterVector LindbladModel::to_parameter_vector() const {
  const ModelTemplate& t = *tmpl_;
  ParameterVector v{tmpl_, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(t.param_count()))};
  std::size_t coherent_pos = 0;
  for (std::size_t j = 0; j < t.layout().size(); ++j) {
    const ParamInfo& info = t.layout()[j];
    double& x = v.values[static_cast<Eigen::Index>(j)];
    if (info.kind == ParamKind::kCoherent) {
      x = coherent_[static_cast<Eigen::Index>(coherent_pos++)];
      continue;
    }
    const auto i = static_cast<Eigen::Index>(*t.dissipative_position(info.p));
    const auto k = static_cast<Eigen::Index>(*t.dissipative_position(info.q));
    const Complex d = dissipation_(i, k);
    x = info.kind == ParamKind::kDissipativeImag ? d.imag() : d.real();
  }
  return v;
}

double LindbladModel::coherent_coefficient(const PauliString& p) const {
  const auto terms = tmpl_->coherent_terms();
  auto it = std::lower_bound(terms.begin(), terms.end(), static_cast<std::uint32_t>(p.index()));
  if (it == terms.end() || *it != p.index()) return 0.0;
  return coherent_[it - terms.begin()];
}

Complex LindbladModel::dissipation_entry(const PauliString& p, const PauliString& q) const {
  const auto i = tmpl_->dissipative_position(static_cast<std::uint32_t>(p.index()));
  const auto k = tmpl_->dissipative_position(static_cast<std::uint32_t>(q.index()));
  if (!i || !k) return {};
  return dissipation_(static_cast<Eigen::Index>(*i), static_cast<Eigen::Index>(*k));
}

ModelBuilder::ModelBuilder(TemplatePtr t) : tmpl_(std::move(t)) {
  LindbladModel zero(tmpl_);
  coherent_ = zero.coherent();
  dissipation_ = zero.dissipation();
}

ModelBuilder& ModelBuilder::coherent(std::string_view p, double value) {
  return coherent(PauliString::parse(p), value);
}

ModelBuilder& ModelBuilder::coherent(const PauliString& p, double value) {
  const auto terms = tmpl_->coherent_terms();
  const auto idx = static_cast<std::uint32_t>(p.index());
  auto it = std::lower_bound(terms.begin(), terms.end(), idx);
  if (p.size() != tmpl_->qubits() || it == terms.end() || *it != idx)
    throw ContractViolation("coherent term " + p.str() + " is not in the template");
  coherent_[it - terms.begin()] = value;
  return *this;
}

ModelBuilder& ModelBuilder::dissipation(std::string_view p, std::string_view q, Complex value) {
  return dissipation(PauliString::parse(p), PauliString::parse(q), value);
}

ModelBuilder& ModelBuilder::dissipation(const PauliString& p, const PauliString& q,
                                        Complex value) {
  const auto pi = static_cast<std::uint32_t>(p.index());
  const auto qi = static_cast<std::uint32_t>(q.index());
  if (p.size() != tmpl_->qubits() || q.size() != tmpl_->qubits() ||
      !tmpl_->has_dissipative(pi, qi))
    throw ContractViolation("dissipative term (" + p.str() + "," + q.str() +
                            ") is not in the template");
  if (pi == qi && value.imag() != 0.0)
    throw ContractViolation("diagonal dissipation entries must be real");
  const auto i = static_cast<Eigen::Index>(*tmpl_->dissipative_position(pi));
  const auto k = static_cast<Eigen::Index>(*tmpl_->dissipative_position(qi));
  dissipation_(i, k) = value;
  dissipation_(k, i) = std::conj(value);
  return *this;
}

LindbladModel ModelBuilder::build() const { return LindbladModel(tmpl_, coherent_, dissipation_); }

std::optional<PauliTerm> act_on_pauli(int n, const ParamInfo& info, std::uint32_t s_index) {
  const PauliString p = PauliString::from_index(n, info.p);
  const PauliString q = PauliString::from_index(n, info.q);
  const PauliString s = PauliString::from_index(n, s_index);
  Complex c;
  std::uint32_t image;
  if (info.kind == ParamKind::kCoherent) {
    if (p.commutes_with(s)) return std::nullopt;
    // -i [P, S] = -2i P S for anticommuting P, S.
    const PhasedPauli ps = multiply(p, s);
    c = -2.0 * kI * ps.phase();
    image = static_cast<std::uint32_t>(ps.string.index());
  } else {
    image = static_cast<std::uint32_t>(
        PauliString::from_masks(n, p.x_mask() ^ q.x_mask() ^ s.x_mask(),
                                p.z_mask() ^ q.z_mask() ^ s.z_mask())
            .index());
    switch (info.kind) {
      case ParamKind::kDissipativeDiagonal: c = sandwich_coefficient(p, p, s); break;
      case ParamKind::kDissipativeReal:
        c = sandwich_coefficient(p, q, s) + sandwich_coefficient(q, p, s);
        break;
      case ParamKind::kDissipativeImag:
        c = kI * (sandwich_coefficient(p, q, s) - sandwich_coefficient(q, p, s));
        break;
      default: break;
    }
  }
  if (std::abs(c.imag()) > 1e-12)
    throw ContractViolation("basis generator produced a non-real Pauli coefficient");
  if (c.real() == 0.0) return std::nullopt;
  return PauliTerm{c.real(), image};
}

std::optional<PauliTerm> BasisGenerator::act(std::uint32_t s) const {
  return act_on_pauli(n_, info_, s);
}

Eigen::MatrixXcd BasisGenerator::apply(const Eigen::MatrixXcd& op) const {
  check_square(op, n_);
  const Eigen::MatrixXcd p = to_matrix(PauliString::from_index(n_, info_.p), kMaxQubits);
  const Eigen::MatrixXcd q = to_matrix(PauliString::from_index(n_, info_.q), kMaxQubits);
  switch (info_.kind) {
    case ParamKind::kCoherent: return -kI * (p * op - op * p);
    case ParamKind::kDissipativeDiagonal: return dense_sandwich(p, p, op);
    case ParamKind::kDissipativeReal: return dense_sandwich(p, q, op) + dense_sandwich(q, p, op);
    case ParamKind::kDissipativeImag:
      return kI * (dense_sandwich(p, q, op) - dense_sandwich(q, p, op));
  }
  return {};
}

std::vector<BasisGenerator> basis_generators(const ModelTemplate& t) {
  std::vector<BasisGenerator> out;
  out.reserve(t.param_count());
  for (const auto& info : t.layout()) out.emplace_back(t.qubits(), info);
  return out;
}

Eigen::MatrixXcd apply_generator(const LindbladModel& m, const Eigen::MatrixXcd& op) {
  const int n = m.qubits();
  check_square(op, n);
  const ModelTemplate& t = m.model_template();
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(op.rows(), op.cols());
  const auto coherent = t.coherent_terms();
  for (std::size_t k = 0; k < coherent.size(); ++k) {
    const double a = m.coherent()[static_cast<Eigen::Index>(k)];
    if (a == 0.0) continue;
    const Eigen::MatrixXcd p = to_matrix(PauliString::from_index(n, coherent[k]), kMaxQubits);
    out += -kI * a * (p * op - op * p);
  }
  const auto basis = t.dissipative_basis();
  std::vector<Eigen::MatrixXcd> mats;
  mats.reserve(basis.size());
  for (auto b : basis) mats.push_back(to_matrix(PauliString::from_index(n, b), kMaxQubits));
  const Eigen::MatrixXcd& d = m.dissipation();
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (Eigen::Index k = 0; k < d.cols(); ++k) {
      if (d(i, k) == Complex{}) continue;
      out += d(i, k) * dense_sandwich(mats[i], mats[k], op);
    }
  }
  return out;
}

Eigen::MatrixXd pauli_generator(const LindbladModel& m) {
  const int n = m.qubits();
  if (n > kDenseCap) throw CapacityError("Pauli-basis generator requested above dense cap");
  const auto dim = static_cast<std::uint32_t>(pauli_count(n));
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(dim, dim);
  const ParameterVector v = m.to_parameter_vector();
  const auto& layout = m.model_template().layout();
  for (std::size_t j = 0; j < layout.size(); ++j) {
    const double pj = v.values[static_cast<Eigen::Index>(j)];
    if (pj == 0.0) continue;
    for (std::uint32_t s = 0; s < dim; ++s) {
      if (auto term = act_on_pauli(n, layout[j], s)) g(term->index, s) += pj * term->coefficient;
    }
  }
  return g;
}

Eigen::MatrixXcd JumpOperator::matrix(int n) const {
  const Eigen::Index dim = Eigen::Index{1} << n;
  Eigen::MatrixXcd l = Eigen::MatrixXcd::Zero(dim, dim);
  for (std::size_t k = 0; k < basis.size(); ++k)
    l += coefficients[static_cast<Eigen::Index>(k)] *
         to_matrix(PauliString::from_index(n, basis[k]), kMaxQubits);
  return l;
}

std::vector<JumpOperator> jump_decomposition(const Eigen::MatrixXcd& d,
                                             std::span<const std::uint32_t> basis,
                                             double zero_tol) {
  if (d.rows() != d.cols() || d.rows() != static_cast<Eigen::Index>(basis.size()))
    throw DimensionError("dissipation matrix does not match its basis");
  std::vector<JumpOperator> jumps;
  if (d.size() == 0) return jumps;
  const double norm = d.cwiseAbs().maxCoeff();
  if (hermiticity_defect(d) > 1e-12 * (1.0 + norm))
    throw ContractViolation("jump decomposition requires a Hermitian dissipation matrix");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(d);
  const double cutoff = zero_tol * std::max(1.0, norm);
  // Largest rate first.
  for (Eigen::Index k = d.rows() - 1; k >= 0; --k) {
    const double rate = eig.eigenvalues()[k];
    if (std::abs(rate) <= cutoff) continue;
    Eigen::VectorXcd v = eig.eigenvectors().col(k);
    Eigen::Index lead = 0;
    v.cwiseAbs().maxCoeff(&lead);
    v *= std::polar(1.0, -std::arg(v[lead]));
    jumps.push_back({rate, rate < 0.0, {basis.begin(), basis.end()}, std::move(v)});
  }
  return jumps;
}

std::vector<JumpOperator> jump_decomposition(const LindbladModel& m, double zero_tol) {
  return jump_decomposition(m.dissipation(), m.model_template().dissipative_basis(), zero_tol);
}

Eigen::MatrixXcd apply_jumps(std::span<const JumpOperator> jumps, int n,
                             const Eigen::MatrixXcd& op) {
  check_square(op, n);
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(op.rows(), op.cols());
  for (const auto& j : jumps) {
    const Eigen::MatrixXcd l = j.matrix(n);
    const Eigen::MatrixXcd ldl = l.adjoint() * l;
    out += j.rate * (l * op * l.adjoint() - 0.5 * (ldl * op + op * ldl));
  }
  return out;
}

PhysicalityReport validate_physical(const LindbladModel& m, double tol) {
  PhysicalityReport report;
  if (m.dissipation().size() == 0) return report;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(m.dissipation(), Eigen::EigenvaluesOnly);
  report.min_eigenvalue = eig.eigenvalues().minCoeff();
  report.passed = report.min_eigenvalue >= -tol;
  return report;
}

}  // namespace lindtomo
