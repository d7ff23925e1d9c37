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

#include "lindtomo/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "lindtomo/error.hpp"
#include "lindtomo/lp.hpp"
#include "lindtomo/transfer_matrix.hpp"

namespace lindtomo {
namespace {

double horner(const Eigen::VectorXd& c, double t) {
  double v = 0.0;
  for (Eigen::Index k = c.size() - 1; k >= 0; --k) v = v * t + c[k];
  return v;
}

// Coefficients in t of sum_k a_k ((t - center) / scale)^k.
Eigen::VectorXd to_monomial(const Eigen::VectorXd& a, double center, double scale) {
  const Eigen::Index deg = a.size() - 1;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(a.size());
  for (Eigen::Index k = 0; k <= deg; ++k) {
    // (t - c)^k = sum_m binom(k, m) t^m (-c)^(k-m)
    double binom = 1.0;
    for (Eigen::Index m = 0; m <= k; ++m) {
      out[m] += a[k] * binom * std::pow(-center, static_cast<double>(k - m)) /
                std::pow(scale, static_cast<double>(k));
      binom = binom * static_cast<double>(k - m) / static_cast<double>(m + 1);
    }
  }
  return out;
}

double median(std::vector<double> v) {
  const std::size_t n = v.size();
  std::sort(v.begin(), v.end());
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct Assignment {
  std::vector<int> interval;  // per point
  std::vector<std::vector<std::size_t>> members;
};

Assignment assign(const ChebyshevPartition& part, std::span<const double> times) {
  Assignment a;
  a.members.resize(static_cast<std::size_t>(part.count));
  for (std::size_t i = 0; i < times.size(); ++i) {
    const int j = part.locate(times[i]);
    a.interval.push_back(j);
    a.members[static_cast<std::size_t>(j)].push_back(i);
  }
  return a;
}

void require_nonempty(const Assignment& a) {
  std::ostringstream os;
  bool bad = false;
  for (std::size_t j = 0; j < a.members.size(); ++j)
    if (a.members[j].empty()) {
      os << (bad ? ", " : "") << "I_" << j + 1;
      bad = true;
    }
  if (bad) throw DomainError("robust fit has empty Chebyshev intervals: " + os.str());
}

// e^{-z} I0(z) for z >= 0.
double scaled_bessel_i0(double z) {
  if (z <= 30.0) {
    const double q = 0.25 * z * z;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 500; ++k) {
      term *= q / (static_cast<double>(k) * static_cast<double>(k));
      sum += term;
      if (term < 1e-17 * sum) break;
    }
    return sum * std::exp(-z);
  }
  const double r = 1.0 / (8.0 * z);
  const double series = 1.0 + r * (1.0 + r * (4.5 + r * (37.5 + r * 459.375)));
  return series / std::sqrt(2.0 * std::numbers::pi * z);
}

double rice_pdf(double x, double nu, double sigma) {
  if (x <= 0.0) return 0.0;
  const double s2 = sigma * sigma;
  const double d = x - nu;
  return x / s2 * std::exp(-0.5 * d * d / s2) * scaled_bessel_i0(x * nu / s2);
}

// Cumulative Simpson table of the Rice density on a window holding all
// but a negligible tail.
class RiceTable {
 public:
  RiceTable(double nu, double sigma) : nu_(nu), sigma_(sigma) {
    if (!(sigma > 0.0)) throw DomainError("Rice sigma must be positive");
    if (!(nu >= 0.0)) throw DomainError("Rice nu must be non-negative");
    lo_ = std::max(0.0, nu - 12.0 * sigma);
    hi_ = nu + 12.0 * sigma;
    h_ = (hi_ - lo_) / kPanels;
    cum_.assign(kPanels + 1, 0.0);
    double prev = rice_pdf(lo_, nu, sigma);
    for (int k = 0; k < kPanels; ++k) {
      const double a = lo_ + k * h_;
      const double mid = rice_pdf(a + 0.5 * h_, nu, sigma);
      const double next = rice_pdf(a + h_, nu, sigma);
      cum_[k + 1] = cum_[k] + h_ / 6.0 * (prev + 4.0 * mid + next);
      prev = next;
    }
    total_ = cum_.back();
  }

  double cdf(double x) const {
    if (x <= lo_) return 0.0;
    if (x >= hi_) return 1.0;
    const int k = std::min(kPanels - 1, static_cast<int>((x - lo_) / h_));
    const double a = lo_ + k * h_;
    const double w = x - a;
    const double part = w / 6.0 *
                        (rice_pdf(a, nu_, sigma_) + 4.0 * rice_pdf(a + 0.5 * w, nu_, sigma_) +
                         rice_pdf(x, nu_, sigma_));
    return (cum_[k] + part) / total_;
  }

  double quantile(double level) const {
    if (!(level > 0.0 && level < 1.0)) throw DomainError("quantile level must lie in (0, 1)");
    double a = lo_;
    double b = hi_;
    for (int it = 0; it < 200 && b - a > 1e-14 * (1.0 + hi_); ++it) {
      const double m = 0.5 * (a + b);
      (cdf(m) < level ? a : b) = m;
    }
    return 0.5 * (a + b);
  }

 private:
  static constexpr int kPanels = 4096;
  double nu_, sigma_, lo_, hi_, h_, total_;
  std::vector<double> cum_;
};

ComponentFit fit_component(std::span<const double> t, std::span<const double> y,
                           std::vector<double> s, const FitOptions& options) {
  ComponentFit out;
  // Zero standard errors (e.g. a deterministic t = 0 readout) are floored
  // at the smallest positive one in the series.
  double floor = std::numeric_limits<double>::infinity();
  for (double v : s)
    if (v > 0.0) floor = std::min(floor, v);
  if (!std::isfinite(floor)) floor = 1.0;
  for (double& v : s)
    if (!(v > 0.0)) v = floor;
  try {
    if (options.method == FitMethod::kChi2) {
      const FitResult f = chi2_polyfit(t, y, s, options.degree);
      out.slope = f.slope();
      out.stderr = f.slope_stderr();
      out.chi2 = f.chi2;
      out.dof = f.dof;
    } else {
      RobustFitOptions ro = options.robust;
      ro.degree = options.degree;
      const RobustFitResult f = robust_polyfit(t, y, std::span<const double>(s), ro);
      out.slope = f.slope();
      out.stderr = f.derivative_bound;
      out.dof = static_cast<int>(t.size()) - (options.degree + 1);
      if (!f.converged) out.message = "robust corrections hit the iteration limit";
    }
  } catch (const std::exception& e) {
    out.ok = false;
    out.slope = std::numeric_limits<double>::quiet_NaN();
    out.stderr = std::numeric_limits<double>::quiet_NaN();
    out.message = e.what();
  }
  return out;
}

}  // namespace

double FitResult::slope_stderr() const {
  return covariance.rows() > 1 ? std::sqrt(covariance(1, 1)) : 0.0;
}

double FitResult::evaluate(double t) const { return horner(coefficients, t); }

FitResult chi2_polyfit(std::span<const double> times, std::span<const double> values,
                       std::span<const double> sigmas, int degree) {
  if (degree < 0) throw DomainError("polynomial degree must be non-negative");
  if (times.size() != values.size() || times.size() != sigmas.size())
    throw DimensionError("fit inputs have different lengths");
  const auto n = static_cast<Eigen::Index>(times.size());
  if (n < degree + 2) throw InsufficientDataError("chi2 fit needs at least degree + 2 points");
  for (double s : sigmas)
    if (!(s > 0.0)) throw DomainError("chi2 fit sigmas must be positive");
  Eigen::MatrixXd a(n, degree + 1);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = 1.0 / sigmas[static_cast<std::size_t>(i)];
    double p = 1.0;
    for (int k = 0; k <= degree; ++k) {
      a(i, k) = w * p;
      p *= times[static_cast<std::size_t>(i)];
    }
    b[i] = w * values[static_cast<std::size_t>(i)];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < degree + 1) throw InsufficientDataError("chi2 fit design matrix is rank deficient");
  FitResult f;
  f.coefficients = qr.solve(b);
  const Eigen::MatrixXd ata = a.transpose() * a;
  f.covariance = ata.ldlt().solve(Eigen::MatrixXd::Identity(degree + 1, degree + 1));
  f.covariance = 0.5 * (f.covariance + f.covariance.transpose()).eval();
  f.chi2 = (a * f.coefficients - b).squaredNorm();
  f.dof = static_cast<int>(n) - (degree + 1);
  return f;
}

int ChebyshevPartition::locate(double t) const {
  if (t < t_min || t > t_max) throw DomainError("time lies outside the partition");
  for (int j = 0; j < count; ++j) {
    const auto [lo, hi] = intervals[static_cast<std::size_t>(j)];
    if (t >= lo && (t < hi || (j == 0 && t <= hi))) return j;
    if (t == hi) return j == 0 ? 0 : j - 1;
  }
  return count - 1;
}

ChebyshevPartition chebyshev_partition(double t_min, double t_max, int count) {
  if (!(t_max > t_min)) throw DomainError("partition needs t_max > t_min");
  if (count < 1) throw DomainError("partition needs at least one interval");
  ChebyshevPartition p{t_min, t_max, count, {}};
  const double tbar = p.center();
  const double tdel = p.half_width();
  std::vector<double> b(static_cast<std::size_t>(count) + 1);
  for (int j = 0; j <= count; ++j)
    b[static_cast<std::size_t>(j)] = tdel * std::cos(std::numbers::pi * j / count) + tbar;
  b.front() = t_max;
  b.back() = t_min;
  for (int j = 1; j <= count; ++j)
    p.intervals.emplace_back(b[static_cast<std::size_t>(j)], b[static_cast<std::size_t>(j) - 1]);
  return p;
}

std::vector<double> chebyshev_sample_times(double t_min, double t_max, std::size_t count,
                                           Stream& rng) {
  if (!(t_max > t_min)) throw DomainError("sampling needs t_max > t_min");
  if (count < 1) throw DomainError("sampling needs count >= 1");
  const double tbar = 0.5 * (t_max + t_min);
  const double tdel = 0.5 * (t_max - t_min);
  std::vector<double> out(count);
  for (auto& t : out) t = std::clamp(tbar + tdel * std::cos(std::numbers::pi * rng.uniform()), t_min, t_max);
  return out;
}

double RobustFitResult::evaluate(double t) const { return horner(coefficients, t); }

double l1_loss(const ChebyshevPartition& part, std::span<const double> times,
               std::span<const double> values, const Eigen::VectorXd& poly) {
  const Assignment a = assign(part, times);
  double loss = 0.0;
  for (std::size_t j = 0; j < a.members.size(); ++j) {
    if (a.members[j].empty()) continue;
    const auto [lo, hi] = part.intervals[j];
    double acc = 0.0;
    for (auto i : a.members[j]) acc += std::abs(values[i] - horner(poly, times[i]));
    loss += (hi - lo) * acc / static_cast<double>(a.members[j].size());
  }
  return loss;
}

double linf_loss(const ChebyshevPartition& part, std::span<const double> times,
                 std::span<const double> values, const Eigen::VectorXd& poly) {
  const Assignment a = assign(part, times);
  double loss = 0.0;
  for (std::size_t j = 0; j < a.members.size(); ++j) {
    if (a.members[j].empty()) continue;
    std::vector<double> y;
    for (auto i : a.members[j]) y.push_back(values[i]);
    const auto [lo, hi] = part.intervals[j];
    loss = std::max(loss, std::abs(horner(poly, 0.5 * (lo + hi)) - median(std::move(y))));
  }
  return loss;
}

RobustFitResult robust_polyfit(std::span<const double> times, std::span<const double> values,
                               double sigma, const RobustFitOptions& options) {
  if (times.size() != values.size()) throw DimensionError("fit inputs have different lengths");
  if (times.empty()) throw InsufficientDataError("robust fit needs data");
  const int deg = options.degree;
  const int m = options.partitions;
  if (deg < 0) throw DomainError("polynomial degree must be non-negative");
  if (m < deg + 1) throw DomainError("robust fit needs at least degree + 1 intervals");
  const auto [tmin_it, tmax_it] = std::minmax_element(times.begin(), times.end());
  RobustFitResult r;
  r.partition = chebyshev_partition(*tmin_it, *tmax_it, m);
  const Assignment asg = assign(r.partition, times);
  require_nonempty(asg);

  const double tbar = r.partition.center();
  const double tdel = r.partition.half_width();
  const auto npts = static_cast<Eigen::Index>(times.size());
  const int ncoef = deg + 1;
  Eigen::MatrixXd v(npts, ncoef);  // in tau = (t - tbar) / tdel
  for (Eigen::Index i = 0; i < npts; ++i) {
    const double tau = (times[static_cast<std::size_t>(i)] - tbar) / tdel;
    double p = 1.0;
    for (int k = 0; k < ncoef; ++k, p *= tau) v(i, k) = p;
  }

  // Baseline L1: variables (a_0..a_K free, e_i >= 0).
  LinearProgram l1;
  l1.c = Eigen::VectorXd::Zero(ncoef + npts);
  l1.A = Eigen::MatrixXd::Zero(2 * npts, ncoef + npts);
  l1.b = Eigen::VectorXd::Zero(2 * npts);
  l1.free_variable.assign(static_cast<std::size_t>(ncoef + npts), false);
  for (int k = 0; k < ncoef; ++k) l1.free_variable[static_cast<std::size_t>(k)] = true;
  for (Eigen::Index i = 0; i < npts; ++i) {
    const auto j = static_cast<std::size_t>(asg.interval[static_cast<std::size_t>(i)]);
    const auto [lo, hi] = r.partition.intervals[j];
    l1.c[ncoef + i] = (hi - lo) / tdel / static_cast<double>(asg.members[j].size());
    const double y = values[static_cast<std::size_t>(i)];
    l1.A.block(2 * i, 0, 1, ncoef) = -v.row(i);
    l1.A(2 * i, ncoef + i) = -1.0;
    l1.b[2 * i] = -y;
    l1.A.block(2 * i + 1, 0, 1, ncoef) = v.row(i);
    l1.A(2 * i + 1, ncoef + i) = -1.0;
    l1.b[2 * i + 1] = y;
  }
  const LpSolution base = solve_lp(l1);
  Eigen::VectorXd total = base.x.head(ncoef);
  r.baseline = to_monomial(total, tbar, tdel);

  double scale = 0.0;
  for (double y : values) scale = std::max(scale, std::abs(y));
  const double threshold =
      options.stop_threshold > 0.0 ? options.stop_threshold : 1e-3 * (scale > 0.0 ? scale : 1.0);

  std::vector<double> z(times.size());
  for (Eigen::Index i = 0; i < npts; ++i)
    z[static_cast<std::size_t>(i)] = values[static_cast<std::size_t>(i)] - v.row(i).dot(total);
  Eigen::MatrixXd rep(m, ncoef);
  for (int j = 0; j < m; ++j) {
    const auto [lo, hi] = r.partition.intervals[static_cast<std::size_t>(j)];
    const double tau = (0.5 * (lo + hi) - tbar) / tdel;
    double p = 1.0;
    for (int k = 0; k < ncoef; ++k, p *= tau) rep(j, k) = p;
  }

  // Corrections: variables (q_0..q_K free, s >= 0), minimize s.
  for (int it = 0; it < options.max_iters; ++it) {
    LinearProgram li;
    li.c = Eigen::VectorXd::Zero(ncoef + 1);
    li.c[ncoef] = 1.0;
    li.A = Eigen::MatrixXd::Zero(2 * m, ncoef + 1);
    li.b = Eigen::VectorXd::Zero(2 * m);
    li.free_variable.assign(static_cast<std::size_t>(ncoef + 1), true);
    li.free_variable.back() = false;
    for (int j = 0; j < m; ++j) {
      std::vector<double> zj;
      for (auto i : asg.members[static_cast<std::size_t>(j)]) zj.push_back(z[i]);
      const double med = median(std::move(zj));
      li.A.block(2 * j, 0, 1, ncoef) = rep.row(j);
      li.A(2 * j, ncoef) = -1.0;
      li.b[2 * j] = med;
      li.A.block(2 * j + 1, 0, 1, ncoef) = -rep.row(j);
      li.A(2 * j + 1, ncoef) = -1.0;
      li.b[2 * j + 1] = -med;
    }
    const LpSolution corr = solve_lp(li);
    const Eigen::VectorXd q = corr.x.head(ncoef);
    total += q;
    for (Eigen::Index i = 0; i < npts; ++i) z[static_cast<std::size_t>(i)] -= v.row(i).dot(q);
    r.iterations = it + 1;
    if ((rep * q).cwiseAbs().maxCoeff() < threshold) {
      r.converged = true;
      break;
    }
  }
  r.coefficients = to_monomial(total, tbar, tdel);

  r.sigma = sigma;
  r.sup_bound = 3.0 * sigma;
  const double tmin = r.partition.t_min;
  r.derivative_bound_markov =
      tmin > 0.0 ? 3.0 * std::numbers::e * sigma / tmin : std::numeric_limits<double>::infinity();
  r.derivative_bound_chebyshev = 3.0 * sigma * tbar / (tdel * tdel);
  r.derivative_bound = std::min(r.derivative_bound_markov, r.derivative_bound_chebyshev);
  return r;
}

RobustFitResult robust_polyfit(std::span<const double> times, std::span<const double> values,
                               std::span<const double> sigmas, const RobustFitOptions& options) {
  if (sigmas.size() != times.size()) throw DimensionError("fit inputs have different lengths");
  const double sigma = sigmas.empty() ? 0.0 : *std::max_element(sigmas.begin(), sigmas.end());
  return robust_polyfit(times, values, sigma, options);
}

double rice_cdf(double x, double nu, double sigma) { return RiceTable(nu, sigma).cdf(x); }

double rice_quantile(double nu, double sigma, double level) {
  return RiceTable(nu, sigma).quantile(level);
}

std::pair<double, double> rice_quantiles(double nu, double sigma, double lo, double hi) {
  if (!(lo < hi)) throw DomainError("quantile levels must be increasing");
  const RiceTable table(nu, sigma);
  return {table.quantile(lo), table.quantile(hi)};
}

ParameterEstimate slope_to_parameter(std::span<const SlopeComponent> components, ValueKind kind,
                                     std::string label) {
  const std::size_t want = kind == ValueKind::kReal ? 1 : 2;
  if (components.size() != want)
    throw DimensionError("slope_to_parameter expects " + std::to_string(want) + " component(s)");
  ParameterEstimate e;
  e.label = std::move(label);
  e.kind = kind;
  if (kind == ValueKind::kReal) {
    e.value = components[0].value;
    e.stderr = components[0].stderr;
  } else {
    e.value = {components[0].value, components[1].value};
    const double a = components[0].stderr;
    const double b = components[1].stderr;
    e.stderr = std::max(a, b);
    e.unequal_errors = std::abs(a - b) > 0.01 * e.stderr;
  }
  e.magnitude = std::abs(e.value);
  if (e.stderr > 0.0 && std::isfinite(e.stderr) && std::isfinite(e.magnitude)) {
    std::tie(e.quantile_lo, e.quantile_hi) = rice_quantiles(e.magnitude, e.stderr);
  } else {
    e.quantile_lo = e.quantile_hi = e.magnitude;
  }
  return e;
}

std::string to_string(FitMethod m) { return m == FitMethod::kChi2 ? "chi2" : "robust"; }

FitMethod fit_method_from_string(std::string_view s) {
  if (s == "chi2") return FitMethod::kChi2;
  if (s == "robust") return FitMethod::kRobust;
  throw ConfigError("unknown fit method '" + std::string(s) + "'");
}

std::vector<ParameterEstimate> group_terms(const ModelTemplate& t, const Eigen::VectorXd& values,
                                           const Eigen::VectorXd& stderrs) {
  const int n = t.qubits();
  const auto& layout = t.layout();
  std::vector<ParameterEstimate> terms;
  for (std::size_t j = 0; j < layout.size(); ++j) {
    const ParamInfo& info = layout[j];
    const auto jj = static_cast<Eigen::Index>(j);
    if (info.kind == ParamKind::kDissipativeImag) continue;
    if (info.kind == ParamKind::kDissipativeReal) {
      const SlopeComponent c[2] = {{values[jj], stderrs[jj]}, {values[jj + 1], stderrs[jj + 1]}};
      const std::string label = "D[" + PauliString::from_index(n, info.p).str() + ";" +
                                PauliString::from_index(n, info.q).str() + "]";
      terms.push_back(slope_to_parameter(c, ValueKind::kComplex, label));
    } else {
      const SlopeComponent c[1] = {{values[jj], stderrs[jj]}};
      terms.push_back(slope_to_parameter(c, ValueKind::kReal, info.label(n)));
    }
  }
  return terms;
}

ParameterEstimates estimate_from_series(const SignalSeries& transformed, TemplatePtr tmpl,
                                        const FitOptions& options, std::string protocol,
                                        Execution exec) {
  const auto ncomp = static_cast<Eigen::Index>(tmpl->param_count());
  if (transformed.values.cols() != ncomp)
    throw DimensionError("transformed series does not match template size");
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < transformed.times.size(); ++i)
    if (options.include_t0 || transformed.times[i] != 0.0) keep.push_back(i);
  std::vector<double> t;
  for (auto i : keep) t.push_back(transformed.times[i]);

  ParameterEstimates est;
  est.tmpl = tmpl;
  est.protocol = std::move(protocol);
  est.method = options.method;
  est.values.resize(ncomp);
  est.stderrs.resize(ncomp);
  est.fits.resize(static_cast<std::size_t>(ncomp));
  auto body = [&](Eigen::Index j) {
    std::vector<double> y;
    std::vector<double> s;
    for (auto i : keep) {
      y.push_back(transformed.values(static_cast<Eigen::Index>(i), j));
      s.push_back(transformed.stderrs(static_cast<Eigen::Index>(i), j));
    }
    est.fits[static_cast<std::size_t>(j)] = fit_component(t, y, std::move(s), options);
  };
  if (exec == Execution::kParallel) {
#pragma omp parallel for schedule(dynamic, 8)
    for (Eigen::Index j = 0; j < ncomp; ++j) body(j);
  } else {
    for (Eigen::Index j = 0; j < ncomp; ++j) body(j);
  }
  for (Eigen::Index j = 0; j < ncomp; ++j) {
    est.values[j] = est.fits[static_cast<std::size_t>(j)].slope;
    est.stderrs[j] = est.fits[static_cast<std::size_t>(j)].stderr;
  }
  est.terms = group_terms(*tmpl, est.values, est.stderrs);
  return est;
}

}  // namespace lindtomo
