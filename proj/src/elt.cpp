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

#include "lindtomo/elt.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <memory>

#include "lindtomo/error.hpp"

namespace lindtomo {
namespace {

struct SiteOption {
  Pauli letter;
  bool negative;
};

std::vector<Pauli> letters_from(const std::string& allowed, const char* what) {
  std::vector<Pauli> out;
  for (char c : std::string("XYZ"))
    if (allowed.find(c) != std::string::npos) out.push_back(pauli_from_char(c));
  for (char c : allowed)
    if (c != 'X' && c != 'Y' && c != 'Z')
      throw ConfigError(std::string(what) + " letters must be drawn from XYZ");
  if (out.empty()) throw ConfigError(std::string(what) + " restriction allows no letters");
  return out;
}

// Parity of the outcome bits selected by mask, as +1 / -1.
inline double parity_sign(std::uint32_t bits, std::uint32_t mask) {
  return (std::popcount(bits & mask) & 1) ? -1.0 : 1.0;
}

PauliString restrict(const PauliString& p, std::uint32_t mask) {
  return PauliString::from_masks(p.size(), p.x_mask() & mask, p.z_mask() & mask);
}

}  // namespace

std::vector<EltConfiguration> enumerate_configurations(int n, const ConfigurationRestriction& r) {
  if (n < 1 || n > kMaxQubits) throw DomainError("configuration enumeration needs 1 <= n <= 16");
  std::vector<SiteOption> states;
  for (Pauli p : letters_from(r.state_letters, "state"))
    for (bool neg : {false, true}) states.push_back({p, neg});
  const std::vector<Pauli> bases = letters_from(r.basis_letters, "basis");
  const auto ns = static_cast<std::uint64_t>(std::pow(states.size(), n));
  const auto nb = static_cast<std::uint64_t>(std::pow(bases.size(), n));
  std::vector<EltConfiguration> out;
  out.reserve(ns * nb);
  for (std::uint64_t s = 0; s < ns; ++s) {
    ProductState st{PauliString(n), 0};
    std::uint64_t code = s;
    for (int k = n - 1; k >= 0; --k, code /= states.size()) {
      const SiteOption& o = states[code % states.size()];
      st.letters.set(k, o.letter);
      if (o.negative) st.negative |= 1U << (n - 1 - k);
    }
    for (std::uint64_t b = 0; b < nb; ++b) {
      PauliString basis(n);
      std::uint64_t bc = b;
      for (int k = n - 1; k >= 0; --k, bc /= bases.size()) basis.set(k, bases[bc % bases.size()]);
      out.push_back({st, basis});
    }
  }
  return out;
}

std::string to_string(Acquisition a) { return a == Acquisition::kShots ? "shots" : "noiseless"; }

Acquisition acquisition_from_string(std::string_view s) {
  if (s == "shots") return Acquisition::kShots;
  if (s == "noiseless") return Acquisition::kNoiseless;
  throw ConfigError("unknown acquisition mode '" + std::string(s) + "'");
}

void EltPlan::validate() const {
  if (n < 1) throw ContractViolation("ELT plan needs n >= 1");
  if (configurations.empty()) throw ContractViolation("ELT plan has no configurations");
  if (times.empty()) throw ContractViolation("ELT plan has no times");
  if (shots_per_config == 0) throw ContractViolation("ELT plan needs N_shot >= 1");
  if (times.front() < 0.0) throw ContractViolation("ELT times must be non-negative");
  if (!std::is_sorted(times.begin(), times.end()))
    throw ContractViolation("ELT times must be sorted ascending");
  for (const auto& c : configurations)
    if (c.state.qubits() != n || c.basis.size() != n)
      throw ContractViolation("ELT configuration size does not match plan");
}

EltPlan make_elt_plan(int n, std::vector<double> times, std::size_t shots_per_config,
                      Acquisition acquisition, const ConfigurationRestriction& r) {
  EltPlan p{n, enumerate_configurations(n, r), std::move(times), shots_per_config, acquisition};
  p.validate();
  return p;
}

std::vector<double> uniform_times(double t_max, std::size_t count) {
  if (!(t_max > 0.0)) throw DomainError("t_max must be positive");
  if (count < 2) throw DomainError("a uniform grid needs at least two times");
  std::vector<double> t(count);
  for (std::size_t i = 0; i < count; ++i)
    t[i] = t_max * static_cast<double>(i) / static_cast<double>(count - 1);
  t.back() = t_max;
  return t;
}

EltDataset::EltDataset(EltPlan plan, std::vector<double> weights)
    : plan_(std::move(plan)), weights_(std::move(weights)) {
  plan_.validate();
  if (weights_.size() != plan_.times.size() * plan_.configurations.size() * outcome_count())
    throw DimensionError("ELT histogram storage does not match plan");
}

std::span<const double> EltDataset::histogram(std::size_t time, std::size_t config) const {
  if (time >= plan_.times.size() || config >= plan_.configurations.size())
    throw DimensionError("ELT histogram index out of range");
  const std::size_t k = outcome_count();
  return {weights_.data() + (time * plan_.configurations.size() + config) * k, k};
}

EltDataset acquire_elt(const EltPlan& plan, const LindbladModel& m, const NoiseModel& noise,
                       std::uint64_t seed, Execution exec) {
  plan.validate();
  if (m.qubits() != plan.n) throw DimensionError("model size does not match ELT plan");
  if (noise.qubits() != plan.n) throw DimensionError("noise model size does not match ELT plan");
  noise.validate();
  const std::size_t nt = plan.times.size();
  const std::size_t nc = plan.configurations.size();
  const std::size_t nout = std::size_t{1} << plan.n;
  const std::size_t shots = plan.shots_per_config;

  const PropagatorCache cache(m);
  std::vector<std::shared_ptr<const Eigen::MatrixXd>> ptm(nt);
  const auto nti = static_cast<std::ptrdiff_t>(nt);
  if (exec == Execution::kParallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t k = 0; k < nti; ++k) ptm[static_cast<std::size_t>(k)] = cache.ptm(plan.times[static_cast<std::size_t>(k)]);
  } else {
    for (std::size_t k = 0; k < nt; ++k) ptm[k] = cache.ptm(plan.times[k]);
  }

  std::vector<double> w(nt * nc * nout, 0.0);
  auto cell = [&](std::size_t idx) {
    const std::size_t k = idx / nc;
    const std::size_t c = idx % nc;
    const EltConfiguration& cfg = plan.configurations[c];
    double* out = w.data() + idx * nout;
    if (plan.acquisition == Acquisition::kNoiseless) {
      const auto p = outcome_distribution(*ptm[k], cfg.state, cfg.basis, noise);
      for (std::size_t o = 0; o < nout; ++o) out[o] = static_cast<double>(shots) * p[o];
      return;
    }
    SettingSampler sampler(*ptm[k], cfg.state.letters, cfg.basis, noise);
    for (std::size_t s = 0; s < shots; ++s) {
      Stream rng = Stream::derive(seed, StreamDomain::kAcquisition, k, c * shots + s);
      out[sampler.sample(cfg.state.negative, rng).bits] += 1.0;
    }
  };
  const auto cells = static_cast<std::ptrdiff_t>(nt * nc);
  if (exec == Execution::kParallel) {
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t i = 0; i < cells; ++i) cell(static_cast<std::size_t>(i));
  } else {
    for (std::ptrdiff_t i = 0; i < cells; ++i) cell(static_cast<std::size_t>(i));
  }
  return EltDataset(plan, std::move(w));
}

std::vector<ExpectationTrace> expectation_traces(const EltDataset& data, const NoiseModel* readout) {
  const EltPlan& plan = data.plan();
  const int n = plan.n;
  const std::size_t nout = data.outcome_count();
  const std::size_t nt = plan.times.size();
  const auto shots = static_cast<double>(plan.shots_per_config);
  const bool noiseless = plan.acquisition == Acquisition::kNoiseless;
  if (readout && readout->qubits() != n) throw DimensionError("readout model size mismatch");

  // Per-site affine readout: E[m'] = a m + b.
  std::vector<double> a(static_cast<std::size_t>(n), 1.0);
  std::vector<double> b(static_cast<std::size_t>(n), 0.0);
  if (readout) {
    for (int k = 0; k < n; ++k) {
      const Eigen::Matrix2d& c = readout->confusion[static_cast<std::size_t>(k)];
      a[static_cast<std::size_t>(k)] = 1.0 - c(0, 1) - c(1, 0);
      b[static_cast<std::size_t>(k)] = c(1, 0) - c(0, 1);
      if (std::abs(a[static_cast<std::size_t>(k)]) < 1e-12)
        throw DomainError("confusion matrix is singular");
    }
  }
  auto site_of = [n](std::uint32_t bit) { return n - 1 - std::countr_zero(bit); };
  auto raw_error = [&](double mean) {
    if (noiseless) return 1.0 / std::sqrt(shots);
    return shots > 1 ? std::sqrt(std::max(0.0, 1.0 - mean * mean) / (shots - 1.0)) : 1.0;
  };

  std::vector<ExpectationTrace> traces;
  traces.reserve(plan.configurations.size() * (nout - 1));
  for (std::size_t c = 0; c < plan.configurations.size(); ++c) {
    const EltConfiguration& cfg = plan.configurations[c];
    const std::size_t first = traces.size();
    for (std::uint32_t u = 1; u < nout; ++u) {
      ExpectationTrace t;
      t.probe = ProbeConfiguration::state_probe(cfg.state, restrict(cfg.basis, u));
      t.config = c;
      t.observable = u;
      t.times = plan.times;
      t.values.resize(nt);
      t.stderrs.resize(nt);
      t.shots = plan.shots_per_config;
      traces.push_back(std::move(t));
    }
    std::vector<double> mean(nout);
    for (std::size_t k = 0; k < nt; ++k) {
      const auto h = data.histogram(k, c);
      for (std::uint32_t u = 0; u < nout; ++u) {
        double acc = 0.0;
        for (std::uint32_t o = 0; o < nout; ++o) acc += h[o] * parity_sign(o, u);
        mean[u] = acc / shots;
      }
      if (readout) {
        // Ascending masks visit every proper subset first.
        std::vector<double> fixed(nout);
        fixed[0] = 1.0;
        for (std::uint32_t u = 1; u < nout; ++u) {
          double rest = 0.0;
          for (std::uint32_t v = (u - 1) & u;; v = (v - 1) & u) {
            double coef = 1.0;
            for (std::uint32_t bits = u; bits; bits &= bits - 1) {
              const std::uint32_t bit = bits & (~bits + 1);
              const auto k2 = static_cast<std::size_t>(site_of(bit));
              coef *= (v & bit) ? a[k2] : b[k2];
            }
            rest += coef * fixed[v];
            if (v == 0) break;
          }
          double scale = 1.0;
          for (std::uint32_t bits = u; bits; bits &= bits - 1)
            scale *= a[static_cast<std::size_t>(site_of(bits & (~bits + 1)))];
          fixed[u] = (mean[u] - rest) / scale;
        }
        for (std::uint32_t u = 1; u < nout; ++u) {
          double scale = 1.0;
          for (std::uint32_t bits = u; bits; bits &= bits - 1)
            scale *= a[static_cast<std::size_t>(site_of(bits & (~bits + 1)))];
          ExpectationTrace& t = traces[first + u - 1];
          t.values[k] = fixed[u];
          t.stderrs[k] = raw_error(mean[u]) / std::abs(scale);
        }
        continue;
      }
      for (std::uint32_t u = 1; u < nout; ++u) {
        ExpectationTrace& t = traces[first + u - 1];
        t.values[k] = mean[u];
        t.stderrs[k] = raw_error(mean[u]);
      }
    }
  }
  return traces;
}

SignalSeries reduce_to_ptm(const std::vector<ExpectationTrace>& traces,
                           const std::vector<ProbeConfiguration>& pauli_probes) {
  if (traces.empty()) throw InsufficientDataError("no expectation traces");
  const std::vector<double>& times = traces.front().times;
  std::map<std::uint64_t, std::vector<std::size_t>> by_output;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    if (traces[i].times != times) throw DataError("expectation traces have different time grids");
    by_output[traces[i].probe.output.index()].push_back(i);
  }
  const auto nt = static_cast<Eigen::Index>(times.size());
  const auto np = static_cast<Eigen::Index>(pauli_probes.size());
  SignalSeries s{times, Eigen::MatrixXd::Zero(nt, np), Eigen::MatrixXd::Zero(nt, np)};
  for (const auto& pr : pauli_probes)
    if (pr.kind != ProbeConfiguration::Kind::kPauli)
      throw ContractViolation("PTM reduction needs Pauli probes");
  std::vector<std::string> missing(pauli_probes.size());
  auto body = [&](Eigen::Index j) {
    const ProbeConfiguration& pr = pauli_probes[static_cast<std::size_t>(j)];
    const auto it = by_output.find(pr.output.index());
    const std::uint32_t qs = pr.input.support_mask();
    std::size_t count = 0;
    if (it != by_output.end()) {
      for (std::size_t i : it->second) {
        const ProductState& st = traces[i].probe.state;
        if (restrict(st.letters, qs) != pr.input) continue;
        const double sign = parity_sign(st.negative, qs);
        for (Eigen::Index k = 0; k < nt; ++k) {
          s.values(k, j) += sign * traces[i].values[static_cast<std::size_t>(k)];
          const double e = traces[i].stderrs[static_cast<std::size_t>(k)];
          s.stderrs(k, j) += e * e;
        }
        ++count;
      }
    }
    if (count == 0) {
      missing[static_cast<std::size_t>(j)] = pr.label();
      return;
    }
    const auto cnt = static_cast<double>(count);
    s.values.col(j) /= cnt;
    s.stderrs.col(j) = s.stderrs.col(j).cwiseSqrt() / cnt;
  };
#pragma omp parallel for schedule(dynamic, 16)
  for (Eigen::Index j = 0; j < np; ++j) body(j);
  std::string list;
  std::size_t nmiss = 0;
  for (const auto& m : missing)
    if (!m.empty() && nmiss++ < 8) list += (list.empty() ? "" : ", ") + m;
  if (nmiss)
    throw InsufficientDataError("no configurations estimate PTM element(s) " + list +
                                (nmiss > 8 ? ", ..." : ""));
  return s;
}

std::string to_string(EltRoute r) {
  switch (r) {
    case EltRoute::kAuto: return "auto";
    case EltRoute::kDirect: return "direct";
    case EltRoute::kPtmReduction: return "ptm";
  }
  return "auto";
}

EltRoute elt_route_from_string(std::string_view s) {
  if (s == "auto") return EltRoute::kAuto;
  if (s == "direct") return EltRoute::kDirect;
  if (s == "ptm") return EltRoute::kPtmReduction;
  throw ConfigError("unknown ELT route '" + std::string(s) + "'");
}

EltAnalysis run_elt(const std::vector<ExpectationTrace>& traces, TemplatePtr tmpl,
                    const EltOptions& options) {
  if (traces.empty()) throw InsufficientDataError("no expectation traces");
  const int n = traces.front().probe.qubits();
  if (n != tmpl->qubits()) throw DimensionError("traces and template have different sizes");
  EltAnalysis out;
  out.route = options.route;
  if (out.route == EltRoute::kAuto)
    out.route = n <= 2 && options.inversion.strategy == InversionStrategy::kMinNorm
                    ? EltRoute::kDirect
                    : EltRoute::kPtmReduction;
  if (out.route == EltRoute::kDirect) {
    std::vector<ProbeConfiguration> probes;
    probes.reserve(traces.size());
    const auto nt = static_cast<Eigen::Index>(traces.front().times.size());
    const auto nr = static_cast<Eigen::Index>(traces.size());
    out.signal = {traces.front().times, Eigen::MatrixXd(nt, nr), Eigen::MatrixXd(nt, nr)};
    for (Eigen::Index i = 0; i < nr; ++i) {
      const ExpectationTrace& t = traces[static_cast<std::size_t>(i)];
      if (t.times != out.signal.times) throw DataError("expectation traces have different time grids");
      probes.push_back(t.probe);
      for (Eigen::Index k = 0; k < nt; ++k) {
        out.signal.values(k, i) = t.values[static_cast<std::size_t>(k)];
        out.signal.stderrs(k, i) = t.stderrs[static_cast<std::size_t>(k)];
      }
    }
    out.tm = build_transfer_matrix(tmpl, std::move(probes), options.exec);
  } else {
    std::vector<ProbeConfiguration> probes = pauli_probe_set(*tmpl);
    out.signal = reduce_to_ptm(traces, probes);
    out.tm = build_transfer_matrix(tmpl, std::move(probes), options.exec);
  }
  out.inversion = invert(out.tm, options.inversion);
  out.transformed = transform_signal(out.inversion, out.signal);
  out.estimates = estimate_from_series(out.transformed, tmpl, options.fit, "elt", options.exec);
  return out;
}

}  // namespace lindtomo
