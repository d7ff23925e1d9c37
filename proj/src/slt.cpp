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

#include "lindtomo/slt.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <memory>
#include <sstream>
#include <unordered_map>

#include <omp.h>

#include "lindtomo/error.hpp"

namespace lindtomo {
namespace {

constexpr Pauli kLetters[3] = {Pauli::X, Pauli::Y, Pauli::Z};

inline int parity(std::uint32_t v) { return std::popcount(v) & 1; }

double pow3(int w) { return std::pow(3.0, w); }

// Slot lookup keyed by the packed masks (xP, zP, xQ, zQ).
class PairIndex {
 public:
  PairIndex(int n, std::span<const PauliPair> pairs) : n_(n), dense_(n <= 5) {
    if (dense_) table_.assign(std::size_t{1} << (4 * n), -1);
    for (std::size_t j = 0; j < pairs.size(); ++j) {
      const std::uint64_t k = key(pairs[j].first.x_mask(), pairs[j].first.z_mask(),
                                  pairs[j].second.x_mask(), pairs[j].second.z_mask());
      if (dense_)
        table_[k] = static_cast<std::int32_t>(j);
      else
        map_.emplace(k, static_cast<std::int32_t>(j));
    }
  }

  std::uint64_t key(std::uint32_t xp, std::uint32_t zp, std::uint32_t xq, std::uint32_t zq) const {
    return ((((static_cast<std::uint64_t>(xp) << n_) | zp) << (2 * n_)) | (xq << n_)) | zq;
  }

  std::int32_t find(std::uint64_t k) const {
    if (dense_) return table_[k];
    const auto it = map_.find(k);
    return it == map_.end() ? -1 : it->second;
  }

 private:
  int n_;
  bool dense_;
  std::vector<std::int32_t> table_;
  std::unordered_map<std::uint64_t, std::int32_t> map_;
};

struct Tally {
  std::vector<std::int64_t> sum;
  std::vector<std::int64_t> agree;
};

void accumulate(std::span<const ShadowShot> shots, const PairIndex& index,
                std::span<const std::pair<std::uint32_t, std::uint32_t>> masks, Tally& t) {
  for (const ShadowShot& s : shots) {
    for (const auto& [u, v] : masks) {
      const std::int32_t j = index.find(index.key(s.basis_x & u, s.basis_z & u, s.init_x & v,
                                                  s.init_z & v));
      if (j < 0) continue;
      const int sign = parity((s.outcome & u) ^ (s.init_negative & v));
      t.sum[static_cast<std::size_t>(j)] += sign ? -1 : 1;
      ++t.agree[static_cast<std::size_t>(j)];
    }
  }
}

}  // namespace

ShadowShot ShadowShot::make(std::size_t time_index, const ProductState& init,
                            const PauliString& basis, std::uint32_t outcome_bits) {
  if (time_index > 0xFFFF) throw CapacityError("shot time index exceeds 65535");
  if (init.qubits() != basis.size()) throw DimensionError("init and basis sizes differ");
  ShadowShot s;
  s.time_index = static_cast<std::uint16_t>(time_index);
  s.n = static_cast<std::uint8_t>(basis.size());
  s.init_x = static_cast<std::uint16_t>(init.letters.x_mask());
  s.init_z = static_cast<std::uint16_t>(init.letters.z_mask());
  s.init_negative = static_cast<std::uint16_t>(init.negative);
  s.basis_x = static_cast<std::uint16_t>(basis.x_mask());
  s.basis_z = static_cast<std::uint16_t>(basis.z_mask());
  s.outcome = static_cast<std::uint16_t>(outcome_bits);
  return s;
}

ShadowSetting draw_configuration(Stream& rng, int n) {
  ShadowSetting s{{PauliString(n), 0}, PauliString(n)};
  for (int k = 0; k < n; ++k) {
    const auto i = rng.bounded(6);
    s.init.letters.set(k, kLetters[i / 2]);
    if (i % 2) s.init.negative |= 1U << (n - 1 - k);
    s.basis.set(k, kLetters[rng.bounded(3)]);
  }
  return s;
}

bool agrees(const ShadowShot& shot, const PauliString& p, const PauliString& q) {
  if (p.size() != shot.n || q.size() != shot.n) throw DimensionError("shot and Pauli sizes differ");
  const std::uint32_t u = p.support_mask();
  const std::uint32_t v = q.support_mask();
  return (shot.basis_x & u) == p.x_mask() && (shot.basis_z & u) == p.z_mask() &&
         (shot.init_x & v) == q.x_mask() && (shot.init_z & v) == q.z_mask();
}

double single_shot_estimate(const ShadowShot& shot, const PauliString& p, const PauliString& q) {
  if (!agrees(shot, p, q)) return 0.0;
  const int sign = parity((shot.outcome & p.support_mask()) ^ (shot.init_negative & q.support_mask()));
  return (sign ? -1.0 : 1.0) * pow3(p.weight() + q.weight());
}

std::vector<PtmEstimate> estimate_ptm_batch(std::span<const ShadowShot> shots,
                                            std::span<const PauliPair> pairs, double time,
                                            Execution exec) {
  if (shots.empty()) throw InsufficientDataError("PTM estimation needs at least one shot");
  const int n = shots.front().n;
  for (const ShadowShot& s : shots) {
    if (s.n != n) throw DimensionError("shots have different qubit counts");
    if (s.time_index != shots.front().time_index)
      throw ContractViolation("a PTM batch must share one time index");
  }
  for (const auto& [p, q] : pairs)
    if (p.size() != n || q.size() != n) throw DimensionError("pair size does not match shots");

  const PairIndex index(n, pairs);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> masks;
  for (const auto& [p, q] : pairs) masks.emplace_back(p.support_mask(), q.support_mask());
  std::sort(masks.begin(), masks.end());
  masks.erase(std::unique(masks.begin(), masks.end()), masks.end());

  Tally total{std::vector<std::int64_t>(pairs.size(), 0), std::vector<std::int64_t>(pairs.size(), 0)};
  if (exec == Execution::kParallel) {
#pragma omp parallel
    {
      const auto workers = static_cast<std::size_t>(omp_get_num_threads());
      const auto me = static_cast<std::size_t>(omp_get_thread_num());
      const std::size_t chunk = (shots.size() + workers - 1) / workers;
      const std::size_t lo = std::min(shots.size(), me * chunk);
      const std::size_t hi = std::min(shots.size(), lo + chunk);
      Tally local{std::vector<std::int64_t>(pairs.size(), 0),
                  std::vector<std::int64_t>(pairs.size(), 0)};
      accumulate(shots.subspan(lo, hi - lo), index, masks, local);
#pragma omp critical
      for (std::size_t j = 0; j < pairs.size(); ++j) {
        total.sum[j] += local.sum[j];
        total.agree[j] += local.agree[j];
      }
    }
  } else {
    accumulate(shots, index, masks, total);
  }

  const auto count = static_cast<double>(shots.size());
  std::vector<PtmEstimate> out(pairs.size());
  for (std::size_t j = 0; j < pairs.size(); ++j) {
    const double scale = pow3(pairs[j].first.weight() + pairs[j].second.weight());
    const double mean = scale * static_cast<double>(total.sum[j]) / count;
    const double second = scale * scale * static_cast<double>(total.agree[j]) / count;
    const double var = shots.size() > 1 ? count / (count - 1.0) * std::max(0.0, second - mean * mean) : 0.0;
    out[j] = {pairs[j].first, pairs[j].second, time, mean, std::sqrt(var / count),
              static_cast<std::size_t>(total.agree[j]), shots.size()};
  }
  return out;
}

std::uint64_t hoeffding_shots_required(double epsilon, int weight_sum, double delta) {
  if (!(epsilon > 0.0)) throw DomainError("epsilon must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
  if (weight_sum < 0) throw DomainError("weight sum must be non-negative");
  const double bound = 2.0 * std::pow(9.0, weight_sum) * std::log(2.0 / delta) / (epsilon * epsilon);
  // Absorb rounding in the logarithm so exact integers stay put.
  return static_cast<std::uint64_t>(std::ceil(bound * (1.0 - 1e-12)));
}

std::size_t ShadowDataset::total_shots() const {
  std::size_t total = 0;
  for (const auto& s : shots) total += s.size();
  return total;
}

ShadowDataset simulate_slt(const LindbladModel& m, const NoiseModel& noise,
                           std::vector<double> times, std::size_t shots_per_time,
                           std::uint64_t seed, Execution exec) {
  const int n = m.qubits();
  if (noise.qubits() != n) throw DimensionError("noise model size does not match model");
  noise.validate();
  if (times.empty()) throw ContractViolation("SLT needs at least one time");
  if (shots_per_time == 0) throw ContractViolation("SLT needs N_SLT >= 1");
  if (!std::is_sorted(times.begin(), times.end()) || times.front() < 0.0)
    throw ContractViolation("SLT times must be non-negative and sorted");
  ShadowDataset d{n, std::move(times), {}};
  d.shots.resize(d.times.size());
  const PropagatorCache cache(m);
  for (std::size_t k = 0; k < d.times.size(); ++k) {
    const auto ptm = cache.ptm(d.times[k]);
    auto& out = d.shots[k];
    out.resize(shots_per_time);
    auto shot = [&](std::size_t i) {
      Stream rs = Stream::derive(seed, StreamDomain::kShadowSettings, k, i);
      const ShadowSetting s = draw_configuration(rs, n);
      SettingSampler sampler(*ptm, s.init.letters, s.basis, noise);
      Stream ro = Stream::derive(seed, StreamDomain::kShadowOutcomes, k, i);
      out[i] = ShadowShot::make(k, s.init, s.basis, sampler.sample(s.init.negative, ro).bits);
    };
    const auto count = static_cast<std::ptrdiff_t>(shots_per_time);
    if (exec == Execution::kParallel) {
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t i = 0; i < count; ++i) shot(static_cast<std::size_t>(i));
    } else {
      for (std::size_t i = 0; i < shots_per_time; ++i) shot(i);
    }
  }
  return d;
}

ShadowDataset subsample_from_elt(const EltDataset& data, std::size_t shots_per_time,
                                 std::uint64_t seed) {
  const EltPlan& plan = data.plan();
  if (plan.acquisition != Acquisition::kShots)
    throw DataError("subsampling needs a shot-based ELT acquisition");
  if (plan.configurations.size() != enumerate_configurations(plan.n).size())
    throw DataError("subsampling needs the full ELT configuration enumeration");
  const std::size_t per = plan.shots_per_config;
  const std::size_t total = plan.configurations.size() * per;
  if (shots_per_time > total)
    throw DataError("requested " + std::to_string(shots_per_time) + " shots per time but only " +
                    std::to_string(total) + " were acquired");
  ShadowDataset d{plan.n, plan.times, {}};
  d.shots.resize(plan.times.size());
  for (std::size_t k = 0; k < plan.times.size(); ++k) {
    Stream rng = Stream::derive(seed, StreamDomain::kSubsampling, k);
    const auto picks = sample_without_replacement(total, shots_per_time, rng);
    auto& out = d.shots[k];
    out.reserve(shots_per_time);
    for (std::size_t i : picks) {
      const std::size_t c = i / per;
      auto rank = static_cast<double>(i % per);
      const auto h = data.histogram(k, c);
      std::uint32_t o = 0;
      while (o + 1 < h.size() && rank >= h[o]) rank -= h[o++];
      const EltConfiguration& cfg = plan.configurations[c];
      out.push_back(ShadowShot::make(k, cfg.state, cfg.basis, o));
    }
  }
  return d;
}

SltAnalysis run_slt(const ShadowDataset& data, TemplatePtr tmpl, const SltOptions& options) {
  if (data.n != tmpl->qubits()) throw DimensionError("shots and template have different sizes");
  if (data.times.size() != data.shots.size()) throw DataError("shot groups do not match times");
  if (std::adjacent_find(data.times.begin(), data.times.end(), std::not_equal_to<>()) ==
      data.times.end())
    throw InsufficientDataError("SLT needs shots at two or more distinct times");

  SltAnalysis out;
  out.tm = build_transfer_matrix(tmpl, pauli_probe_set(*tmpl), options.exec);
  out.inversion = invert(out.tm, options.inversion);
  out.needed = out.inversion.used_probes();
  std::vector<PauliPair> pairs;
  for (std::size_t j : out.needed) pairs.emplace_back(out.tm.probes[j].output, out.tm.probes[j].input);

  const auto nt = static_cast<Eigen::Index>(data.times.size());
  const Eigen::Index np = out.tm.rows();
  out.signal = {data.times, Eigen::MatrixXd::Zero(nt, np), Eigen::MatrixXd::Zero(nt, np)};
  std::ostringstream missing;
  std::size_t nmiss = 0;
  for (Eigen::Index k = 0; k < nt; ++k) {
    auto est = estimate_ptm_batch(data.shots[static_cast<std::size_t>(k)], pairs,
                                  data.times[static_cast<std::size_t>(k)], options.exec);
    for (std::size_t a = 0; a < est.size(); ++a) {
      if (est[a].n_agree == 0 && nmiss++ < 8)
        missing << (nmiss > 1 ? ", " : "") << out.tm.probes[out.needed[a]].label() << " at t="
                << data.times[static_cast<std::size_t>(k)];
      const auto j = static_cast<Eigen::Index>(out.needed[a]);
      out.signal.values(k, j) = est[a].value;
      out.signal.stderrs(k, j) = est[a].stderr;
    }
    out.ptm.push_back(std::move(est));
  }
  if (nmiss)
    throw InsufficientDataError("no agreeing shots for " + std::to_string(nmiss) +
                                " needed PTM element(s): " + missing.str() +
                                (nmiss > 8 ? ", ..." : ""));
  out.transformed = transform_signal(out.inversion, out.signal);
  out.estimates = estimate_from_series(out.transformed, tmpl, options.fit, "slt", options.exec);
  return out;
}

}  // namespace lindtomo
