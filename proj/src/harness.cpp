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

#include "lindtomo/harness.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include <boost/math/tools/minima.hpp>
#include <json.hpp>

#include "lindtomo/error.hpp"
#include "lindtomo/rng.hpp"

namespace lindtomo {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t ipow(std::uint64_t base, int exp) {
  std::uint64_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

PauliString site_pauli(int n, int site, Pauli letter) {
  PauliString p(n);
  p.set(site, letter);
  return p;
}

PauliString pair_pauli(int n, int i, Pauli a, int j, Pauli b) {
  PauliString p(n);
  p.set(i, a);
  p.set(j, b);
  return p;
}

struct SiteValues {
  double az = 0, ax = 0, ay = 0;
  double gamma_down = 0, gamma_up = 0, dephasing = 0;
};

void add_site(ModelBuilder& b, int n, int site, const SiteValues& v) {
  const PauliString x = site_pauli(n, site, Pauli::X);
  const PauliString y = site_pauli(n, site, Pauli::Y);
  const PauliString z = site_pauli(n, site, Pauli::Z);
  b.coherent(z, v.az).coherent(x, v.ax).coherent(y, v.ay);
  const double sum = v.gamma_down + v.gamma_up;
  b.dissipation(x, x, sum / 4).dissipation(y, y, sum / 4);
  // D_XY = -i/4 lowers |1> to |0>; the thermal raising channel enters with +i.
  b.dissipation(x, y, Complex(0.0, -(v.gamma_down - v.gamma_up) / 4));
  b.dissipation(z, z, v.dephasing);
}

SiteValues transmon_site() {
  SiteValues v;
  v.az = kTwoPi * 0.05;
  v.ax = kTwoPi * 0.001;
  v.gamma_down = 1.0 / 50.0;
  constexpr double thermal = 0.01;
  v.gamma_up = v.gamma_down * thermal / (1.0 - thermal);
  v.dephasing = 0.01;
  return v;
}

SiteValues jittered(SiteValues v, Stream& rng, double rel) {
  auto j = [&] { return 1.0 + rel * (2.0 * rng.uniform() - 1.0); };
  v.az *= j();
  v.ax *= j();
  v.gamma_down *= j();
  v.gamma_up *= j();
  v.dephasing *= j();
  return v;
}

const json& require_object(const json& v, const std::string& name) {
  if (!v.is_object()) throw ConfigError("config field '" + name + "' must be an object");
  return v;
}

std::vector<std::size_t> size_list(const json& v) {
  std::vector<std::size_t> out;
  for (const auto& x : v) out.push_back(x.get<std::size_t>());
  return out;
}

void check_template_name(const std::string& name) {
  if (name == "full" || name == "chain-nnn") return;
  if (name.size() == 6 && name.starts_with("local") && name[5] >= '1' && name[5] <= '9') return;
  throw ConfigError("unknown model template '" + name + "'");
}

template <class F>
void write_artifact(ExperimentResult& r, const fs::path& dir, const std::string& name, F&& f,
                    bool binary = false) {
  const fs::path p = dir / name;
  std::ofstream out(p, binary ? std::ios::out | std::ios::binary : std::ios::out);
  if (!out) throw DataError("cannot write " + p.string());
  f(out);
  out.flush();
  if (!out) throw DataError("failed writing " + p.string());
  r.artifacts.push_back(p);
}

std::ifstream open_artifact(const fs::path& p) {
  if (!fs::exists(p)) throw DataError("missing artifact " + p.filename().string());
  std::ifstream in(p);
  if (!in) throw DataError("cannot read artifact " + p.string());
  return in;
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

ComparisonRow read_comparison_row(const std::vector<std::string>& f) {
  ComparisonRow r;
  r.label = f[0];
  r.elt = parse_double(f[1]);
  r.elt_stderr = parse_double(f[2]);
  r.slt = parse_double(f[3]);
  r.slt_stderr = parse_double(f[4]);
  r.residual = parse_double(f[5]);
  r.combined_stderr = parse_double(f[6]);
  return r;
}

}  // namespace

// ----------------------------------------------------------------- enums

std::string to_string(Protocol p) {
  switch (p) {
    case Protocol::kElt: return "elt";
    case Protocol::kSlt: return "slt";
    case Protocol::kBoth: return "both";
  }
  return "both";
}

Protocol protocol_from_string(std::string_view s) {
  if (s == "elt") return Protocol::kElt;
  if (s == "slt") return Protocol::kSlt;
  if (s == "both") return Protocol::kBoth;
  throw ConfigError("unknown protocol '" + std::string(s) + "'");
}

std::string to_string(TimeGrid g) { return g == TimeGrid::kUniform ? "uniform" : "chebyshev"; }

TimeGrid time_grid_from_string(std::string_view s) {
  if (s == "uniform") return TimeGrid::kUniform;
  if (s == "chebyshev") return TimeGrid::kChebyshev;
  throw ConfigError("unknown time grid '" + std::string(s) + "'");
}

std::string to_string(PlotKind k) {
  switch (k) {
    case PlotKind::kMagnitudes: return "magnitudes";
    case PlotKind::kResiduals: return "residuals";
    case PlotKind::kConvergence: return "convergence";
    case PlotKind::kBlochDeformation: return "bloch-deformation";
  }
  return "magnitudes";
}

PlotKind plot_kind_from_string(std::string_view s) {
  if (s == "magnitudes") return PlotKind::kMagnitudes;
  if (s == "residuals") return PlotKind::kResiduals;
  if (s == "convergence") return PlotKind::kConvergence;
  if (s == "bloch-deformation") return PlotKind::kBlochDeformation;
  throw ConfigError("unknown plot kind '" + std::string(s) + "'");
}

// ---------------------------------------------------------------- config

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

RunConfig RunConfig::defaults(int n) {
  RunConfig c;
  c.qubits = n;
  c.times = {20, 1.0, TimeGrid::kUniform};
  if (n == 1) {
    c.model_preset = "single-transmon";
    c.template_name = "full";
    c.shots_per_config = 500;
    c.times.t_max = 30.0;
    c.slt_shots = 3000;
    c.convergence_shots = {10, 30, 100, 300, 1000, 3000, 9000};
  } else if (n <= 3) {
    c.model_preset = "two-local";
    c.template_name = "full";
    c.shots_per_config = 2000;
    c.slt_shots = 100000;
    c.convergence_shots = {10, 100, 1000, 10000, 100000, 1000000, 10000000};
  } else {
    c.model_preset = "weak-coupling";
    c.template_name = "local2";
    c.protocol = Protocol::kSlt;
    c.shots_per_config = 2000;
    c.times.t_max = 3.0;
    c.slt_shots = 25000000;
    c.save_shots = false;
  }
  return c;
}

void RunConfig::validate() const {
  if (schema_version != kConfigSchemaVersion)
    throw ConfigError("unsupported schema_version " + std::to_string(schema_version));
  if (qubits < 1 || qubits > kDenseCap)
    throw ConfigError("qubits must be in [1, " + std::to_string(kDenseCap) + "]");
  if (model_file.empty() == model_preset.empty())
    throw ConfigError("exactly one of model.file and model.preset must be set");
  if (!model_file.empty() && !fs::exists(resolve(model_file)))
    throw ConfigError("model file not found: " + resolve(model_file).string());
  if (!model_preset.empty()) {
    const auto names = preset_names();
    if (std::find(names.begin(), names.end(), model_preset) == names.end())
      throw ConfigError("unknown model preset '" + model_preset + "'");
  }
  check_template_name(template_name);
  if (times.count < 2) throw ConfigError("times.count must be >= 2");
  if (!(times.t_max > 0.0) || !std::isfinite(times.t_max))
    throw ConfigError("times.t_max must be positive");
  if (protocol != Protocol::kSlt && shots_per_config == 0)
    throw ConfigError("shots_per_config must be positive");
  if (protocol != Protocol::kElt && slt_shots == 0) throw ConfigError("slt_shots must be positive");
  for (auto s : convergence_shots)
    if (s == 0) throw ConfigError("convergence_shots entries must be positive");
  if (acquisition == Acquisition::kNoiseless && protocol != Protocol::kElt)
    throw ConfigError("noiseless acquisition is only available for protocol elt");
  if (!noise.file.empty()) {
    if (!fs::exists(resolve(noise.file)))
      throw ConfigError("noise file not found: " + resolve(noise.file).string());
  } else {
    for (double p : {noise.p1_given_0, noise.p0_given_1})
      if (!(p >= 0.0 && p < 0.5)) throw ConfigError("noise confusion entries must be in [0, 0.5)");
    if (!(noise.thermal >= 0.0 && noise.thermal < 0.5))
      throw ConfigError("noise.thermal must be in [0, 0.5)");
  }
  if (!seed) throw ConfigError("seed is mandatory");
  if (output_dir.empty()) throw ConfigError("output_dir must be set");
  if (fit_degree < 1) throw ConfigError("fit.degree must be >= 1");
}

namespace {

json to_json(const RunConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  j["qubits"] = c.qubits;
  j["model"] = {{"file", c.model_file}, {"preset", c.model_preset}};
  j["template"] = c.template_name;
  j["protocol"] = to_string(c.protocol);
  j["times"] = {{"count", c.times.count}, {"t_max", c.times.t_max}, {"grid", to_string(c.times.grid)}};
  j["shots_per_config"] = c.shots_per_config;
  j["slt_shots"] = c.slt_shots;
  j["convergence_shots"] = c.convergence_shots;
  j["acquisition"] = to_string(c.acquisition);
  j["noise"] = {{"file", c.noise.file},
                {"p1_given_0", c.noise.p1_given_0},
                {"p0_given_1", c.noise.p0_given_1},
                {"thermal", c.noise.thermal}};
  j["seed"] = c.seed ? json(*c.seed) : json(nullptr);
  j["output_dir"] = c.output_dir;
  j["fit"] = {{"method", to_string(c.fit)}, {"degree", c.fit_degree}};
  j["inversion"] = to_string(c.inversion);
  j["route"] = to_string(c.route);
  j["readout_correction"] = c.readout_correction;
  j["save_shots"] = c.save_shots;
  return j;
}

}  // namespace

std::string RunConfig::canonical() const { return to_json(*this).dump(); }

std::uint64_t RunConfig::hash() const {
  json j = to_json(*this);
  j.erase("output_dir");
  return fnv1a64(j.dump());
}

fs::path RunConfig::resolve(const std::string& p) const {
  const fs::path path(p);
  return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
}

std::uint64_t RunConfig::seed_value() const {
  if (!seed) throw ConfigError("seed is mandatory");
  return *seed;
}

std::vector<double> RunConfig::time_grid() const {
  if (times.grid == TimeGrid::kUniform) return uniform_times(times.t_max, times.count);
  Stream rng = Stream::derive(seed_value(), StreamDomain::kTimes);
  auto t = chebyshev_sample_times(0.0, times.t_max, times.count, rng);
  std::sort(t.begin(), t.end());
  return t;
}

TemplatePtr RunConfig::analysis_template() const { return resolve_template(qubits, template_name); }

FitOptions RunConfig::fit_options() const {
  FitOptions f;
  f.method = fit;
  f.degree = fit_degree;
  f.robust.degree = fit_degree;
  return f;
}

RunConfig parse_config(std::string_view text, fs::path base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  require_object(j, "<root>");
  try {
    RunConfig c = RunConfig::defaults(j.value("qubits", 1));
    c.base_dir = std::move(base_dir);
    for (const auto& [key, v] : j.items()) {
      if (key == "schema_version") {
        c.schema_version = v.get<int>();
      } else if (key == "qubits") {
        c.qubits = v.get<int>();
      } else if (key == "model") {
        for (const auto& [k, x] : require_object(v, key).items()) {
          if (k == "file") c.model_file = x.get<std::string>();
          else if (k == "preset") c.model_preset = x.get<std::string>();
          else throw ConfigError("unknown config key 'model." + k + "'");
        }
        if (!v.contains("preset") && v.contains("file")) c.model_preset.clear();
      } else if (key == "template") {
        c.template_name = v.get<std::string>();
      } else if (key == "protocol") {
        c.protocol = protocol_from_string(v.get<std::string>());
      } else if (key == "times") {
        for (const auto& [k, x] : require_object(v, key).items()) {
          if (k == "count") c.times.count = x.get<std::size_t>();
          else if (k == "t_max") c.times.t_max = x.get<double>();
          else if (k == "grid") c.times.grid = time_grid_from_string(x.get<std::string>());
          else throw ConfigError("unknown config key 'times." + k + "'");
        }
      } else if (key == "shots_per_config") {
        c.shots_per_config = v.get<std::size_t>();
      } else if (key == "slt_shots") {
        c.slt_shots = v.get<std::size_t>();
      } else if (key == "convergence_shots") {
        c.convergence_shots = size_list(v);
      } else if (key == "acquisition") {
        try {
          c.acquisition = acquisition_from_string(v.get<std::string>());
        } catch (const std::exception& e) {
          throw ConfigError(e.what());
        }
      } else if (key == "noise") {
        for (const auto& [k, x] : require_object(v, key).items()) {
          if (k == "file") c.noise.file = x.get<std::string>();
          else if (k == "p1_given_0") c.noise.p1_given_0 = x.get<double>();
          else if (k == "p0_given_1") c.noise.p0_given_1 = x.get<double>();
          else if (k == "thermal") c.noise.thermal = x.get<double>();
          else throw ConfigError("unknown config key 'noise." + k + "'");
        }
      } else if (key == "seed") {
        if (v.is_null()) c.seed.reset();
        else c.seed = v.get<std::uint64_t>();
      } else if (key == "output_dir") {
        c.output_dir = v.get<std::string>();
      } else if (key == "fit") {
        for (const auto& [k, x] : require_object(v, key).items()) {
          if (k == "method") {
            try {
              c.fit = fit_method_from_string(x.get<std::string>());
            } catch (const std::exception& e) {
              throw ConfigError(e.what());
            }
          } else if (k == "degree") {
            c.fit_degree = x.get<int>();
          } else {
            throw ConfigError("unknown config key 'fit." + k + "'");
          }
        }
      } else if (key == "inversion") {
        c.inversion = inversion_strategy_from_string(v.get<std::string>());
      } else if (key == "route") {
        try {
          c.route = elt_route_from_string(v.get<std::string>());
        } catch (const std::exception& e) {
          throw ConfigError(e.what());
        }
      } else if (key == "readout_correction") {
        c.readout_correction = v.get<bool>();
      } else if (key == "save_shots") {
        c.save_shots = v.get<bool>();
      } else {
        throw ConfigError("unknown config key '" + key + "'");
      }
    }
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

// --------------------------------------------------------------- presets

std::vector<std::string> preset_names() { return {"single-transmon", "two-local", "weak-coupling"}; }

std::vector<std::pair<int, int>> weak_coupling_pairs(int n) {
  std::vector<std::pair<int, int>> out;
  for (int d : {1, 2})
    for (int i = 0; i + d < n; ++i) out.emplace_back(i, i + d);
  std::sort(out.begin(), out.end());
  return out;
}

ModelTemplate coupling_template(int n, const std::vector<std::pair<int, int>>& pairs,
                                std::string name) {
  constexpr std::array<Pauli, 3> letters{Pauli::X, Pauli::Y, Pauli::Z};
  std::vector<PauliString> coherent;
  std::vector<std::pair<PauliString, PauliString>> dissipative;
  for (int k = 0; k < n; ++k)
    for (Pauli a : letters) {
      coherent.push_back(site_pauli(n, k, a));
      for (Pauli b : letters) dissipative.emplace_back(site_pauli(n, k, a), site_pauli(n, k, b));
    }
  for (const auto& [i, j] : pairs) {
    if (i < 0 || j >= n || i >= j) throw DomainError("coupling pair out of range");
    for (Pauli a : letters)
      for (Pauli b : letters) coherent.push_back(pair_pauli(n, i, a, j, b));
  }
  return ModelTemplate::custom(n, std::move(coherent), std::move(dissipative), std::move(name));
}

TemplatePtr resolve_template(int n, std::string_view name) {
  if (name == "chain-nnn")
    return std::make_shared<const ModelTemplate>(
        coupling_template(n, weak_coupling_pairs(n), "chain-nnn"));
  return std::make_shared<const ModelTemplate>(ModelTemplate::from_name(n, name));
}

LindbladModel make_preset(std::string_view name, int n, std::uint64_t seed) {
  if (n < 1 || n > kMaxQubits) throw ConfigError("preset qubit count out of range");
  Stream rng = Stream::derive(seed, StreamDomain::kGroundTruth);
  ModelBuilder b(std::make_shared<const ModelTemplate>(ModelTemplate::local(n, 2)));
  const SiteValues base = transmon_site();
  if (name == "single-transmon") {
    for (int k = 0; k < n; ++k) add_site(b, n, k, base);
  } else if (name == "two-local") {
    for (int k = 0; k < n; ++k) add_site(b, n, k, jittered(base, rng, 0.2));
    for (int i = 0; i + 1 < n; ++i) {
      const double zz = kTwoPi * 0.002 * (1.0 + 0.2 * (2.0 * rng.uniform() - 1.0));
      const double xy = kTwoPi * 0.001 * (1.0 + 0.2 * (2.0 * rng.uniform() - 1.0));
      b.coherent(pair_pauli(n, i, Pauli::Z, i + 1, Pauli::Z), zz);
      b.coherent(pair_pauli(n, i, Pauli::X, i + 1, Pauli::X), xy);
      b.coherent(pair_pauli(n, i, Pauli::Y, i + 1, Pauli::Y), xy);
    }
  } else if (name == "weak-coupling") {
    SiteValues site = base;
    site.az = kTwoPi * 0.2;
    site.ax = kTwoPi * 0.004;
    for (int k = 0; k < n; ++k) {
      SiteValues v = jittered(site, rng, 0.25);
      v.ay = -kTwoPi * 0.003;
      add_site(b, n, k, v);
    }
    for (const auto& [i, j] : weak_coupling_pairs(n))
      b.coherent(pair_pauli(n, i, Pauli::Z, j, Pauli::Z), kWeakCoupling);
  } else {
    throw ConfigError("unknown model preset '" + std::string(name) + "'");
  }
  return b.build();
}

GroundTruth ground_truth(const RunConfig& c) {
  LindbladModel model = c.model_file.empty() ? make_preset(c.model_preset, c.qubits, c.seed_value())
                                             : load_model(c.resolve(c.model_file));
  if (model.qubits() != c.qubits) throw ConfigError("model file qubit count does not match config");
  NoiseModel noise = c.noise.file.empty()
                         ? NoiseModel::uniform(c.qubits, c.noise.p1_given_0, c.noise.p0_given_1,
                                               c.noise.thermal)
                         : load_noise(c.resolve(c.noise.file));
  if (noise.qubits() != c.qubits) throw ConfigError("noise file qubit count does not match config");
  return {std::move(model), std::move(noise)};
}

// ------------------------------------------------------------ comparison

ComparisonSummary summarize(const std::vector<ComparisonRow>& rows) {
  ComparisonSummary s;
  s.count = rows.size();
  if (rows.empty()) return s;
  std::vector<double> res, es, ss;
  for (const auto& r : rows) {
    res.push_back(r.residual);
    es.push_back(r.elt_stderr);
    ss.push_back(r.slt_stderr);
    if (std::abs(r.residual) <= 3.0 * r.combined_stderr) ++s.within_3sigma;
  }
  s.residual_mean = mean_of(res);
  double acc = 0.0;
  for (double r : res) acc += (r - s.residual_mean) * (r - s.residual_mean);
  s.residual_std = res.size() > 1 ? std::sqrt(acc / static_cast<double>(res.size() - 1)) : 0.0;
  const auto [lo, hi] = std::minmax_element(res.begin(), res.end());
  s.residual_min = *lo;
  s.residual_max = *hi;
  s.mean_elt_stderr = mean_of(es);
  s.mean_slt_stderr = mean_of(ss);
  s.saturation_ratio = s.mean_elt_stderr > 0 ? s.residual_std / s.mean_elt_stderr : kNaN;
  return s;
}

ComparisonReport compare_estimates(const ParameterEstimates& elt, const ParameterEstimates& slt) {
  const auto el = elt.tmpl->labels();
  const auto sl = slt.tmpl->labels();
  std::map<std::string, Eigen::Index> index;
  for (std::size_t i = 0; i < sl.size(); ++i) index.emplace(sl[i], static_cast<Eigen::Index>(i));
  ComparisonReport r;
  for (std::size_t i = 0; i < el.size(); ++i) {
    const auto it = index.find(el[i]);
    if (it == index.end()) continue;
    const auto a = static_cast<Eigen::Index>(i);
    const auto b = it->second;
    ComparisonRow row{el[i], elt.values[a], elt.stderrs[a], slt.values[b], slt.stderrs[b], 0, 0};
    row.residual = row.elt - row.slt;
    row.combined_stderr = std::hypot(row.elt_stderr, row.slt_stderr);
    r.rows.push_back(std::move(row));
  }
  if (r.rows.empty()) throw DataError("ELT and SLT estimates share no parameters");
  r.summary = summarize(r.rows);
  return r;
}

void write_comparison(std::ostream& os, const ComparisonReport& r, const ArtifactStamp* stamp) {
  if (stamp)
    os << "# config_hash=" << hex64(stamp->config_hash) << " seed=" << stamp->seed << '\n';
  const auto& s = r.summary;
  os << "# count=" << s.count << " residual_mean=" << format_double(s.residual_mean)
     << " residual_std=" << format_double(s.residual_std)
     << " residual_min=" << format_double(s.residual_min)
     << " residual_max=" << format_double(s.residual_max) << '\n'
     << "# mean_elt_stderr=" << format_double(s.mean_elt_stderr)
     << " mean_slt_stderr=" << format_double(s.mean_slt_stderr)
     << " saturation_ratio=" << format_double(s.saturation_ratio)
     << " within_3sigma=" << s.within_3sigma << '\n'
     << "label,elt,elt_stderr,slt,slt_stderr,residual,combined_stderr\n";
  for (const auto& row : r.rows)
    os << row.label << ',' << format_double(row.elt) << ',' << format_double(row.elt_stderr) << ','
       << format_double(row.slt) << ',' << format_double(row.slt_stderr) << ','
       << format_double(row.residual) << ',' << format_double(row.combined_stderr) << '\n';
}

// ----------------------------------------------------------- experiments

namespace {

EltOptions elt_options(const RunConfig& c) {
  EltOptions o;
  o.route = c.route;
  o.inversion.strategy = c.inversion;
  o.fit = c.fit_options();
  return o;
}

SltOptions slt_options(const RunConfig& c) {
  SltOptions o;
  o.inversion.strategy = c.inversion;
  o.fit = c.fit_options();
  return o;
}

}  // namespace

ExperimentResult run_experiment(const RunConfig& c, bool write) {
  c.validate();
  GroundTruth gt = ground_truth(c);
  const TemplatePtr tmpl = c.analysis_template();
  const std::vector<double> times = c.time_grid();
  const std::uint64_t seed = c.seed_value();
  ExperimentResult r{c, gt.model, gt.noise, {}, {}, {}, {}, {}, {}, {}};

  if (c.protocol != Protocol::kSlt) {
    const EltPlan plan = make_elt_plan(c.qubits, times, c.shots_per_config, c.acquisition);
    r.elt_data = acquire_elt(plan, r.truth, r.noise, seed);
    r.traces = expectation_traces(*r.elt_data, c.readout_correction ? &r.noise : nullptr);
    r.elt = run_elt(r.traces, tmpl, elt_options(c));
  }
  if (c.protocol != Protocol::kElt) {
    r.shots = c.protocol == Protocol::kBoth ? subsample_from_elt(*r.elt_data, c.slt_shots, seed)
                                            : simulate_slt(r.truth, r.noise, times, c.slt_shots, seed);
    r.slt = run_slt(*r.shots, tmpl, slt_options(c));
  }
  if (r.elt && r.slt) r.comparison = compare_estimates(r.elt->estimates, r.slt->estimates);

  if (!write) return r;
  const fs::path dir = c.output_path();
  fs::create_directories(dir);
  const ArtifactStamp stamp = c.stamp();
  write_artifact(r, dir, "config.json", [&](std::ostream& os) { os << to_json(c).dump(2) << '\n'; });
  write_artifact(r, dir, "ground_truth.txt", [&](std::ostream& os) { write_model(os, r.truth, &stamp); });
  write_artifact(r, dir, "noise.txt", [&](std::ostream& os) { write_noise(os, r.noise); });
  if (r.elt) {
    write_artifact(r, dir, "elt_traces.csv",
                   [&](std::ostream& os) { write_traces(os, r.traces, r.elt_data->plan(), &stamp); });
    write_artifact(r, dir, "elt_estimates.csv",
                   [&](std::ostream& os) { write_estimates(os, r.elt->estimates, &stamp); });
    write_artifact(r, dir, "elt_terms.csv",
                   [&](std::ostream& os) { write_terms(os, r.elt->estimates, &stamp); });
  }
  if (r.slt) {
    if (c.save_shots)
      write_artifact(
          r, dir, "slt_shots.bin", [&](std::ostream& os) { write_shots_binary(os, *r.shots, &stamp); },
          true);
    write_artifact(r, dir, "slt_needed_pairs.csv",
                   [&](std::ostream& os) { write_needed_pairs(os, *r.slt); });
    write_artifact(r, dir, "slt_estimates.csv",
                   [&](std::ostream& os) { write_estimates(os, r.slt->estimates, &stamp); });
    write_artifact(r, dir, "slt_terms.csv",
                   [&](std::ostream& os) { write_terms(os, r.slt->estimates, &stamp); });
  }
  if (r.comparison)
    write_artifact(r, dir, "comparison.csv",
                   [&](std::ostream& os) { write_comparison(os, *r.comparison, &stamp); });
  return r;
}

// ----------------------------------------------------------- convergence

ConvergenceTable convergence_study(const RunConfig& c, const std::vector<std::size_t>& shot_counts) {
  RunConfig elt_only = c;
  elt_only.protocol = Protocol::kElt;
  if (c.acquisition != Acquisition::kShots)
    throw ConfigError("convergence study needs shot acquisition");
  const ExperimentResult base = run_experiment(elt_only, false);
  const TemplatePtr tmpl = c.analysis_template();
  ConvergenceTable table;
  std::vector<std::size_t> sorted = shot_counts;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t n_slt : sorted) {
    ConvergenceRow row;
    row.shots = n_slt;
    const ShadowDataset shots = subsample_from_elt(*base.elt_data, n_slt, c.seed_value());
    try {
      const SltAnalysis slt = run_slt(shots, tmpl, slt_options(c));
      const ComparisonReport rep = compare_estimates(base.elt->estimates, slt.estimates);
      row.residual_std = rep.summary.residual_std;
      row.residual_mean = rep.summary.residual_mean;
      row.mean_elt_stderr = rep.summary.mean_elt_stderr;
      row.mean_slt_stderr = rep.summary.mean_slt_stderr;
      table.mean_elt_stderr = rep.summary.mean_elt_stderr;
    } catch (const InsufficientDataError& e) {
      row.ok = false;
      row.message = e.what();
      row.residual_std = row.residual_mean = row.mean_slt_stderr = kNaN;
    }
    table.rows.push_back(std::move(row));
  }
  for (auto& row : table.rows)
    if (!row.ok) row.mean_elt_stderr = table.mean_elt_stderr;

  std::size_t largest = 0;
  for (const auto& row : table.rows)
    if (row.ok && row.shots >= largest) {
      largest = row.shots;
      table.saturation_level = row.residual_std;
    }
  const double floor = std::max(table.saturation_level, table.mean_elt_stderr);
  std::vector<double> x, y;
  for (const auto& row : table.rows) {
    if (!row.ok) continue;
    if (row.residual_std > kPreSaturationRatio * floor) {
      x.push_back(std::log(static_cast<double>(row.shots)));
      y.push_back(std::log(row.residual_std));
    }
  }
  table.slope_points = x.size();
  if (x.size() >= 2) {
    const double mx = mean_of(x), my = mean_of(y);
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sxy += (x[i] - mx) * (y[i] - my);
      sxx += (x[i] - mx) * (x[i] - mx);
    }
    table.slope = sxy / sxx;
  } else {
    table.slope = kNaN;
  }
  return table;
}

void write_convergence(std::ostream& os, const ConvergenceTable& t, const ArtifactStamp* stamp) {
  if (stamp)
    os << "# config_hash=" << hex64(stamp->config_hash) << " seed=" << stamp->seed << '\n';
  os << "# slope=" << format_double(t.slope) << " slope_points=" << t.slope_points
     << " saturation_level=" << format_double(t.saturation_level)
     << " mean_elt_stderr=" << format_double(t.mean_elt_stderr) << '\n'
     << "shots,ok,residual_std,residual_mean,mean_elt_stderr,mean_slt_stderr,message\n";
  for (const auto& r : t.rows) {
    std::string msg = r.message;
    std::replace(msg.begin(), msg.end(), ',', ';');
    os << r.shots << ',' << (r.ok ? 1 : 0) << ',' << format_double(r.residual_std) << ','
       << format_double(r.residual_mean) << ',' << format_double(r.mean_elt_stderr) << ','
       << format_double(r.mean_slt_stderr) << ',' << msg << '\n';
  }
}

// ------------------------------------------------------------------ cost

CostEstimate cost_estimate(const ModelTemplate& t, const CostTargets& targets) {
  if (!(targets.epsilon > 0) || !(targets.delta > 0 && targets.delta < 1) ||
      !(targets.shot_time_us > 0) || targets.time_steps == 0)
    throw DomainError("cost targets must be positive with 0 < delta < 1");
  const int n = t.qubits();
  CostEstimate c;
  c.full_configurations = ipow(18, n);

  std::set<std::uint32_t> supports;
  for (std::uint32_t p : t.coherent_terms())
    supports.insert(PauliString::from_index(n, p).support_mask());
  for (const auto& [p, q] : t.dissipative_terms())
    supports.insert(PauliString::from_index(n, p).support_mask() |
                    PauliString::from_index(n, q).support_mask());
  std::vector<std::uint32_t> maximal;
  for (std::uint32_t s : supports) {
    bool contained = false;
    for (std::uint32_t o : supports)
      if (o != s && (o & s) == s) contained = true;
    if (!contained) maximal.push_back(s);
  }
  const std::uint32_t all = (std::uint32_t{1} << n) - 1;
  if (std::find(maximal.begin(), maximal.end(), all) != maximal.end()) maximal = {all};
  c.coupled_supports = maximal.size();

  const std::uint64_t hoeffding_shot = hoeffding_shots_required(targets.epsilon, 0, targets.delta);
  int widest = 0;
  for (std::uint32_t s : maximal) {
    const int w = std::popcount(s);
    widest = std::max(widest, w);
    const std::uint64_t confs = ipow(18, w);
    const std::uint64_t shots =
        targets.slt_budget ? (*targets.slt_budget + confs - 1) / confs : hoeffding_shot;
    c.configurations += confs;
    c.elt_per_time += confs * shots;
  }
  const std::uint64_t widest_confs = ipow(18, widest);
  c.elt_shots_per_config =
      targets.slt_budget ? (*targets.slt_budget + widest_confs - 1) / widest_confs : hoeffding_shot;
  c.elt_total = c.elt_per_time * targets.time_steps;

  const auto tmpl = std::make_shared<const ModelTemplate>(t);
  const TransferMatrix tm = build_transfer_matrix(tmpl, pauli_probe_set(t));
  const InversionMap inv = invert(tm);
  for (std::size_t i : inv.used_probes())
    c.worst_weight_sum = std::max(c.worst_weight_sum,
                                  tm.probes[i].input.weight() + tm.probes[i].output.weight());
  c.slt_per_time = targets.slt_budget
                       ? *targets.slt_budget
                       : hoeffding_shots_required(targets.epsilon, c.worst_weight_sum, targets.delta);
  c.slt_total = c.slt_per_time * targets.time_steps;
  c.elt_hours = static_cast<double>(c.elt_total) * targets.shot_time_us / 3.6e9;
  c.slt_hours = static_cast<double>(c.slt_total) * targets.shot_time_us / 3.6e9;

  c.assumptions.push_back("ELT enumerates 6^|S| 3^|S| settings on each maximal term support S (" +
                          std::to_string(c.coupled_supports) + " supports), other qubits idle");
  if (targets.slt_budget)
    c.assumptions.push_back(
        "ELT shots per configuration matched to the SLT budget: a random setting matches a given "
        "support setting with probability 18^-|S|");
  else
    c.assumptions.push_back("ELT shots per configuration from Hoeffding on a +-1 observable at "
                            "epsilon, delta");
  c.assumptions.push_back("SLT shots from Hoeffding at the worst needed weight sum " +
                          std::to_string(c.worst_weight_sum));
  c.assumptions.push_back("time per shot " + format_double(targets.shot_time_us) + " us, " +
                          std::to_string(targets.time_steps) + " time steps");
  c.assumptions.push_back("figures scale linearly with the per-shot time and are model dependent");
  return c;
}

void write_cost(std::ostream& os, const CostEstimate& c) {
  for (const auto& a : c.assumptions) os << "# " << a << '\n';
  os << "quantity,value\n"
     << "full_configurations," << c.full_configurations << '\n'
     << "configurations," << c.configurations << '\n'
     << "coupled_supports," << c.coupled_supports << '\n'
     << "elt_shots_per_config," << c.elt_shots_per_config << '\n'
     << "elt_per_time," << c.elt_per_time << '\n'
     << "elt_total," << c.elt_total << '\n'
     << "elt_hours," << format_double(c.elt_hours) << '\n'
     << "worst_weight_sum," << c.worst_weight_sum << '\n'
     << "slt_per_time," << c.slt_per_time << '\n'
     << "slt_total," << c.slt_total << '\n'
     << "slt_hours," << format_double(c.slt_hours) << '\n';
}

// ------------------------------------------------------------ plot data

std::vector<BlochSample> bloch_deformation(const LindbladModel& m, double t, std::size_t samples) {
  if (m.qubits() != 1) throw DimensionError("Bloch deformation needs a one-qubit model");
  if (samples == 0) throw DomainError("need at least one sample");
  const auto basis = m.model_template().dissipative_basis();
  const auto jumps = jump_decomposition(m);
  const std::array<Eigen::MatrixXcd, 3> sigma{to_matrix(PauliString::parse("X")),
                                              to_matrix(PauliString::parse("Y")),
                                              to_matrix(PauliString::parse("Z"))};
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  std::vector<Eigen::Vector3d> points;
  for (std::size_t i = 0; i < samples; ++i) {
    const double z = samples == 1 ? 1.0 : 1.0 - 2.0 * static_cast<double>(i) / static_cast<double>(samples - 1);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * static_cast<double>(i);
    points.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
  }
  std::vector<BlochSample> out;
  for (std::size_t k = 0; k < jumps.size(); ++k) {
    const auto& jp = jumps[k];
    const auto nb = static_cast<Eigen::Index>(basis.size());
    Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(nb, nb);
    for (std::size_t a = 0; a < jp.basis.size(); ++a)
      for (std::size_t b = 0; b < jp.basis.size(); ++b) {
        const auto ia = m.model_template().dissipative_position(jp.basis[a]);
        const auto ib = m.model_template().dissipative_position(jp.basis[b]);
        if (!ia || !ib) throw InternalError("jump basis outside the template");
        d(static_cast<Eigen::Index>(*ia), static_cast<Eigen::Index>(*ib)) +=
            jp.rate * jp.coefficients[static_cast<Eigen::Index>(a)] *
            std::conj(jp.coefficients[static_cast<Eigen::Index>(b)]);
      }
    for (std::uint32_t p : m.model_template().dissipative_basis()) {
      const auto i = static_cast<Eigen::Index>(*m.model_template().dissipative_position(p));
      d(i, i).imag(0.0);
    }
    const LindbladModel channel(m.template_ptr(),
                                Eigen::VectorXd::Zero(static_cast<Eigen::Index>(
                                    m.model_template().coherent_terms().size())),
                                0.5 * (d + d.adjoint()));
    const Superoperator s = build_superoperator(channel);
    for (const auto& v : points) {
      Eigen::MatrixXcd rho = 0.5 * Eigen::MatrixXcd::Identity(2, 2);
      for (int a = 0; a < 3; ++a) rho += 0.5 * v[a] * sigma[static_cast<std::size_t>(a)];
      const Eigen::MatrixXcd out_rho = propagate(s, rho, t);
      Eigen::Vector3d after;
      for (int a = 0; a < 3; ++a)
        after[a] = (sigma[static_cast<std::size_t>(a)] * out_rho).trace().real();
      out.push_back({k, jp.rate, v, after});
    }
  }
  return out;
}

fs::path emit_plot_data(const fs::path& run_dir, PlotKind kind, double bloch_time) {
  const fs::path cfg_path = run_dir / "config.json";
  if (!fs::exists(cfg_path)) throw DataError("missing artifact config.json");
  const RunConfig cfg = load_config(cfg_path);
  const ArtifactStamp stamp = cfg.stamp();
  const fs::path out_path = run_dir / (to_string(kind) + ".csv");
  std::ostringstream os;
  os << "# config_hash=" << hex64(stamp.config_hash) << " seed=" << stamp.seed << '\n';

  auto primary_estimates = [&]() -> std::pair<std::string, std::vector<EstimateRecord>> {
    for (const char* name : {"elt_estimates.csv", "slt_estimates.csv"})
      if (fs::exists(run_dir / name)) {
        auto in = open_artifact(run_dir / name);
        return {name, read_estimates(in)};
      }
    throw DataError("missing artifact elt_estimates.csv");
  };

  switch (kind) {
    case PlotKind::kMagnitudes: {
      auto [name, primary] = primary_estimates();
      std::map<std::string, EstimateRecord> other;
      if (name == "elt_estimates.csv" && fs::exists(run_dir / "slt_estimates.csv")) {
        auto in = open_artifact(run_dir / "slt_estimates.csv");
        for (auto& r : read_estimates(in)) other.emplace(r.label, r);
      }
      std::stable_sort(primary.begin(), primary.end(),
                       [](const auto& a, const auto& b) { return a.magnitude > b.magnitude; });
      os << "# sorted by " << name << " magnitude\n"
         << "rank,label,magnitude,q16,q84,other_magnitude,other_q16,other_q84\n";
      for (std::size_t i = 0; i < primary.size(); ++i) {
        const auto& r = primary[i];
        const auto it = other.find(r.label);
        os << i + 1 << ',' << r.label << ',' << format_double(r.magnitude) << ','
           << format_double(r.q16) << ',' << format_double(r.q84) << ','
           << format_double(it == other.end() ? kNaN : it->second.magnitude) << ','
           << format_double(it == other.end() ? kNaN : it->second.q16) << ','
           << format_double(it == other.end() ? kNaN : it->second.q84) << '\n';
      }
      break;
    }
    case PlotKind::kResiduals: {
      auto in = open_artifact(run_dir / "comparison.csv");
      std::string line;
      os << "label,residual,combined_stderr,pull\n";
      while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.starts_with("label,")) continue;
        const auto f = split_fields(line);
        if (f.size() != 7) throw DataError("malformed comparison row: " + line);
        const ComparisonRow r = read_comparison_row(f);
        os << r.label << ',' << format_double(r.residual) << ',' << format_double(r.combined_stderr)
           << ',' << format_double(r.combined_stderr > 0 ? r.residual / r.combined_stderr : kNaN)
           << '\n';
      }
      break;
    }
    case PlotKind::kConvergence: {
      auto in = open_artifact(run_dir / "convergence_table.csv");
      const double elt_total = static_cast<double>(ipow(18, cfg.qubits) * cfg.shots_per_config);
      std::string line;
      os << "shots,fraction_of_elt,residual_std,mean_elt_stderr\n";
      while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.starts_with("shots,")) continue;
        const auto f = split_fields(line);
        if (f.size() < 6) throw DataError("malformed convergence row: " + line);
        if (f[1] != "1") continue;
        os << f[0] << ',' << format_double(parse_double(f[0]) / elt_total) << ',' << f[2] << ','
           << f[4] << '\n';
      }
      break;
    }
    case PlotKind::kBlochDeformation: {
      if (cfg.qubits != 1) throw DataError("bloch-deformation needs a one-qubit run");
      auto [name, records] = primary_estimates();
      const TemplatePtr tmpl = cfg.analysis_template();
      const auto labels = tmpl->labels();
      if (records.size() != labels.size()) throw DataError(name + " does not match the template");
      Eigen::VectorXd v(static_cast<Eigen::Index>(labels.size()));
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (records[i].label != labels[i]) throw DataError(name + " label order mismatch");
        v[static_cast<Eigen::Index>(i)] = records[i].slope;
      }
      const LindbladModel m = LindbladModel::from_parameter_vector({tmpl, v});
      os << "# t=" << format_double(bloch_time) << " from " << name << '\n'
         << "jump,rate,x0,y0,z0,x,y,z\n";
      for (const auto& s : bloch_deformation(m, bloch_time))
        os << s.jump << ',' << format_double(s.rate) << ',' << format_double(s.before[0]) << ','
           << format_double(s.before[1]) << ',' << format_double(s.before[2]) << ','
           << format_double(s.after[0]) << ',' << format_double(s.after[1]) << ','
           << format_double(s.after[2]) << '\n';
      break;
    }
  }
  std::ofstream out(out_path);
  if (!out) throw DataError("cannot write " + out_path.string());
  out << os.str();
  return out_path;
}

// -------------------------------------------------------------------- T1

DecayFit fit_exponential_decay(std::span<const double> times, std::span<const double> values,
                               std::span<const double> sigmas) {
  if (times.size() != values.size() || times.size() != sigmas.size())
    throw DimensionError("decay fit inputs differ in length");
  if (times.size() < 4) throw InsufficientDataError("decay fit needs at least 4 points");
  const double t_max = *std::max_element(times.begin(), times.end());
  if (!(t_max > 0)) throw DomainError("decay fit needs positive times");
  double floor = std::numeric_limits<double>::infinity();
  for (double s : sigmas)
    if (s > 0) floor = std::min(floor, s);
  if (!std::isfinite(floor)) floor = 1.0;
  std::vector<double> w(sigmas.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double s = sigmas[i] > 0 ? sigmas[i] : floor;
    w[i] = 1.0 / (s * s);
  }

  struct Solved {
    double chi2, offset, amplitude;
  };
  auto solve = [&](double rate) -> Solved {
    // Weighted least squares for y = c0 + c1 exp(-rate t).
    double s00 = 0, s01 = 0, s11 = 0, b0 = 0, b1 = 0;
    for (std::size_t i = 0; i < times.size(); ++i) {
      const double e = std::exp(-rate * times[i]);
      s00 += w[i];
      s01 += w[i] * e;
      s11 += w[i] * e * e;
      b0 += w[i] * values[i];
      b1 += w[i] * e * values[i];
    }
    const double det = s00 * s11 - s01 * s01;
    double c0 = b0 / s00, c1 = 0.0;
    if (rate > 0 && det > 1e-12 * s00 * s11) {
      c0 = (s11 * b0 - s01 * b1) / det;
      c1 = (s00 * b1 - s01 * b0) / det;
    }
    double chi2 = 0;
    for (std::size_t i = 0; i < times.size(); ++i) {
      const double r = values[i] - c0 - c1 * std::exp(-rate * times[i]);
      chi2 += w[i] * r * r;
    }
    return {chi2, c0, c1};
  };

  const double r_max = 50.0 / t_max;
  constexpr int kGrid = 2000;
  std::vector<double> grid(kGrid + 1), chi(kGrid + 1);
  for (int i = 0; i <= kGrid; ++i) {
    const double u = static_cast<double>(i) / kGrid;
    grid[static_cast<std::size_t>(i)] = r_max * u * u;
    chi[static_cast<std::size_t>(i)] = solve(grid[static_cast<std::size_t>(i)]).chi2;
  }
  const auto imin = static_cast<std::size_t>(std::min_element(chi.begin(), chi.end()) - chi.begin());
  double best = grid[imin];
  if (imin > 0 && imin < grid.size() - 1) {
    const auto [x, fx] = boost::math::tools::brent_find_minima(
        [&](double r) { return solve(r).chi2; }, grid[imin - 1], grid[imin + 1], 52);
    if (fx <= chi[imin]) best = x;
  }
  const Solved s = solve(best);
  DecayFit f;
  f.rate = best;
  f.offset = s.offset;
  f.amplitude = s.amplitude;
  f.chi2 = s.chi2;

  const double target = s.chi2 + 1.0;
  auto crossing = [&](double inside, double outside) {
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (inside + outside);
      (solve(mid).chi2 < target ? inside : outside) = mid;
    }
    return 0.5 * (inside + outside);
  };
  double hi = kNaN;
  for (std::size_t i = imin + 1; i < grid.size(); ++i)
    if (chi[i] >= target) {
      hi = crossing(best, grid[i]);
      break;
    }
  double lo = 0.0;
  for (std::size_t i = imin; i-- > 0;)
    if (chi[i] >= target) {
      lo = crossing(best, grid[i]);
      break;
    }
  if (std::isnan(hi) || imin == 0) {
    f.ok = false;
    f.message = "no decay resolved: the rate is consistent with 0";
    f.rate_stderr = std::isnan(hi) ? r_max : hi - lo;
    return f;
  }
  f.rate_stderr = 0.5 * (hi - lo);
  return f;
}

T1Crosscheck t1_crosscheck(const ExpectationTrace& decay, const ParameterEstimates& estimates,
                           int qubit) {
  const ModelTemplate& t = *estimates.tmpl;
  const int n = t.qubits();
  if (qubit < 0 || qubit >= n) throw DomainError("T1 qubit out of range");
  T1Crosscheck r;
  r.direct = fit_exponential_decay(decay.times, decay.values, decay.stderrs);
  r.t1_direct = 1.0 / r.direct.rate;
  r.t1_direct_stderr = r.direct.rate_stderr / (r.direct.rate * r.direct.rate);

  const PauliString z = site_pauli(n, qubit, Pauli::Z);
  const TransferMatrix tm =
      build_transfer_matrix(estimates.tmpl, {ProbeConfiguration::pauli_probe(z, z)});
  const Eigen::RowVectorXd row = tm.M.row(0);
  r.model_rate = -row.dot(estimates.values);
  r.model_rate_stderr = row.cwiseProduct(estimates.stderrs.transpose()).norm();
  r.t1_model = 1.0 / r.model_rate;
  r.t1_model_stderr = r.model_rate_stderr / (r.model_rate * r.model_rate);
  r.z_score = (r.direct.rate - r.model_rate) / std::hypot(r.direct.rate_stderr, r.model_rate_stderr);
  return r;
}

ExpectationTrace acquire_decay_trace(const RunConfig& c, const GroundTruth& truth, int qubit,
                                     double t_max) {
  const int n = c.qubits;
  if (qubit < 0 || qubit >= n) throw DomainError("T1 qubit out of range");
  const EltPlan plan = make_elt_plan(n, uniform_times(t_max, c.times.count), c.shots_per_config,
                                     c.acquisition, {"Z", "Z"});
  const std::uint64_t seed = derive_key(c.seed_value(), StreamDomain::kAcquisition, 0x7431);
  const auto traces = expectation_traces(acquire_elt(plan, truth.model, truth.noise, seed),
                                         c.readout_correction ? &truth.noise : nullptr);
  const std::uint32_t bit = std::uint32_t{1} << (n - 1 - qubit);
  for (const auto& tr : traces)
    if (tr.probe.state.negative == bit && tr.observable == bit) return tr;
  throw InternalError("decay trace missing from the Z-only acquisition");
}

void write_t1(std::ostream& os, const T1Crosscheck& r, const ArtifactStamp* stamp) {
  if (stamp)
    os << "# config_hash=" << hex64(stamp->config_hash) << " seed=" << stamp->seed << '\n';
  if (!r.direct.ok) os << "# direct fit: " << r.direct.message << '\n';
  os << "quantity,value,stderr\n"
     << "rate_direct," << format_double(r.direct.rate) << ',' << format_double(r.direct.rate_stderr)
     << '\n'
     << "rate_model," << format_double(r.model_rate) << ',' << format_double(r.model_rate_stderr)
     << '\n'
     << "t1_direct," << format_double(r.t1_direct) << ',' << format_double(r.t1_direct_stderr)
     << '\n'
     << "t1_model," << format_double(r.t1_model) << ',' << format_double(r.t1_model_stderr) << '\n'
     << "z_score," << format_double(r.z_score) << ",\n";
}

}  // namespace lindtomo
