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

#include "lindtomo/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "lindtomo/error.hpp"

namespace lindtomo {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

void write_stamp(std::ostream& os, const ArtifactStamp* stamp) {
  if (stamp) os << "# config_hash=" << hex64(stamp->config_hash) << " seed=" << stamp->seed << '\n';
}

std::uint64_t parse_u64(std::string_view s) {
  s = trim(s);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw DataError("expected an unsigned integer, got '" + std::string(s) + "'");
  return v;
}

int parse_qubits(std::string_view s) {
  const auto n = parse_u64(s);
  if (n < 1 || n > static_cast<std::uint64_t>(kMaxQubits))
    throw DataError("qubit count out of range: " + std::string(s));
  return static_cast<int>(n);
}

PauliString parse_pauli(std::string_view s, int n) {
  PauliString p;
  try {
    p = PauliString::parse(trim(s));
  } catch (const std::exception& e) {
    throw DataError("bad Pauli string '" + std::string(s) + "': " + e.what());
  }
  if (p.size() != n) throw DataError("Pauli string '" + std::string(s) + "' has the wrong size");
  return p;
}

ProductState parse_state(std::string_view s) {
  try {
    return ProductState::parse(trim(s));
  } catch (const std::exception& e) {
    throw DataError("bad state label '" + std::string(s) + "': " + e.what());
  }
}

// Key/value lines with comments stripped, in file order.
std::vector<std::pair<std::string, std::string>> read_key_values(std::istream& is) {
  std::vector<std::pair<std::string, std::string>> out;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string_view v = line;
    if (const auto hash = v.find('#'); hash != std::string_view::npos) v = v.substr(0, hash);
    v = trim(v);
    if (v.empty()) continue;
    const auto eq = v.find('=');
    if (eq == std::string_view::npos)
      throw DataError("line " + std::to_string(lineno) + ": expected key = value");
    std::string key(trim(v.substr(0, eq)));
    if (!seen.insert(key).second)
      throw DataError("line " + std::to_string(lineno) + ": duplicate key " + key);
    out.emplace_back(std::move(key), std::string(trim(v.substr(eq + 1))));
  }
  return out;
}

std::vector<double> parse_numbers(std::string_view s) {
  std::vector<double> out;
  std::istringstream in{std::string(s)};
  std::string tok;
  while (in >> tok) out.push_back(parse_double(tok));
  return out;
}

// Strips "prefix[" and "]" and returns the bracket body, or nullopt.
std::optional<std::string_view> bracket(std::string_view key, std::string_view prefix) {
  if (!key.starts_with(prefix) || key.size() < prefix.size() + 2 || key[prefix.size()] != '[' ||
      key.back() != ']')
    return std::nullopt;
  return key.substr(prefix.size() + 1, key.size() - prefix.size() - 2);
}

bool is_data_line(std::string_view line) {
  line = trim(line);
  return !line.empty() && line.front() != '#';
}

template <class T>
void put_le(std::ostream& os, T v) {
  std::array<char, sizeof(T)> buf{};
  for (std::size_t i = 0; i < sizeof(T); ++i)
    buf[i] = static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFFU);
  os.write(buf.data(), buf.size());
}

template <class T>
T get_le(std::istream& is) {
  std::array<unsigned char, sizeof(T)> buf{};
  if (!is.read(reinterpret_cast<char*>(buf.data()), buf.size()))
    throw DataError("shot file truncated");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return static_cast<T>(v);
}

double chi2_per_dof(const ComponentFit& f) {
  return f.dof > 0 ? f.chi2 / f.dof : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

std::string format_double(double x) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc()) throw InternalError("double formatting failed");
  return {buf.data(), ptr};
}

double parse_double(std::string_view s) {
  s = trim(s);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw DataError("expected a number, got '" + std::string(s) + "'");
  return v;
}

std::string hex64(std::uint64_t x) {
  std::array<char, 17> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + 16, x, 16);
  std::string s(buf.data(), ptr);
  return std::string(16 - s.size(), '0') + s;
}

std::vector<std::string> split_fields(std::string_view line, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    out.emplace_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// ---------------------------------------------------------------- models

void write_model(std::ostream& os, const LindbladModel& m, const ArtifactStamp* stamp) {
  const ModelTemplate& t = m.model_template();
  const int n = t.qubits();
  os << "# lindtomo model\n";
  write_stamp(os, stamp);
  os << "qubits = " << n << '\n'
     << "template = " << t.name() << '\n'
     << "units.coherent = rad/us\n"
     << "units.dissipation = 1/us\n";
  for (std::uint32_t p : t.coherent_terms()) {
    const PauliString ps = PauliString::from_index(n, p);
    os << "a[" << ps.str() << "] = " << format_double(m.coherent_coefficient(ps)) << '\n';
  }
  for (const auto& [p, q] : t.dissipative_terms()) {
    if (p > q) continue;
    const PauliString ps = PauliString::from_index(n, p);
    const PauliString qs = PauliString::from_index(n, q);
    const Complex d = m.dissipation_entry(ps, qs);
    os << "D[" << ps.str() << ';' << qs.str() << "] = " << format_double(d.real());
    if (p != q) os << ' ' << format_double(d.imag());
    os << '\n';
  }
}

LindbladModel read_model(std::istream& is) {
  const auto kv = read_key_values(is);
  int n = 0;
  std::string name = "custom";
  struct Coherent {
    PauliString p;
    double value;
  };
  struct Entry {
    PauliString p, q;
    Complex value;
  };
  std::vector<std::pair<std::string, std::string>> coherent_raw, dissipative_raw;
  for (const auto& [key, value] : kv) {
    if (key == "qubits") {
      n = parse_qubits(value);
    } else if (key == "template") {
      name = value;
    } else if (key == "units.coherent") {
      if (value != "rad/us") throw DataError("unsupported coherent unit " + value);
    } else if (key == "units.dissipation") {
      if (value != "1/us") throw DataError("unsupported dissipation unit " + value);
    } else if (bracket(key, "a")) {
      coherent_raw.emplace_back(key, value);
    } else if (bracket(key, "D")) {
      dissipative_raw.emplace_back(key, value);
    } else {
      throw DataError("unknown model key " + key);
    }
  }
  if (n == 0) throw DataError("model file lacks 'qubits'");

  std::vector<Coherent> coherent;
  for (const auto& [key, value] : coherent_raw) {
    const auto nums = parse_numbers(value);
    if (nums.size() != 1) throw DataError(key + ": expected one value");
    coherent.push_back({parse_pauli(*bracket(key, "a"), n), nums[0]});
  }
  std::vector<Entry> entries;
  for (const auto& [key, value] : dissipative_raw) {
    const auto body = *bracket(key, "D");
    const auto semi = body.find(';');
    if (semi == std::string_view::npos) throw DataError(key + ": expected D[P;Q]");
    const PauliString p = parse_pauli(body.substr(0, semi), n);
    const PauliString q = parse_pauli(body.substr(semi + 1), n);
    const auto nums = parse_numbers(value);
    if (nums.empty() || nums.size() > 2) throw DataError(key + ": expected real [imag]");
    const Complex v(nums[0], nums.size() == 2 ? nums[1] : 0.0);
    if (p == q && v.imag() != 0.0) throw DataError(key + ": diagonal entries are real");
    entries.push_back({p, q, v});
  }

  ModelTemplate tmpl = [&] {
    try {
      return ModelTemplate::from_name(n, name);
    } catch (const ConfigError&) {
      std::vector<PauliString> terms;
      for (const auto& c : coherent) terms.push_back(c.p);
      std::vector<std::pair<PauliString, PauliString>> pairs;
      for (const auto& e : entries) {
        pairs.emplace_back(e.p, e.q);
        if (e.p != e.q) pairs.emplace_back(e.q, e.p);
      }
      return ModelTemplate::custom(n, std::move(terms), std::move(pairs), name);
    }
  }();
  ModelBuilder b(std::make_shared<const ModelTemplate>(std::move(tmpl)));
  try {
    for (const auto& c : coherent) b.coherent(c.p, c.value);
    for (const auto& e : entries) b.dissipation(e.p, e.q, e.value);
    return b.build();
  } catch (const ContractViolation& e) {
    throw DataError(std::string("model file: ") + e.what());
  }
}

LindbladModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file " + path.string());
  return read_model(in);
}

void save_model(const std::filesystem::path& path, const LindbladModel& m,
                const ArtifactStamp* stamp) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_model(out, m, stamp);
}

// ----------------------------------------------------------------- noise

void write_noise(std::ostream& os, const NoiseModel& noise) {
  os << "# lindtomo readout and preparation noise\nqubits = " << noise.qubits() << '\n';
  for (int k = 0; k < noise.qubits(); ++k) {
    const auto& c = noise.confusion[static_cast<std::size_t>(k)];
    os << "confusion[" << k << "] = " << format_double(c(0, 1)) << ' ' << format_double(c(1, 0))
       << '\n'
       << "thermal[" << k << "] = "
       << format_double(noise.thermal_population[static_cast<std::size_t>(k)]) << '\n';
  }
}

NoiseModel read_noise(std::istream& is) {
  const auto kv = read_key_values(is);
  int n = 0;
  for (const auto& [key, value] : kv)
    if (key == "qubits") n = parse_qubits(value);
  if (n == 0) throw DataError("noise file lacks 'qubits'");
  NoiseModel noise = NoiseModel::ideal(n);
  for (const auto& [key, value] : kv) {
    if (key == "qubits") continue;
    const auto conf = bracket(key, "confusion");
    const auto therm = bracket(key, "thermal");
    if (!conf && !therm) throw DataError("unknown noise key " + key);
    const auto site = parse_u64(conf ? *conf : *therm);
    if (site >= static_cast<std::uint64_t>(n)) throw DataError(key + ": site out of range");
    const auto nums = parse_numbers(value);
    if (conf) {
      if (nums.size() != 2) throw DataError(key + ": expected p(1|0) p(0|1)");
      noise.confusion[site] << 1.0 - nums[0], nums[0], nums[1], 1.0 - nums[1];
    } else {
      if (nums.size() != 1) throw DataError(key + ": expected one value");
      noise.thermal_population[site] = nums[0];
    }
  }
  try {
    noise.validate();
  } catch (const ContractViolation& e) {
    throw DataError(std::string("noise file: ") + e.what());
  }
  return noise;
}

NoiseModel load_noise(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open noise file " + path.string());
  return read_noise(in);
}

// ---------------------------------------------------------------- traces

void write_traces(std::ostream& os, const std::vector<ExpectationTrace>& traces,
                  const EltPlan& plan, const ArtifactStamp* stamp) {
  write_stamp(os, stamp);
  os << "state,basis,observable,time,mean,stderr,shots\n";
  for (const auto& tr : traces) {
    if (tr.config >= plan.configurations.size())
      throw ContractViolation("trace configuration outside the plan");
    const auto& c = plan.configurations[tr.config];
    const std::string prefix =
        c.state.label() + ',' + c.basis.str() + ',' + tr.probe.output.str() + ',';
    for (std::size_t k = 0; k < tr.times.size(); ++k)
      os << prefix << format_double(tr.times[k]) << ',' << format_double(tr.values[k]) << ','
         << format_double(tr.stderrs[k]) << ',' << tr.shots << '\n';
  }
}

std::vector<ExpectationTrace> read_traces(std::istream& is) {
  std::vector<ExpectationTrace> out;
  std::map<std::string, std::size_t> by_key;
  std::map<std::string, std::size_t> configs;
  std::string line;
  bool header = false;
  while (std::getline(is, line)) {
    if (!is_data_line(line)) continue;
    if (!header) {
      header = true;
      if (line.starts_with("state,")) continue;
    }
    const auto f = split_fields(line);
    if (f.size() != 7) throw DataError("trace row needs 7 columns: " + line);
    const ProductState state = parse_state(f[0]);
    const PauliString basis = parse_pauli(f[1], state.qubits());
    const PauliString obs = parse_pauli(f[2], state.qubits());
    for (int k = 0; k < obs.size(); ++k)
      if (obs.at(k) != Pauli::I && obs.at(k) != basis.at(k))
        throw DataError("observable " + f[2] + " is not measurable in basis " + f[1]);
    const std::string key = f[0] + ',' + f[1] + ',' + f[2];
    auto [it, fresh] = by_key.try_emplace(key, out.size());
    if (fresh) {
      const auto [cit, _] = configs.try_emplace(f[0] + ',' + f[1], configs.size());
      ExpectationTrace tr;
      tr.probe = ProbeConfiguration::state_probe(state, obs);
      tr.config = cit->second;
      tr.observable = obs.support_mask();
      tr.shots = parse_u64(f[6]);
      out.push_back(std::move(tr));
    }
    ExpectationTrace& tr = out[it->second];
    if (parse_u64(f[6]) != tr.shots) throw DataError("shot count changes within trace " + key);
    tr.times.push_back(parse_double(f[3]));
    tr.values.push_back(parse_double(f[4]));
    tr.stderrs.push_back(parse_double(f[5]));
  }
  return out;
}

// ----------------------------------------------------------------- shots

void write_shots_binary(std::ostream& os, const ShadowDataset& data, const ArtifactStamp* stamp) {
  if (data.shots.size() != data.times.size())
    throw ContractViolation("shot groups and times disagree");
  os.write(kShotMagic, sizeof kShotMagic);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(data.n));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(data.times.size()));
  put_le<std::uint64_t>(os, stamp ? stamp->config_hash : 0);
  put_le<std::uint64_t>(os, stamp ? stamp->seed : 0);
  for (double t : data.times) put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(t));
  for (const auto& group : data.shots) put_le<std::uint64_t>(os, group.size());
  for (const auto& group : data.shots)
    for (const ShadowShot& s : group) {
      put_le(os, s.time_index);
      put_le(os, s.n);
      put_le<std::uint8_t>(os, 0);
      put_le(os, s.init_x);
      put_le(os, s.init_z);
      put_le(os, s.init_negative);
      put_le(os, s.basis_x);
      put_le(os, s.basis_z);
      put_le(os, s.outcome);
    }
  if (!os) throw DataError("failed writing shot file");
}

ShadowDataset read_shots_binary(std::istream& is, ArtifactStamp* stamp) {
  char magic[sizeof kShotMagic];
  if (!is.read(magic, sizeof magic) || !std::equal(magic, magic + sizeof magic, kShotMagic))
    throw DataError("not a LTSHOT01 shot file");
  ShadowDataset d;
  const auto n = get_le<std::uint32_t>(is);
  if (n < 1 || n > static_cast<std::uint32_t>(kMaxQubits)) throw DataError("bad qubit count");
  d.n = static_cast<int>(n);
  const auto count = get_le<std::uint32_t>(is);
  ArtifactStamp st{get_le<std::uint64_t>(is), get_le<std::uint64_t>(is)};
  if (stamp) *stamp = st;
  for (std::uint32_t k = 0; k < count; ++k)
    d.times.push_back(std::bit_cast<double>(get_le<std::uint64_t>(is)));
  std::vector<std::uint64_t> sizes;
  for (std::uint32_t k = 0; k < count; ++k) sizes.push_back(get_le<std::uint64_t>(is));
  const std::uint32_t full = (std::uint32_t{1} << n) - 1;
  for (std::uint32_t k = 0; k < count; ++k) {
    std::vector<ShadowShot> group;
    group.reserve(sizes[k]);
    for (std::uint64_t i = 0; i < sizes[k]; ++i) {
      ShadowShot s;
      s.time_index = get_le<std::uint16_t>(is);
      s.n = get_le<std::uint8_t>(is);
      get_le<std::uint8_t>(is);
      s.init_x = get_le<std::uint16_t>(is);
      s.init_z = get_le<std::uint16_t>(is);
      s.init_negative = get_le<std::uint16_t>(is);
      s.basis_x = get_le<std::uint16_t>(is);
      s.basis_z = get_le<std::uint16_t>(is);
      s.outcome = get_le<std::uint16_t>(is);
      const std::uint32_t init_support = static_cast<std::uint32_t>(s.init_x | s.init_z);
      const std::uint32_t basis_support = static_cast<std::uint32_t>(s.basis_x | s.basis_z);
      if (s.time_index != k || s.n != n || init_support != full || basis_support != full ||
          ((s.init_negative | s.outcome) & ~full))
        throw DataError("corrupt shot record at time " + std::to_string(k));
      group.push_back(s);
    }
    d.shots.push_back(std::move(group));
  }
  return d;
}

void write_shots_csv(std::ostream& os, const ShadowDataset& data, const ArtifactStamp* stamp) {
  write_stamp(os, stamp);
  os << "# qubits=" << data.n << "\n# times=";
  for (std::size_t k = 0; k < data.times.size(); ++k)
    os << (k ? "," : "") << format_double(data.times[k]);
  os << "\ntime_index,init,basis,outcome\n";
  for (const auto& group : data.shots)
    for (const ShadowShot& s : group) {
      std::string bits(static_cast<std::size_t>(s.n), '0');
      for (int k = 0; k < s.n; ++k)
        if (s.outcome_sign(k) < 0) bits[static_cast<std::size_t>(k)] = '1';
      os << s.time_index << ',' << s.init().label() << ',' << s.basis().str() << ',' << bits
         << '\n';
    }
}

ShadowDataset read_shots_csv(std::istream& is) {
  ShadowDataset d;
  bool have_times = false;
  std::string line;
  while (std::getline(is, line)) {
    const std::string_view v = trim(line);
    if (v.empty()) continue;
    if (v.starts_with("# qubits=")) {
      d.n = parse_qubits(v.substr(9));
      continue;
    }
    if (v.starts_with("# times=")) {
      for (const auto& f : split_fields(v.substr(8)))
        if (!f.empty()) d.times.push_back(parse_double(f));
      d.shots.resize(d.times.size());
      have_times = true;
      continue;
    }
    if (v.front() == '#' || v.starts_with("time_index")) continue;
    if (d.n == 0 || !have_times) throw DataError("shot CSV lacks qubits/times header");
    const auto f = split_fields(v);
    if (f.size() != 4) throw DataError("shot row needs 4 columns: " + line);
    const auto k = parse_u64(f[0]);
    if (k >= d.times.size()) throw DataError("time index out of range: " + line);
    const ProductState init = parse_state(f[1]);
    const PauliString basis = parse_pauli(f[2], d.n);
    if (init.qubits() != d.n || init.letters.support_mask() != (1U << d.n) - 1 ||
        basis.support_mask() != (1U << d.n) - 1 || f[3].size() != static_cast<std::size_t>(d.n))
      throw DataError("malformed shot row: " + line);
    std::uint32_t bits = 0;
    for (char c : f[3]) {
      if (c != '0' && c != '1') throw DataError("outcome must be a bit string: " + line);
      bits = (bits << 1) | static_cast<std::uint32_t>(c == '1');
    }
    d.shots[k].push_back(ShadowShot::make(k, init, basis, bits));
  }
  return d;
}

// ------------------------------------------------------------- estimates

std::vector<EstimateRecord> estimate_records(const ParameterEstimates& e) {
  const auto labels = e.tmpl->labels();
  std::vector<EstimateRecord> out;
  out.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto j = static_cast<Eigen::Index>(i);
    const SlopeComponent c{e.values[j], e.stderrs[j]};
    const ParameterEstimate p = slope_to_parameter(std::span(&c, 1), ValueKind::kReal, labels[i]);
    const double chi2_dof = i < e.fits.size() ? chi2_per_dof(e.fits[i])
                                              : std::numeric_limits<double>::quiet_NaN();
    out.push_back({labels[i], c.value, c.stderr, p.magnitude, p.quantile_lo, p.quantile_hi,
                   to_string(e.method), chi2_dof});
  }
  return out;
}

void write_estimates(std::ostream& os, const ParameterEstimates& e, const ArtifactStamp* stamp) {
  write_stamp(os, stamp);
  os << "# protocol=" << e.protocol << '\n'
     << "label,slope,stderr,magnitude,q16,q84,method,chi2_dof\n";
  for (const auto& r : estimate_records(e))
    os << r.label << ',' << format_double(r.slope) << ',' << format_double(r.stderr) << ','
       << format_double(r.magnitude) << ',' << format_double(r.q16) << ',' << format_double(r.q84)
       << ',' << r.method << ',' << format_double(r.chi2_dof) << '\n';
}

std::vector<EstimateRecord> read_estimates(std::istream& is) {
  std::vector<EstimateRecord> out;
  std::string line;
  bool header = false;
  while (std::getline(is, line)) {
    if (!is_data_line(line)) continue;
    if (!header) {
      header = true;
      if (line.starts_with("label,")) continue;
    }
    const auto f = split_fields(line);
    if (f.size() != 8) throw DataError("estimate row needs 8 columns: " + line);
    out.push_back({f[0], parse_double(f[1]), parse_double(f[2]), parse_double(f[3]),
                   parse_double(f[4]), parse_double(f[5]), f[6], parse_double(f[7])});
  }
  return out;
}

void write_terms(std::ostream& os, const ParameterEstimates& e, const ArtifactStamp* stamp) {
  write_stamp(os, stamp);
  os << "label,kind,real,imag,stderr,magnitude,q16,q84,unequal_errors\n";
  for (const auto& t : e.terms)
    os << t.label << ',' << (t.kind == ValueKind::kReal ? "real" : "complex") << ','
       << format_double(t.value.real()) << ',' << format_double(t.value.imag()) << ','
       << format_double(t.stderr) << ',' << format_double(t.magnitude) << ','
       << format_double(t.quantile_lo) << ',' << format_double(t.quantile_hi) << ','
       << (t.unequal_errors ? 1 : 0) << '\n';
}

void write_needed_pairs(std::ostream& os, const SltAnalysis& a) {
  os << "probe,output,input\n";
  for (std::size_t i : a.needed) {
    const auto& p = a.tm.probes[i];
    os << p.label() << ',' << p.output.str() << ',' << p.input.str() << '\n';
  }
}

}  // namespace lindtomo
