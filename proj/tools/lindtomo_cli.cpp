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

// lindtomo: command-line driver for runs, convergence studies, cost
// projections, plot data and T1 cross-checks.
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 internal
// error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lindtomo/error.hpp"
#include "lindtomo/execution.hpp"
#include "lindtomo/harness.hpp"

namespace fs = std::filesystem;
using namespace lindtomo;

namespace {

constexpr int kConfigExit = 2;
constexpr int kDataExit = 3;
constexpr int kInternalExit = 4;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string output;
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("-c,--config", f.config, "run config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("-s,--seed", f.seed, "override the config seed");
  cmd->add_option("-o,--output", f.output, "override the output directory");
  cmd->add_option("-j,--threads", f.threads, "worker threads (0: runtime default)");
}

RunConfig load(const CommonFlags& f) {
  RunConfig c = load_config(f.config);
  if (f.seed) c.seed = *f.seed;
  if (!f.output.empty()) c.output_dir = fs::absolute(f.output).string();
  if (f.threads > 0) set_thread_count(f.threads);
  c.validate();
  return c;
}

void write_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw DataError("cannot write " + p.string());
  out << text;
}

int cmd_run(const CommonFlags& f) {
  const RunConfig c = load(f);
  const ExperimentResult r = run_experiment(c);
  std::cout << "config " << hex64(c.hash()) << " seed " << c.seed_value() << '\n';
  if (r.elt) std::cout << "elt: " << r.elt->estimates.values.size() << " parameters\n";
  if (r.slt) std::cout << "slt: " << r.slt->estimates.values.size() << " parameters\n";
  if (r.comparison) {
    const auto& s = r.comparison->summary;
    std::cout << "residual std " << s.residual_std << ", mean ELT stderr " << s.mean_elt_stderr
              << ", " << s.within_3sigma << "/" << s.count << " within 3 sigma\n";
  }
  for (const auto& p : r.artifacts) std::cout << "wrote " << p.string() << '\n';
  return 0;
}

int cmd_convergence(const CommonFlags& f, std::vector<std::size_t> shots) {
  const RunConfig c = load(f);
  if (shots.empty()) shots = c.convergence_shots;
  if (shots.empty()) throw ConfigError("no randomization counts given");
  const ConvergenceTable t = convergence_study(c, shots);
  std::ostringstream os;
  const ArtifactStamp stamp = c.stamp();
  write_convergence(os, t, &stamp);
  const fs::path out = c.output_path() / "convergence_table.csv";
  write_file(out, os.str());
  std::cout << os.str() << "wrote " << out.string() << '\n';
  return 0;
}

int cmd_t1(const CommonFlags& f, int qubit, double t_max) {
  RunConfig c = load(f);
  c.protocol = Protocol::kElt;
  const ExperimentResult r = run_experiment(c, false);
  const ExpectationTrace decay = acquire_decay_trace(c, ground_truth(c), qubit, t_max);
  const T1Crosscheck x = t1_crosscheck(decay, r.elt->estimates, qubit);
  std::ostringstream os;
  const ArtifactStamp stamp = c.stamp();
  write_t1(os, x, &stamp);
  const fs::path out = c.output_path() / "t1.csv";
  write_file(out, os.str());
  std::cout << os.str() << "wrote " << out.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lindblad tomography by ELT and SLT on simulated devices"};
  app.require_subcommand(1);

  CommonFlags run_flags, conv_flags, t1_flags;
  auto* run = app.add_subcommand("run", "run the configured protocols and write artifacts");
  add_common(run, run_flags);

  auto* conv = app.add_subcommand("convergence", "residual spread against SLT randomizations");
  add_common(conv, conv_flags);
  std::vector<std::size_t> conv_shots;
  conv->add_option("-n,--shots", conv_shots, "randomization counts (default: config list)")
      ->delimiter(',');

  auto* cost = app.add_subcommand("cost", "project ELT and SLT experiment counts");
  int cost_qubits = 5;
  std::string cost_template = "local2";
  CostTargets targets;
  std::size_t budget = 0;
  cost->add_option("-q,--qubits", cost_qubits, "system size")->check(CLI::Range(1, kMaxQubits));
  cost->add_option("-t,--template", cost_template, "full, localK or chain-nnn");
  cost->add_option("--epsilon", targets.epsilon, "target precision");
  cost->add_option("--delta", targets.delta, "failure probability");
  cost->add_option("--shot-time", targets.shot_time_us, "time per shot in us");
  cost->add_option("--time-steps", targets.time_steps, "number of evolution times");
  cost->add_option("--slt-budget", budget, "match ELT shots to this SLT budget per time");

  auto* emit = app.add_subcommand("emit", "write plot data from a run directory");
  std::string run_dir, which = "magnitudes";
  double bloch_time = 10.0;
  emit->add_option("-r,--run", run_dir, "run directory")->required()->check(CLI::ExistingDirectory);
  emit->add_option("-w,--which", which, "magnitudes, residuals, convergence or bloch-deformation");
  emit->add_option("--time", bloch_time, "evolution time for the Bloch deformation");

  auto* t1 = app.add_subcommand("t1check", "compare a direct T1 fit with the reconstruction");
  add_common(t1, t1_flags);
  int qubit = 0;
  double t1_max = 150.0;
  t1->add_option("-k,--qubit", qubit, "qubit index");
  t1->add_option("--t-max", t1_max, "end of the dedicated decay trace (us)");

  auto* check = app.add_subcommand("validate-config", "validate a config and print its hash");
  std::string check_path;
  check->add_option("-c,--config", check_path, "run config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigExit;
  }

  try {
    if (*run) return cmd_run(run_flags);
    if (*conv) return cmd_convergence(conv_flags, conv_shots);
    if (*cost) {
      if (budget > 0) targets.slt_budget = budget;
      write_cost(std::cout, cost_estimate(*resolve_template(cost_qubits, cost_template), targets));
      return 0;
    }
    if (*emit) {
      const fs::path out = emit_plot_data(run_dir, plot_kind_from_string(which), bloch_time);
      std::cout << "wrote " << out.string() << '\n';
      return 0;
    }
    if (*t1) return cmd_t1(t1_flags, qubit, t1_max);
    if (*check) {
      const RunConfig c = load_config(check_path);
      c.validate();
      std::cout << "ok " << hex64(c.hash()) << '\n';
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigExit;
  } catch (const LearnabilityError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigExit;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataExit;
  } catch (const InsufficientDataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataExit;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternalExit;
  }
  return kInternalExit;
}
