/*
 * Copyright 2026 The Hadar Simulator Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hadar/simulator.hpp"
#include "hadar/verify.hpp"
#include "hadar/workload_io.hpp"

namespace hadar::cli {

enum ExitCode : int { kOk = 0, kVerifyFailed = 1, kUsage = 2 };

struct Inputs {
  std::string trace;
  std::string cluster;
  std::string throughputs;
  double slot_seconds = 360.0;
  std::optional<Slot> horizon;
  double restart_penalty_s = 10.0;
  double comm_fraction = 0.1;
  std::uint64_t seed = 0;
  bool timing = false;
};

namespace detail {

inline void add_inputs(CLI::App& cmd, Inputs& in) {
  cmd.add_option("--trace", in.trace, "Trace CSV (" + std::string(kTraceHeader) + ")")->required();
  cmd.add_option("--cluster", in.cluster, "Cluster JSON; default is the 15-node, 60-GPU cluster");
  cmd.add_option("--throughputs", in.throughputs, "Throughput table JSON; default is the built-in table");
  cmd.add_option("--slot-seconds", in.slot_seconds, "Round length in seconds")->capture_default_str();
  cmd.add_option("--horizon", in.horizon, "Maximum number of rounds; default derives from the trace");
  cmd.add_option("--restart-penalty", in.restart_penalty_s, "Seconds lost when an allocation changes")
      ->capture_default_str();
  cmd.add_option("--comm-fraction", in.comm_fraction, "Multi-node communication cost factor")
      ->capture_default_str();
  cmd.add_option("--seed", in.seed, "Seed recorded with the run")->capture_default_str();
  cmd.add_flag("--timing", in.timing, "Record wall time of every scheduling decision");
}

struct Loaded {
  ClusterSpec cluster;
  std::vector<JobSpec> jobs;
};

inline Loaded load(const Inputs& in) {
  Loaded l;
  l.cluster = in.cluster.empty() ? default_cluster() : load_cluster(in.cluster);
  const auto table = in.throughputs.empty() ? default_throughputs() : load_throughputs(in.throughputs);
  l.jobs = to_jobs(load_trace(in.trace), table, l.cluster, in.slot_seconds);
  return l;
}

inline SimConfig config_for(const Inputs& in, const ClusterSpec& cluster, PolicyId p) {
  SimConfig c;
  c.cluster = cluster;
  c.slot_seconds = in.slot_seconds;
  c.horizon = in.horizon;
  c.policy = p;
  c.restart_penalty_s = in.restart_penalty_s;
  c.comm_fraction = in.comm_fraction;
  c.seed = in.seed;
  c.record_timing = in.timing;
  return c;
}

inline std::string summary_header() { return "policy,gru,cru,ttd,mean_jct,median_jct,finished,total,complete\n"; }

inline std::string summary_row(const SimReport& rep) {
  const auto m = metrics(rep);
  std::ostringstream os;
  os << std::setprecision(10) << rep.policy << "," << m.gru << "," << m.cru << "," << m.ttd << "," << m.mean_jct
     << "," << m.median_jct << "," << m.finished << "," << m.total << "," << (rep.complete ? "true" : "false")
     << "\n";
  return os.str();
}

inline void write_report(const std::filesystem::path& dir, const SimReport& rep, const ClusterSpec* cluster) {
  std::filesystem::create_directories(dir);
  write_text_file((dir / (rep.policy + ".json")).string(), to_json(rep).dump(2) + "\n");
  write_text_file((dir / (rep.policy + "_rounds.csv")).string(), rounds_csv(rep, cluster));
}

}  // namespace detail

/// Runs the command line; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Heterogeneity-aware GPU cluster scheduler and trace-driven simulator", "hadar"};
  app.require_subcommand(1);

  Inputs sim_in;
  std::string sim_policy = "hadar";
  int sim_fork = 1;
  double sim_overhead = 0.0;
  std::string sim_out;
  auto* sim = app.add_subcommand("simulate", "Run one policy on a trace; writes <policy>.json and <policy>_rounds.csv");
  detail::add_inputs(*sim, sim_in);
  sim->add_option("--policy", sim_policy, "hadar, hadare, fifo, tiresias or gavel-proxy")->capture_default_str();
  sim->add_option("--fork", sim_fork, "Copies per job (hadare only)")->capture_default_str();
  sim->add_option("--overhead", sim_overhead, "Per-copy aggregation seconds per round (hadare only)")
      ->capture_default_str();
  sim->add_option("--out", sim_out, "Output directory")->required();

  Inputs cmp_in;
  std::vector<std::string> cmp_policies{"hadar", "gavel-proxy", "tiresias", "fifo"};
  int cmp_fork = 1;
  std::string cmp_out;
  auto* cmp = app.add_subcommand("compare", "Run several policies on the same trace; writes summary.csv and completion.csv");
  detail::add_inputs(*cmp, cmp_in);
  cmp->add_option("--policies", cmp_policies, "Comma-separated policy list")->delimiter(',')->capture_default_str();
  cmp->add_option("--fork", cmp_fork, "Copies per job for hadare")->capture_default_str();
  cmp->add_option("--out-dir", cmp_out, "Output directory")->required();

  std::size_t gen_n = 480;
  std::uint64_t gen_seed = 0;
  std::vector<double> gen_mix{1.0, 1.0, 1.0, 1.0};
  double gen_rate = 0.0;
  std::string gen_out;
  auto* gen = app.add_subcommand("generate-trace", "Write a synthetic trace CSV");
  gen->add_option("--jobs", gen_n, "Number of jobs")->capture_default_str();
  gen->add_option("--seed", gen_seed, "Random seed")->capture_default_str();
  gen->add_option("--mix", gen_mix, "Category weights S,M,L,XL")->delimiter(',')->expected(4)->capture_default_str();
  gen->add_option("--arrival-rate", gen_rate, "Poisson arrivals per hour; 0 puts every job at time 0")
      ->capture_default_str();
  gen->add_option("--out", gen_out, "Output CSV")->required();

  std::string ver_suite;
  verify::SuiteOptions ver_opt;
  std::string ver_out;
  auto* ver = app.add_subcommand("verify", "Run a property suite; exit 1 on any failing case");
  ver->add_option("--suite", ver_suite, "invariants, oracle, ratio, forking or scaling")
      ->required()
      ->check(CLI::IsMember({"invariants", "oracle", "ratio", "forking", "scaling"}));
  ver->add_option("--seed", ver_opt.seed, "Seed of the first case")->capture_default_str();
  ver->add_option("--cases", ver_opt.cases, "Number of cases; 0 uses the suite default")->capture_default_str();
  ver->add_option("--out", ver_out, "Write the suite result as JSON");

  std::string rep_in;
  std::string rep_cluster;
  std::string rep_out;
  auto* rep = app.add_subcommand("report", "Re-emit summary, rounds and completion CSVs from a saved report JSON");
  rep->add_option("--in", rep_in, "Report JSON written by simulate or compare")->required();
  rep->add_option("--cluster", rep_cluster, "Cluster JSON used for per-type column labels");
  rep->add_option("--out-dir", rep_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (*sim) {
      const PolicyId p = parse_policy(sim_policy);
      if (sim_fork != 1 && p != PolicyId::Hadare) {
        err << "error: --fork requires --policy hadare\n";
        return kUsage;
      }
      if (sim_overhead != 0.0 && p != PolicyId::Hadare) {
        err << "error: --overhead requires --policy hadare\n";
        return kUsage;
      }
      auto cfg = detail::config_for(sim_in, ClusterSpec{}, p);
      cfg.fork_count = sim_fork;
      cfg.overhead_s = sim_overhead;
      cfg.check();
      const auto loaded = detail::load(sim_in);
      cfg.cluster = loaded.cluster;
      const auto report = hadar::run(cfg, loaded.jobs);
      detail::write_report(sim_out, report, &loaded.cluster);
      out << detail::summary_header() << detail::summary_row(report);
      if (!report.complete) err << "warning: horizon reached with unfinished jobs\n";
      return kOk;
    }
    if (*cmp) {
      std::vector<PolicyId> ids;
      for (const auto& s : cmp_policies) ids.push_back(parse_policy(s));
      if (ids.empty()) {
        err << "error: --policies is empty\n";
        return kUsage;
      }
      const bool has_hadare = std::find(ids.begin(), ids.end(), PolicyId::Hadare) != ids.end();
      if (cmp_fork != 1 && !has_hadare) {
        err << "error: --fork requires hadare in --policies\n";
        return kUsage;
      }
      const auto loaded = detail::load(cmp_in);
      std::filesystem::create_directories(cmp_out);
      std::string summary = detail::summary_header();
      std::string curves = "policy,t,fraction_completed\n";
      for (PolicyId p : ids) {
        auto cfg = detail::config_for(cmp_in, loaded.cluster, p);
        if (p == PolicyId::Hadare) cfg.fork_count = cmp_fork;
        const auto report = hadar::run(cfg, loaded.jobs);
        detail::write_report(cmp_out, report, &loaded.cluster);
        summary += detail::summary_row(report);
        const auto c = completion_csv(report);
        curves += c.substr(c.find('\n') + 1);
        if (!report.complete) err << "warning: " << report.policy << " reached the horizon with unfinished jobs\n";
      }
      const std::filesystem::path dir(cmp_out);
      write_text_file((dir / "summary.csv").string(), summary);
      write_text_file((dir / "completion.csv").string(), curves);
      out << summary;
      return kOk;
    }
    if (*gen) {
      TraceOptions opt;
      std::copy(gen_mix.begin(), gen_mix.end(), opt.category_mix.begin());
      opt.arrival_rate_per_hour = gen_rate;
      save_trace(gen_out, generate_trace(gen_n, gen_seed, opt));
      out << "wrote " << gen_n << " jobs to " << gen_out << "\n";
      return kOk;
    }
    if (*ver) {
      const auto result = verify::run_suite(ver_suite, ver_opt);
      const auto js = verify::to_json(result);
      if (!ver_out.empty()) write_text_file(ver_out, js.dump(2) + "\n");
      out << result.suite << ": " << result.cases << " cases, " << result.failures.size() << " failures, "
          << result.seconds << " s\n";
      for (const auto& n : result.notes) out << "  " << n << "\n";
      for (const auto& f : result.failures) {
        err << "FAIL case " << f.index << " (replay: --seed " << f.seed << " --cases 1): " << f.what << "\n";
        if (!f.replay.is_null()) err << f.replay.dump() << "\n";
      }
      return result.ok() ? kOk : kVerifyFailed;
    }
    if (*rep) {
      const auto report = report_from_json(read_json_file(rep_in), rep_in);
      std::optional<ClusterSpec> cluster;
      if (!rep_cluster.empty()) cluster = load_cluster(rep_cluster);
      const std::filesystem::path dir(rep_out);
      std::filesystem::create_directories(dir);
      const std::string summary = detail::summary_header() + detail::summary_row(report);
      write_text_file((dir / "summary.csv").string(), summary);
      write_text_file((dir / (report.policy + "_rounds.csv")).string(),
                      rounds_csv(report, cluster ? &*cluster : nullptr));
      write_text_file((dir / "completion.csv").string(), completion_csv(report));
      out << summary;
      return kOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace hadar::cli
