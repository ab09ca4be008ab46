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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hadar/baselines.hpp"
#include "hadar/hadar_scheduler.hpp"
#include "hadar/hadare.hpp"
#include "hadar/simulator.hpp"
#include "hadar/workload_io.hpp"

// Property suites shared by the CLI and the acceptance binary. Every case is
// generated from its own seed (base seed + case index), so a failing case is
// replayed by running the suite with that seed and one case.
namespace hadar::verify {

struct Failure {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::string what;
  nlohmann::json replay;
};

struct SuiteResult {
  std::string suite;
  std::size_t cases = 0;
  std::vector<Failure> failures;
  std::vector<std::string> notes;
  double seconds = 0.0;

  bool ok() const noexcept { return cases > 0 && failures.empty(); }
};

struct SuiteOptions {
  std::uint64_t seed = 1;
  std::size_t cases = 0;  // 0: the suite's default
};

inline nlohmann::json job_to_json(const JobSpec& j) {
  return {{"id", j.id},
          {"arrival", j.arrival},
          {"workers", j.workers},
          {"epochs", j.epochs},
          {"iters_per_epoch", j.iters_per_epoch},
          {"throughput", j.throughput}};
}

inline JobSpec job_from_json(const nlohmann::json& j) {
  JobSpec s;
  s.id = j.at("id").get<JobId>();
  s.arrival = j.at("arrival").get<Slot>();
  s.workers = j.at("workers").get<int>();
  s.epochs = j.at("epochs").get<std::int64_t>();
  s.iters_per_epoch = j.at("iters_per_epoch").get<std::int64_t>();
  s.throughput = j.at("throughput").get<std::vector<double>>();
  return s;
}

inline nlohmann::json instance_json(const ClusterSpec& c, std::span<const JobSpec> jobs) {
  nlohmann::json js = nlohmann::json::array();
  for (const auto& j : jobs) js.push_back(job_to_json(j));
  return {{"cluster", cluster_to_json(c)}, {"jobs", js}};
}

// Random instances.

struct TinyShape {
  std::size_t max_nodes = 3;
  std::size_t max_types = 2;
  int max_capacity = 2;
  std::size_t max_jobs = 4;
  int max_workers = 2;
  Slot max_arrival = 0;
  Slot max_rounds = 2;  // fastest-type rounds per job
  double slot_seconds = 60.0;
  double absent = 0.2;  // chance a type is not runnable for a job
};

inline ClusterSpec random_cluster(std::mt19937_64& rng, const TinyShape& shape) {
  std::uniform_int_distribution<std::size_t> nt(1, shape.max_types), nn(1, shape.max_nodes);
  std::uniform_int_distribution<int> cap(0, shape.max_capacity);
  const std::size_t R = nt(rng), H = nn(rng);
  std::vector<GpuType> types;
  for (TypeIndex r = 0; r < R; ++r) types.push_back({r, "T" + std::to_string(r)});
  std::vector<NodeSpec> nodes;
  for (NodeIndex h = 0; h < H; ++h) {
    NodeSpec n;
    n.id = h;
    for (TypeIndex r = 0; r < R; ++r) n.capacity.push_back(cap(rng));
    if (std::all_of(n.capacity.begin(), n.capacity.end(), [](int c) { return c == 0; })) {
      n.capacity[std::uniform_int_distribution<std::size_t>(0, R - 1)(rng)] = 1;
    }
    nodes.push_back(std::move(n));
  }
  return ClusterSpec(std::move(types), std::move(nodes));
}

// Jobs that can each run somewhere in the cluster. Throughputs are multiples
// of 0.25 so that sums stay exact.
inline std::vector<JobSpec> random_jobs(std::mt19937_64& rng, const ClusterSpec& c, const TinyShape& shape,
                                        JobId first_id = 1) {
  const std::size_t R = c.num_types();
  std::uniform_int_distribution<std::size_t> nj(1, shape.max_jobs);
  std::uniform_int_distribution<int> quarter(2, 16);
  std::uniform_int_distribution<Slot> arrival(0, shape.max_arrival), rounds(1, shape.max_rounds);
  std::uniform_real_distribution<double> frac(0.3, 1.0);
  std::bernoulli_distribution absent(shape.absent);
  const std::size_t n = nj(rng);
  std::vector<JobSpec> out;
  for (std::size_t i = 0; i < n; ++i) {
    JobSpec j;
    j.id = first_id + static_cast<JobId>(i);
    j.arrival = arrival(rng);
    for (TypeIndex r = 0; r < R; ++r) {
      j.throughput.push_back(c.type_capacity(r) > 0 && !absent(rng) ? 0.25 * quarter(rng) : 0.0);
    }
    int room = 0;
    for (TypeIndex r = 0; r < R; ++r)
      if (j.runnable_on(r)) room += c.type_capacity(r);
    if (room == 0) {
      for (TypeIndex r = 0; r < R; ++r) {
        if (c.type_capacity(r) > 0) {
          j.throughput[r] = 0.25 * quarter(rng);
          room += c.type_capacity(r);
        }
      }
    }
    j.workers = std::uniform_int_distribution<int>(1, std::min(shape.max_workers, room))(rng);
    j.iters_per_epoch = 10;
    const double iters = frac(rng) * static_cast<double>(rounds(rng)) * j.max_throughput() * j.workers *
                         shape.slot_seconds;
    j.epochs = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(iters / 10.0)));
    out.push_back(std::move(j));
  }
  return out;
}

namespace detail {

class Clock {
 public:
  Clock() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

template <class Case>
SuiteResult run_cases(const std::string& name, const SuiteOptions& opt, std::size_t default_cases, Case&& one) {
  SuiteResult res;
  res.suite = name;
  Clock clock;
  const std::size_t n = opt.cases ? opt.cases : default_cases;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t seed = opt.seed + i;
    std::mt19937_64 rng(seed);
    try {
      if (auto f = one(rng, res)) {
        f->index = i;
        f->seed = seed;
        res.failures.push_back(std::move(*f));
      }
    } catch (const std::exception& e) {
      res.failures.push_back({i, seed, std::string("exception: ") + e.what(), nullptr});
    }
    ++res.cases;
  }
  res.seconds = clock.seconds();
  return res;
}

}  // namespace detail

// Oracle: the DP's selection against exhaustive select/skip enumeration. Each
// selected job takes the FIND_ALLOC placement under the running prices, so
// both sides search the same decision space. Ties prefer selecting the
// earlier job, as the recursion does.

struct OracleChoice {
  std::vector<JobId> selected;
  double total_payoff = 0.0;
  bool found = false;
};

inline OracleChoice enumerate_selections(std::span<const JobState> ordered, const ClusterSpec& cluster,
                                         const PriceState& prices, const FindAllocOptions& opt, Slot t) {
  OracleChoice best;
  std::vector<JobId> chosen;
  std::vector<double> payoffs;
  ServerState srvr(cluster);
  PriceState p = prices;
  std::function<void(std::size_t)> walk = [&](std::size_t i) {
    if (i == ordered.size()) {
      double fold = 0.0;
      for (auto it = payoffs.rbegin(); it != payoffs.rend(); ++it) fold = *it + fold;
      if (!best.found || fold > best.total_payoff) best = {chosen, fold, true};
      return;
    }
    if (auto cand = find_alloc(ordered[i], srvr, p, opt, t)) {
      srvr.take(cand->alloc);
      p.add(cand->alloc);
      chosen.push_back(ordered[i].spec.id);
      payoffs.push_back(cand->payoff);
      walk(i + 1);
      payoffs.pop_back();
      chosen.pop_back();
      p.release(cand->alloc);
      srvr.give_back(cand->alloc);
    }
    walk(i + 1);
  };
  walk(0);
  return best;
}

inline SuiteResult oracle_suite(const SuiteOptions& opt = {}) {
  return detail::run_cases("oracle", opt, 200, [](std::mt19937_64& rng, SuiteResult&) -> std::optional<Failure> {
    TinyShape shape;
    const auto cluster = random_cluster(rng, shape);
    const auto jobs = random_jobs(rng, cluster, shape);
    std::vector<JobState> queue;
    for (const auto& j : jobs) queue.push_back(JobState::fresh(j));

    HadarConfig hc;
    hc.slot_seconds = shape.slot_seconds;
    hc.horizon = 8;
    HadarScheduler sched(hc);
    const auto dp = sched.decide(queue, cluster, 0);

    const auto ordered = ordered_queue(queue);
    const auto fa = hc.find_alloc_options();
    PriceState prices(cluster, compute_bounds(jobs, cluster, fa.utility, hc.horizon, hc.slot_seconds));
    const auto brute = enumerate_selections(ordered, cluster, prices, fa, 0);

    if (dp.selected != brute.selected || !(dp.net_cost() == -brute.total_payoff)) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "dp net cost " << dp.net_cost() << " vs enumeration " << -brute.total_payoff << ", selected "
          << dp.selected.size() << " vs " << brute.selected.size();
      return Failure{0, 0, msg.str(), instance_json(cluster, jobs)};
    }
    return std::nullopt;
  });
}

// Competitive ratio: achieved utility against the offline optimum.

inline SuiteResult ratio_suite(const SuiteOptions& opt = {}) {
  double worst = std::numeric_limits<double>::infinity();
  auto res = detail::run_cases("ratio", opt, 50, [&](std::mt19937_64& rng, SuiteResult&) -> std::optional<Failure> {
    TinyShape shape;
    shape.max_arrival = 2;
    const Slot horizon = OptLimits::kHorizon;
    const auto cluster = random_cluster(rng, shape);
    const auto jobs = random_jobs(rng, cluster, shape);
    const auto util = UtilityFn::effective_throughput(shape.slot_seconds);

    SimConfig cfg;
    cfg.cluster = cluster;
    cfg.slot_seconds = shape.slot_seconds;
    cfg.horizon = horizon;
    cfg.policy = PolicyId::Hadar;
    cfg.restart_penalty_s = 0.0;
    const auto rep = run(cfg, jobs);
    const double achieved = total_utility(rep, jobs, util);
    const double best = offline_opt(jobs, cluster, shape.slot_seconds, horizon, util);
    const double a = alpha(compute_bounds(jobs, cluster, util, horizon, shape.slot_seconds));
    if (best > 0.0) worst = std::min(worst, achieved / best);
    if (achieved < best / (2.0 * a)) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "utility " << achieved << " below OPT/(2 alpha) = " << best << "/(2*" << a << ")";
      return Failure{0, 0, msg.str(), instance_json(cluster, jobs)};
    }
    return std::nullopt;
  });
  if (std::isfinite(worst)) res.notes.push_back("lowest achieved/OPT ratio: " + std::to_string(worst));
  return res;
}

// Forking: CRU ordering across fork counts on single-GPU nodes.

struct ForkRun {
  int fork = 1;
  Slot rounds = 0;
  double cru = 0.0;
  bool idle_before_last = false;
};

inline ForkRun run_fork(const ClusterSpec& cluster, std::span<const JobSpec> jobs, int fork, double L) {
  SimConfig cfg;
  cfg.cluster = cluster;
  cfg.slot_seconds = L;
  cfg.policy = PolicyId::Hadare;
  cfg.fork_count = fork;
  cfg.restart_penalty_s = 0.0;
  cfg.overhead_s = 0.0;
  const auto rep = run(cfg, jobs);
  if (!rep.complete) throw InvariantError("forking run did not finish within the horizon");
  const auto m = metrics(rep);
  ForkRun out{fork, rep.ttd, m.cru, false};
  for (Slot t = 0; t + 1 < rep.ttd; ++t)
    if (rep.rounds[static_cast<std::size_t>(t)].idle_nodes() > 0) out.idle_before_last = true;
  return out;
}

inline ClusterSpec single_gpu_cluster(std::mt19937_64& rng, std::size_t n, std::size_t types) {
  std::vector<GpuType> ts;
  for (TypeIndex r = 0; r < types; ++r) ts.push_back({r, "T" + std::to_string(r)});
  std::vector<NodeSpec> nodes;
  std::uniform_int_distribution<std::size_t> pick(0, types - 1);
  for (NodeIndex h = 0; h < n; ++h) {
    NodeSpec s;
    s.id = h;
    s.capacity.assign(types, 0);
    s.capacity[pick(rng)] = 1;
    nodes.push_back(std::move(s));
  }
  return ClusterSpec(std::move(ts), std::move(nodes));
}

inline SuiteResult forking_suite(const SuiteOptions& opt = {}) {
  std::size_t strict_checks = 0;
  auto res = detail::run_cases("forking", opt, 25, [&](std::mt19937_64& rng, SuiteResult&) -> std::optional<Failure> {
    const double L = 60.0;
    const std::size_t n = std::uniform_int_distribution<std::size_t>(3, 5)(rng);
    const auto cluster = single_gpu_cluster(rng, n, 3);
    TinyShape shape;
    shape.max_jobs = 4;
    shape.max_workers = 1;
    shape.max_rounds = 6;
    shape.slot_seconds = L;
    shape.absent = 0.0;
    auto jobs = random_jobs(rng, cluster, shape);
    for (auto& j : jobs) j.arrival = 0;
    const int x = std::uniform_int_distribution<int>(2, static_cast<int>(n) - 1)(rng);

    const auto none = run_fork(cluster, jobs, 1, L);
    const auto some = run_fork(cluster, jobs, x, L);
    const auto all = run_fork(cluster, jobs, static_cast<int>(n), L);
    const auto more = run_fork(cluster, jobs, static_cast<int>(n) + 1, L);

    std::ostringstream msg;
    msg.precision(17);
    if (some.rounds < none.rounds) {
      ++strict_checks;
      if (!(none.cru < some.cru)) msg << "CRU(1)=" << none.cru << " not below CRU(" << x << ")=" << some.cru << "; ";
    }
    if (all.rounds < some.rounds) {
      ++strict_checks;
      if (!(some.cru < all.cru)) msg << "CRU(" << x << ")=" << some.cru << " not below CRU(n)=" << all.cru << "; ";
    }
    if (!(all.cru == more.cru) || all.rounds != more.rounds) {
      msg << "CRU(n)=" << all.cru << " differs from CRU(n+1)=" << more.cru << "; ";
    }
    if (all.idle_before_last) msg << "a node idles before the final round with fork=n; ";
    if (msg.tellp() > 0) {
      auto replay = instance_json(cluster, jobs);
      replay["x"] = x;
      return Failure{0, 0, msg.str(), replay};
    }
    return std::nullopt;
  });
  res.notes.push_back("strict orderings exercised: " + std::to_string(strict_checks));
  return res;
}

// Invariants: capacity and gang constraints on randomized rounds for every
// policy, driven through a small round loop with carried-over allocations.

inline SuiteResult invariants_suite(const SuiteOptions& opt = {}) {
  constexpr PolicyId kPolicies[] = {PolicyId::Hadar, PolicyId::Hadare, PolicyId::Fifo, PolicyId::Tiresias,
                                    PolicyId::GavelProxy};
  const std::size_t target = opt.cases ? opt.cases : 10000;
  const std::size_t per_policy = (target + std::size(kPolicies) - 1) / std::size(kPolicies);
  SuiteResult res;
  res.suite = "invariants";
  detail::Clock clock;
  std::map<std::string, std::size_t> by_policy;
  for (std::size_t p = 0; p < std::size(kPolicies); ++p) {
    const PolicyId pid = kPolicies[p];
    std::size_t rounds = 0;
    for (std::size_t k = 0; rounds < per_policy; ++k) {
      const std::uint64_t seed = opt.seed + k;
      std::mt19937_64 rng(seed);
      TinyShape shape;
      shape.max_nodes = 6;
      shape.max_types = 3;
      shape.max_capacity = 4;
      shape.max_jobs = 8;
      shape.max_workers = 6;
      shape.max_arrival = 4;
      shape.max_rounds = 3;
      const auto cluster = random_cluster(rng, shape);
      const auto jobs = random_jobs(rng, cluster, shape);
      const Slot horizon = 12;
      const SlotConfig slot{shape.slot_seconds, horizon};

      SimConfig cfg;
      cfg.cluster = cluster;
      cfg.slot_seconds = shape.slot_seconds;
      cfg.horizon = horizon;
      cfg.policy = pid;
      cfg.fork_count = pid == PolicyId::Hadare ? 3 : 1;
      auto policy = make_policy(cfg, jobs, horizon);
      auto* forked = dynamic_cast<HadareScheduler*>(policy.get());

      std::vector<JobState> states;
      for (const auto& j : jobs) states.push_back(JobState::fresh(j));
      try {
        for (Slot t = 0; t < horizon && rounds < per_policy; ++t) {
          std::vector<JobState> queue;
          for (const auto& s : states)
            if (s.spec.arrival <= t && !s.finished()) queue.push_back(s);
          if (queue.empty()) continue;
          const auto alloc = policy->schedule_round(queue, cluster, t);
          std::vector<JobSpec> specs;
          if (forked) {
            for (const auto& c : forked->offered_copies(queue, cluster)) specs.push_back(c.spec);
          } else {
            for (const auto& q : queue) specs.push_back(q.spec);
          }
          const auto v = validate(alloc, cluster, specs, t);
          ++rounds;
          if (!v.empty()) {
            auto replay = instance_json(cluster, jobs);
            replay["policy"] = to_string(pid);
            replay["slot"] = t;
            res.failures.push_back({res.cases + rounds, seed, std::string(to_string(pid)) + ": " + v.front().message,
                                    replay});
            break;
          }
          for (auto& s : states) {
            if (s.spec.arrival > t || s.finished()) continue;
            JobAllocation mine;
            if (forked) {
              for (const auto& [id, a] : alloc.entries()) {
                const auto& copy = std::find_if(specs.begin(), specs.end(), [&](const JobSpec& c) { return c.id == id; });
                if (copy != specs.end() && copy->parent_id == s.spec.id && mine.empty()) mine = a;
              }
            } else if (const auto* a = alloc.find(s.spec.id)) {
              mine = *a;
            }
            if (!mine.empty() && s.last_allocation != mine) s.restart_penalty_pending = cfg.restart_penalty_s;
            s = apply_round_progress(std::move(s), mine, slot, t);
          }
        }
      } catch (const std::exception& e) {
        res.failures.push_back({res.cases + rounds, seed, std::string(to_string(pid)) + ": " + e.what(), nullptr});
      }
    }
    by_policy[to_string(pid)] = rounds;
    res.cases += rounds;
  }
  for (const auto& [name, n] : by_policy) res.notes.push_back(name + ": " + std::to_string(n) + " rounds");
  res.seconds = clock.seconds();
  return res;
}

// Scaling: one scheduling round on the default cluster for growing queues,
// and DP call counts against the cluster size H*R.

struct ScalingPoint {
  std::size_t queue = 0;
  std::size_t hr = 0;
  std::size_t calls = 0;
  double seconds = 0.0;
};

inline ScalingPoint time_round(const ClusterSpec& cluster, std::size_t n, std::uint64_t seed) {
  const auto rows = generate_trace(n, seed);
  const auto jobs = to_jobs(rows, default_throughputs(), cluster, 360.0);
  std::vector<JobState> q;
  for (const auto& j : jobs) q.push_back(JobState::fresh(j));
  HadarConfig hc;
  hc.horizon = default_horizon(jobs, hc.slot_seconds);
  HadarScheduler sched(hc);
  detail::Clock clock;
  sched.decide(q, cluster, 0);
  return {n, cluster.num_nodes() * cluster.num_types(), sched.last_stats().calls, clock.seconds()};
}

struct ScalingOptions {
  std::vector<std::size_t> queue_sizes{32, 64, 128, 256, 512, 1024, 2048};
  double budget_s = 60.0;
  std::vector<int> nodes_per_type{1, 2, 4, 8};
  std::size_t sweep_queue = 256;
  std::uint64_t seed = 42;
};

struct ScalingReport {
  std::vector<ScalingPoint> by_queue;
  std::vector<ScalingPoint> by_cluster;
};

inline ScalingReport measure_scaling(const ScalingOptions& opt = {}) {
  ScalingReport r;
  const auto cluster = default_cluster();
  for (std::size_t n : opt.queue_sizes) r.by_queue.push_back(time_round(cluster, n, opt.seed));
  for (int k : opt.nodes_per_type) r.by_cluster.push_back(time_round(default_cluster(k), opt.sweep_queue, opt.seed));
  return r;
}

/// Fails when the largest queue misses the budget, or when DP calls grow
/// faster than (H*R)^2 between consecutive cluster sizes.
inline SuiteResult check_scaling(const ScalingReport& r, const ScalingOptions& opt = {}) {
  SuiteResult res;
  res.suite = "scaling";
  for (const auto& p : r.by_queue) {
    ++res.cases;
    res.seconds += p.seconds;
    std::ostringstream line;
    line << "|Q|=" << p.queue << " calls=" << p.calls << " seconds=" << p.seconds;
    res.notes.push_back(line.str());
    if (p.seconds > opt.budget_s) {
      res.failures.push_back({res.cases - 1, opt.seed, line.str() + " exceeds budget", nullptr});
    }
  }
  for (std::size_t i = 0; i < r.by_cluster.size(); ++i) {
    const auto& p = r.by_cluster[i];
    ++res.cases;
    res.seconds += p.seconds;
    std::ostringstream line;
    line << "H*R=" << p.hr << " |Q|=" << p.queue << " calls=" << p.calls;
    res.notes.push_back(line.str());
    if (i == 0) continue;
    const auto& prev = r.by_cluster[i - 1];
    const double growth = static_cast<double>(p.calls) / static_cast<double>(prev.calls);
    const double allowed = std::pow(static_cast<double>(p.hr) / static_cast<double>(prev.hr), 2.0);
    if (growth > allowed) {
      std::ostringstream msg;
      msg << line.str() << ": calls grew " << growth << "x, quadratic allowance " << allowed << "x";
      res.failures.push_back({res.cases - 1, opt.seed, msg.str(), nullptr});
    }
  }
  return res;
}

inline SuiteResult scaling_suite(const ScalingOptions& opt = {}) { return check_scaling(measure_scaling(opt), opt); }

inline SuiteResult run_suite(const std::string& name, const SuiteOptions& opt = {}) {
  if (name == "invariants") return invariants_suite(opt);
  if (name == "oracle") return oracle_suite(opt);
  if (name == "ratio") return ratio_suite(opt);
  if (name == "forking") return forking_suite(opt);
  if (name == "scaling") {
    ScalingOptions s;
    s.seed = opt.seed;
    return scaling_suite(s);
  }
  throw ConfigError("unknown suite '" + name + "' (expected invariants, oracle, ratio, forking or scaling)");
}

inline nlohmann::json to_json(const SuiteResult& r) {
  nlohmann::json f = nlohmann::json::array();
  for (const auto& x : r.failures) {
    f.push_back({{"index", x.index}, {"seed", x.seed}, {"what", x.what}, {"replay", x.replay}});
  }
  return {{"suite", r.suite}, {"cases", r.cases}, {"passed", r.ok()}, {"seconds", r.seconds},
          {"notes", r.notes}, {"failures", f}};
}

}  // namespace hadar::verify
