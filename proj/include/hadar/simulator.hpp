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
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hadar/baselines.hpp"
#include "hadar/domain.hpp"
#include "hadar/hadar_scheduler.hpp"
#include "hadar/hadare.hpp"
#include "hadar/policy.hpp"
#include "hadar/pricing.hpp"
#include "hadar/records.hpp"

namespace hadar {

enum class PolicyId { Hadar, Hadare, Fifo, Tiresias, GavelProxy };

inline const char* to_string(PolicyId p) {
  switch (p) {
    case PolicyId::Hadar: return "hadar";
    case PolicyId::Hadare: return "hadare";
    case PolicyId::Fifo: return "fifo";
    case PolicyId::Tiresias: return "tiresias";
    case PolicyId::GavelProxy: return "gavel-proxy";
  }
  return "?";
}

inline PolicyId parse_policy(const std::string& s) {
  for (PolicyId p : {PolicyId::Hadar, PolicyId::Hadare, PolicyId::Fifo, PolicyId::Tiresias, PolicyId::GavelProxy})
    if (s == to_string(p)) return p;
  throw ConfigError("unknown policy '" + s + "' (expected hadar, hadare, fifo, tiresias or gavel-proxy)");
}

struct SimConfig {
  ClusterSpec cluster;
  double slot_seconds = 360.0;
  std::optional<Slot> horizon;  // default: latest arrival + 10x the summed serial durations
  PolicyId policy = PolicyId::Hadar;
  double restart_penalty_s = 10.0;
  int fork_count = 1;           // hadare only
  double overhead_s = 0.0;      // hadare aggregation cost per copy per round
  double comm_fraction = 0.1;
  std::optional<double> tiresias_threshold_gpu_s;  // default: median job GPU-seconds
  std::uint64_t seed = 0;
  bool record_timing = false;

  void check() const {
    if (!(slot_seconds > 0.0)) throw ConfigError("sim: slot_seconds must be > 0");
    if (!(restart_penalty_s >= 0.0) || !(restart_penalty_s < slot_seconds)) {
      throw ConfigError("sim: restart_penalty_s must be in [0, slot_seconds)");
    }
    if (fork_count < 1) throw ConfigError("sim: fork_count must be >= 1");
    if (fork_count > 1 && policy != PolicyId::Hadare) throw ConfigError("sim: fork_count needs the hadare policy");
    if (!(overhead_s >= 0.0) || restart_penalty_s + overhead_s > slot_seconds) {
      throw ConfigError("sim: overhead_s must be >= 0 and fit in a slot with the restart penalty");
    }
    if (!(comm_fraction >= 0.0)) throw ConfigError("sim: comm_fraction must be >= 0");
    if (horizon && *horizon < 1) throw ConfigError("sim: horizon must be >= 1");
  }
};

struct JobOutcome {
  JobId id = 0;
  Slot arrival = 0;
  std::optional<Slot> finish;

  std::optional<Slot> jct() const {
    if (!finish) return std::nullopt;
    return *finish - arrival;
  }

  friend bool operator==(const JobOutcome&, const JobOutcome&) = default;
};

struct SimReport {
  std::string policy;
  std::size_t num_nodes = 0;
  int total_gpus = 0;
  double slot_seconds = 0.0;
  Slot horizon = 0;
  bool complete = true;  // false when the horizon ran out first
  Slot ttd = 0;          // max f_j over finished jobs
  std::vector<JobOutcome> jobs;  // by id
  std::vector<RoundRecord> rounds;
  std::vector<double> gru_curve;  // per round
  double cru = 0.0;

  friend bool operator==(const SimReport&, const SimReport&) = default;
};

/// Quantizes a wall-clock arrival to a slot: jobs arriving inside slot t start
/// competing in slot t+1; arrivals on a boundary start in that slot.
inline Slot arrival_slot(double arrival_s, double slot_seconds) {
  if (!(arrival_s >= 0.0)) throw ConfigError("arrival time must be >= 0");
  return static_cast<Slot>(std::ceil(arrival_s / slot_seconds - 1e-12));
}

/// Serial duration: slots to finish on W_j workers of the fastest type.
inline Slot default_horizon(std::span<const JobSpec> trace, double slot_seconds) {
  Slot latest = 0, serial = 0;
  for (const auto& j : trace) {
    latest = std::max(latest, j.arrival);
    const double x = j.max_throughput();
    if (x > 0.0) serial += slots_for(j.total_iters(), x * j.workers, slot_seconds);
  }
  return latest + std::max<Slot>(1, 10 * serial);
}

/// Median over jobs of GPU-seconds at the slowest runnable type.
inline double median_gpu_seconds(std::span<const JobSpec> trace) {
  std::vector<double> v;
  for (const auto& j : trace) {
    const double x = j.min_runnable_throughput();
    if (x > 0.0) v.push_back(j.total_iters() / x);
  }
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline HadarConfig hadar_config(const SimConfig& c, Slot horizon) {
  HadarConfig h;
  h.slot_seconds = c.slot_seconds;
  h.horizon = horizon;
  h.comm_fraction = c.comm_fraction;
  return h;
}

inline std::unique_ptr<SchedulerPolicy> make_policy(const SimConfig& c, std::span<const JobSpec> trace,
                                                    Slot horizon) {
  switch (c.policy) {
    case PolicyId::Hadar: return std::make_unique<HadarScheduler>(hadar_config(c, horizon));
    case PolicyId::Hadare: {
      HadareConfig hc;
      hc.hadar = hadar_config(c, horizon);
      hc.fork = c.fork_count;
      return std::make_unique<HadareScheduler>(hc);
    }
    case PolicyId::Fifo: return std::make_unique<FifoGang>();
    case PolicyId::Tiresias:
      return std::make_unique<TiresiasLike>(c.tiresias_threshold_gpu_s.value_or(median_gpu_seconds(trace)),
                                            c.slot_seconds);
    case PolicyId::GavelProxy: return std::make_unique<GavelProxy>();
  }
  throw ConfigError("unknown policy");
}

namespace detail {

inline void check_trace(std::span<const JobSpec> trace, const ClusterSpec& cluster) {
  std::unordered_map<JobId, int> seen;
  for (const auto& j : trace) {
    check_job(j, cluster);
    if (seen[j.id]++) throw ConfigError("trace: duplicate job id " + std::to_string(j.id));
    int cap = 0;
    for (TypeIndex r = 0; r < cluster.num_types(); ++r)
      if (j.runnable_on(r)) cap += cluster.type_capacity(r);
    if (cap < j.workers) {
      throw UnschedulableJobError("job " + std::to_string(j.id) + " needs more workers than the cluster has");
    }
  }
}

inline void throw_violations(const std::vector<Violation>& v, Slot t, const std::string& policy) {
  if (v.empty()) return;
  std::string msg = policy + " round " + std::to_string(t) + ":";
  for (const auto& x : v) msg += std::string(" [") + to_string(x.constraint) + "] " + x.message + ";";
  throw InvariantError(msg);
}

inline RoundRecord empty_record(Slot t, const ClusterSpec& cluster) {
  RoundRecord rec;
  rec.t = t;
  rec.busy_gpu_seconds.assign(cluster.num_types(), 0.0);
  rec.node_busy_seconds.assign(cluster.num_nodes(), 0.0);
  return rec;
}

inline void charge(RoundRecord& rec, const JobAllocation& alloc, double busy) {
  for (const auto& g : alloc.grants()) {
    rec.busy_gpu_seconds[g.type] += busy * g.count;
    rec.node_busy_seconds[g.node] = std::max(rec.node_busy_seconds[g.node], busy);
  }
}

inline void finalize(SimReport& rep, const ClusterSpec& cluster) {
  rep.ttd = 0;
  rep.complete = true;
  for (const auto& j : rep.jobs) {
    if (j.finish) {
      rep.ttd = std::max(rep.ttd, *j.finish);
    } else {
      rep.complete = false;
    }
  }
  rep.gru_curve.clear();
  const double denom = static_cast<double>(cluster.total_capacity()) * rep.slot_seconds;
  for (const auto& r : rep.rounds) rep.gru_curve.push_back(r.total_busy_gpu_seconds() / denom);
  rep.cru = cru(rep.rounds, cluster.num_nodes(), SlotConfig{rep.slot_seconds, rep.horizon});
}

class Stopwatch {
 public:
  explicit Stopwatch(bool on) : on_(on) {
    if (on_) start_ = std::chrono::steady_clock::now();
  }
  double seconds() const {
    if (!on_) return 0.0;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  bool on_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

/// Round engine for a single (unforked) policy. Resources granted for a round
/// are held, and counted busy, for the whole round.
inline SimReport run_policy(const SimConfig& config, std::span<const JobSpec> trace, SchedulerPolicy& policy) {
  config.check();
  detail::check_trace(trace, config.cluster);
  const ClusterSpec& cluster = config.cluster;
  const Slot horizon = config.horizon.value_or(default_horizon(trace, config.slot_seconds));
  const SlotConfig slot{config.slot_seconds, horizon};

  std::vector<JobState> states;
  for (const auto& j : trace) states.push_back(JobState::fresh(j));
  std::sort(states.begin(), states.end(), [](const JobState& a, const JobState& b) { return a.spec.id < b.spec.id; });

  SimReport rep;
  rep.policy = policy.name();
  rep.num_nodes = cluster.num_nodes();
  rep.total_gpus = cluster.total_capacity();
  rep.slot_seconds = config.slot_seconds;
  rep.horizon = horizon;

  auto hadar = dynamic_cast<HadarScheduler*>(&policy);
  std::size_t unfinished = states.size();
  for (Slot t = 0; t < horizon && unfinished > 0; ++t) {
    std::vector<JobState> queue;
    std::vector<std::size_t> where;
    for (std::size_t i = 0; i < states.size(); ++i) {
      if (states[i].spec.arrival <= t && !states[i].finished()) {
        queue.push_back(states[i]);
        where.push_back(i);
      }
    }
    RoundRecord rec = detail::empty_record(t, cluster);
    rec.queue_length = queue.size();

    AllocationMatrix alloc;
    if (!queue.empty()) {
      detail::Stopwatch watch(config.record_timing);
      alloc = policy.schedule_round(queue, cluster, t);
      rec.decision_seconds = watch.seconds();
      if (hadar) rec.decision_work = hadar->last_stats().calls;
    }
    std::vector<JobSpec> specs;
    for (const auto& q : queue) specs.push_back(q.spec);
    detail::throw_violations(validate(alloc, cluster, specs, t), t, policy.name());

    for (std::size_t k = 0; k < queue.size(); ++k) {
      JobState& s = states[where[k]];
      const JobAllocation* a = alloc.find(s.spec.id);
      if (!a) {
        s = apply_round_progress(std::move(s), JobAllocation{}, slot, t);
        continue;
      }
      const bool restarted = s.last_allocation != *a;
      s.restart_penalty_pending = restarted ? config.restart_penalty_s : 0.0;
      JobRoundSummary sum;
      sum.job = s.spec.id;
      sum.workers = a->workers();
      sum.rate = progress_rate(s.spec, *a);
      sum.busy_seconds = config.slot_seconds;
      sum.restarted = restarted;
      rec.allocations.push_back(sum);
      detail::charge(rec, *a, config.slot_seconds);
      rec.allocations.back().progress = std::min(s.remaining_iters, round_progress(s, *a, slot));
      s = apply_round_progress(std::move(s), *a, slot, t);
      if (s.finished()) {
        rec.completions.push_back(s.spec.id);
        --unfinished;
      }
    }
    rep.rounds.push_back(std::move(rec));
  }

  for (const auto& s : states) rep.jobs.push_back({s.spec.id, s.spec.arrival, s.finish_time});
  detail::finalize(rep, cluster);
  return rep;
}

/// Round engine for forked jobs. Copies finishing their assigned steps early
/// release their node for the rest of the round.
inline SimReport run_forked(const SimConfig& config, std::span<const JobSpec> trace) {
  config.check();
  detail::check_trace(trace, config.cluster);
  const ClusterSpec& cluster = config.cluster;
  const Slot horizon = config.horizon.value_or(default_horizon(trace, config.slot_seconds));
  const double L = config.slot_seconds;

  JobId max_job_count = 1;
  for (const auto& j : trace) max_job_count = std::max(max_job_count, j.id + 1);

  HadareConfig hc;
  hc.hadar = hadar_config(config, horizon);
  hc.fork = config.fork_count;
  hc.max_job_count = max_job_count;
  HadareScheduler sched(hc);

  std::vector<JobSpec> jobs(trace.begin(), trace.end());
  std::sort(jobs.begin(), jobs.end(), [](const JobSpec& a, const JobSpec& b) { return a.id < b.id; });
  TrackerState tracker;
  for (const auto& j : jobs) tracker.register_job(j, fork(j, config.fork_count, max_job_count));

  SimReport rep;
  rep.policy = sched.name();
  rep.num_nodes = cluster.num_nodes();
  rep.total_gpus = cluster.total_capacity();
  rep.slot_seconds = L;
  rep.horizon = horizon;

  std::unordered_map<JobId, JobAllocation> last;  // copy id -> previous round's allocation
  for (Slot t = 0; t < horizon && !tracker.all_retired(); ++t) {
    std::vector<JobState> parents;
    for (const auto& j : jobs) {
      const auto& tj = tracker.job(j.id);
      if (j.arrival > t || tj.retired()) continue;
      JobState p = JobState::fresh(j);
      p.remaining_iters = static_cast<double>(tj.remaining());
      parents.push_back(std::move(p));
    }
    RoundRecord rec = detail::empty_record(t, cluster);
    rec.queue_length = parents.size();

    const auto copies = sched.offered_copies(parents, cluster);
    DpDecision decision;
    if (!copies.empty()) {
      detail::Stopwatch watch(config.record_timing);
      decision = sched.decide_copies(copies, cluster, t);
      rec.decision_seconds = watch.seconds();
      rec.decision_work = sched.hadar().last_stats().calls;
    }
    std::vector<JobSpec> specs;
    for (const auto& c : copies) specs.push_back(c.spec);
    detail::throw_violations(validate(decision.allocations, cluster, specs, t), t, sched.name());

    // Placed copies grouped by parent, in copy-id order.
    std::map<JobId, std::vector<std::pair<JobId, const JobAllocation*>>> placed;
    for (const auto& [id, alloc] : decision.allocations.entries()) {
      const auto parent = tracker.parent_of(id);
      if (!parent) throw InvariantError("hadare: allocation for unknown copy " + std::to_string(id));
      placed[*parent].emplace_back(id, &alloc);
    }

    std::vector<CopyReport> reports;
    std::unordered_map<JobId, JobAllocation> next;
    for (const auto& [parent, list] : placed) {
      const TrackedJob& tj = tracker.job(parent);
      std::vector<double> rates;
      for (const auto& [id, a] : list) rates.push_back(progress_rate(tj.spec, *a));
      const auto assigned = divide_steps(tj.remaining(), rates);
      for (std::size_t i = 0; i < list.size(); ++i) {
        const auto& [id, a] = list[i];
        auto prev = last.find(id);
        const bool restarted = prev == last.end() || prev->second != *a;
        const double penalty = restarted ? config.restart_penalty_s : 0.0;
        const double eff = L - penalty - config.overhead_s;
        const auto capacity = static_cast<std::int64_t>(std::floor(rates[i] * eff));
        const std::int64_t done = std::min(assigned[i], capacity);
        const double busy = penalty + config.overhead_s + static_cast<double>(done) / rates[i];

        CopyReport r;
        r.copy_id = id;
        r.steps_done = done;
        r.params = tj.params;
        advance_params(r.params, done, parent);
        reports.push_back(std::move(r));

        JobRoundSummary sum;
        sum.job = id;
        sum.parent = parent;
        sum.workers = a->workers();
        sum.rate = rates[i];
        sum.busy_seconds = busy;
        sum.progress = static_cast<double>(done);
        sum.restarted = restarted;
        rec.allocations.push_back(sum);
        detail::charge(rec, *a, busy);
        next.emplace(id, *a);
      }
    }
    for (JobId p : tracker.apply(reports, t)) rec.completions.push_back(p);
    last = std::move(next);
    rep.rounds.push_back(std::move(rec));
  }

  for (const auto& j : jobs) rep.jobs.push_back({j.id, j.arrival, tracker.job(j.id).retired_at});
  detail::finalize(rep, cluster);
  return rep;
}

inline SimReport run(const SimConfig& config, std::span<const JobSpec> trace) {
  config.check();
  if (config.policy == PolicyId::Hadare) return run_forked(config, trace);
  const Slot horizon = config.horizon.value_or(default_horizon(trace, config.slot_seconds));
  auto policy = make_policy(config, trace, horizon);
  return run_policy(config, trace, *policy);
}

// Metrics.

struct CompletionPoint {
  Slot t = 0;           // end-of-slot time
  double fraction = 0;  // of all jobs finished by t
};

struct Metrics {
  double gru = 0.0;
  double cru = 0.0;
  Slot ttd = 0;
  double mean_jct = 0.0;
  double median_jct = 0.0;
  std::size_t finished = 0;
  std::size_t total = 0;
  std::vector<CompletionPoint> completion_curve;
};

/// GRU counts busy GPU-seconds over the rounds up to TTD; the remaining values
/// are plain aggregates over the report.
inline Metrics metrics(const SimReport& rep) {
  Metrics m;
  m.ttd = rep.ttd;
  m.total = rep.jobs.size();
  const std::size_t rounds = std::min<std::size_t>(rep.rounds.size(), static_cast<std::size_t>(rep.ttd));
  if (rounds > 0 && rep.total_gpus > 0) {
    double busy = 0.0;
    for (std::size_t i = 0; i < rounds; ++i) busy += rep.rounds[i].total_busy_gpu_seconds();
    m.gru = busy / (static_cast<double>(rep.total_gpus) * static_cast<double>(rounds) * rep.slot_seconds);
    m.cru = cru(std::span<const RoundRecord>(rep.rounds.data(), rounds), rep.num_nodes,
                SlotConfig{rep.slot_seconds, rep.horizon});
  }
  std::vector<double> jct;
  std::map<Slot, std::size_t> done_at;
  for (const auto& j : rep.jobs) {
    if (!j.finish) continue;
    jct.push_back(static_cast<double>(*j.jct()));
    ++done_at[*j.finish];
  }
  m.finished = jct.size();
  if (!jct.empty()) {
    double s = 0.0;
    for (double v : jct) s += v;
    m.mean_jct = s / static_cast<double>(jct.size());
    std::sort(jct.begin(), jct.end());
    const std::size_t k = jct.size() / 2;
    m.median_jct = jct.size() % 2 ? jct[k] : 0.5 * (jct[k - 1] + jct[k]);
  }
  std::size_t cum = 0;
  for (const auto& [t, n] : done_at) {
    cum += n;
    m.completion_curve.push_back({t, static_cast<double>(cum) / static_cast<double>(m.total)});
  }
  return m;
}

/// Sum of U_j(f_j - a_j) over finished jobs.
inline double total_utility(const SimReport& rep, std::span<const JobSpec> trace, const UtilityFn& util) {
  std::unordered_map<JobId, const JobSpec*> by_id;
  for (const auto& j : trace) by_id[j.id] = &j;
  double total = 0.0;
  for (const auto& j : rep.jobs)
    if (j.finish) total += util(*by_id.at(j.id), *j.jct());
  return total;
}

// Offline optimum for tiny instances.

struct OptLimits {
  static constexpr std::size_t kJobs = 4;
  static constexpr std::size_t kNodes = 3;
  static constexpr std::size_t kTypes = 2;
  static constexpr Slot kHorizon = 8;
};

namespace detail {

// Node placement does not change progress without restart penalties, so a
// round's schedule is fully described by per-type worker counts per job.
class OfflineSearch {
 public:
  OfflineSearch(std::span<const JobSpec> jobs, const ClusterSpec& cluster, double L, Slot horizon,
                const UtilityFn& util)
      : jobs_(jobs.begin(), jobs.end()), L_(L), horizon_(horizon), util_(util) {
    const std::size_t R = cluster.num_types();
    for (TypeIndex r = 0; r < R; ++r) cap_.push_back(cluster.type_capacity(r));
    for (const auto& j : jobs_) {
      std::vector<Option> opts;
      std::vector<int> counts(R, 0);
      enumerate(j, 0, j.workers, counts, opts);
      options_.push_back(std::move(opts));
    }
  }

  double solve() {
    std::vector<double> rem;
    for (const auto& j : jobs_) rem.push_back(j.total_iters());
    return value(0, rem);
  }

 private:
  struct Option {
    std::vector<int> counts;
    double progress = 0.0;
  };

  void enumerate(const JobSpec& j, TypeIndex r, int left, std::vector<int>& counts, std::vector<Option>& out) {
    if (r == counts.size()) {
      if (left != 0) return;
      double x = std::numeric_limits<double>::infinity();
      for (TypeIndex k = 0; k < counts.size(); ++k)
        if (counts[k] > 0) x = std::min(x, j.throughput[k]);
      out.push_back({counts, x * j.workers * L_});
      return;
    }
    const int hi = j.runnable_on(r) ? std::min(left, cap_[r]) : 0;
    for (int c = 0; c <= hi; ++c) {
      counts[r] = c;
      enumerate(j, r + 1, left - c, counts, out);
    }
    counts[r] = 0;
  }

  double value(Slot t, const std::vector<double>& rem) {
    if (t >= horizon_) return 0.0;
    bool any = false;
    for (double v : rem) any = any || v > 0.0;
    if (!any) return 0.0;
    auto key = std::make_pair(t, rem);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    std::vector<int> free = cap_;
    std::vector<double> next = rem;
    double best = 0.0;
    branch(t, 0, free, next, 0.0, best);
    memo_.emplace(std::move(key), best);
    return best;
  }

  bool fits_any(const std::vector<int>& free, std::size_t i) const {
    for (const auto& o : options_[i]) {
      bool ok = true;
      for (std::size_t r = 0; r < free.size(); ++r) ok = ok && o.counts[r] <= free[r];
      if (ok) return true;
    }
    return false;
  }

  // Assigns an option, or idleness, to jobs i.. in turn. A round that leaves a
  // job idle while one of its options still fits is dominated (progress never
  // hurts), so only maximal rounds are expanded.
  void branch(Slot t, std::size_t i, std::vector<int>& free, std::vector<double>& rem, double gained,
              double& best) {
    if (i == jobs_.size()) {
      for (std::size_t k : idle_)
        if (fits_any(free, k)) return;
      auto outer = std::exchange(idle_, {});
      best = std::max(best, gained + value(t + 1, rem));
      idle_ = std::move(outer);
      return;
    }
    const JobSpec& j = jobs_[i];
    if (j.arrival > t || rem[i] <= 0.0) {
      branch(t, i + 1, free, rem, gained, best);
      return;
    }
    for (const auto& o : options_[i]) {
      bool ok = true;
      for (std::size_t r = 0; r < free.size(); ++r) ok = ok && o.counts[r] <= free[r];
      if (!ok) continue;
      for (std::size_t r = 0; r < free.size(); ++r) free[r] -= o.counts[r];
      const double before = rem[i];
      rem[i] = std::max(0.0, before - o.progress);
      const double g = rem[i] <= 0.0 ? util_(j, t + 1 - j.arrival) : 0.0;
      branch(t, i + 1, free, rem, gained + g, best);
      rem[i] = before;
      for (std::size_t r = 0; r < free.size(); ++r) free[r] += o.counts[r];
    }
    idle_.push_back(i);
    branch(t, i + 1, free, rem, gained, best);
    idle_.pop_back();
  }

  std::vector<JobSpec> jobs_;
  double L_;
  Slot horizon_;
  const UtilityFn& util_;
  std::vector<int> cap_;
  std::vector<std::vector<Option>> options_;
  std::vector<std::size_t> idle_;
  std::map<std::pair<Slot, std::vector<double>>, double> memo_;
};

}  // namespace detail

/// Best total utility over all feasible gang schedules of a tiny instance.
inline double offline_opt(std::span<const JobSpec> trace, const ClusterSpec& cluster, double slot_seconds,
                          Slot horizon, const UtilityFn& util) {
  if (trace.size() > OptLimits::kJobs || cluster.num_nodes() > OptLimits::kNodes ||
      cluster.num_types() > OptLimits::kTypes || horizon > OptLimits::kHorizon) {
    throw ConfigError("offline_opt: instance too large (limit 4 jobs, 3 nodes, 2 types, horizon 8)");
  }
  if (horizon < 1 || !(slot_seconds > 0.0)) throw ConfigError("offline_opt: bad horizon or slot length");
  for (const auto& j : trace) check_job(j, cluster);
  detail::OfflineSearch search(trace, cluster, slot_seconds, horizon, util);
  return search.solve();
}

}  // namespace hadar
