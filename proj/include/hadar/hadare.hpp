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
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "hadar/domain.hpp"
#include "hadar/hadar_scheduler.hpp"
#include "hadar/policy.hpp"
#include "hadar/records.hpp"

namespace hadar {

// Job forking and copy tracking.

struct ForkSet {
  JobId parent_id = 0;
  std::vector<JobId> copy_ids;               // copy i has id max_job_count * i + parent
  std::vector<std::int64_t> assigned_steps;  // this round
  std::vector<std::int64_t> completed_steps; // cumulative
};

inline JobId copy_id(JobId parent, int i, JobId max_job_count) { return max_job_count * i + parent; }

inline ForkSet fork(const JobSpec& job, int n, JobId max_job_count) {
  if (n < 1) throw ConfigError("fork: copy count must be >= 1");
  if (job.id < 0 || max_job_count <= job.id) {
    throw ConfigError("fork: max_job_count must exceed parent id " + std::to_string(job.id) +
                      " or copy ids collide");
  }
  ForkSet f;
  f.parent_id = job.id;
  for (int i = 1; i <= n; ++i) f.copy_ids.push_back(copy_id(job.id, i, max_job_count));
  f.assigned_steps.assign(n, 0);
  f.completed_steps.assign(n, 0);
  return f;
}

/// Splits `remaining` steps in proportion to `throughputs` with
/// largest-remainder rounding (ties to the lower index). Sums to `remaining`.
inline std::vector<std::int64_t> divide_steps(std::int64_t remaining, std::span<const double> throughputs) {
  std::vector<std::int64_t> out(throughputs.size(), 0);
  if (remaining <= 0 || throughputs.empty()) return out;
  double total = 0.0;
  for (double x : throughputs) {
    if (!(x >= 0.0)) throw DomainError("divide_steps: negative throughput");
    total += x;
  }
  if (!(total > 0.0)) throw UnschedulableJobError("divide_steps: all throughputs are zero");

  std::vector<double> frac(throughputs.size(), 0.0);
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < throughputs.size(); ++i) {
    const double quota = static_cast<double>(remaining) * throughputs[i] / total;
    out[i] = static_cast<std::int64_t>(std::floor(quota));
    frac[i] = quota - static_cast<double>(out[i]);
    assigned += out[i];
  }
  // Floating error can push a floor over by one; pull back from the smallest fractions.
  while (assigned > remaining) {
    std::size_t pick = 0;
    bool found = false;
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (out[i] > 0 && (!found || frac[i] < frac[pick])) {
        pick = i;
        found = true;
      }
    }
    --out[pick];
    frac[pick] += 1.0;
    --assigned;
  }
  std::vector<std::size_t> order(out.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (throughputs[a] > 0.0 && throughputs[b] <= 0.0) return true;
    if (throughputs[b] > 0.0 && throughputs[a] <= 0.0) return false;
    return frac[a] > frac[b];
  });
  for (std::size_t k = 0; assigned < remaining; k = (k + 1) % order.size()) {
    if (throughputs[order[k]] <= 0.0) continue;
    ++out[order[k]];
    ++assigned;
  }
  return out;
}

/// Deterministic stand-in for training: each step moves every parameter a
/// little towards a job-specific target.
inline void advance_params(std::vector<double>& params, std::int64_t steps, JobId parent) {
  if (steps <= 0) return;
  constexpr double kRate = 1e-3;
  const double keep = std::pow(1.0 - kRate, static_cast<double>(steps));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double target = 1.0 / (1.0 + static_cast<double>(k) + static_cast<double>(parent % 7));
    params[k] = target + (params[k] - target) * keep;
  }
}

/// Weighted mean of parameter vectors; weights are steps completed.
inline std::vector<double> consolidate_params(std::span<const std::vector<double>> params,
                                              std::span<const std::int64_t> weights,
                                              const std::vector<double>& fallback) {
  double total = 0.0;
  for (auto w : weights) total += static_cast<double>(w);
  if (params.empty() || !(total > 0.0)) return fallback;
  std::vector<double> out(fallback.size(), 0.0);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size() != out.size()) throw ProtocolError("consolidate: parameter dimension mismatch");
    const double w = static_cast<double>(weights[i]);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += w * params[i][k];
  }
  for (double& v : out) v /= total;
  return out;
}

struct TrackedJob {
  JobSpec spec;
  ForkSet forks;
  std::int64_t threshold = 0;   // phi * E_j steps
  std::int64_t aggregated = 0;  // steps summed over all copies
  std::vector<double> params;
  std::optional<Slot> retired_at;

  std::int64_t remaining() const { return std::max<std::int64_t>(0, threshold - aggregated); }
  bool retired() const noexcept { return retired_at.has_value(); }
};

struct CopyReport {
  JobId copy_id = 0;
  std::int64_t steps_done = 0;
  std::vector<double> params;
};

/// Job Tracker: registers forked copies, sums their steps, consolidates their
/// parameters and retires a job once its step threshold is reached.
class TrackerState {
 public:
  static constexpr std::size_t kParamDim = 8;

  void register_job(const JobSpec& job, ForkSet forks) {
    if (jobs_.count(job.id)) throw ConfigError("tracker: job " + std::to_string(job.id) + " registered twice");
    for (JobId c : forks.copy_ids) {
      if (!copy_to_parent_.emplace(c, job.id).second) {
        throw ConfigError("tracker: copy id " + std::to_string(c) + " collides with an existing copy");
      }
    }
    TrackedJob t;
    t.spec = job;
    t.forks = std::move(forks);
    t.threshold = job.iters_per_epoch * job.epochs;
    t.params.assign(kParamDim, 0.0);
    jobs_.emplace(job.id, std::move(t));
  }

  const TrackedJob& job(JobId parent) const { return jobs_.at(parent); }
  TrackedJob& job(JobId parent) { return jobs_.at(parent); }
  const std::map<JobId, TrackedJob>& jobs() const noexcept { return jobs_; }

  std::optional<JobId> parent_of(JobId copy) const {
    auto it = copy_to_parent_.find(copy);
    if (it == copy_to_parent_.end()) return std::nullopt;
    return it->second;
  }

  bool all_retired() const {
    return std::all_of(jobs_.begin(), jobs_.end(), [](const auto& kv) { return kv.second.retired(); });
  }

  /// Applies one round of reports. Returns the parents retired by it.
  std::vector<JobId> apply(std::span<const CopyReport> reports, Slot t) {
    std::map<JobId, std::vector<const CopyReport*>> by_parent;
    for (const auto& r : reports) {
      auto parent = parent_of(r.copy_id);
      if (!parent) throw ProtocolError("tracker: report from unregistered copy " + std::to_string(r.copy_id));
      if (r.steps_done < 0) throw ProtocolError("tracker: negative step count");
      by_parent[*parent].push_back(&r);
    }
    std::vector<JobId> retired;
    for (auto& [parent, reps] : by_parent) {
      TrackedJob& job = jobs_.at(parent);
      if (job.retired()) throw ProtocolError("tracker: report for retired job " + std::to_string(parent));
      std::vector<std::vector<double>> params;
      std::vector<std::int64_t> weights;
      for (const CopyReport* r : reps) {
        job.aggregated += r->steps_done;
        const auto& ids = job.forks.copy_ids;
        const auto pos = static_cast<std::size_t>(std::find(ids.begin(), ids.end(), r->copy_id) - ids.begin());
        job.forks.completed_steps[pos] += r->steps_done;
        params.push_back(r->params);
        weights.push_back(r->steps_done);
      }
      job.params = consolidate_params(params, weights, job.params);
      if (job.aggregated >= job.threshold) {
        job.retired_at = t + 1;
        retired.push_back(parent);
      }
    }
    return retired;
  }

 private:
  std::map<JobId, TrackedJob> jobs_;
  std::unordered_map<JobId, JobId> copy_to_parent_;
};

inline TrackerState aggregate_and_consolidate(TrackerState tracker, std::span<const CopyReport> reports, Slot t = 0) {
  tracker.apply(reports, t);
  return tracker;
}

// Initial throughput estimation.

/// PMI * batch_size * pcie_scaling / (model_weight * dataset_size).
inline double estimate_throughput(double pmi, double batch_size, double pcie_scaling, double model_weight,
                                  double dataset_size) {
  if (!(pmi > 0.0) || !(batch_size > 0.0) || !(pcie_scaling > 0.0) || !(model_weight > 0.0) ||
      !(dataset_size > 0.0)) {
    throw DomainError("estimate_throughput: all inputs must be positive");
  }
  return (pmi * batch_size * pcie_scaling) / (model_weight * dataset_size);
}

enum class Provenance { Formula, Measured };

/// Per (model, node) throughput. Measurements replace formula estimates and
/// are never replaced by them.
class ThroughputEstimate {
 public:
  struct Entry {
    double value = 0.0;
    Provenance provenance = Provenance::Formula;
  };

  void set_formula(const std::string& model, NodeIndex node, double value) {
    auto& e = entries_[{model, node}];
    if (e.provenance == Provenance::Measured && e.value > 0.0) return;
    e = Entry{value, Provenance::Formula};
  }

  void record_measured(const std::string& model, NodeIndex node, double value) {
    entries_[{model, node}] = Entry{value, Provenance::Measured};
  }

  std::optional<Entry> get(const std::string& model, NodeIndex node) const {
    auto it = entries_.find({model, node});
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t measured_count() const {
    return static_cast<std::size_t>(std::count_if(entries_.begin(), entries_.end(), [](const auto& kv) {
      return kv.second.provenance == Provenance::Measured;
    }));
  }

 private:
  std::map<std::pair<std::string, NodeIndex>, Entry> entries_;
};

// Copy scheduling.

struct HadareConfig {
  HadarConfig hadar;
  int fork = 1;
  JobId max_job_count = 0;  // 0: one more than the largest parent id seen
};

/// Builds the per-round copy queue and hands it to the Hadar dynamic program.
class HadareScheduler : public SchedulerPolicy {
 public:
  explicit HadareScheduler(HadareConfig config) : config_(std::move(config)), hadar_(config_.hadar) {}

  std::string name() const override { return "hadare"; }

  const HadareConfig& config() const noexcept { return config_; }
  HadarScheduler& hadar() noexcept { return hadar_; }

  JobId max_job_count_for(std::span<const JobState> parents) const {
    if (config_.max_job_count > 0) return config_.max_job_count;
    JobId top = 0;
    for (const auto& p : parents) top = std::max(top, p.spec.id);
    return top + 1;
  }

  /// Number of copies offered for a parent with `remaining` steps: the fork
  /// count, capped by the node count and by beta, the number of copies that
  /// finish the job in one round even on its slowest type.
  int copies_offered(const JobSpec& parent, double remaining, const ClusterSpec& cluster) const {
    const int cap = std::min<int>(config_.fork, static_cast<int>(cluster.num_nodes()));
    const double per_copy = parent.min_runnable_throughput() * parent.workers * config_.hadar.slot_seconds;
    if (!(per_copy > 0.0)) return cap;
    const double beta = std::ceil(remaining / per_copy);
    return std::max(1, std::min<int>(cap, static_cast<int>(std::min<double>(beta, cap))));
  }

  /// Copies offered this round. `parents` carry the steps still to do in
  /// remaining_iters; each copy's remaining is its even share.
  std::vector<JobState> offered_copies(std::span<const JobState> parents, const ClusterSpec& cluster) const {
    const JobId mjc = max_job_count_for(parents);
    std::vector<JobState> out;
    for (const auto& p : parents) {
      if (p.remaining_iters <= 0.0) continue;
      const int k = copies_offered(p.spec, p.remaining_iters, cluster);
      for (int i = 1; i <= k; ++i) {
        JobState c;
        c.spec = p.spec;
        c.spec.id = copy_id(p.spec.id, i, mjc);
        c.spec.parent_id = p.spec.id;
        c.remaining_iters = p.remaining_iters / k;
        out.push_back(std::move(c));
      }
    }
    return out;
  }

  DpDecision decide_copies(std::span<const JobState> copies, const ClusterSpec& cluster, Slot t) {
    return hadar_.decide(copies, cluster, t);
  }

  AllocationMatrix schedule_round(std::span<const JobState> parents, const ClusterSpec& cluster, Slot t) override {
    const auto copies = offered_copies(parents, cluster);
    return decide_copies(copies, cluster, t).allocations;
  }

 private:
  HadareConfig config_;
  HadarScheduler hadar_;
};

}  // namespace hadar
