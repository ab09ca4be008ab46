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
#include <optional>
#include <span>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "hadar/domain.hpp"
#include "hadar/hadar_scheduler.hpp"
#include "hadar/policy.hpp"

namespace hadar {

namespace detail {

inline bool fits(const ServerState& s, const JobAllocation& alloc) {
  for (const auto& g : alloc.grants())
    if (g.node >= s.num_nodes() || g.type >= s.num_types() || s.free(g.node, g.type) < g.count) return false;
  return true;
}

// Type-blind placement: first node (by id) that can hold the whole gang,
// otherwise first-fit across nodes. Only runnable types are used.
inline std::optional<JobAllocation> blind_placement(const JobSpec& job, const ServerState& s) {
  const std::size_t H = s.num_nodes(), R = s.num_types();
  for (NodeIndex h = 0; h < H; ++h) {
    int avail = 0;
    for (TypeIndex r = 0; r < R; ++r)
      if (job.runnable_on(r)) avail += s.free(h, r);
    if (avail < job.workers) continue;
    JobAllocation out;
    int need = job.workers;
    for (TypeIndex r = 0; r < R && need > 0; ++r) {
      if (!job.runnable_on(r)) continue;
      const int take = std::min(need, s.free(h, r));
      out.add(h, r, take);
      need -= take;
    }
    return out;
  }
  JobAllocation out;
  int need = job.workers;
  for (NodeIndex h = 0; h < H && need > 0; ++h) {
    for (TypeIndex r = 0; r < R && need > 0; ++r) {
      if (!job.runnable_on(r)) continue;
      const int take = std::min(need, s.free(h, r));
      out.add(h, r, take);
      need -= take;
    }
  }
  if (need > 0) return std::nullopt;
  return out;
}

// All workers on type r: one node if possible (tightest fit), else spread
// over the nodes with the most free units of r.
inline std::optional<JobAllocation> single_type_placement(const JobSpec& job, const ServerState& s, TypeIndex r) {
  const std::size_t H = s.num_nodes();
  std::optional<NodeIndex> best;
  for (NodeIndex h = 0; h < H; ++h) {
    if (s.free(h, r) < job.workers) continue;
    if (!best || s.free(h, r) < s.free(*best, r)) best = h;
  }
  JobAllocation out;
  if (best) {
    out.add(*best, r, job.workers);
    return out;
  }
  std::vector<NodeIndex> order(H);
  for (NodeIndex h = 0; h < H; ++h) order[h] = h;
  std::stable_sort(order.begin(), order.end(), [&](NodeIndex a, NodeIndex b) { return s.free(a, r) > s.free(b, r); });
  int need = job.workers;
  for (NodeIndex h : order) {
    if (need == 0) break;
    const int take = std::min(need, s.free(h, r));
    out.add(h, r, take);
    need -= take;
  }
  if (need > 0) return std::nullopt;
  return out;
}

inline int type_free(const ServerState& s, TypeIndex r) {
  int total = 0;
  for (NodeIndex h = 0; h < s.num_nodes(); ++h) total += s.free(h, r);
  return total;
}

}  // namespace detail

/// YARN-CS-like: strict arrival order, any GPU types, no preemption. Running
/// jobs keep their previous allocation until they finish.
class FifoGang : public SchedulerPolicy {
 public:
  std::string name() const override { return "fifo"; }

  AllocationMatrix schedule_round(std::span<const JobState> queue, const ClusterSpec& cluster, Slot) override {
    const auto q = ordered_queue(queue);
    ServerState s(cluster);
    AllocationMatrix out;
    for (const auto& j : q) {
      if (j.last_allocation.empty()) continue;
      s.take(j.last_allocation);
      out.set(j.spec.id, j.last_allocation);
    }
    for (const auto& j : q) {
      if (!j.last_allocation.empty()) continue;
      auto placement = detail::blind_placement(j.spec, s);
      if (!placement) break;  // head-of-line blocking
      s.take(*placement);
      out.set(j.spec.id, std::move(*placement));
    }
    return out;
  }
};

/// Tiresias-like two-queue least-attained-service scheduler. Heterogeneity
/// blind; attained service is counted in GPU-seconds.
class TiresiasLike : public SchedulerPolicy {
 public:
  TiresiasLike(double threshold_gpu_seconds, double slot_seconds)
      : threshold_(threshold_gpu_seconds), slot_seconds_(slot_seconds) {}

  std::string name() const override { return "tiresias"; }

  double attained(JobId id) const {
    auto it = attained_.find(id);
    return it == attained_.end() ? 0.0 : it->second;
  }

  int queue_of(JobId id) const { return attained(id) < threshold_ ? 0 : 1; }

  AllocationMatrix schedule_round(std::span<const JobState> queue, const ClusterSpec& cluster, Slot) override {
    std::vector<const JobState*> order;
    for (const auto& j : queue) order.push_back(&j);
    std::stable_sort(order.begin(), order.end(), [&](const JobState* a, const JobState* b) {
      const auto ka = std::make_tuple(queue_of(a->spec.id), attained(a->spec.id), a->spec.arrival, a->spec.id);
      const auto kb = std::make_tuple(queue_of(b->spec.id), attained(b->spec.id), b->spec.arrival, b->spec.id);
      return ka < kb;
    });
    ServerState s(cluster);
    AllocationMatrix out;
    for (const JobState* j : order) {
      std::optional<JobAllocation> placement;
      if (!j->last_allocation.empty() && detail::fits(s, j->last_allocation)) {
        placement = j->last_allocation;
      } else {
        placement = detail::blind_placement(j->spec, s);
      }
      if (!placement) continue;
      s.take(*placement);
      attained_[j->spec.id] += j->spec.workers * slot_seconds_;
      out.set(j->spec.id, std::move(*placement));
    }
    return out;
  }

 private:
  double threshold_;
  double slot_seconds_;
  std::unordered_map<JobId, double> attained_;
};

/// Job-level heterogeneity proxy for Gavel: jobs ranked by the normalized
/// throughput of their best available type, all workers on a single type.
class GavelProxy : public SchedulerPolicy {
 public:
  std::string name() const override { return "gavel-proxy"; }

  static double mean_runnable_throughput(const JobSpec& job) {
    double sum = 0.0;
    int n = 0;
    for (double x : job.throughput) {
      if (x > 0.0) {
        sum += x;
        ++n;
      }
    }
    return n == 0 ? 0.0 : sum / n;
  }

  // Fastest runnable type with at least W_j free units cluster-wide.
  static std::optional<TypeIndex> best_available_type(const JobSpec& job, const ServerState& s) {
    std::optional<TypeIndex> best;
    for (TypeIndex r = 0; r < s.num_types(); ++r) {
      if (!job.runnable_on(r) || detail::type_free(s, r) < job.workers) continue;
      if (!best || job.throughput[r] > job.throughput[*best]) best = r;
    }
    return best;
  }

  AllocationMatrix schedule_round(std::span<const JobState> queue, const ClusterSpec& cluster, Slot) override {
    ServerState s(cluster);
    struct Ranked {
      const JobState* job;
      double score;
    };
    std::vector<Ranked> ranked;
    for (const auto& j : queue) {
      auto r = best_available_type(j.spec, s);
      const double avg = mean_runnable_throughput(j.spec);
      ranked.push_back({&j, (r && avg > 0.0) ? j.spec.throughput[*r] / avg : -1.0});
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
      if (a.score != b.score) return a.score > b.score;
      return std::pair(a.job->spec.arrival, a.job->spec.id) < std::pair(b.job->spec.arrival, b.job->spec.id);
    });

    AllocationMatrix out;
    for (const auto& [j, score] : ranked) {
      auto r = best_available_type(j->spec, s);
      if (!r) continue;
      std::optional<JobAllocation> placement;
      const auto& last = j->last_allocation;
      if (!last.empty() && last.count_of_type(*r) == last.workers() && detail::fits(s, last)) {
        placement = last;
      } else {
        placement = detail::single_type_placement(j->spec, s, *r);
      }
      if (!placement) continue;
      s.take(*placement);
      out.set(j->spec.id, std::move(*placement));
    }
    return out;
  }
};

}  // namespace hadar
