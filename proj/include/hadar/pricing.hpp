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

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "hadar/domain.hpp"

namespace hadar {

/// Job utility as a function of completion duration in slots. Durations below
/// one slot are clamped to one.
class UtilityFn {
 public:
  using Table = std::function<double(const JobSpec&, Slot)>;

  /// Effective throughput: E_j N_j / (d * L), iterations per second.
  static UtilityFn effective_throughput(double slot_seconds) {
    UtilityFn u;
    u.slot_seconds_ = slot_seconds;
    return u;
  }

  /// Caller-supplied utility; must be non-negative and non-increasing in d.
  static UtilityFn custom(Table table) {
    UtilityFn u;
    u.table_ = std::move(table);
    return u;
  }

  double operator()(const JobSpec& job, Slot duration) const {
    const Slot d = std::max<Slot>(duration, 1);
    if (table_) return table_(job, d);
    return job.total_iters() / (static_cast<double>(d) * slot_seconds_);
  }

  bool is_effective_throughput() const noexcept { return !table_; }

 private:
  double slot_seconds_ = 1.0;
  Table table_;
};

/// Per-job duration limits used by the price bounds.
struct JobDurationBounds {
  Slot t_min = 1;
  Slot t_max = 1;
  int demand = 0;  // sum over runnable types of w_j^r
};

struct UtilityBounds {
  std::vector<double> u_max;  // per GPU type
  std::vector<double> u_min;  // per GPU type
  std::unordered_map<JobId, JobDurationBounds> durations;
  double eta = 1.0;
};

/// Slots needed to finish `iters` at `rate` iterations per second, at least one.
inline Slot slots_for(double iters, double rate, double slot_seconds) {
  const double slots = std::ceil(iters / (rate * slot_seconds));
  return std::max<Slot>(1, static_cast<Slot>(slots));
}

/// U_max^r, U_min^r and eta for the current workload.
///
/// t_min/t_max use M_j = W_j. The per-type demand w_j^r is W_j on every type
/// the job can run on and 0 elsewhere. eta is the smallest value satisfying
/// 1/eta <= t_max_j * sum_r w_j^r / sum_{h,r} c_h^r for every job.
inline UtilityBounds compute_bounds(std::span<const JobSpec> jobs, const ClusterSpec& cluster,
                                    const UtilityFn& util, Slot horizon, double slot_seconds) {
  const std::size_t R = cluster.num_types();
  UtilityBounds b;
  b.u_max.assign(R, 0.0);
  b.u_min.assign(R, 0.0);
  if (jobs.empty()) {
    b.u_max.assign(R, 1.0);
    b.u_min.assign(R, 1.0);
    return b;
  }

  double min_consumption = std::numeric_limits<double>::infinity();
  for (const auto& j : jobs) {
    const double xmax = j.max_throughput();
    const double xmin = j.min_runnable_throughput();
    if (!(xmax > 0.0)) {
      throw UnschedulableJobError("job " + std::to_string(j.id) + " has no runnable GPU type");
    }
    int runnable = 0;
    for (std::size_t r = 0; r < R; ++r)
      if (j.runnable_on(r)) ++runnable;
    JobDurationBounds d;
    d.t_min = slots_for(j.total_iters(), j.workers * xmax, slot_seconds);
    d.t_max = slots_for(j.total_iters(), j.workers * xmin, slot_seconds);
    d.demand = j.workers * runnable;
    b.durations[j.id] = d;
    min_consumption = std::min(min_consumption, static_cast<double>(d.t_max) * d.demand);
  }

  b.eta = static_cast<double>(cluster.total_capacity()) / min_consumption;

  double lowest = std::numeric_limits<double>::infinity();
  for (const auto& j : jobs) {
    const auto& d = b.durations.at(j.id);
    lowest = std::min(lowest, util(j, horizon - j.arrival) / (static_cast<double>(d.t_max) * d.demand));
  }
  const double u_min = lowest / (4.0 * b.eta);

  for (std::size_t r = 0; r < R; ++r) {
    double best = 0.0;
    for (const auto& j : jobs) {
      if (!j.runnable_on(r)) continue;
      best = std::max(best, util(j, b.durations.at(j.id).t_min) / j.workers);
    }
    b.u_min[r] = u_min;
    b.u_max[r] = std::max(best, u_min);
  }
  return b;
}

/// gamma_h^r usage counters and the exponential price they induce.
class PriceState {
 public:
  PriceState() = default;
  PriceState(const ClusterSpec& cluster, UtilityBounds bounds)
      : nodes_(cluster.num_nodes()), types_(cluster.num_types()), bounds_(std::move(bounds)) {
    capacity_.resize(nodes_ * types_);
    used_.assign(nodes_ * types_, 0);
    for (std::size_t h = 0; h < nodes_; ++h)
      for (std::size_t r = 0; r < types_; ++r) capacity_[h * types_ + r] = cluster.capacity(h, r);
    offset_.assign(nodes_ * types_ + 1, 0);
    for (std::size_t i = 0; i < nodes_ * types_; ++i) offset_[i + 1] = offset_[i] + capacity_[i] + 1;
    table_.resize(offset_.back());
    for (std::size_t h = 0; h < nodes_; ++h)
      for (std::size_t r = 0; r < types_; ++r) {
        if (capacity_[h * types_ + r] <= 0) continue;
        for (int g = 0; g <= capacity_[h * types_ + r]; ++g) table_[offset_[h * types_ + r] + g] = price_at(h, r, g);
      }
  }

  std::size_t num_nodes() const noexcept { return nodes_; }
  std::size_t num_types() const noexcept { return types_; }
  const UtilityBounds& bounds() const noexcept { return bounds_; }
  int capacity(NodeIndex h, TypeIndex r) const { return capacity_.at(h * types_ + r); }
  int used(NodeIndex h, TypeIndex r) const { return used_.at(h * types_ + r); }

  void set_used(NodeIndex h, TypeIndex r, int gamma) {
    if (gamma < 0 || gamma > capacity(h, r)) throw InvariantError("price state: usage outside [0, c]");
    used_[h * types_ + r] = gamma;
  }

  void add(const JobAllocation& alloc) {
    for (const auto& g : alloc.grants()) set_used(g.node, g.type, used(g.node, g.type) + g.count);
  }

  void release(const JobAllocation& alloc) {
    for (const auto& g : alloc.grants()) set_used(g.node, g.type, used(g.node, g.type) - g.count);
  }

  /// k_h^r = U_min^r (U_max^r / U_min^r)^(gamma / c).
  double price(NodeIndex h, TypeIndex r) const {
    const std::size_t i = h * types_ + r;
    if (i >= capacity_.size() || capacity_[i] <= 0) return price_at(h, r, used(h, r));
    return table_[offset_[i] + used_[i]];
  }

  double price_at(NodeIndex h, TypeIndex r, int gamma) const {
    const int c = capacity(h, r);
    if (c <= 0) throw DomainError("price queried for a GPU type absent from the node");
    const double lo = bounds_.u_min.at(r);
    const double hi = bounds_.u_max.at(r);
    if (gamma == 0) return lo;
    if (gamma == c) return hi;
    return lo * std::pow(hi / lo, static_cast<double>(gamma) / static_cast<double>(c));
  }

  /// Dual objective contribution of one slot at zero usage: sum_h sum_r k(0) c.
  double initial_dual_per_slot() const {
    double d = 0.0;
    for (std::size_t h = 0; h < nodes_; ++h)
      for (std::size_t r = 0; r < types_; ++r) d += bounds_.u_min[r] * capacity(h, r);
    return d;
  }

 private:
  std::size_t nodes_ = 0;
  std::size_t types_ = 0;
  UtilityBounds bounds_;
  std::vector<int> capacity_;
  std::vector<int> used_;
  std::vector<std::size_t> offset_;
  std::vector<double> table_;  // price_at for every usage level
};

/// mu_j = U_j(f_js - a_j) - cost. Admit iff positive.
inline double payoff(const JobSpec& job, double schedule_cost, Slot est_finish, const UtilityFn& util) {
  return util(job, est_finish - job.arrival) - schedule_cost;
}

/// max over r of max(1, ln(U_max^r / U_min^r)).
inline double alpha(const UtilityBounds& bounds) {
  double a = 1.0;
  for (std::size_t r = 0; r < bounds.u_max.size(); ++r) {
    if (bounds.u_min[r] <= 0.0) continue;
    a = std::max(a, std::log(bounds.u_max[r] / bounds.u_min[r]));
  }
  return a;
}

}  // namespace hadar
