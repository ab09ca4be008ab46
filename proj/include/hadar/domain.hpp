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
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace hadar {

using JobId = std::int64_t;
using Slot = std::int64_t;
using NodeIndex = std::size_t;
using TypeIndex = std::size_t;

// Error hierarchy. Violations found by validate() are data, not exceptions.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class InvariantError : public Error {
 public:
  using Error::Error;
};

class UnschedulableJobError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

struct GpuType {
  TypeIndex id = 0;
  std::string label;
};

struct NodeSpec {
  NodeIndex id = 0;
  std::vector<int> capacity;  // indexed by TypeIndex
};

/// Nodes with per-type GPU counts c_h^r. Immutable after construction.
class ClusterSpec {
 public:
  ClusterSpec() = default;

  ClusterSpec(std::vector<GpuType> types, std::vector<NodeSpec> nodes)
      : types_(std::move(types)), nodes_(std::move(nodes)) {
    if (types_.empty()) throw ConfigError("cluster: at least one GPU type required");
    std::unordered_set<std::string> labels;
    for (std::size_t r = 0; r < types_.size(); ++r) {
      if (types_[r].id != r) throw ConfigError("cluster: GPU type ids must be dense 0..R-1");
      if (!labels.insert(types_[r].label).second) {
        throw ConfigError("cluster: duplicate GPU type label '" + types_[r].label + "'");
      }
    }
    if (nodes_.empty()) throw ConfigError("cluster: at least one node required");
    long total = 0;
    for (std::size_t h = 0; h < nodes_.size(); ++h) {
      if (nodes_[h].id != h) throw ConfigError("cluster: node ids must be dense 0..H-1");
      if (nodes_[h].capacity.size() != types_.size()) {
        throw ConfigError("cluster: node " + std::to_string(h) + " capacity has wrong arity");
      }
      for (int c : nodes_[h].capacity) {
        if (c < 0) throw ConfigError("cluster: negative capacity on node " + std::to_string(h));
        total += c;
      }
    }
    if (total <= 0) throw ConfigError("cluster: total capacity must be positive");
  }

  std::size_t num_types() const noexcept { return types_.size(); }
  std::size_t num_nodes() const noexcept { return nodes_.size(); }
  const std::vector<GpuType>& types() const noexcept { return types_; }
  const std::vector<NodeSpec>& nodes() const noexcept { return nodes_; }
  int capacity(NodeIndex h, TypeIndex r) const { return nodes_.at(h).capacity.at(r); }

  int total_capacity() const {
    int total = 0;
    for (const auto& n : nodes_)
      for (int c : n.capacity) total += c;
    return total;
  }

  int type_capacity(TypeIndex r) const {
    int total = 0;
    for (const auto& n : nodes_) total += n.capacity.at(r);
    return total;
  }

  std::optional<TypeIndex> type_by_label(const std::string& label) const {
    for (const auto& t : types_)
      if (t.label == label) return t.id;
    return std::nullopt;
  }

  friend bool operator==(const ClusterSpec& a, const ClusterSpec& b) {
    if (a.types_.size() != b.types_.size() || a.nodes_.size() != b.nodes_.size()) return false;
    for (std::size_t r = 0; r < a.types_.size(); ++r)
      if (a.types_[r].label != b.types_[r].label) return false;
    for (std::size_t h = 0; h < a.nodes_.size(); ++h)
      if (a.nodes_[h].capacity != b.nodes_[h].capacity) return false;
    return true;
  }

 private:
  std::vector<GpuType> types_;
  std::vector<NodeSpec> nodes_;
};

/// Static demand of a training job. Throughput 0 on a type means the job
/// cannot run there.
struct JobSpec {
  JobId id = 0;
  Slot arrival = 0;
  int workers = 1;
  std::int64_t epochs = 1;
  std::int64_t iters_per_epoch = 1;
  std::vector<double> throughput;  // iterations per second, per GPU type
  std::optional<JobId> parent_id;

  double total_iters() const {
    return static_cast<double>(epochs) * static_cast<double>(iters_per_epoch);
  }

  bool runnable_on(TypeIndex r) const { return r < throughput.size() && throughput[r] > 0.0; }

  double max_throughput() const {
    double best = 0.0;
    for (double x : throughput) best = std::max(best, x);
    return best;
  }

  /// Slowest runnable type; 0 when none is runnable.
  double min_runnable_throughput() const {
    double worst = std::numeric_limits<double>::infinity();
    for (double x : throughput)
      if (x > 0.0) worst = std::min(worst, x);
    return std::isinf(worst) ? 0.0 : worst;
  }
};

inline void check_job(const JobSpec& job, const ClusterSpec& cluster) {
  if (job.workers < 1) throw ConfigError("job " + std::to_string(job.id) + ": workers must be >= 1");
  if (job.epochs < 1 || job.iters_per_epoch < 1) {
    throw ConfigError("job " + std::to_string(job.id) + ": epochs and iters_per_epoch must be >= 1");
  }
  if (job.arrival < 0) throw ConfigError("job " + std::to_string(job.id) + ": negative arrival");
  if (job.throughput.size() != cluster.num_types()) {
    throw ConfigError("job " + std::to_string(job.id) + ": throughput arity does not match cluster types");
  }
  for (double x : job.throughput) {
    if (!(x >= 0.0) || std::isinf(x)) {
      throw ConfigError("job " + std::to_string(job.id) + ": throughput must be finite and >= 0");
    }
  }
}

/// One cell of a job's per-round allocation: `count` type-r GPUs on node h.
struct Grant {
  NodeIndex node = 0;
  TypeIndex type = 0;
  int count = 0;

  friend bool operator==(const Grant&, const Grant&) = default;
  friend auto operator<=>(const Grant&, const Grant&) = default;
};

/// A job's slice of w_{jh}^r(t): sorted by (node, type), counts > 0.
class JobAllocation {
 public:
  JobAllocation() = default;
  explicit JobAllocation(std::vector<Grant> grants) {
    for (const auto& g : grants) add(g.node, g.type, g.count);
  }

  void add(NodeIndex h, TypeIndex r, int count) {
    if (count == 0) return;
    if (count < 0) throw InvariantError("allocation: negative worker count");
    auto it = std::lower_bound(grants_.begin(), grants_.end(), Grant{h, r, 0},
                               [](const Grant& a, const Grant& b) {
                                 return std::pair(a.node, a.type) < std::pair(b.node, b.type);
                               });
    if (it != grants_.end() && it->node == h && it->type == r) {
      it->count += count;
    } else {
      grants_.insert(it, Grant{h, r, count});
    }
  }

  const std::vector<Grant>& grants() const noexcept { return grants_; }
  bool empty() const noexcept { return grants_.empty(); }

  int workers() const {
    int total = 0;
    for (const auto& g : grants_) total += g.count;
    return total;
  }

  std::size_t nodes_used() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < grants_.size(); ++i)
      if (i == 0 || grants_[i].node != grants_[i - 1].node) ++n;
    return n;
  }

  int count_of_type(TypeIndex r) const {
    int total = 0;
    for (const auto& g : grants_)
      if (g.type == r) total += g.count;
    return total;
  }

  friend bool operator==(const JobAllocation&, const JobAllocation&) = default;

 private:
  std::vector<Grant> grants_;
};

/// w_{jh}^r(t) for one round, keyed by job.
class AllocationMatrix {
 public:
  void set(JobId job, JobAllocation alloc) {
    if (alloc.empty()) {
      entries_.erase(job);
    } else {
      entries_[job] = std::move(alloc);
    }
  }

  const JobAllocation* find(JobId job) const {
    auto it = entries_.find(job);
    return it == entries_.end() ? nullptr : &it->second;
  }

  const std::map<JobId, JobAllocation>& entries() const noexcept { return entries_; }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t size() const noexcept { return entries_.size(); }

  int used(NodeIndex h, TypeIndex r) const {
    int total = 0;
    for (const auto& [id, alloc] : entries_)
      for (const auto& g : alloc.grants())
        if (g.node == h && g.type == r) total += g.count;
    return total;
  }

  friend bool operator==(const AllocationMatrix&, const AllocationMatrix&) = default;

 private:
  std::map<JobId, JobAllocation> entries_;
};

struct SlotConfig {
  double slot_seconds = 360.0;
  Slot horizon = 1000;

  void check() const {
    if (!(slot_seconds > 0.0)) throw ConfigError("slot: slot_seconds must be > 0");
    if (horizon < 1) throw ConfigError("slot: horizon must be >= 1");
  }
};

/// Dynamic progress of one job. finish_time uses end-of-slot numbering: a job
/// that completes while running in slot t has f_j = t + 1.
struct JobState {
  JobSpec spec;
  double remaining_iters = 0.0;
  std::optional<Slot> finish_time;
  JobAllocation last_allocation;
  double restart_penalty_pending = 0.0;

  static JobState fresh(JobSpec spec) {
    JobState s;
    s.remaining_iters = spec.total_iters();
    s.spec = std::move(spec);
    return s;
  }

  bool finished() const noexcept { return finish_time.has_value(); }
};

/// x_j(t): minimum throughput over the GPU types the job holds this round.
inline double bottleneck_throughput(const JobSpec& job, const JobAllocation& alloc) {
  double x = std::numeric_limits<double>::infinity();
  for (const auto& g : alloc.grants()) {
    if (g.count <= 0) continue;
    if (!job.runnable_on(g.type)) {
      throw InvariantError("job " + std::to_string(job.id) + " allocated on non-runnable type " +
                           std::to_string(g.type));
    }
    x = std::min(x, job.throughput[g.type]);
  }
  return std::isinf(x) ? 0.0 : x;
}

/// Iterations per second the job makes with this allocation: x_j(t) * sum(w).
inline double progress_rate(const JobSpec& job, const JobAllocation& alloc) {
  return bottleneck_throughput(job, alloc) * static_cast<double>(alloc.workers());
}

/// Advances one round in slot t. The pending restart penalty is consumed from
/// the slot before any progress is made.
/// Iterations `alloc` would complete this round, after any pending penalty.
inline double round_progress(const JobState& state, const JobAllocation& alloc, const SlotConfig& slot) {
  if (alloc.empty()) return 0.0;
  const double effective = slot.slot_seconds - state.restart_penalty_pending;
  if (effective < 0.0) throw ConfigError("negative effective slot length");
  return progress_rate(state.spec, alloc) * effective;
}

inline JobState apply_round_progress(JobState state, const JobAllocation& alloc,
                                     const SlotConfig& slot, Slot t) {
  if (alloc.empty()) {
    state.restart_penalty_pending = 0.0;
    state.last_allocation = JobAllocation{};
    return state;
  }
  const double done = round_progress(state, alloc, slot);
  if (!state.finished()) {
    state.remaining_iters = std::max(0.0, state.remaining_iters - done);
    if (state.remaining_iters <= 0.0) state.finish_time = t + 1;
  }
  state.restart_penalty_pending = 0.0;
  state.last_allocation = alloc;
  return state;
}

enum class Constraint { Capacity, Gang, BeforeArrival, NonRunnableType, UnknownJob, BadIndex };

inline const char* to_string(Constraint c) {
  switch (c) {
    case Constraint::Capacity: return "capacity";
    case Constraint::Gang: return "gang";
    case Constraint::BeforeArrival: return "before-arrival";
    case Constraint::NonRunnableType: return "non-runnable-type";
    case Constraint::UnknownJob: return "unknown-job";
    case Constraint::BadIndex: return "bad-index";
  }
  return "?";
}

struct Violation {
  Constraint constraint;
  std::optional<JobId> job;
  std::optional<NodeIndex> node;
  std::optional<TypeIndex> type;
  std::string message;
};

/// Checks capacity (per node/type), gang (0 or W_j workers) and arrival
/// constraints. Returns an empty list iff the allocation is feasible.
inline std::vector<Violation> validate(const AllocationMatrix& alloc, const ClusterSpec& cluster,
                                       std::span<const JobSpec> jobs, Slot t) {
  std::vector<Violation> out;
  std::unordered_map<JobId, const JobSpec*> by_id;
  for (const auto& j : jobs) by_id[j.id] = &j;

  const std::size_t H = cluster.num_nodes();
  const std::size_t R = cluster.num_types();
  std::vector<int> used(H * R, 0);

  for (const auto& [id, ja] : alloc.entries()) {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      out.push_back({Constraint::UnknownJob, id, {}, {}, "allocation for unknown job " + std::to_string(id)});
      continue;
    }
    const JobSpec& job = *it->second;
    bool indices_ok = true;
    for (const auto& g : ja.grants()) {
      if (g.node >= H || g.type >= R) {
        out.push_back({Constraint::BadIndex, id, g.node, g.type, "grant outside cluster"});
        indices_ok = false;
        continue;
      }
      used[g.node * R + g.type] += g.count;
      if (!job.runnable_on(g.type)) {
        out.push_back({Constraint::NonRunnableType, id, g.node, g.type,
                       "job " + std::to_string(id) + " placed on a type it cannot run on"});
      }
    }
    if (!indices_ok) continue;
    const int w = ja.workers();
    if (w != 0 && w != job.workers) {
      std::ostringstream msg;
      msg << "job " << id << " holds " << w << " workers, gang size is " << job.workers;
      out.push_back({Constraint::Gang, id, {}, {}, msg.str()});
    }
    if (w > 0 && t < job.arrival) {
      out.push_back({Constraint::BeforeArrival, id, {}, {},
                     "job " + std::to_string(id) + " allocated before its arrival"});
    }
  }
  for (std::size_t h = 0; h < H; ++h) {
    for (std::size_t r = 0; r < R; ++r) {
      if (used[h * R + r] > cluster.capacity(h, r)) {
        std::ostringstream msg;
        msg << "node " << h << " type " << r << ": " << used[h * R + r] << " allocated, capacity "
            << cluster.capacity(h, r);
        out.push_back({Constraint::Capacity, {}, h, r, msg.str()});
      }
    }
  }
  return out;
}

}  // namespace hadar
