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
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <absl/container/flat_hash_map.h>

#include "hadar/domain.hpp"
#include "hadar/policy.hpp"
#include "hadar/pricing.hpp"

namespace hadar {

/// Free capacity c_h^r - gamma_h^r per (node, type).
class ServerState {
 public:
  ServerState() = default;
  explicit ServerState(const ClusterSpec& cluster)
      : nodes_(cluster.num_nodes()), types_(cluster.num_types()) {
    capacity_.resize(nodes_ * types_);
    type_free_.assign(types_, 0);
    for (std::size_t h = 0; h < nodes_; ++h) {
      for (std::size_t r = 0; r < types_; ++r) {
        capacity_[h * types_ + r] = cluster.capacity(h, r);
        type_free_[r] += cluster.capacity(h, r);
        total_free_ += cluster.capacity(h, r);
      }
    }
    free_ = capacity_;
  }

  std::size_t num_nodes() const noexcept { return nodes_; }
  std::size_t num_types() const noexcept { return types_; }
  int free(NodeIndex h, TypeIndex r) const { return free_[h * types_ + r]; }
  int capacity(NodeIndex h, TypeIndex r) const { return capacity_[h * types_ + r]; }
  int type_free(TypeIndex r) const { return type_free_[r]; }
  int total_free() const noexcept { return total_free_; }
  const std::vector<int>& free_vector() const noexcept { return free_; }

  bool full() const noexcept { return total_free_ == 0; }

  void take(const JobAllocation& alloc) {
    for (const auto& g : alloc.grants()) {
      int& f = free_.at(g.node * types_ + g.type);
      if (g.count > f) throw InvariantError("server state: allocation exceeds free capacity");
      f -= g.count;
      type_free_[g.type] -= g.count;
      total_free_ -= g.count;
    }
  }

  void give_back(const JobAllocation& alloc) {
    for (const auto& g : alloc.grants()) {
      int& f = free_.at(g.node * types_ + g.type);
      f += g.count;
      if (f > capacity_[g.node * types_ + g.type]) throw InvariantError("server state: free above capacity");
      type_free_[g.type] += g.count;
      total_free_ += g.count;
    }
  }

  std::size_t hash() const {
    std::size_t seed = free_.size();
    for (int v : free_) seed ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
    return seed;
  }

  friend bool operator==(const ServerState& a, const ServerState& b) {
    return a.free_ == b.free_ && a.capacity_ == b.capacity_;
  }

  /// Orders nodes by (capacity row, free row). Nodes that compare equal are
  /// interchangeable for every placement decision.
  int compare_profiles(NodeIndex a, NodeIndex b) const {
    const int* ca = &capacity_[a * types_];
    const int* cb = &capacity_[b * types_];
    for (std::size_t r = 0; r < types_; ++r)
      if (ca[r] != cb[r]) return ca[r] < cb[r] ? -1 : 1;
    const int* fa = &free_[a * types_];
    const int* fb = &free_[b * types_];
    for (std::size_t r = 0; r < types_; ++r)
      if (fa[r] != fb[r]) return fa[r] < fb[r] ? -1 : 1;
    return 0;
  }

 private:
  std::size_t nodes_ = 0;
  std::size_t types_ = 0;
  std::vector<int> capacity_;
  std::vector<int> free_;
  std::vector<int> type_free_;
  int total_free_ = 0;
};

struct CandidatePlacement {
  JobAllocation alloc;
  double price_cost = 0.0;
  double comm_cost = 0.0;
  double cost = 0.0;
  Slot est_finish = 0;
  double utility = 0.0;
  double payoff = 0.0;
  bool consolidated = true;
};

struct FindAllocOptions {
  UtilityFn utility = UtilityFn::effective_throughput(360.0);
  double slot_seconds = 360.0;
  /// kappa as a fraction of the placement's price cost; the communication cost
  /// is kappa * (nodes_used - 1) * W_j.
  double comm_fraction = 0.1;
};

/// f_js = t + ceil(remaining / (x_j * workers * L)); optimistic, assumes the
/// placement persists until the job finishes.
inline Slot estimate_finish(const JobState& job, const JobAllocation& placement, Slot t, double slot_seconds) {
  if (job.remaining_iters <= 0.0) return t;
  const double rate = progress_rate(job.spec, placement);
  if (!(rate > 0.0)) throw DomainError("cannot estimate finish for a zero-throughput placement");
  return t + static_cast<Slot>(std::ceil(job.remaining_iters / (rate * slot_seconds)));
}

namespace detail {

inline std::vector<TypeIndex> types_by_speed(const JobSpec& job, std::size_t num_types) {
  std::vector<TypeIndex> order;
  for (TypeIndex r = 0; r < num_types; ++r)
    if (job.runnable_on(r)) order.push_back(r);
  std::stable_sort(order.begin(), order.end(),
                   [&](TypeIndex a, TypeIndex b) { return job.throughput[a] > job.throughput[b]; });
  return order;
}

inline int runnable_free(const ServerState& s, NodeIndex h, std::span<const TypeIndex> types) {
  int total = 0;
  for (TypeIndex r : types) total += s.free(h, r);
  return total;
}

// Takes up to `need` workers from node h, fastest types first.
inline int fill_node(const ServerState& s, NodeIndex h, std::span<const TypeIndex> types, int need,
                     JobAllocation& out) {
  for (TypeIndex r : types) {
    if (need == 0) break;
    const int take = std::min(need, s.free(h, r));
    out.add(h, r, take);
    need -= take;
  }
  return need;
}

// Bottleneck of fill_node's result without building it.
inline double fill_bottleneck(const JobSpec& job, const ServerState& s, NodeIndex h,
                              std::span<const TypeIndex> types, int need) {
  double x = std::numeric_limits<double>::infinity();
  for (TypeIndex r : types) {
    if (need == 0) break;
    const int take = std::min(need, s.free(h, r));
    if (take > 0) x = std::min(x, job.throughput[r]);
    need -= take;
  }
  return std::isinf(x) ? 0.0 : x;
}

// Sum of price terms in ascending order so that placements that are equal up
// to a permutation of identical nodes cost exactly the same.
inline double placement_price(const JobAllocation& alloc, const PriceState& prices) {
  constexpr std::size_t kInline = 16;
  std::array<double, kInline> small{};
  std::vector<double> big;
  const auto& grants = alloc.grants();
  double* terms = small.data();
  if (grants.size() > kInline) {
    big.resize(grants.size());
    terms = big.data();
  }
  for (std::size_t i = 0; i < grants.size(); ++i)
    terms[i] = prices.price(grants[i].node, grants[i].type) * grants[i].count;
  std::sort(terms, terms + grants.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < grants.size(); ++i) sum += terms[i];
  return sum;
}

inline double fastest_free(const JobSpec& job, const ServerState& s, NodeIndex h, std::span<const TypeIndex> types) {
  for (TypeIndex r : types)
    if (s.free(h, r) > 0) return job.throughput[r];
  return 0.0;
}

inline std::optional<JobAllocation> consolidated_placement(const JobSpec& job, const ServerState& s,
                                                           std::span<const TypeIndex> types,
                                                           std::vector<NodeIndex>& order) {
  const std::size_t H = s.num_nodes();
  const int W = job.workers;

  // Single node: prefer the fastest bottleneck, then the tightest fit.
  std::optional<NodeIndex> best;
  double best_x = -1.0;
  int best_left = 0;
  for (NodeIndex h = 0; h < H; ++h) {
    const int avail = runnable_free(s, h, types);
    if (avail < W) continue;
    const double x = fill_bottleneck(job, s, h, types, W);
    const int left = avail - W;
    bool better = false;
    if (!best) {
      better = true;
    } else if (x != best_x) {
      better = x > best_x;
    } else if (left != best_left) {
      better = left < best_left;
    } else {
      better = s.compare_profiles(h, *best) < 0;
    }
    if (better) {
      best = h;
      best_x = x;
      best_left = left;
    }
  }
  if (best) {
    JobAllocation out;
    fill_node(s, *best, types, W, out);
    return out;
  }

  // Fewest nodes: largest runnable free capacity first, then the node whose
  // fastest free type is fastest.
  order.resize(H);
  std::iota(order.begin(), order.end(), NodeIndex{0});
  std::stable_sort(order.begin(), order.end(), [&](NodeIndex a, NodeIndex b) {
    const int fa = runnable_free(s, a, types), fb = runnable_free(s, b, types);
    if (fa != fb) return fa > fb;
    const double xa = fastest_free(job, s, a, types), xb = fastest_free(job, s, b, types);
    if (xa != xb) return xa > xb;
    return s.compare_profiles(a, b) < 0;
  });
  JobAllocation out;
  int need = W;
  for (NodeIndex h : order) {
    if (need == 0) break;
    need = fill_node(s, h, types, need, out);
  }
  if (need > 0) return std::nullopt;
  return out;
}

inline std::optional<JobAllocation> consolidated_placement(const JobSpec& job, const ServerState& s,
                                                           std::span<const TypeIndex> types) {
  std::vector<NodeIndex> order;
  return consolidated_placement(job, s, types, order);
}

inline std::optional<JobAllocation> spread_placement(const JobSpec& job, const ServerState& s,
                                                     std::span<const TypeIndex> types,
                                                     std::vector<NodeIndex>& order) {
  const std::size_t H = s.num_nodes();
  JobAllocation out;
  int need = job.workers;
  for (TypeIndex r : types) {
    if (need == 0) break;
    if (s.type_free(r) == 0) continue;
    order.clear();
    for (NodeIndex h = 0; h < H; ++h)
      if (s.free(h, r) > 0) order.push_back(h);
    std::stable_sort(order.begin(), order.end(), [&](NodeIndex a, NodeIndex b) {
      if (s.free(a, r) != s.free(b, r)) return s.free(a, r) > s.free(b, r);
      return s.compare_profiles(a, b) < 0;
    });
    for (NodeIndex h : order) {
      if (need == 0) break;
      const int take = std::min(need, s.free(h, r));
      out.add(h, r, take);
      need -= take;
    }
  }
  if (need > 0) return std::nullopt;
  return out;
}

inline std::optional<JobAllocation> spread_placement(const JobSpec& job, const ServerState& s,
                                                     std::span<const TypeIndex> types) {
  std::vector<NodeIndex> order;
  return spread_placement(job, s, types, order);
}

inline int runnable_type_free(const ServerState& s, std::span<const TypeIndex> types) {
  int total = 0;
  for (TypeIndex r : types) total += s.type_free(r);
  return total;
}

}  // namespace detail

/// Prices one placement: price cost, communication cost when it spans
/// several nodes, finish estimate, utility and payoff.
inline CandidatePlacement price_placement(const JobState& job, JobAllocation alloc, bool consolidated,
                                          const PriceState& prices, const FindAllocOptions& opt, Slot t) {
  CandidatePlacement c;
  c.price_cost = detail::placement_price(alloc, prices);
  const auto nodes = alloc.nodes_used();
  c.comm_cost = nodes > 1 ? opt.comm_fraction * c.price_cost * static_cast<double>(nodes - 1) *
                                static_cast<double>(job.spec.workers)
                          : 0.0;
  c.cost = c.price_cost + c.comm_cost;
  c.est_finish = estimate_finish(job, alloc, t, opt.slot_seconds);
  c.utility = opt.utility(job.spec, c.est_finish - job.spec.arrival);
  c.payoff = c.utility - c.cost;
  c.consolidated = consolidated;
  c.alloc = std::move(alloc);
  return c;
}

/// Both candidate placements (packed first), priced but not filtered by payoff.
inline std::vector<CandidatePlacement> candidate_placements(const JobState& job, const ServerState& srvr,
                                                            const PriceState& prices,
                                                            const FindAllocOptions& opt, Slot t) {
  std::vector<CandidatePlacement> out;
  const auto types = detail::types_by_speed(job.spec, srvr.num_types());
  if (types.empty()) return out;
  if (auto packed = detail::consolidated_placement(job.spec, srvr, types)) {
    out.push_back(price_placement(job, std::move(*packed), true, prices, opt, t));
  }
  if (auto spread = detail::spread_placement(job.spec, srvr, types)) {
    out.push_back(price_placement(job, std::move(*spread), false, prices, opt, t));
  }
  return out;
}

namespace detail {

// find_alloc with the type order precomputed and a reusable node buffer.
inline std::optional<CandidatePlacement> find_alloc_sorted(const JobState& job, std::span<const TypeIndex> types,
                                                           const ServerState& srvr, const PriceState& prices,
                                                           const FindAllocOptions& opt, Slot t,
                                                           std::vector<NodeIndex>& scratch) {
  if (types.empty() || runnable_type_free(srvr, types) < job.spec.workers) return std::nullopt;
  std::optional<CandidatePlacement> best;
  if (auto packed = consolidated_placement(job.spec, srvr, types, scratch)) {
    best = price_placement(job, std::move(*packed), true, prices, opt, t);
  }
  if (auto spread = spread_placement(job.spec, srvr, types, scratch)) {
    auto c = price_placement(job, std::move(*spread), false, prices, opt, t);
    if (!best || c.cost < best->cost) best = std::move(c);
  }
  if (!best || !(best->payoff > 0.0)) return std::nullopt;
  return best;
}

}  // namespace detail

/// The cheaper of the consolidated and spread placements, or nothing when
/// neither fits or the payoff is not positive.
inline std::optional<CandidatePlacement> find_alloc(const JobState& job, const ServerState& srvr,
                                                    const PriceState& prices, const FindAllocOptions& opt,
                                                    Slot t) {
  const auto types = detail::types_by_speed(job.spec, srvr.num_types());
  std::vector<NodeIndex> scratch;
  return detail::find_alloc_sorted(job, types, srvr, prices, opt, t, scratch);
}

struct DpDecision {
  std::vector<JobId> selected;  // queue order
  AllocationMatrix allocations;
  double price_cost = 0.0;    // sum of selected placement costs
  double total_payoff = 0.0;  // sum of mu_j, folded from the back of the queue
  PriceState prices;          // usage after the selected allocations

  /// Objective minimised by the recursion: cost minus utility of the selection.
  double net_cost() const { return -total_payoff; }
};

struct DpStats {
  std::size_t calls = 0;   // invocations of the recursion
  std::size_t states = 0;  // distinct memoized (index, server state) pairs
};

struct HadarConfig {
  double slot_seconds = 360.0;
  Slot horizon = 1000;
  double comm_fraction = 0.1;
  std::optional<UtilityFn> utility;  // effective throughput when unset

  FindAllocOptions find_alloc_options() const {
    FindAllocOptions o;
    o.slot_seconds = slot_seconds;
    o.comm_fraction = comm_fraction;
    o.utility = utility ? *utility : UtilityFn::effective_throughput(slot_seconds);
    return o;
  }
};

/// Select-or-skip dynamic program over the queue, memoized on the queue index
/// and the free-capacity vector (canonicalised over interchangeable nodes).
class DpAllocator {
 public:
  DpAllocator(std::span<const JobState> queue, const ClusterSpec& cluster, PriceState prices,
              FindAllocOptions opt, Slot t)
      : queue_(queue), srvr_(cluster), prices_(std::move(prices)), opt_(std::move(opt)), t_(t) {
    // Group nodes with identical capacity rows.
    const std::size_t H = cluster.num_nodes();
    const std::size_t R = cluster.num_types();
    std::vector<bool> seen(H, false);
    for (NodeIndex h = 0; h < H; ++h) {
      if (seen[h]) continue;
      std::vector<NodeIndex> group{h};
      seen[h] = true;
      for (NodeIndex k = h + 1; k < H; ++k) {
        if (!seen[k] && cluster.nodes()[k].capacity == cluster.nodes()[h].capacity) {
          group.push_back(k);
          seen[k] = true;
        }
      }
      groups_.push_back(std::move(group));
    }
    // Mixed-radix code of a node's free row; rows compare in the same order
    // as their codes, so sorting codes sorts rows.
    radix_.assign(H * R, 1);
    for (NodeIndex h = 0; h < H; ++h) {
      std::uint64_t m = 1;
      for (std::size_t r = R; r-- > 0;) {
        radix_[h * R + r] = m;
        m *= static_cast<std::uint64_t>(cluster.capacity(h, r)) + 1;
      }
    }
    node_code_.assign(H, 0);
    for (NodeIndex h = 0; h < H; ++h)
      for (std::size_t r = 0; r < R; ++r)
        node_code_[h] += static_cast<std::uint64_t>(cluster.capacity(h, r)) * radix_[h * R + r];
    // Codes laid out group by group, each segment kept sorted.
    segment_.assign(H, {0, 0});
    for (const auto& group : groups_) {
      const std::size_t begin = sorted_.size();
      for (NodeIndex h : group) sorted_.push_back(node_code_[h]);
      for (NodeIndex h : group) segment_[h] = {begin, sorted_.size()};
    }
    types_.reserve(queue_.size());
    for (const auto& j : queue_) types_.push_back(detail::types_by_speed(j.spec, R));
    memo_.resize(queue_.size() + 1);
  }

  DpDecision run() {
    solve(0);
    DpDecision d;
    std::vector<double> payoffs;
    for (std::size_t idx = 0; idx < queue_.size() && !srvr_.full(); ++idx) {
      canonical();
      auto it = memo_[idx].find(key_);
      if (it == memo_[idx].end()) throw InvariantError("dp: missing memo entry during reconstruction");
      if (!it->second.select) continue;
      auto cand = detail::find_alloc_sorted(queue_[idx], types_[idx], srvr_, prices_, opt_, t_, scratch_);
      if (!cand) throw InvariantError("dp: selected job has no placement during reconstruction");
      take(cand->alloc);
      prices_.add(cand->alloc);
      d.selected.push_back(queue_[idx].spec.id);
      d.price_cost += cand->cost;
      payoffs.push_back(cand->payoff);
      d.allocations.set(queue_[idx].spec.id, std::move(cand->alloc));
    }
    double fold = 0.0;
    for (auto it = payoffs.rbegin(); it != payoffs.rend(); ++it) fold = *it + fold;
    d.total_payoff = fold;
    d.prices = prices_;
    return d;
  }

  const DpStats& stats() const noexcept { return stats_; }

 private:
  struct Entry {
    double value = 0.0;
    bool select = false;
  };

  void recode(NodeIndex h, std::uint64_t code) {
    const auto [begin, end] = segment_[h];
    std::size_t i = begin;
    while (sorted_[i] != node_code_[h]) ++i;
    node_code_[h] = code;
    sorted_[i] = code;
    while (i > begin && sorted_[i - 1] > sorted_[i]) {
      std::swap(sorted_[i - 1], sorted_[i]);
      --i;
    }
    while (i + 1 < end && sorted_[i + 1] < sorted_[i]) {
      std::swap(sorted_[i + 1], sorted_[i]);
      ++i;
    }
  }

  void take(const JobAllocation& a) {
    srvr_.take(a);
    const std::size_t R = srvr_.num_types();
    for (const auto& g : a.grants())
      recode(g.node, node_code_[g.node] - static_cast<std::uint64_t>(g.count) * radix_[g.node * R + g.type]);
  }

  void give_back(const JobAllocation& a) {
    srvr_.give_back(a);
    const std::size_t R = srvr_.num_types();
    for (const auto& g : a.grants())
      recode(g.node, node_code_[g.node] + static_cast<std::uint64_t>(g.count) * radix_[g.node * R + g.type]);
  }

  // Writes the canonical key of the current server state into key_: the
  // sorted codes of every group, 7 bits per byte.
  void canonical() {
    buffer_.clear();
    for (std::uint64_t c : sorted_) {
      do {
        buffer_.push_back(static_cast<char>(c & 0x7f) | static_cast<char>(c > 0x7f ? 0x80 : 0));
        c >>= 7;
      } while (c != 0);
    }
    key_.assign(buffer_.data(), buffer_.size());
  }

  double solve(std::size_t idx) {
    ++stats_.calls;
    if (idx > queue_.size()) throw InvariantError("dp: recursion past the end of the queue");
    if (idx == queue_.size() || srvr_.full()) return 0.0;
    canonical();
    // Deeper calls only touch deeper tables, so the slot stays valid.
    auto [slot, fresh] = memo_[idx].try_emplace(key_);
    if (!fresh) return slot->second.value;

    Entry e;
    const double skip = solve(idx + 1);
    e.value = skip;
    if (auto cand = detail::find_alloc_sorted(queue_[idx], types_[idx], srvr_, prices_, opt_, t_, scratch_)) {
      take(cand->alloc);
      prices_.add(cand->alloc);
      const double with = cand->payoff + solve(idx + 1);
      prices_.release(cand->alloc);
      give_back(cand->alloc);
      if (with >= skip) {
        e.value = with;
        e.select = true;
      }
    }
    ++stats_.states;
    slot->second = e;
    return e.value;
  }

  std::span<const JobState> queue_;
  ServerState srvr_;
  PriceState prices_;
  FindAllocOptions opt_;
  Slot t_;
  std::vector<std::vector<NodeIndex>> groups_;
  std::vector<std::uint64_t> radix_;
  std::vector<std::vector<TypeIndex>> types_;
  std::vector<std::uint64_t> node_code_;
  std::vector<absl::flat_hash_map<std::string, Entry>> memo_;
  std::vector<std::pair<std::size_t, std::size_t>> segment_;  // per node: its group's range in sorted_
  std::vector<std::uint64_t> sorted_;
  std::vector<char> buffer_;
  std::vector<NodeIndex> scratch_;
  std::string key_;
  DpStats stats_;
};

/// Queue order used by the recursion: arrival, then job id.
inline std::vector<JobState> ordered_queue(std::span<const JobState> queue) {
  std::vector<JobState> q(queue.begin(), queue.end());
  std::stable_sort(q.begin(), q.end(), [](const JobState& a, const JobState& b) {
    return std::pair(a.spec.arrival, a.spec.id) < std::pair(b.spec.arrival, b.spec.id);
  });
  return q;
}

/// One scheduling round: prices start from zero usage with bounds computed
/// over the current queue, then the dynamic program picks the job set.
class HadarScheduler : public SchedulerPolicy {
 public:
  explicit HadarScheduler(HadarConfig config) : config_(std::move(config)) {}

  std::string name() const override { return "hadar"; }

  DpDecision decide(std::span<const JobState> queue, const ClusterSpec& cluster, Slot t) {
    for (const auto& j : queue) {
      if (j.spec.arrival > t) throw InvariantError("hadar: queued job has not arrived yet");
      if (j.finished()) throw InvariantError("hadar: queued job is already finished");
    }
    const auto q = ordered_queue(queue);
    std::vector<JobSpec> specs;
    specs.reserve(q.size());
    for (const auto& j : q) specs.push_back(j.spec);
    auto opt = config_.find_alloc_options();
    PriceState prices(cluster, compute_bounds(specs, cluster, opt.utility, config_.horizon, config_.slot_seconds));
    DpAllocator dp(q, cluster, std::move(prices), std::move(opt), t);
    auto decision = dp.run();
    last_stats_ = dp.stats();
    return decision;
  }

  AllocationMatrix schedule_round(std::span<const JobState> queue, const ClusterSpec& cluster, Slot t) override {
    return decide(queue, cluster, t).allocations;
  }

  const DpStats& last_stats() const noexcept { return last_stats_; }
  const HadarConfig& config() const noexcept { return config_; }

 private:
  HadarConfig config_;
  DpStats last_stats_;
};

}  // namespace hadar
