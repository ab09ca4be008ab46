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

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "hadar/domain.hpp"

namespace hadar {

struct JobRoundSummary {
  JobId job = 0;
  std::optional<JobId> parent;
  int workers = 0;
  double rate = 0.0;          // iterations per second while running
  double busy_seconds = 0.0;  // includes any restart penalty
  double progress = 0.0;      // iterations completed this round
  bool restarted = false;

  friend bool operator==(const JobRoundSummary&, const JobRoundSummary&) = default;
};

/// Per-round snapshot. busy values never exceed capacity * slot_seconds.
struct RoundRecord {
  Slot t = 0;
  std::vector<JobRoundSummary> allocations;
  std::vector<double> busy_gpu_seconds;   // per GPU type
  std::vector<double> node_busy_seconds;  // per node
  std::vector<JobId> completions;
  std::size_t queue_length = 0;
  std::size_t decision_work = 0;  // dynamic-program calls, 0 for baselines
  double decision_seconds = 0.0;  // wall time; 0 unless timing is enabled

  double total_busy_gpu_seconds() const {
    double s = 0.0;
    for (double v : busy_gpu_seconds) s += v;
    return s;
  }

  std::size_t idle_nodes() const {
    std::size_t n = 0;
    for (double v : node_busy_seconds)
      if (v <= 0.0) ++n;
    return n;
  }

  friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

/// Cluster resource utilization: busy node-seconds over rounds * n * T_S.
inline double cru(std::span<const RoundRecord> records, std::size_t num_nodes, const SlotConfig& slot) {
  if (records.empty() || num_nodes == 0) return 0.0;
  double busy = 0.0;
  for (const auto& rec : records)
    for (double v : rec.node_busy_seconds) busy += v;
  return busy / (static_cast<double>(records.size()) * static_cast<double>(num_nodes) * slot.slot_seconds);
}

}  // namespace hadar
