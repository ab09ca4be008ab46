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

#include <span>
#include <string>

#include "hadar/domain.hpp"

namespace hadar {

/// Round interface shared by every scheduler the simulator can drive.
class SchedulerPolicy {
 public:
  virtual ~SchedulerPolicy() = default;

  virtual std::string name() const = 0;

  /// `queue` holds arrived, unfinished jobs. The returned matrix must satisfy
  /// the capacity and gang constraints; the simulator re-validates it.
  virtual AllocationMatrix schedule_round(std::span<const JobState> queue, const ClusterSpec& cluster,
                                          Slot t) = 0;
};

}  // namespace hadar
