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

#include <gtest/gtest.h>

#include "hadar/baselines.hpp"
#include "hadar/workload_io.hpp"

namespace hadar {
namespace {

JobState state(JobId id, int w, std::vector<double> x, Slot arrival = 0) {
  JobSpec j;
  j.id = id;
  j.workers = w;
  j.throughput = std::move(x);
  j.epochs = 10;
  j.iters_per_epoch = 10;
  j.arrival = arrival;
  return JobState::fresh(j);
}

ClusterSpec two_nodes() { return ClusterSpec({{0, "A"}, {1, "B"}}, {{0, {2, 0}}, {1, {0, 2}}}); }

TEST(FifoGang, HeadOfLineBlocks) {
  FifoGang p;
  const std::vector<JobState> q{state(1, 3, {1, 1}), state(2, 4, {1, 1}), state(3, 1, {1, 1})};
  const auto a = p.schedule_round(q, two_nodes(), 0);
  ASSERT_NE(a.find(1), nullptr);
  EXPECT_EQ(a.find(2), nullptr);
  EXPECT_EQ(a.find(3), nullptr);
  EXPECT_EQ(a.find(1)->workers(), 3);
}

TEST(FifoGang, RunningJobsKeepTheirAllocation) {
  FifoGang p;
  auto running = state(2, 1, {1, 1}, 1);
  running.last_allocation = JobAllocation({{1, 1, 1}});
  const std::vector<JobState> q{state(1, 2, {1, 1}), running};
  const auto a = p.schedule_round(q, two_nodes(), 1);
  EXPECT_EQ(*a.find(2), running.last_allocation);
  EXPECT_EQ(*a.find(1), JobAllocation({{0, 0, 2}}));
}

TEST(FifoGang, TypeBlindFirstFit) {
  FifoGang p;
  const std::vector<JobState> q{state(1, 2, {1, 9})};
  EXPECT_EQ(*p.schedule_round(q, two_nodes(), 0).find(1), JobAllocation({{0, 0, 2}}));
}

TEST(Tiresias, LeastAttainedServiceFirst) {
  TiresiasLike p(1e9, 100.0);
  const std::vector<JobState> q{state(1, 2, {1, 1}), state(2, 2, {1, 1}), state(3, 2, {1, 1})};
  auto a = p.schedule_round(q, two_nodes(), 0);
  EXPECT_NE(a.find(1), nullptr);
  EXPECT_NE(a.find(2), nullptr);
  EXPECT_EQ(a.find(3), nullptr);
  EXPECT_DOUBLE_EQ(p.attained(1), 200.0);
  a = p.schedule_round(q, two_nodes(), 1);
  EXPECT_NE(a.find(3), nullptr);
}

TEST(Tiresias, DemotesPastThreshold) {
  TiresiasLike p(150.0, 100.0);
  const std::vector<JobState> q{state(1, 2, {1, 1})};
  EXPECT_EQ(p.queue_of(1), 0);
  p.schedule_round(q, two_nodes(), 0);
  EXPECT_EQ(p.queue_of(1), 1);
}

TEST(GavelProxy, BestAvailableTypeWholeGang) {
  GavelProxy p;
  const std::vector<JobState> q{state(1, 2, {1, 4}), state(2, 2, {3, 2})};
  const auto a = p.schedule_round(q, two_nodes(), 0);
  EXPECT_EQ(*a.find(1), JobAllocation({{1, 1, 2}}));
  EXPECT_EQ(*a.find(2), JobAllocation({{0, 0, 2}}));
}

TEST(GavelProxy, ThreeJobFirstRound) {
  GavelProxy p;
  std::vector<JobState> q;
  for (const auto& j : three_job_jobs()) q.push_back(JobState::fresh(j));
  const auto a = p.schedule_round(q, three_job_cluster(), 0);
  EXPECT_EQ(a.find(1), nullptr);
  EXPECT_EQ(*a.find(2), JobAllocation({{2, 1, 1}, {3, 1, 1}}));
  EXPECT_EQ(a.find(3)->workers(), 2);
  EXPECT_TRUE(validate(a, three_job_cluster(), three_job_jobs(), 0).empty());
}

TEST(Baselines, NeverUseNonRunnableTypes) {
  const std::vector<JobState> q{state(1, 2, {0, 1}), state(2, 2, {1, 0})};
  FifoGang f;
  TiresiasLike t(1.0, 1.0);
  GavelProxy g;
  for (SchedulerPolicy* p : std::initializer_list<SchedulerPolicy*>{&f, &t, &g}) {
    const auto a = p->schedule_round(q, two_nodes(), 0);
    std::vector<JobSpec> specs{q[0].spec, q[1].spec};
    EXPECT_TRUE(validate(a, two_nodes(), specs, 0).empty()) << p->name();
    EXPECT_EQ(a.size(), 2u) << p->name();
  }
}

}  // namespace
}  // namespace hadar
