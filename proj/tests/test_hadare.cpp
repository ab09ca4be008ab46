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

#include <numeric>
#include <random>

#include "hadar/hadare.hpp"
#include "hadar/simulator.hpp"
#include "hadar/workload_io.hpp"

namespace hadar {
namespace {

JobSpec one_gpu_job(JobId id, std::int64_t epochs, std::int64_t ipe, std::vector<double> x) {
  JobSpec j;
  j.id = id;
  j.workers = 1;
  j.epochs = epochs;
  j.iters_per_epoch = ipe;
  j.throughput = std::move(x);
  return j;
}

TEST(Fork, CopyIdsFollowMaxJobCount) {
  const auto f = fork(one_gpu_job(7, 1, 1, {1.0}), 3, 100);
  EXPECT_EQ(f.copy_ids, (std::vector<JobId>{107, 207, 307}));
  EXPECT_EQ(f.assigned_steps.size(), 3u);
  EXPECT_THROW(fork(one_gpu_job(7, 1, 1, {1.0}), 0, 100), ConfigError);
  EXPECT_THROW(fork(one_gpu_job(7, 1, 1, {1.0}), 2, 7), ConfigError);
}

TEST(DivideSteps, LargestRemainder) {
  const std::vector<double> a{3.0, 1.0}, b{1.0, 1.0, 1.0}, c{2.0, 5.0};
  EXPECT_EQ(divide_steps(100, a), (std::vector<std::int64_t>{75, 25}));
  EXPECT_EQ(divide_steps(10, b), (std::vector<std::int64_t>{4, 3, 3}));
  EXPECT_EQ(divide_steps(1, b), (std::vector<std::int64_t>{1, 0, 0}));
  EXPECT_EQ(divide_steps(0, b), (std::vector<std::int64_t>{0, 0, 0}));
  EXPECT_EQ(divide_steps(1, c), (std::vector<std::int64_t>{0, 1}));
}

TEST(DivideSteps, Errors) {
  const std::vector<double> zero{0.0, 0.0}, neg{1.0, -1.0};
  EXPECT_THROW(divide_steps(5, zero), UnschedulableJobError);
  EXPECT_THROW(divide_steps(5, neg), DomainError);
}

TEST(DivideSteps, ConservesAndStaysWithinOneOfQuota) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::int64_t> steps(0, 100000);
  std::uniform_int_distribution<int> n(1, 8);
  std::uniform_real_distribution<double> x(0.0, 5.0);
  for (int i = 0; i < 2000; ++i) {
    std::vector<double> t(static_cast<std::size_t>(n(rng)));
    for (double& v : t) v = x(rng);
    t[0] += 0.1;
    const auto total = steps(rng);
    const auto out = divide_steps(total, t);
    EXPECT_EQ(std::accumulate(out.begin(), out.end(), std::int64_t{0}), total);
    const double sum = std::accumulate(t.begin(), t.end(), 0.0);
    for (std::size_t k = 0; k < t.size(); ++k) {
      EXPECT_LT(std::abs(static_cast<double>(out[k]) - static_cast<double>(total) * t[k] / sum), 1.0 + 1e-9);
    }
  }
}

TEST(Consolidate, WeightedMean) {
  const std::vector<std::vector<double>> params{{1.0, 2.0}, {5.0, 10.0}};
  const std::vector<std::int64_t> w{30, 10};
  EXPECT_EQ(consolidate_params(params, w, {0.0, 0.0}), (std::vector<double>{2.0, 4.0}));
  const std::vector<std::int64_t> none{0, 0};
  EXPECT_EQ(consolidate_params(params, none, {7.0, 8.0}), (std::vector<double>{7.0, 8.0}));
}

TEST(Tracker, RetiresAtThresholdAndRejectsBadReports) {
  TrackerState t;
  const auto job = one_gpu_job(1, 10, 10, {1.0});
  t.register_job(job, fork(job, 2, 10));
  EXPECT_THROW(t.register_job(job, fork(job, 2, 10)), ConfigError);
  std::vector<CopyReport> r{{11, 60, std::vector<double>(TrackerState::kParamDim, 1.0)},
                            {21, 20, std::vector<double>(TrackerState::kParamDim, 5.0)}};
  EXPECT_TRUE(t.apply(r, 0).empty());
  EXPECT_EQ(t.job(1).aggregated, 80);
  EXPECT_EQ(t.job(1).remaining(), 20);
  EXPECT_DOUBLE_EQ(t.job(1).params[0], 2.0);
  EXPECT_EQ(t.job(1).forks.completed_steps, (std::vector<std::int64_t>{60, 20}));
  r = {{11, 20, std::vector<double>(TrackerState::kParamDim, 1.0)}};
  EXPECT_EQ(t.apply(r, 4), (std::vector<JobId>{1}));
  EXPECT_EQ(t.job(1).retired_at, 5);
  EXPECT_TRUE(t.all_retired());
  EXPECT_THROW(t.apply(r, 5), ProtocolError);
  const std::vector<CopyReport> stranger{{99, 1, {}}};
  EXPECT_THROW(t.apply(stranger, 5), ProtocolError);
}

TEST(Tracker, NegativeStepsRejected) {
  TrackerState t;
  const auto job = one_gpu_job(1, 10, 10, {1.0});
  t.register_job(job, fork(job, 1, 10));
  const std::vector<CopyReport> r{{11, -1, std::vector<double>(TrackerState::kParamDim, 0.0)}};
  EXPECT_THROW(t.apply(r, 0), ProtocolError);
}

TEST(EstimateThroughput, FormulaAndProvenance) {
  EXPECT_DOUBLE_EQ(estimate_throughput(10, 32, 1, 2, 4), 40.0);
  EXPECT_THROW(estimate_throughput(0, 32, 1, 2, 4), DomainError);
  ThroughputEstimate e;
  e.set_formula("m", 0, 40.0);
  EXPECT_EQ(e.get("m", 0)->provenance, Provenance::Formula);
  e.record_measured("m", 0, 37.5);
  e.set_formula("m", 0, 41.0);
  EXPECT_EQ(e.get("m", 0)->value, 37.5);
  EXPECT_EQ(e.measured_count(), 1u);
  EXPECT_FALSE(e.get("m", 1));
}

TEST(HadareScheduler, CopiesCappedByNodesAndBeta) {
  HadareConfig hc;
  hc.hadar.slot_seconds = 10.0;
  hc.fork = 8;
  const HadareScheduler s(hc);
  const auto c = three_job_cluster();
  const auto j = one_gpu_job(1, 100, 10, {4.0, 2.0, 1.0});
  // Slowest type advances 10 steps per round on one worker.
  EXPECT_EQ(s.copies_offered(j, 1000.0, c), 6);
  EXPECT_EQ(s.copies_offered(j, 25.0, c), 3);
  EXPECT_EQ(s.copies_offered(j, 1.0, c), 1);
}

TEST(HadareScheduler, CopyIdsAndEvenShares) {
  HadareConfig hc;
  hc.hadar.slot_seconds = 1.0;
  hc.fork = 3;
  hc.max_job_count = 10;
  const HadareScheduler s(hc);
  auto p = JobState::fresh(one_gpu_job(4, 100, 10, {1.0, 1.0, 1.0}));
  p.remaining_iters = 600.0;
  const std::vector<JobState> parents{p};
  const auto copies = s.offered_copies(parents, three_job_cluster());
  ASSERT_EQ(copies.size(), 3u);
  EXPECT_EQ(copies[0].spec.id, 14);
  EXPECT_EQ(copies[2].spec.id, 34);
  EXPECT_EQ(copies[1].spec.parent_id, 4);
  EXPECT_DOUBLE_EQ(copies[1].remaining_iters, 200.0);
}

// The tracker's aggregate at retirement overshoots the threshold by less than
// one round of the whole cluster's step capacity.
TEST(Forked, StepConservationAtRetirement) {
  const auto c = three_job_cluster();
  std::vector<JobSpec> jobs;
  for (JobId id = 1; id <= 3; ++id) jobs.push_back(one_gpu_job(id, 37 * id, 11, {4.0, 2.5, 1.5}));
  SimConfig cfg;
  cfg.cluster = c;
  cfg.slot_seconds = 30.0;
  cfg.policy = PolicyId::Hadare;
  cfg.fork_count = 6;
  cfg.restart_penalty_s = 0.0;
  const auto rep = run(cfg, jobs);
  ASSERT_TRUE(rep.complete);
  double capacity = 0.0;
  for (NodeIndex h = 0; h < c.num_nodes(); ++h)
    for (TypeIndex r = 0; r < c.num_types(); ++r) capacity += c.capacity(h, r) * jobs[0].throughput[r] * cfg.slot_seconds;
  std::map<JobId, std::int64_t> done;
  for (const auto& round : rep.rounds)
    for (const auto& a : round.allocations) done[*a.parent] += static_cast<std::int64_t>(a.progress);
  for (const auto& j : jobs) {
    const auto threshold = j.epochs * j.iters_per_epoch;
    EXPECT_GE(done[j.id], threshold);
    EXPECT_LT(static_cast<double>(done[j.id]), static_cast<double>(threshold) + capacity);
  }
}

}  // namespace
}  // namespace hadar
