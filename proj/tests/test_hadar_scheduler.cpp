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

#include <random>

#include "hadar/hadar_scheduler.hpp"
#include "hadar/verify.hpp"
#include "hadar/workload_io.hpp"

namespace hadar {
namespace {

JobSpec job(JobId id, int w, std::vector<double> x, std::int64_t epochs, std::int64_t ipe = 1) {
  JobSpec j;
  j.id = id;
  j.workers = w;
  j.throughput = std::move(x);
  j.epochs = epochs;
  j.iters_per_epoch = ipe;
  return j;
}

FindAllocOptions three_job_options() {
  FindAllocOptions o;
  o.slot_seconds = 1.0;
  o.utility = UtilityFn::effective_throughput(1.0);
  return o;
}

PriceState three_job_prices() {
  const auto jobs = three_job_jobs();
  return PriceState(three_job_cluster(), compute_bounds(jobs, three_job_cluster(), UtilityFn::effective_throughput(1.0), 10, 1.0));
}

TEST(EstimateFinish, CeilOfRemainingOverRoundProgress) {
  auto s = JobState::fresh(job(1, 2, {3.0}, 600));
  const JobAllocation a({{0, 0, 2}});
  EXPECT_EQ(estimate_finish(s, a, 4, 100.0), 5);
  s.remaining_iters = 601.0;
  EXPECT_EQ(estimate_finish(s, a, 4, 100.0), 6);
  s.remaining_iters = 0.0;
  EXPECT_EQ(estimate_finish(s, a, 4, 100.0), 4);
}

// J2 at fresh prices: two single-GPU P100 nodes, price 2 * 0.1, communication
// 0.1 * 0.2 * (2 - 1) * 2 = 0.04, finish in 60 / 30 = 2 slots, utility 30.
TEST(FindAlloc, ThreeJobJobTwoAtFreshPrices) {
  const ServerState srvr(three_job_cluster());
  const auto prices = three_job_prices();
  const auto j2 = JobState::fresh(three_job_jobs()[1]);
  const auto c = find_alloc(j2, srvr, prices, three_job_options(), 0);
  ASSERT_TRUE(c);
  EXPECT_EQ(c->alloc, JobAllocation({{2, 1, 1}, {3, 1, 1}}));
  EXPECT_NEAR(c->price_cost, 0.2, 1e-15);
  EXPECT_NEAR(c->comm_cost, 0.04, 1e-15);
  EXPECT_EQ(c->est_finish, 2);
  EXPECT_DOUBLE_EQ(c->utility, 30.0);
  EXPECT_NEAR(c->payoff, 30.0 - 0.24, 1e-12);
}

TEST(FindAlloc, PrefersSingleNodeFastestTightestFit) {
  const ClusterSpec c({{0, "A"}, {1, "B"}}, {{0, {4, 0}}, {1, {2, 0}}, {2, {0, 4}}});
  const ServerState srvr(c);
  UtilityBounds b;
  b.u_min = {1.0, 1.0};
  b.u_max = {10.0, 10.0};
  const PriceState prices(c, b);
  FindAllocOptions o;
  const auto s = JobState::fresh(job(1, 2, {5.0, 1.0}, 10, 100));
  const auto pick = find_alloc(s, srvr, prices, o, 0);
  ASSERT_TRUE(pick);
  EXPECT_EQ(pick->alloc, JobAllocation({{1, 0, 2}}));
  EXPECT_TRUE(pick->consolidated);
}

TEST(FindAlloc, NothingWhenGangDoesNotFitOrPayoffNotPositive) {
  const ClusterSpec c({{0, "A"}}, {{0, {1}}, {1, {1}}});
  UtilityBounds b;
  b.u_min = {1.0};
  b.u_max = {100.0};
  const PriceState prices(c, b);
  FindAllocOptions o;
  o.slot_seconds = 1.0;
  o.utility = UtilityFn::effective_throughput(1.0);
  ServerState srvr(c);
  EXPECT_FALSE(find_alloc(JobState::fresh(job(1, 3, {1.0}, 1)), srvr, prices, o, 0));
  // Utility 1 iteration per second against a price of at least 1 per GPU.
  EXPECT_FALSE(find_alloc(JobState::fresh(job(2, 1, {1.0}, 1)), srvr, prices, o, 0));
  EXPECT_TRUE(find_alloc(JobState::fresh(job(3, 1, {5.0}, 5)), srvr, prices, o, 0));
}

TEST(CandidatePlacements, SpreadFollowsJobTypeOrder) {
  const auto c = three_job_cluster();
  const ServerState srvr(c);
  const auto cands = candidate_placements(JobState::fresh(three_job_jobs()[0]), srvr, three_job_prices(), three_job_options(), 0);
  ASSERT_EQ(cands.size(), 2u);
  EXPECT_TRUE(cands[0].consolidated);
  EXPECT_FALSE(cands[1].consolidated);
  // K80 is J1's second fastest type, so both fill V100, V100, K80.
  EXPECT_EQ(cands[1].alloc, JobAllocation({{0, 0, 1}, {1, 0, 1}, {5, 2, 1}}));
  EXPECT_EQ(cands[0].alloc, cands[1].alloc);
  EXPECT_EQ(cands[0].cost, cands[1].cost);
}

TEST(ServerState, TakeAndGiveBack) {
  const auto c = three_job_cluster();
  ServerState s(c);
  const JobAllocation a({{0, 0, 1}, {5, 2, 1}});
  s.take(a);
  EXPECT_EQ(s.free(0, 0), 0);
  EXPECT_EQ(s.type_free(2), 0);
  EXPECT_EQ(s.total_free(), 4);
  EXPECT_THROW(s.take(JobAllocation({{0, 0, 1}})), InvariantError);
  s.give_back(a);
  EXPECT_EQ(s, ServerState(c));
  EXPECT_THROW(s.give_back(a), InvariantError);
}

// Two single-GPU jobs, one GPU: the DP keeps the larger payoff, as the
// enumeration of all four select/skip combinations does.
TEST(DpAllocation, TwoJobsOneGpu) {
  const ClusterSpec c({{0, "A"}}, {{0, {1}}});
  HadarConfig hc;
  hc.slot_seconds = 10.0;
  hc.horizon = 5;
  HadarScheduler s(hc);
  const std::vector<JobState> q{JobState::fresh(job(1, 1, {0.5}, 10)), JobState::fresh(job(2, 1, {3.0}, 10))};
  const auto d = s.decide(q, c, 0);
  EXPECT_EQ(d.selected, (std::vector<JobId>{2}));
  ASSERT_NE(d.allocations.find(2), nullptr);
  EXPECT_EQ(d.allocations.find(1), nullptr);
  EXPECT_GT(s.last_stats().calls, 0u);
}

TEST(DpAllocation, ThreeJobFirstRound) {
  HadarConfig hc;
  hc.slot_seconds = 1.0;
  hc.horizon = 10;
  HadarScheduler s(hc);
  std::vector<JobState> q;
  for (const auto& j : three_job_jobs()) q.push_back(JobState::fresh(j));
  const auto d = s.decide(q, three_job_cluster(), 0);
  EXPECT_EQ(d.selected, (std::vector<JobId>{1, 2}));
  EXPECT_EQ(*d.allocations.find(1), JobAllocation({{0, 0, 1}, {1, 0, 1}, {5, 2, 1}}));
  EXPECT_EQ(*d.allocations.find(2), JobAllocation({{2, 1, 1}, {3, 1, 1}}));
  EXPECT_TRUE(validate(d.allocations, three_job_cluster(), three_job_jobs(), 0).empty());
  EXPECT_EQ(d.prices.used(0, 0), 1);
}

TEST(DpAllocation, RejectsQueueOfFutureOrFinishedJobs) {
  HadarScheduler s(HadarConfig{});
  auto late = JobState::fresh(job(1, 1, {1.0}, 1));
  late.spec.arrival = 5;
  const std::vector<JobState> q{late};
  EXPECT_THROW(s.decide(q, three_job_cluster(), 0), InvariantError);
}

TEST(DpAllocation, EqualsEnumerationOnRandomInstances) {
  verify::SuiteOptions o;
  o.seed = 1000;
  o.cases = 300;
  const auto r = verify::oracle_suite(o);
  EXPECT_EQ(r.cases, 300u);
  for (const auto& f : r.failures) ADD_FAILURE() << "seed " << f.seed << ": " << f.what;
}

// Relabelling identical nodes changes neither the objective nor the memo size.
TEST(DpAllocation, InvariantUnderIdenticalNodePermutation) {
  const ClusterSpec a({{0, "A"}, {1, "B"}}, {{0, {2, 0}}, {1, {0, 2}}, {2, {2, 0}}});
  const ClusterSpec b({{0, "A"}, {1, "B"}}, {{0, {2, 0}}, {1, {2, 0}}, {2, {0, 2}}});
  std::vector<JobState> q;
  for (JobId id = 1; id <= 4; ++id) q.push_back(JobState::fresh(job(id, 1 + id % 2, {2.0, 1.0 + id}, 20, 50)));
  HadarConfig hc;
  hc.slot_seconds = 10.0;
  hc.horizon = 20;
  HadarScheduler sa(hc), sb(hc);
  const auto da = sa.decide(q, a, 0);
  const auto db = sb.decide(q, b, 0);
  EXPECT_EQ(da.net_cost(), db.net_cost());
  EXPECT_EQ(da.selected, db.selected);
  EXPECT_EQ(sa.last_stats().states, sb.last_stats().states);
}

TEST(OrderedQueue, ArrivalThenId) {
  auto a = JobState::fresh(job(5, 1, {1.0}, 1));
  auto b = JobState::fresh(job(2, 1, {1.0}, 1));
  auto c = JobState::fresh(job(9, 1, {1.0}, 1));
  a.spec.arrival = 1;
  const std::vector<JobState> q{a, b, c};
  const auto o = ordered_queue(q);
  EXPECT_EQ(o[0].spec.id, 2);
  EXPECT_EQ(o[1].spec.id, 9);
  EXPECT_EQ(o[2].spec.id, 5);
}

}  // namespace
}  // namespace hadar
