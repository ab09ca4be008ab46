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

#include <cmath>
#include <random>

#include "hadar/pricing.hpp"
#include "hadar/workload_io.hpp"

namespace hadar {
namespace {

// The three-job example with a one-second slot and T = 10. Hand evaluation:
//   J1: 240 iters, t_min 2, t_max 4, demand 9; J2: 60, 2, 6, 6; J3: 100, 3, 25, 6.
//   eta = 6 / min(36, 36, 150) = 1/6.
//   U_min = min(24/36, 6/36, 10/150) / (4 eta) = (1/15) * 1.5 = 0.1.
//   U_max = max(120/3, 30/2, (100/3)/2) = 40 on every type.
TEST(ComputeBounds, ThreeJobMatchesHandEvaluation) {
  const auto c = three_job_cluster();
  const auto jobs = three_job_jobs();
  const auto b = compute_bounds(jobs, c, UtilityFn::effective_throughput(1.0), 10, 1.0);
  EXPECT_DOUBLE_EQ(b.eta, 1.0 / 6.0);
  EXPECT_EQ(b.durations.at(1).t_min, 2);
  EXPECT_EQ(b.durations.at(1).t_max, 4);
  EXPECT_EQ(b.durations.at(1).demand, 9);
  EXPECT_EQ(b.durations.at(3).t_min, 3);
  EXPECT_EQ(b.durations.at(3).t_max, 25);
  for (TypeIndex r = 0; r < 3; ++r) {
    EXPECT_NEAR(b.u_min[r], 0.1, 1e-15);
    EXPECT_DOUBLE_EQ(b.u_max[r], 40.0);
  }
  EXPECT_DOUBLE_EQ(alpha(b), std::log(400.0));
}

TEST(ComputeBounds, RejectsJobWithNoRunnableType) {
  JobSpec j;
  j.id = 1;
  j.throughput = {0.0, 0.0, 0.0};
  const std::vector<JobSpec> jobs{j};
  EXPECT_THROW(compute_bounds(jobs, three_job_cluster(), UtilityFn::effective_throughput(1.0), 10, 1.0),
               UnschedulableJobError);
}

TEST(Utility, EffectiveThroughputClampsDuration) {
  JobSpec j;
  j.epochs = 10;
  j.iters_per_epoch = 36;
  const auto u = UtilityFn::effective_throughput(360.0);
  EXPECT_DOUBLE_EQ(u(j, 1), 1.0);
  EXPECT_DOUBLE_EQ(u(j, 0), 1.0);
  EXPECT_DOUBLE_EQ(u(j, 4), 0.25);
  const auto flat = UtilityFn::custom([](const JobSpec&, Slot d) { return 10.0 - d; });
  EXPECT_FALSE(flat.is_effective_throughput());
  EXPECT_DOUBLE_EQ(flat(j, -3), 9.0);
}

TEST(PriceState, EndpointsAndMonotonicity) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> lo(1e-3, 10.0), span(1.0001, 1e4);
  std::uniform_int_distribution<int> cap(1, 16);
  for (int draw = 0; draw < 1000; ++draw) {
    const int c = cap(rng);
    const ClusterSpec cluster({{0, "G"}}, {{0, {c}}});
    UtilityBounds b;
    b.u_min = {lo(rng)};
    b.u_max = {b.u_min[0] * span(rng)};
    const PriceState p(cluster, b);
    EXPECT_EQ(p.price_at(0, 0, 0), b.u_min[0]);
    EXPECT_EQ(p.price_at(0, 0, c), b.u_max[0]);
    for (int g = 1; g <= c; ++g) ASSERT_LT(p.price_at(0, 0, g - 1), p.price_at(0, 0, g));
  }
}

TEST(PriceState, TableMatchesFormulaAndTracksUsage) {
  const ClusterSpec cluster({{0, "A"}, {1, "B"}}, {{0, {4, 0}}, {1, {2, 3}}});
  UtilityBounds b;
  b.u_min = {0.5, 2.0};
  b.u_max = {8.0, 50.0};
  PriceState p(cluster, b);
  EXPECT_DOUBLE_EQ(p.price(0, 0), 0.5);
  p.add(JobAllocation({{0, 0, 2}, {1, 1, 3}}));
  EXPECT_EQ(p.used(0, 0), 2);
  EXPECT_EQ(p.price(0, 0), 0.5 * std::pow(16.0, 0.5));
  EXPECT_EQ(p.price(0, 0), p.price_at(0, 0, 2));
  EXPECT_EQ(p.price(1, 1), 50.0);
  EXPECT_THROW(p.add(JobAllocation({{0, 0, 3}})), InvariantError);
  p.release(JobAllocation({{0, 0, 2}, {1, 1, 3}}));
  EXPECT_EQ(p.price(1, 1), 2.0);
  EXPECT_THROW(p.price_at(0, 1, 0), DomainError);
  EXPECT_DOUBLE_EQ(p.initial_dual_per_slot(), 0.5 * 4 + 0.5 * 2 + 2.0 * 3);
}

TEST(Payoff, UtilityMinusCost) {
  JobSpec j;
  j.epochs = 30;
  j.iters_per_epoch = 2;
  j.arrival = 1;
  EXPECT_DOUBLE_EQ(payoff(j, 0.24, 3, UtilityFn::effective_throughput(1.0)), 30.0 - 0.24);
}

TEST(Alpha, AtLeastOne) {
  UtilityBounds b;
  b.u_min = {1.0, 1.0};
  b.u_max = {1.5, 2.0};
  EXPECT_EQ(alpha(b), 1.0);
  b.u_max = {1.5, std::exp(3.0)};
  EXPECT_DOUBLE_EQ(alpha(b), 3.0);
}

}  // namespace
}  // namespace hadar
