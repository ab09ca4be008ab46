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

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "hadar/hadar.hpp"
#include "hadar/verify.hpp"

namespace {

using namespace hadar;

const std::string kData = HADAR_DATA_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string suite_detail(const verify::SuiteResult& r) {
  std::ostringstream os;
  os << r.cases << " cases, " << r.failures.size() << " failures, " << std::setprecision(3) << r.seconds << " s";
  if (!r.failures.empty()) os << "; first: " << r.failures.front().what;
  return os.str();
}

Outcome three_job_ordering() {
  const auto t0 = std::chrono::steady_clock::now();
  SimConfig cfg;
  cfg.cluster = load_cluster(kData + "/three_job/cluster.json");
  cfg.slot_seconds = 1.0;
  cfg.restart_penalty_s = 0.0;
  const auto jobs =
      to_jobs(load_trace(kData + "/three_job/trace.csv"), load_throughputs(kData + "/three_job/throughputs.json"),
              cfg.cluster, cfg.slot_seconds);
  cfg.policy = PolicyId::Hadar;
  const auto h = metrics(run(cfg, jobs));
  cfg.policy = PolicyId::GavelProxy;
  const auto g = metrics(run(cfg, jobs));
  const double s = seconds_since(t0);
  std::ostringstream os;
  os << std::setprecision(4) << "hadar CRU=" << h.cru << " TTD=" << h.ttd << "; gavel-proxy CRU=" << g.cru
     << " TTD=" << g.ttd << "; " << s << " s";
  return {h.cru > g.cru && h.ttd + 1 <= g.ttd && s < 1.0, os.str()};
}

Outcome price_law() {
  std::mt19937_64 rng(2026);
  std::uniform_real_distribution<double> lo(1e-4, 100.0), ratio(1.0001, 1e5);
  std::uniform_int_distribution<int> cap(1, 32);
  std::size_t bad = 0;
  double worst = 0.0;
  for (int draw = 0; draw < 1000; ++draw) {
    const int c = cap(rng);
    const ClusterSpec cluster({{0, "G"}}, {{0, {c}}});
    UtilityBounds b;
    b.u_min = {lo(rng)};
    b.u_max = {b.u_min[0] * ratio(rng)};
    PriceState p(cluster, b);
    worst = std::max(worst, std::abs(p.price(0, 0) - b.u_min[0]) / b.u_min[0]);
    double prev = p.price(0, 0);
    for (int g = 1; g <= c; ++g) {
      p.add(JobAllocation({{0, 0, 1}}));
      const double now = p.price(0, 0);
      if (!(now > prev)) ++bad;
      prev = now;
    }
    worst = std::max(worst, std::abs(prev - b.u_max[0]) / b.u_max[0]);
  }
  std::ostringstream os;
  os << "1000 draws, worst endpoint relative error " << worst << ", monotonicity breaks " << bad;
  return {worst < 1e-12 && bad == 0, os.str()};
}

Outcome timed_suite(const std::function<verify::SuiteResult()>& suite, std::size_t want_cases, double budget) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = suite();
  const double s = seconds_since(t0);
  std::ostringstream os;
  os << suite_detail(r) << " (budget " << budget << " s)";
  return {r.ok() && r.cases >= want_cases && s < budget, os.str()};
}

class Scripted : public SchedulerPolicy {
 public:
  explicit Scripted(std::vector<JobAllocation> plan) : plan_(std::move(plan)) {}
  std::string name() const override { return "scripted"; }
  AllocationMatrix schedule_round(std::span<const JobState> queue, const ClusterSpec&, Slot t) override {
    AllocationMatrix out;
    if (!queue.empty() && t < static_cast<Slot>(plan_.size())) out.set(queue.front().spec.id, plan_[t]);
    return out;
  }

 private:
  std::vector<JobAllocation> plan_;
};

Outcome restart_accounting() {
  SimConfig cfg;
  cfg.cluster = ClusterSpec({{0, "A"}}, {{0, {2}}, {1, {2}}});
  cfg.slot_seconds = 360.0;
  cfg.restart_penalty_s = 10.0;
  cfg.horizon = 6;
  JobSpec j;
  j.id = 1;
  j.workers = 2;
  j.throughput = {1.375};
  j.epochs = 100000;
  j.iters_per_epoch = 10;
  const std::vector<JobSpec> trace{j};
  const JobAllocation a({{0, 0, 2}}), b({{1, 0, 2}});
  Scripted steady({a, a, a, a, a, a});
  Scripted moved({a, a, b, b, a, a});
  const auto base = run_policy(cfg, trace, steady);
  const auto pre = run_policy(cfg, trace, moved);
  double pa = 0.0, pb = 0.0;
  int preemptions = 0;
  for (const auto& r : base.rounds) pa += r.allocations.at(0).progress;
  for (std::size_t t = 0; t < pre.rounds.size(); ++t) {
    pb += pre.rounds[t].allocations.at(0).progress;
    if (t > 0 && pre.rounds[t].allocations.at(0).restarted) ++preemptions;
  }
  const double rate = progress_rate(j, a);
  const double expected = rate * 20.0;
  const double lost = pa - pb;
  const double ulp = std::nextafter(expected, INFINITY) - expected;
  std::ostringstream os;
  os << std::setprecision(17) << preemptions << " preemptions, lost " << lost << " iterations, rate*20 s = "
     << expected;
  return {preemptions == 2 && std::abs(lost - expected) <= ulp, os.str()};
}

Outcome experiment_480() {
  const auto t0 = std::chrono::steady_clock::now();
  SimConfig cfg;
  cfg.cluster = default_cluster();
  TraceOptions opt;
  opt.category_mix = {0.72, 0.20, 0.06, 0.02};
  const auto jobs = to_jobs(generate_trace(480, 2024, opt), default_throughputs(), cfg.cluster, cfg.slot_seconds);
  std::map<std::string, Metrics> m;
  std::string curves = "policy,t,fraction_completed\n";
  bool complete = true;
  for (PolicyId p : {PolicyId::Hadar, PolicyId::GavelProxy, PolicyId::Tiresias, PolicyId::Fifo}) {
    cfg.policy = p;
    const auto rep = run(cfg, jobs);
    complete = complete && rep.complete;
    m[rep.policy] = metrics(rep);
    const auto c = completion_csv(rep);
    curves += c.substr(c.find('\n') + 1);
  }
  std::filesystem::create_directories("acceptance_out");
  write_text_file("acceptance_out/completion_480.csv", curves);
  const double s = seconds_since(t0);
  const auto& h = m.at("hadar");
  bool ok = complete && h.gru >= m.at("gavel-proxy").gru && !h.completion_curve.empty() && s < 300.0;
  std::ostringstream os;
  os << std::setprecision(4);
  for (const auto& [name, x] : m) {
    os << name << " TTD=" << x.ttd << " GRU=" << x.gru << "; ";
    if (name != "hadar") ok = ok && h.ttd <= x.ttd;
  }
  os << "curves in acceptance_out/completion_480.csv; " << s << " s";
  return {ok, os.str()};
}

Outcome hadare_mechanics() {
  std::mt19937_64 rng(10);
  std::ostringstream os;
  // Step conservation over randomized forked runs.
  std::size_t conservation_bad = 0, runs = 0;
  for (int batch = 0; batch < 20; ++batch) {
    const auto cluster = verify::single_gpu_cluster(rng, 4, 3);
    verify::TinyShape shape;
    shape.max_jobs = 4;
    shape.max_workers = 1;
    shape.max_rounds = 6;
    shape.slot_seconds = 60.0;
    shape.absent = 0.0;
    auto jobs = verify::random_jobs(rng, cluster, shape);
    SimConfig cfg;
    cfg.cluster = cluster;
    cfg.slot_seconds = 60.0;
    cfg.policy = PolicyId::Hadare;
    cfg.fork_count = std::uniform_int_distribution<int>(1, 5)(rng);
    const auto rep = run(cfg, jobs);
    ++runs;
    std::map<JobId, double> done;
    for (const auto& r : rep.rounds)
      for (const auto& a : r.allocations) done[*a.parent] += a.progress;
    for (const auto& j : jobs) {
      double capacity = 0.0;
      for (NodeIndex h = 0; h < cluster.num_nodes(); ++h)
        for (TypeIndex r = 0; r < cluster.num_types(); ++r)
          capacity += cluster.capacity(h, r) * j.throughput[r] * cfg.slot_seconds;
      const double threshold = j.total_iters();
      if (!rep.complete || done[j.id] < threshold || done[j.id] >= threshold + capacity) ++conservation_bad;
    }
  }
  // Consolidation against a long-double weighted mean.
  std::size_t consolidation_bad = 0;
  double worst = 0.0;
  std::uniform_real_distribution<double> value(-10.0, 10.0);
  std::uniform_int_distribution<std::int64_t> weight(0, 500);
  std::uniform_int_distribution<int> copies(1, 8), dim(1, 16);
  for (int set = 0; set < 1000; ++set) {
    const int n = copies(rng), d = dim(rng);
    std::vector<std::vector<double>> params(n, std::vector<double>(d));
    std::vector<std::int64_t> w(n);
    for (int i = 0; i < n; ++i) {
      w[i] = weight(rng);
      for (auto& v : params[i]) v = value(rng);
    }
    w[0] += 1;
    const auto got = consolidate_params(params, w, std::vector<double>(d, 0.0));
    long double total = 0;
    for (auto x : w) total += x;
    for (int k = 0; k < d; ++k) {
      long double acc = 0;
      for (int i = 0; i < n; ++i) acc += static_cast<long double>(w[i]) * params[i][k];
      const double err = std::abs(static_cast<double>(acc / total) - got[k]);
      worst = std::max(worst, err);
      if (err > 1e-12) ++consolidation_bad;
    }
  }
  // Throughput formula.
  std::size_t formula_bad = 0;
  std::uniform_real_distribution<double> pos(0.01, 1000.0);
  for (int i = 0; i < 1000; ++i) {
    const double pmi = pos(rng), b = pos(rng), pcie = pos(rng), mw = pos(rng), ds = pos(rng);
    if (estimate_throughput(pmi, b, pcie, mw, ds) != (pmi * b * pcie) / (mw * ds)) ++formula_bad;
  }
  os << runs << " forked runs with " << conservation_bad << " conservation breaks; 1000 consolidations, worst error "
     << worst << "; 1000 throughput estimates, " << formula_bad << " mismatches";
  return {conservation_bad == 0 && consolidation_bad == 0 && formula_bad == 0, os.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"three-job ordering", three_job_ordering},
      {"price law", price_law},
      {"DP equals oracle", [] { return timed_suite([] { return verify::oracle_suite(); }, 200, 30.0); }},
      {"competitive bound", [] { return timed_suite([] { return verify::ratio_suite(); }, 50, 120.0); }},
      {"forking CRU ordering", [] { return timed_suite([] { return verify::forking_suite(); }, 25, 60.0); }},
      {"invariant fuzzing", [] { return timed_suite([] { return verify::invariants_suite(); }, 10000, 600.0); }},
      {"restart accounting", restart_accounting},
      {"scalability", [] { return timed_suite([] { return verify::scaling_suite(); }, 11, 600.0); }},
      {"480-job experiment", experiment_480},
      {"HadarE mechanics", hadare_mechanics},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << (i + 1) << " (" << criteria[i].first
              << "): " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
