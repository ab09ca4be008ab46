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

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hadar/domain.hpp"
#include "hadar/simulator.hpp"

namespace hadar {

/// Malformed input. `row` is the 1-based line for CSV files; `field` names the
/// column or JSON path.
class ParseError : public Error {
 public:
  ParseError(std::string file, std::size_t row, std::string field, const std::string& what)
      : Error(describe(file, row, field, what)), file_(std::move(file)), row_(row), field_(std::move(field)) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t row() const noexcept { return row_; }
  const std::string& field() const noexcept { return field_; }

 private:
  static std::string describe(const std::string& file, std::size_t row, const std::string& field,
                              const std::string& what) {
    std::ostringstream os;
    os << file;
    if (row > 0) os << ":" << row;
    if (!field.empty()) os << " field '" << field << "'";
    os << ": " << what;
    return os.str();
  }

  std::string file_;
  std::size_t row_;
  std::string field_;
};

enum class Category { Small, Medium, Large, XLarge };

inline const char* to_string(Category c) {
  switch (c) {
    case Category::Small: return "S";
    case Category::Medium: return "M";
    case Category::Large: return "L";
    case Category::XLarge: return "XL";
  }
  return "?";
}

inline std::optional<Category> parse_category(const std::string& s) {
  for (Category c : {Category::Small, Category::Medium, Category::Large, Category::XLarge})
    if (s == to_string(c)) return c;
  return std::nullopt;
}

/// GPU-hour range of a category. 50-60 is deliberately not covered.
inline std::pair<double, double> category_bounds(Category c) {
  switch (c) {
    case Category::Small: return {0.0, 1.0};
    case Category::Medium: return {1.0, 10.0};
    case Category::Large: return {10.0, 50.0};
    case Category::XLarge: return {60.0, 100.0};
  }
  return {0.0, 0.0};
}

struct TraceRow {
  JobId job_id = 0;
  double arrival_s = 0.0;
  int requested_gpus = 1;
  Category gpu_hours_category = Category::Small;
  std::string model_tag;
  std::int64_t epochs = 1;
  std::int64_t iters_per_epoch = 1;

  friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

/// model_tag -> GPU label -> iterations per second per worker.
struct ThroughputTable {
  std::map<std::string, std::map<std::string, double>> models;
  std::map<std::string, Category> size;  // dataset size class of each model, optional

  double get(const std::string& model, const std::string& label) const {
    auto m = models.find(model);
    if (m == models.end()) throw ConfigError("throughputs: unknown model '" + model + "'");
    auto x = m->second.find(label);
    if (x == m->second.end()) {
      throw ConfigError("throughputs: model '" + model + "' has no entry for GPU type '" + label + "'");
    }
    return x->second;
  }

  /// Per-type vector in the cluster's type order; every type must be covered.
  std::vector<double> vector_for(const std::string& model, const ClusterSpec& cluster) const {
    std::vector<double> out;
    for (const auto& t : cluster.types()) out.push_back(get(model, t.label));
    return out;
  }

  /// Throughput used to turn GPU-hours into iterations: the fastest type.
  double reference(const std::string& model) const {
    auto m = models.find(model);
    if (m == models.end()) throw ConfigError("throughputs: unknown model '" + model + "'");
    double best = 0.0;
    for (const auto& [label, x] : m->second) best = std::max(best, x);
    return best;
  }

  friend bool operator==(const ThroughputTable&, const ThroughputTable&) = default;
};

/// Synthetic per-GPU throughputs for the five reference models.
inline ThroughputTable default_throughputs() {
  ThroughputTable t;
  t.models["resnet50"] = {{"V100", 3.0}, {"P100", 1.4}, {"K80", 0.3}};
  t.models["resnet18"] = {{"V100", 12.0}, {"P100", 8.0}, {"K80", 3.5}};
  t.models["lstm"] = {{"V100", 6.0}, {"P100", 4.5}, {"K80", 2.0}};
  t.models["transformer"] = {{"V100", 5.0}, {"P100", 2.5}, {"K80", 0.8}};
  t.models["cyclegan"] = {{"V100", 2.0}, {"P100", 1.5}, {"K80", 0.6}};
  t.size = {{"resnet50", Category::XLarge},
            {"resnet18", Category::Small},
            {"lstm", Category::Large},
            {"transformer", Category::Large},
            {"cyclegan", Category::Medium}};
  return t;
}

/// GPU-hours of a row at its model's reference throughput.
inline double gpu_hours(const TraceRow& row, const ThroughputTable& table) {
  return static_cast<double>(row.epochs) * static_cast<double>(row.iters_per_epoch) /
         (3600.0 * table.reference(row.model_tag));
}

// Clusters.

/// 15 nodes of 4 GPUs: nodes 0-4 V100, 5-9 P100, 10-14 K80.
inline ClusterSpec default_cluster(int nodes_per_type = 5, int gpus_per_node = 4) {
  std::vector<GpuType> types{{0, "V100"}, {1, "P100"}, {2, "K80"}};
  std::vector<NodeSpec> nodes;
  for (TypeIndex r = 0; r < types.size(); ++r) {
    for (int k = 0; k < nodes_per_type; ++k) {
      NodeSpec n;
      n.id = nodes.size();
      n.capacity.assign(types.size(), 0);
      n.capacity[r] = gpus_per_node;
      nodes.push_back(std::move(n));
    }
  }
  return ClusterSpec(std::move(types), std::move(nodes));
}

/// Two V100, three P100 and one K80, one GPU per node.
inline ClusterSpec three_job_cluster() {
  std::vector<GpuType> types{{0, "V100"}, {1, "P100"}, {2, "K80"}};
  std::vector<NodeSpec> nodes;
  for (TypeIndex r : {0, 0, 1, 1, 1, 2}) {
    NodeSpec n;
    n.id = nodes.size();
    n.capacity.assign(3, 0);
    n.capacity[r] = 1;
    nodes.push_back(std::move(n));
  }
  return ClusterSpec(std::move(types), std::move(nodes));
}

/// The three-job example: one iteration per worker per epoch and a one-second
/// slot, so a round advances a job by its bottleneck throughput in epochs.
inline std::vector<JobSpec> three_job_jobs() {
  auto make = [](JobId id, int w, std::int64_t e, std::vector<double> x) {
    JobSpec j;
    j.id = id;
    j.workers = w;
    j.epochs = e;
    j.iters_per_epoch = w;
    j.throughput = std::move(x);
    return j;
  };
  return {make(1, 3, 80, {40, 20, 30}), make(2, 2, 30, {5, 15, 5}), make(3, 2, 50, {10, 2, 20})};
}

// JSON files.

inline nlohmann::json cluster_to_json(const ClusterSpec& c) {
  nlohmann::json types = nlohmann::json::array();
  for (const auto& t : c.types()) types.push_back(t.label);
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : c.nodes()) {
    nlohmann::json node = nlohmann::json::object();
    for (TypeIndex r = 0; r < c.num_types(); ++r)
      if (n.capacity[r] > 0) node[c.types()[r].label] = n.capacity[r];
    nodes.push_back(std::move(node));
  }
  return {{"types", types}, {"nodes", nodes}};
}

inline ClusterSpec cluster_from_json(const nlohmann::json& j, const std::string& file = "<cluster>") {
  if (!j.is_object()) throw ParseError(file, 0, "", "expected a JSON object");
  if (!j.contains("types") || !j["types"].is_array()) throw ParseError(file, 0, "types", "expected an array");
  if (!j.contains("nodes") || !j["nodes"].is_array()) throw ParseError(file, 0, "nodes", "expected an array");
  std::vector<GpuType> types;
  for (std::size_t r = 0; r < j["types"].size(); ++r) {
    const auto& t = j["types"][r];
    if (!t.is_string()) throw ParseError(file, 0, "types[" + std::to_string(r) + "]", "expected a string");
    types.push_back({r, t.get<std::string>()});
  }
  std::vector<NodeSpec> nodes;
  for (std::size_t h = 0; h < j["nodes"].size(); ++h) {
    const auto& n = j["nodes"][h];
    const std::string path = "nodes[" + std::to_string(h) + "]";
    if (!n.is_object()) throw ParseError(file, 0, path, "expected an object of label: count");
    NodeSpec spec;
    spec.id = h;
    spec.capacity.assign(types.size(), 0);
    for (const auto& [label, count] : n.items()) {
      auto it = std::find_if(types.begin(), types.end(), [&](const GpuType& t) { return t.label == label; });
      if (it == types.end()) throw ParseError(file, 0, path + "." + label, "unknown GPU type");
      if (!count.is_number_integer() || count.get<long>() < 0) {
        throw ParseError(file, 0, path + "." + label, "expected a non-negative integer");
      }
      spec.capacity[it->id] = count.get<int>();
    }
    nodes.push_back(std::move(spec));
  }
  try {
    return ClusterSpec(std::move(types), std::move(nodes));
  } catch (const ConfigError& e) {
    throw ParseError(file, 0, "", e.what());
  }
}

inline nlohmann::json throughputs_to_json(const ThroughputTable& t) {
  nlohmann::json models = nlohmann::json::object();
  for (const auto& [m, row] : t.models) models[m] = row;
  nlohmann::json out{{"models", models}};
  if (!t.size.empty()) {
    nlohmann::json size = nlohmann::json::object();
    for (const auto& [m, c] : t.size) size[m] = to_string(c);
    out["size"] = size;
  }
  return out;
}

inline ThroughputTable throughputs_from_json(const nlohmann::json& j, const std::string& file = "<throughputs>") {
  if (!j.is_object() || !j.contains("models") || !j["models"].is_object()) {
    throw ParseError(file, 0, "models", "expected an object of model -> {label: throughput}");
  }
  ThroughputTable t;
  for (const auto& [model, row] : j["models"].items()) {
    if (!row.is_object()) throw ParseError(file, 0, "models." + model, "expected an object");
    for (const auto& [label, x] : row.items()) {
      if (!x.is_number() || !(x.get<double>() >= 0.0) || std::isinf(x.get<double>())) {
        throw ParseError(file, 0, "models." + model + "." + label, "expected a finite number >= 0");
      }
      t.models[model][label] = x.get<double>();
    }
  }
  if (j.contains("size")) {
    if (!j["size"].is_object()) throw ParseError(file, 0, "size", "expected an object");
    for (const auto& [model, c] : j["size"].items()) {
      auto cat = c.is_string() ? parse_category(c.get<std::string>()) : std::nullopt;
      if (!cat) throw ParseError(file, 0, "size." + model, "expected one of S, M, L, XL");
      t.size[model] = *cat;
    }
  }
  return t;
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "", "cannot open file");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path, 0, "", std::string("invalid JSON: ") + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path);
    out << text;
    if (!out) throw ConfigError("cannot write " + path);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw ConfigError("cannot move " + tmp + " to " + path);
}

inline ClusterSpec load_cluster(const std::string& path) { return cluster_from_json(read_json_file(path), path); }
inline void save_cluster(const std::string& path, const ClusterSpec& c) {
  write_text_file(path, cluster_to_json(c).dump(2) + "\n");
}
inline ThroughputTable load_throughputs(const std::string& path) {
  return throughputs_from_json(read_json_file(path), path);
}
inline void save_throughputs(const std::string& path, const ThroughputTable& t) {
  write_text_file(path, throughputs_to_json(t).dump(2) + "\n");
}

// Trace CSV.

inline constexpr const char* kTraceHeader =
    "job_id,arrival_s,requested_gpus,gpu_hours_category,model_tag,epochs,iters_per_epoch";

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

template <class T>
T parse_number(const std::string& s, const std::string& file, std::size_t row, const char* field) {
  T v{};
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (s.empty() || ec != std::errc{} || p != e) {
    throw ParseError(file, row, field, "cannot parse '" + s + "' as a number");
  }
  return v;
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace detail

inline std::vector<TraceRow> parse_trace(std::istream& in, const std::string& file = "<trace>") {
  std::vector<TraceRow> rows;
  std::string line;
  std::size_t row = 0;
  bool header = false;
  std::map<JobId, std::size_t> seen;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header) {
      if (line != kTraceHeader) throw ParseError(file, row, "", std::string("expected header '") + kTraceHeader + "'");
      header = true;
      continue;
    }
    const auto f = detail::split_csv(line);
    if (f.size() != 7) {
      throw ParseError(file, row, "", "expected 7 fields, found " + std::to_string(f.size()));
    }
    TraceRow r;
    r.job_id = detail::parse_number<JobId>(f[0], file, row, "job_id");
    r.arrival_s = detail::parse_number<double>(f[1], file, row, "arrival_s");
    r.requested_gpus = detail::parse_number<int>(f[2], file, row, "requested_gpus");
    const auto cat = parse_category(f[3]);
    if (!cat) throw ParseError(file, row, "gpu_hours_category", "expected one of S, M, L, XL");
    r.gpu_hours_category = *cat;
    r.model_tag = f[4];
    r.epochs = detail::parse_number<std::int64_t>(f[5], file, row, "epochs");
    r.iters_per_epoch = detail::parse_number<std::int64_t>(f[6], file, row, "iters_per_epoch");
    if (r.job_id < 0) throw ParseError(file, row, "job_id", "must be >= 0");
    if (!(r.arrival_s >= 0.0) || std::isinf(r.arrival_s)) throw ParseError(file, row, "arrival_s", "must be >= 0");
    if (r.requested_gpus < 1) throw ParseError(file, row, "requested_gpus", "must be >= 1");
    if (r.model_tag.empty()) throw ParseError(file, row, "model_tag", "must not be empty");
    if (r.epochs < 1) throw ParseError(file, row, "epochs", "must be >= 1");
    if (r.iters_per_epoch < 1) throw ParseError(file, row, "iters_per_epoch", "must be >= 1");
    if (auto [it, fresh] = seen.emplace(r.job_id, row); !fresh) {
      throw ParseError(file, row, "job_id", "duplicate id (first seen on line " + std::to_string(it->second) + ")");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::string format_trace(const std::vector<TraceRow>& rows) {
  std::ostringstream os;
  os << kTraceHeader << "\n";
  for (const auto& r : rows) {
    os << r.job_id << "," << detail::format_double(r.arrival_s) << "," << r.requested_gpus << ","
       << to_string(r.gpu_hours_category) << "," << r.model_tag << "," << r.epochs << "," << r.iters_per_epoch
       << "\n";
  }
  return os.str();
}

inline std::vector<TraceRow> load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "", "cannot open file");
  return parse_trace(in, path);
}

inline void save_trace(const std::string& path, const std::vector<TraceRow>& rows) {
  write_text_file(path, format_trace(rows));
}

/// Resolves rows against a cluster and throughput table.
inline std::vector<JobSpec> to_jobs(const std::vector<TraceRow>& rows, const ThroughputTable& table,
                                    const ClusterSpec& cluster, double slot_seconds) {
  std::vector<JobSpec> out;
  for (const auto& r : rows) {
    JobSpec j;
    j.id = r.job_id;
    j.arrival = arrival_slot(r.arrival_s, slot_seconds);
    j.workers = r.requested_gpus;
    j.epochs = r.epochs;
    j.iters_per_epoch = r.iters_per_epoch;
    j.throughput = table.vector_for(r.model_tag, cluster);
    check_job(j, cluster);
    out.push_back(std::move(j));
  }
  return out;
}

// Synthetic traces.

struct TraceOptions {
  std::array<double, 4> category_mix{1.0, 1.0, 1.0, 1.0};  // S, M, L, XL weights
  double arrival_rate_per_hour = 0.0;  // 0: every job arrives at time 0
  ThroughputTable table = default_throughputs();
};

/// Samples a category per job, a model of that size class, a GPU-hour total
/// inside the category range and a worker count, then splits the work into
/// epochs and iterations per epoch at the model's reference throughput.
inline std::vector<TraceRow> generate_trace(std::size_t n_jobs, std::uint64_t seed, const TraceOptions& opt = {}) {
  if (n_jobs < 1) throw ConfigError("generate_trace: n_jobs must be >= 1");
  std::mt19937_64 rng(seed);
  std::discrete_distribution<int> category(opt.category_mix.begin(), opt.category_mix.end());
  std::discrete_distribution<int> gpus_idx({0.7, 0.1, 0.15, 0.05});
  const int gpu_choices[] = {1, 2, 4, 8};
  std::uniform_int_distribution<std::int64_t> epochs(10, 100);
  std::exponential_distribution<double> gap(opt.arrival_rate_per_hour > 0.0 ? opt.arrival_rate_per_hour / 3600.0
                                                                             : 1.0);

  std::map<Category, std::vector<std::string>> by_size;
  for (const auto& [model, row] : opt.table.models) {
    auto it = opt.table.size.find(model);
    if (it != opt.table.size.end()) by_size[it->second].push_back(model);
  }
  std::vector<std::string> all_models;
  for (const auto& [model, row] : opt.table.models) all_models.push_back(model);
  if (all_models.empty()) throw ConfigError("generate_trace: empty throughput table");

  std::vector<TraceRow> rows;
  double clock = 0.0;
  for (std::size_t i = 0; i < n_jobs; ++i) {
    TraceRow r;
    r.job_id = static_cast<JobId>(i);
    if (opt.arrival_rate_per_hour > 0.0 && i > 0) clock += gap(rng);
    r.arrival_s = clock;
    r.gpu_hours_category = static_cast<Category>(category(rng));
    const auto& pool = by_size.count(r.gpu_hours_category) ? by_size[r.gpu_hours_category] : all_models;
    r.model_tag = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
    r.requested_gpus = gpu_choices[gpus_idx(rng)];

    const auto [lo, hi] = category_bounds(r.gpu_hours_category);
    const double hours = std::uniform_real_distribution<double>(lo, hi)(rng);
    const double x_ref = opt.table.reference(r.model_tag);
    const double iters = hours * 3600.0 * x_ref;
    r.epochs = std::max<std::int64_t>(1, std::min<std::int64_t>(epochs(rng), static_cast<std::int64_t>(iters)));
    r.iters_per_epoch = std::max<std::int64_t>(1, std::llround(iters / static_cast<double>(r.epochs)));
    // Rounding must not leave the category range.
    while (r.iters_per_epoch > 1 && gpu_hours(r, opt.table) > hi) --r.iters_per_epoch;
    while (gpu_hours(r, opt.table) <= lo) ++r.iters_per_epoch;
    rows.push_back(std::move(r));
  }
  return rows;
}

// Report serialization.

inline nlohmann::json to_json(const RoundRecord& r) {
  nlohmann::json allocs = nlohmann::json::array();
  for (const auto& a : r.allocations) {
    nlohmann::json x{{"job", a.job},
                     {"workers", a.workers},
                     {"rate", a.rate},
                     {"busy_seconds", a.busy_seconds},
                     {"progress", a.progress},
                     {"restarted", a.restarted}};
    if (a.parent) x["parent"] = *a.parent;
    allocs.push_back(std::move(x));
  }
  return {{"t", r.t},
          {"allocations", allocs},
          {"busy_gpu_seconds", r.busy_gpu_seconds},
          {"node_busy_seconds", r.node_busy_seconds},
          {"completions", r.completions},
          {"queue_length", r.queue_length},
          {"decision_work", r.decision_work},
          {"decision_seconds", r.decision_seconds}};
}

inline RoundRecord round_from_json(const nlohmann::json& j) {
  RoundRecord r;
  r.t = j.at("t").get<Slot>();
  for (const auto& a : j.at("allocations")) {
    JobRoundSummary s;
    s.job = a.at("job").get<JobId>();
    if (a.contains("parent")) s.parent = a.at("parent").get<JobId>();
    s.workers = a.at("workers").get<int>();
    s.rate = a.at("rate").get<double>();
    s.busy_seconds = a.at("busy_seconds").get<double>();
    s.progress = a.at("progress").get<double>();
    s.restarted = a.at("restarted").get<bool>();
    r.allocations.push_back(s);
  }
  r.busy_gpu_seconds = j.at("busy_gpu_seconds").get<std::vector<double>>();
  r.node_busy_seconds = j.at("node_busy_seconds").get<std::vector<double>>();
  r.completions = j.at("completions").get<std::vector<JobId>>();
  r.queue_length = j.at("queue_length").get<std::size_t>();
  r.decision_work = j.at("decision_work").get<std::size_t>();
  r.decision_seconds = j.at("decision_seconds").get<double>();
  return r;
}

inline nlohmann::json to_json(const SimReport& rep) {
  const Metrics m = metrics(rep);
  nlohmann::json jobs = nlohmann::json::array();
  for (const auto& j : rep.jobs) {
    nlohmann::json x{{"id", j.id}, {"arrival", j.arrival}};
    x["finish"] = j.finish ? nlohmann::json(*j.finish) : nlohmann::json(nullptr);
    x["jct"] = j.finish ? nlohmann::json(*j.jct()) : nlohmann::json(nullptr);
    jobs.push_back(std::move(x));
  }
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& r : rep.rounds) rounds.push_back(to_json(r));
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& p : m.completion_curve) curve.push_back({{"t", p.t}, {"fraction", p.fraction}});
  nlohmann::json out{{"policy", rep.policy},
                     {"num_nodes", rep.num_nodes},
                     {"total_gpus", rep.total_gpus},
                     {"slot_seconds", rep.slot_seconds},
                     {"horizon", rep.horizon},
                     {"complete", rep.complete},
                     {"ttd", rep.ttd},
                     {"cru", rep.cru},
                     {"metrics",
                      {{"gru", m.gru},
                       {"cru", m.cru},
                       {"ttd", m.ttd},
                       {"mean_jct", m.mean_jct},
                       {"median_jct", m.median_jct},
                       {"finished", m.finished},
                       {"total", m.total}}},
                     {"completion_curve", curve},
                     {"gru_curve", rep.gru_curve},
                     {"jobs", jobs},
                     {"rounds", rounds}};
  if (!rep.complete) out["warning"] = "horizon reached with unfinished jobs";
  return out;
}

inline SimReport report_from_json(const nlohmann::json& j, const std::string& file = "<report>") {
  try {
    SimReport rep;
    rep.policy = j.at("policy").get<std::string>();
    rep.num_nodes = j.at("num_nodes").get<std::size_t>();
    rep.total_gpus = j.at("total_gpus").get<int>();
    rep.slot_seconds = j.at("slot_seconds").get<double>();
    rep.horizon = j.at("horizon").get<Slot>();
    rep.complete = j.at("complete").get<bool>();
    rep.ttd = j.at("ttd").get<Slot>();
    rep.cru = j.at("cru").get<double>();
    rep.gru_curve = j.at("gru_curve").get<std::vector<double>>();
    for (const auto& x : j.at("jobs")) {
      JobOutcome o;
      o.id = x.at("id").get<JobId>();
      o.arrival = x.at("arrival").get<Slot>();
      if (!x.at("finish").is_null()) o.finish = x.at("finish").get<Slot>();
      rep.jobs.push_back(o);
    }
    for (const auto& r : j.at("rounds")) rep.rounds.push_back(round_from_json(r));
    return rep;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(file, 0, "", std::string("malformed report: ") + e.what());
  }
}

/// Per-round CSV. Fixed columns first, then one busy_gpu_s column per type.
inline std::string rounds_csv(const SimReport& rep, const ClusterSpec* cluster = nullptr) {
  std::ostringstream os;
  os << "t,queue_length,jobs_allocated,busy_gpu_seconds,gru,busy_node_seconds,cru,completions,decision_work,"
        "decision_seconds";
  const std::size_t R = rep.rounds.empty() ? 0 : rep.rounds.front().busy_gpu_seconds.size();
  for (std::size_t r = 0; r < R; ++r) {
    os << ",busy_gpu_s_" << (cluster && r < cluster->num_types() ? cluster->types()[r].label : std::to_string(r));
  }
  os << "\n";
  for (const auto& rec : rep.rounds) {
    double node_busy = 0.0;
    for (double v : rec.node_busy_seconds) node_busy += v;
    const double gpu = rec.total_busy_gpu_seconds();
    os << rec.t << "," << rec.queue_length << "," << rec.allocations.size() << "," << detail::format_double(gpu)
       << "," << detail::format_double(gpu / (rep.total_gpus * rep.slot_seconds)) << ","
       << detail::format_double(node_busy) << ","
       << detail::format_double(node_busy / (static_cast<double>(rep.num_nodes) * rep.slot_seconds)) << ","
       << rec.completions.size() << "," << rec.decision_work << "," << detail::format_double(rec.decision_seconds);
    for (double v : rec.busy_gpu_seconds) os << "," << detail::format_double(v);
    os << "\n";
  }
  return os.str();
}

inline std::string completion_csv(const SimReport& rep) {
  std::ostringstream os;
  os << "policy,t,fraction_completed\n";
  for (const auto& p : metrics(rep).completion_curve)
    os << rep.policy << "," << p.t << "," << detail::format_double(p.fraction) << "\n";
  return os.str();
}

}  // namespace hadar
