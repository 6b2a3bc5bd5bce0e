#include "blockflow/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "blockflow/builtin_models.hpp"
#include "blockflow/errors.hpp"
#include "blockflow/model_xml.hpp"
#include "blockflow/node.hpp"
#include "blockflow/plan.hpp"
#include "blockflow/plan_sim.hpp"

namespace blockflow {

std::size_t trimmed_count(std::size_t n, double keep_fraction) {
  const std::size_t drop = static_cast<std::size_t>(n * (1.0 - keep_fraction) / 2.0);
  return n - 2 * drop;
}

double trimmed_mean(const std::vector<double>& samples, double keep_fraction) {
  if (samples.empty()) throw Error(ErrorCode::EmptyInput, "trimmed_mean of no samples");
  if (keep_fraction <= 0.0 || keep_fraction > 1.0)
    throw Error(ErrorCode::UsageError, "keep_fraction must be in (0, 1]");
  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t drop = static_cast<std::size_t>(sorted.size() * (1.0 - keep_fraction) / 2.0);
  const std::size_t keep = sorted.size() - 2 * drop;
  double sum = std::accumulate(sorted.begin() + drop, sorted.begin() + drop + keep, 0.0);
  return sum / static_cast<double>(keep);
}

NodeConfig scenario_node_config(const Scenario& s, const BlockGraph& g) {
  NodeConfig nc;
  nc.pattern = s.pattern;
  nc.period_ns = s.period_ns;
  nc.policy = s.policy;
  nc.slop_ns = s.slop_ns;
  nc.sync_queue_size = s.sync_queue_size;
  std::string first_topic;
  for (const Block& b : g.blocks) {
    if (b.kind == BlockKind::Inport) {
      nc.input_topics["t/" + b.id] = b.id;
      if (first_topic.empty()) first_topic = "t/" + b.id;
    }
    if (b.kind == BlockKind::Outport) nc.output_topics[b.id] = "t/" + b.id;
  }
  if (s.pattern == PatternKind::EventTrigger) nc.trigger_topic = first_topic;
  if (s.pattern == PatternKind::EventTimeSync && nc.input_topics.size() < 2)
    throw Error(ErrorCode::PatternMismatch, "time sync scenario needs a model with >= 2 inports");
  return nc;
}

namespace {

BlockGraph scenario_model(const Scenario& s) {
  switch (s.model.kind) {
    case ModelSource::Kind::File:
      return load_model_file(s.model.path_or_name);
    case ModelSource::Kind::Random:
      return generate_random_model(s.model.random);
    case ModelSource::Kind::Builtin: {
      auto g = builtin_model(s.model.path_or_name);
      if (!g) throw Error(ErrorCode::UsageError, "unknown builtin model '" + s.model.path_or_name + "'");
      return *g;
    }
  }
  throw Error(ErrorCode::UsageError, "bad model source");
}

struct OracleState {
  SequentialExecutor oracle;
  std::mutex mutex;
  std::vector<double> samples_ns;
  std::string mismatch;  // first oracle failure, if any
  std::size_t warmup = 0;

  explicit OracleState(const BlockGraph& g) : oracle(g) {}
};

std::string describe_mismatch(const RunResult& run,
                              const std::map<std::string, double>& want) {
  std::ostringstream out;
  out << "run " << run.run_index << ":";
  for (const auto& [id, v] : run.outputs) {
    auto it = want.find(id);
    if (it == want.end() || it->second != v) {
      out.setf(std::ios::scientific);
      out.precision(17);
      out << " " << id << " got " << v << " want "
          << (it == want.end() ? 0.0 : it->second);
    }
  }
  return out.str();
}

}  // namespace

BenchResult run_benchmark(const Scenario& s) {
  if (s.reps < 1) throw Error(ErrorCode::UsageError, "reps must be >= 1");
  const std::uint32_t virtual_cores = s.virtual_cores ? s.virtual_cores : s.n_cores;
  if (virtual_cores < s.n_cores)
    throw Error(ErrorCode::UsageError, "virtual_cores must be >= n_cores");

  BlockGraph g = scenario_model(s);
  CostMap costs = annotate_costs(g, s.profile);
  Allocation alloc = allocate_cores(g, costs, s.profile, virtual_cores);
  if (virtual_cores > s.n_cores)
    alloc = fold_allocation(alloc, s.n_cores, s.profile.max_workers_per_core);
  ExecutionPlan plan = build_plan(g, alloc);
  const double est_ns = s.profile.cycles_to_ns(estimate_makespan(plan, costs, s.profile));

  NodeConfig nc = scenario_node_config(s, g);
  Bus bus;

  OracleState state(g);
  const std::size_t total_runs = s.warmup + s.reps;
  state.warmup = s.warmup;

  NodeOptions options;
  options.pinning = s.pinning;
  options.observer = [&state](const RunResult& run) {
    std::lock_guard lock(state.mutex);
    if (!state.mismatch.empty()) return;
    std::map<std::string, double> want = state.oracle.step(run.inputs);
    if (want != run.outputs) {
      state.mismatch = describe_mismatch(run, want);
      return;
    }
    if (run.run_index >= state.warmup)
      state.samples_ns.push_back(
          static_cast<double>(run.publish_stamp_ns - run.trigger_stamp_ns));
  };

  auto node = run_node(bus, plan, nc, s.profile, std::move(options));

  // Stimulus: one publisher per input topic, fresh seeded values per
  // round, each round gated on run completion so no trigger coalesces.
  // The trigger topic publishes last so a round's run sees the round's
  // other values latched.
  std::vector<std::pair<std::string, Bus::Publisher>> inputs;
  for (const auto& [topic, inport] : nc.input_topics)
    if (topic != nc.trigger_topic) inputs.push_back({topic, bus.advertise(topic)});
  if (!nc.trigger_topic.empty() && nc.input_topics.count(nc.trigger_topic))
    inputs.push_back({nc.trigger_topic, bus.advertise(nc.trigger_topic)});
  std::mt19937_64 value_rng(s.stimulus_seed);
  auto next_value = [&value_rng] {
    return static_cast<double>(value_rng() % 2000) / 8.0 - 125.0;
  };
  const std::int64_t gap_ns =
      s.stimulus_gap_ns >= 0 ? s.stimulus_gap_ns : static_cast<std::int64_t>(2.0 * est_ns);
  const auto round_timeout = std::chrono::nanoseconds(
      std::max<std::int64_t>(static_cast<std::int64_t>(est_ns) * 10, 200'000'000) + gap_ns);

  bool stalled = false;
  if (s.pattern == PatternKind::TimerDriven) {
    for (auto& [topic, pub] : inputs) pub.publish({next_value()});
    const auto deadline =
        std::chrono::nanoseconds(s.period_ns) * (total_runs + 4) + std::chrono::seconds(5);
    stalled = !node->wait_for_runs(total_runs, deadline);
  } else {
    std::uint64_t done = 0;
    while (done < total_runs) {
      const std::int64_t stamp = steady_now_ns();
      for (auto& [topic, pub] : inputs) pub.publish({next_value()}, stamp);
      if (!node->wait_for_runs(done + 1, round_timeout)) {
        stalled = true;
        break;
      }
      // let the full round (one trigger per topic for event_all) settle
      if (s.pattern == PatternKind::EventAll) {
        std::this_thread::sleep_for(std::chrono::microseconds(50));
      }
      done = node->completed_runs();
      {
        std::lock_guard lock(state.mutex);
        if (!state.mismatch.empty()) break;
        if (state.samples_ns.size() >= s.reps) break;
      }
      if (gap_ns > 0) std::this_thread::sleep_for(std::chrono::nanoseconds(gap_ns));
    }
  }

  NodeStats stats = node->stop();

  {
    std::lock_guard lock(state.mutex);
    if (!state.mismatch.empty())
      throw Error(ErrorCode::OracleMismatch, s.id + ": " + state.mismatch);
    if (stalled && state.samples_ns.size() < s.reps)
      throw Error(ErrorCode::DeadlockedPlan,
                  s.id + ": node stalled after " + std::to_string(stats.runs) + " runs");
  }

  BenchResult r;
  r.scenario_id = s.id;
  r.model_name = g.name;
  r.cores = s.n_cores;
  r.virtual_cores = virtual_cores;
  r.pattern_name = pattern_kind_name(s.pattern);
  r.reps = s.reps;
  r.samples_ns = std::move(state.samples_ns);
  if (r.samples_ns.size() > s.reps) r.samples_ns.resize(s.reps);
  if (r.samples_ns.size() < s.reps)
    throw Error(ErrorCode::DeadlockedPlan,
                s.id + ": only " + std::to_string(r.samples_ns.size()) + " of " +
                    std::to_string(s.reps) + " samples collected");
  r.trimmed_mean_ns = trimmed_mean(r.samples_ns, 0.8);
  r.averaged_samples = trimmed_count(r.samples_ns.size(), 0.8);
  r.min_ns = *std::min_element(r.samples_ns.begin(), r.samples_ns.end());
  r.max_ns = *std::max_element(r.samples_ns.begin(), r.samples_ns.end());
  r.raw_mean_ns = std::accumulate(r.samples_ns.begin(), r.samples_ns.end(), 0.0) /
                  static_cast<double>(r.samples_ns.size());
  r.estimated_makespan_ns = est_ns;
  r.coalesced = stats.coalesced_triggers;
  r.drops = stats.queue_drops + stats.sync_drops;
  return r;
}

void export_results(const std::vector<BenchResult>& results, const std::string& path) {
  if (results.empty()) throw Error(ErrorCode::EmptyInput, "no results to export");
  std::vector<const BenchResult*> order;
  for (const BenchResult& r : results) order.push_back(&r);
  std::sort(order.begin(), order.end(),
            [](const BenchResult* a, const BenchResult* b) {
              return a->scenario_id < b->scenario_id;
            });

  std::ostringstream out;
  out << "scenario,model,cores,virtual_cores,pattern,reps,trimmed_mean_ns,min_ns,max_ns,"
         "coalesced,drops\n";
  for (const BenchResult* r : order) {
    out << r->scenario_id << ',' << r->model_name << ',' << r->cores << ','
        << r->virtual_cores << ',' << r->pattern_name << ',' << r->reps << ','
        << std::llround(r->trimmed_mean_ns) << ',' << std::llround(r->min_ns) << ','
        << std::llround(r->max_ns) << ',' << r->coalesced << ',' << r->drops << '\n';
  }

  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::IoError, "cannot write " + tmp);
    f << out.str();
    if (!f) throw Error(ErrorCode::IoError, "write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::IoError, "rename to " + path + ": " + ec.message());
}

std::vector<Scenario> load_grid_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IoError, std::string("bad grid JSON: ") + e.what());
  }
  if (!j.is_array()) throw Error(ErrorCode::IoError, "grid must be a JSON array");

  std::vector<Scenario> grid;
  for (const auto& js : j) {
    Scenario s;
    s.id = js.at("id").get<std::string>();
    const auto& jm = js.at("model");
    if (jm.contains("file")) {
      s.model.kind = ModelSource::Kind::File;
      s.model.path_or_name = jm.at("file").get<std::string>();
    } else if (jm.contains("builtin")) {
      s.model.kind = ModelSource::Kind::Builtin;
      s.model.path_or_name = jm.at("builtin").get<std::string>();
    } else if (jm.contains("random")) {
      s.model.kind = ModelSource::Kind::Random;
      const auto& jr = jm.at("random");
      s.model.random.n_blocks = jr.at("blocks").get<std::size_t>();
      s.model.random.n_inports = jr.at("inports").get<std::size_t>();
      s.model.random.n_outports = jr.at("outports").get<std::size_t>();
      s.model.random.edge_density = jr.at("density").get<double>();
      s.model.random.seed = jr.at("seed").get<std::uint64_t>();
      if (jr.contains("weight_min")) s.model.random.weight_min = jr.at("weight_min").get<std::uint64_t>();
      if (jr.contains("weight_max")) s.model.random.weight_max = jr.at("weight_max").get<std::uint64_t>();
    } else {
      throw Error(ErrorCode::IoError, "scenario '" + s.id + "' has no model source");
    }
    if (js.at("profile").is_string())
      s.profile = load_profile_file(js.at("profile").get<std::string>());
    else
      s.profile = profile_from_json_text(js.at("profile").dump());
    s.n_cores = js.at("cores").get<std::uint32_t>();
    s.virtual_cores = js.value("virtual_cores", 0u);
    const std::string pattern = js.value("pattern", "event_trigger");
    if (pattern == "timer") s.pattern = PatternKind::TimerDriven;
    else if (pattern == "event_all") s.pattern = PatternKind::EventAll;
    else if (pattern == "event_trigger") s.pattern = PatternKind::EventTrigger;
    else if (pattern == "event_time_sync") s.pattern = PatternKind::EventTimeSync;
    else throw Error(ErrorCode::IoError, "unknown pattern '" + pattern + "'");
    s.period_ns = js.value("period_ns", std::int64_t{10'000'000});
    const std::string policy = js.value("policy", "exact");
    s.policy = policy == "approximate" ? SyncPolicy::Approximate : SyncPolicy::Exact;
    s.slop_ns = js.value("slop_ns", std::int64_t{0});
    s.sync_queue_size = js.value("sync_queue_size", std::size_t{4});
    s.reps = js.value("reps", std::size_t{1000});
    s.warmup = js.value("warmup", std::size_t{50});
    s.stimulus_gap_ns = js.value("stimulus_gap_ns", std::int64_t{-1});
    s.stimulus_seed = js.value("stimulus_seed", std::uint64_t{1});
    s.pinning = js.value("pinning", true);
    grid.push_back(std::move(s));
  }
  return grid;
}

}  // namespace blockflow
