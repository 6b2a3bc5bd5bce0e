#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "blockflow/allocation.hpp"
#include "blockflow/bench.hpp"
#include "blockflow/bus.hpp"
#include "blockflow/errors.hpp"
#include "blockflow/graph.hpp"
#include "blockflow/model_xml.hpp"
#include "blockflow/node.hpp"
#include "blockflow/node_config.hpp"
#include "blockflow/plan.hpp"
#include "blockflow/plan_sim.hpp"
#include "blockflow/random_model.hpp"
#include "blockflow/scaffold.hpp"

namespace {

using namespace blockflow;

// write to a sibling temp file, rename on success
void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp);
    out << content;
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::IoError, "rename to " + path + ": " + ec.message());
}

int cmd_validate(const std::string& model_path) {
  BlockGraph g = load_model_file(model_path);
  ValidationReport report = validate_graph(g);
  if (!report.ok()) {
    for (const Violation& v : report.violations)
      std::cerr << model_path << ": " << v.rule << " [" << v.subject << "]\n";
    std::cerr << report.violations.size() << " violation(s)\n";
    return 1;
  }
  std::cout << "OK: " << g.name << " (" << g.blocks.size() << " blocks, " << g.edges.size()
            << " edges)\n";
  return 0;
}

int cmd_generate(const RandomSpec& spec, const std::string& out_path) {
  BlockGraph g = generate_random_model(spec);
  write_file_atomic(out_path, serialize_model(g));
  std::cerr << "generated " << g.blocks.size() << " blocks, " << g.edges.size()
            << " edges -> " << out_path << "\n";
  return 0;
}

int cmd_allocate(const std::string& model_path, const std::string& profile_path,
                 std::uint32_t cores, std::uint32_t virtual_cores,
                 const std::string& out_path) {
  BlockGraph g = load_model_file(model_path);
  ValidationReport report = validate_graph(g);
  if (!report.ok()) {
    std::cerr << model_path << ": model fails validation\n";
    return 1;
  }
  CostProfile profile = load_profile_file(profile_path);
  CostMap costs = annotate_costs(g, profile);
  Allocation alloc = allocate_cores(g, costs, profile, virtual_cores ? virtual_cores : cores);
  if (virtual_cores > cores)
    alloc = fold_allocation(alloc, cores, profile.max_workers_per_core);
  AllocationMetrics metrics = allocation_metrics(g, costs, alloc);
  write_file_atomic(out_path, allocation_to_json_text(alloc));
  std::cerr << "cores=" << alloc.n_cores << " load_imbalance=" << metrics.load_imbalance
            << " cross_core_edges=" << metrics.cross_core_edges << " -> " << out_path << "\n";
  return 0;
}

int cmd_plan(const std::string& model_path, const std::string& alloc_path,
             const std::string& out_path, const std::string& scaffold_path,
             const std::string& node_path) {
  BlockGraph g = load_model_file(model_path);
  Allocation alloc = load_allocation_file(alloc_path);
  ExecutionPlan plan = build_plan(g, alloc);
  DeadlockReport dl = check_deadlock_free(plan);
  if (!dl.ok) {
    std::cerr << "plan fails the deadlock check\n";
    return 1;
  }
  write_file_atomic(out_path, plan_to_json_text(plan));
  std::cerr << plan.workers.size() << " workers, " << plan.channels.size() << " channels -> "
            << out_path << "\n";
  if (!scaffold_path.empty()) {
    NodeConfig nc = load_node_config_file(node_path);
    write_file_atomic(scaffold_path, emit_scaffold(plan, nc));
    std::cerr << "scaffold -> " << scaffold_path << "\n";
  }
  return 0;
}

int cmd_run(const std::string& plan_path, const std::string& node_path,
            const std::string& profile_path, double duration_s) {
  ExecutionPlan plan = load_plan_file(plan_path);
  NodeConfig nc = load_node_config_file(node_path);
  CostProfile profile = load_profile_file(profile_path);
  BlockGraph g{plan.model_name, plan.blocks, plan.edges};
  CostMap costs = annotate_costs(g, profile);
  const double est_ns = profile.cycles_to_ns(estimate_makespan(plan, costs, profile));

  Bus bus;
  auto node = run_node(bus, plan, nc, profile);

  std::vector<std::pair<std::string, Bus::Publisher>> inputs;
  for (const auto& [topic, inport] : nc.input_topics)
    if (topic != nc.trigger_topic) inputs.push_back({topic, bus.advertise(topic)});
  if (!nc.trigger_topic.empty())
    inputs.push_back({nc.trigger_topic, bus.advertise(nc.trigger_topic)});

  const auto deadline =
      std::chrono::steady_clock::now() +
      std::chrono::nanoseconds(static_cast<std::int64_t>(duration_s * 1e9));
  const auto gap = std::chrono::nanoseconds(
      std::max<std::int64_t>(static_cast<std::int64_t>(2.0 * est_ns), 1'000'000));
  std::uint64_t round = 0;
  while (std::chrono::steady_clock::now() < deadline) {
    const std::int64_t stamp = steady_now_ns();
    for (auto& [topic, pub] : inputs)
      pub.publish({static_cast<double>(round % 97) * 0.5}, stamp);
    ++round;
    if (nc.pattern == PatternKind::TimerDriven) {
      std::this_thread::sleep_until(deadline);
      break;
    }
    std::this_thread::sleep_for(gap);
  }
  NodeStats stats = node->stop();
  std::cout << node_stats_to_json_text(stats);
  return 0;
}

int cmd_bench(const std::string& grid_path, const std::string& out_path) {
  std::vector<Scenario> grid = load_grid_file(grid_path);
  std::vector<BenchResult> results;
  for (const Scenario& s : grid) {
    std::cerr << "scenario " << s.id << " ... " << std::flush;
    results.push_back(run_benchmark(s));
    std::cerr << "trimmed_mean_ns=" << std::llround(results.back().trimmed_mean_ns) << "\n";
  }
  export_results(results, out_path);
  std::cerr << results.size() << " scenario(s) -> " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"block-diagram dataflow parallelization toolkit"};
  app.require_subcommand(1);

  std::string model_path, profile_path, alloc_path, plan_path, node_path, grid_path;
  std::string out_path, scaffold_path;
  RandomSpec spec;
  std::uint32_t cores = 1, virtual_cores = 0;
  double duration_s = 5.0;

  CLI::App* validate = app.add_subcommand("validate", "parse a model and report violations");
  validate->add_option("model", model_path, "model XML file")->required();

  CLI::App* generate = app.add_subcommand("generate", "generate a random model");
  generate->add_option("--blocks", spec.n_blocks, "total block count")->required();
  generate->add_option("--inports", spec.n_inports, "inport count")->required();
  generate->add_option("--outports", spec.n_outports, "outport count")->required();
  generate->add_option("--density", spec.edge_density, "edge density in [0,1]")->required();
  generate->add_option("--seed", spec.seed, "RNG seed")->required();
  generate->add_option("--weight-min", spec.weight_min, "min Compute weight");
  generate->add_option("--weight-max", spec.weight_max, "max Compute weight");
  generate->add_option("--out", out_path, "output model path")->required();

  CLI::App* allocate = app.add_subcommand("allocate", "map blocks to cores and workers");
  allocate->add_option("--model", model_path)->required();
  allocate->add_option("--profile", profile_path)->required();
  allocate->add_option("--cores", cores, "physical cores")->required();
  allocate->add_option("--virtual", virtual_cores, "virtual cores folded onto --cores");
  allocate->add_option("--out", out_path)->required();

  CLI::App* plan = app.add_subcommand("plan", "expand an allocation into an execution plan");
  plan->add_option("--model", model_path)->required();
  plan->add_option("--alloc", alloc_path)->required();
  plan->add_option("--out", out_path)->required();
  plan->add_option("--scaffold", scaffold_path, "also emit the node scaffold");
  plan->add_option("--node", node_path, "node config (required with --scaffold)");

  CLI::App* run = app.add_subcommand("run", "execute a plan on the in-process bus");
  run->add_option("--plan", plan_path)->required();
  run->add_option("--node", node_path)->required();
  run->add_option("--profile", profile_path)->required();
  run->add_option("--duration-s", duration_s, "run time in seconds");

  CLI::App* bench = app.add_subcommand("bench", "run a scenario grid and export CSV");
  bench->add_option("--grid", grid_path)->required();
  bench->add_option("--out", out_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(validate)) return cmd_validate(model_path);
    if (app.got_subcommand(generate)) return cmd_generate(spec, out_path);
    if (app.got_subcommand(allocate)) {
      if (cores < 1) {
        std::cerr << "--cores must be >= 1\n";
        return 2;
      }
      if (virtual_cores && virtual_cores < cores) {
        std::cerr << "--virtual must be >= --cores\n";
        return 2;
      }
      if (virtual_cores && virtual_cores > 32u * cores) {
        std::cerr << "--virtual " << virtual_cores << " exceeds the 32 workers/core cap for "
                  << cores << " core(s)\n";
        return 2;
      }
      return cmd_allocate(model_path, profile_path, cores, virtual_cores, out_path);
    }
    if (app.got_subcommand(plan)) {
      if (!scaffold_path.empty() && node_path.empty()) {
        std::cerr << "--scaffold requires --node\n";
        return 2;
      }
      return cmd_plan(model_path, alloc_path, out_path, scaffold_path, node_path);
    }
    if (app.got_subcommand(run)) return cmd_run(plan_path, node_path, profile_path, duration_s);
    if (app.got_subcommand(bench)) return cmd_bench(grid_path, out_path);
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::UsageError ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
