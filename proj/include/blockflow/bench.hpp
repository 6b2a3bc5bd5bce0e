#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "blockflow/cost_profile.hpp"
#include "blockflow/graph.hpp"
#include "blockflow/node_config.hpp"
#include "blockflow/random_model.hpp"

namespace blockflow {

// Central keep_fraction average: sort, drop floor(n*(1-f)/2) from each
// end, mean the rest. Throws Error(EmptyInput) on empty samples.
double trimmed_mean(const std::vector<double>& samples, double keep_fraction);
std::size_t trimmed_count(std::size_t n, double keep_fraction);

struct ModelSource {
  enum class Kind { File, Random, Builtin };
  Kind kind = Kind::Builtin;
  std::string path_or_name = "chains4";
  RandomSpec random;
};

struct Scenario {
  std::string id;
  ModelSource model;
  CostProfile profile;
  std::uint32_t n_cores = 1;
  std::uint32_t virtual_cores = 0;  // 0 or n_cores: no folding
  // pattern (topics are derived from port names as "t/<port>")
  PatternKind pattern = PatternKind::EventTrigger;
  std::int64_t period_ns = 10'000'000;
  SyncPolicy policy = SyncPolicy::Exact;
  std::int64_t slop_ns = 0;
  std::size_t sync_queue_size = 4;
  std::size_t reps = 1000;
  std::size_t warmup = 50;
  // inter-round stimulus gap; <0 selects 2x the estimated run time.
  // Rounds are additionally gated on run completion so every round yields
  // a sample and none coalesce away.
  std::int64_t stimulus_gap_ns = -1;
  std::uint64_t stimulus_seed = 1;
  bool pinning = true;
};

struct BenchResult {
  std::string scenario_id;
  std::string model_name;
  std::uint32_t cores = 1;
  std::uint32_t virtual_cores = 1;
  std::string pattern_name;
  std::size_t reps = 0;
  std::vector<double> samples_ns;  // exactly reps entries
  double trimmed_mean_ns = 0;
  double min_ns = 0;
  double max_ns = 0;
  double raw_mean_ns = 0;
  std::size_t averaged_samples = 0;  // samples the trimmed mean kept
  double estimated_makespan_ns = 0;
  std::uint64_t coalesced = 0;
  std::uint64_t drops = 0;
};

// Builds model -> allocation (-> fold) -> plan -> node, runs warmup+reps
// rounds, checks every run against the sequential oracle bit-exactly
// (Error(OracleMismatch) aborts), and reports the 80% trimmed mean.
BenchResult run_benchmark(const Scenario& s);

// ordered by scenario id; header:
// scenario,model,cores,virtual_cores,pattern,reps,trimmed_mean_ns,min_ns,max_ns,coalesced,drops
void export_results(const std::vector<BenchResult>& results, const std::string& path);

std::vector<Scenario> load_grid_file(const std::string& path);

NodeConfig scenario_node_config(const Scenario& s, const BlockGraph& g);

}  // namespace blockflow
