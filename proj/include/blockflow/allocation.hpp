#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "blockflow/cost_profile.hpp"
#include "blockflow/graph.hpp"

namespace blockflow {

struct WorkerRef {
  std::uint32_t core = 0;
  std::uint32_t worker = 0;

  friend auto operator<=>(const WorkerRef&, const WorkerRef&) = default;
};

// Block-to-worker map produced by scheduling and optional folding.
// Port blocks are never assigned; worker ordinals are dense per core and
// bounded by the per-core cap.
struct Allocation {
  std::map<std::string, WorkerRef> assignment;
  std::uint32_t n_cores = 0;
  std::map<std::uint32_t, std::uint32_t> n_workers_per_core;
};

// Priority list for the scheduler: non-port blocks by decreasing upward
// rank (cost + comm per hop to any Outport over the delay-free subgraph),
// ties by id.
std::vector<std::string> schedule_priority(const BlockGraph& g, const CostMap& costs,
                                           const CostProfile& p);

// Makespan of a fixed core assignment under the list model: blocks start
// at max(core available, each predecessor finish + comm if cross-core),
// processed in schedule_priority order. Shared by the scheduler and the
// brute-force checks in the tests.
double modeled_makespan(const BlockGraph& g, const CostMap& costs, const CostProfile& p,
                        const std::map<std::string, std::uint32_t>& core_of);

// Deterministic communication-aware list scheduling (one worker per
// core). Falls back to a single-core assignment if the greedy schedule
// models worse than plain sequential execution.
Allocation allocate_cores(const BlockGraph& g, const CostMap& costs, const CostProfile& p,
                          std::uint32_t n_cores);

// Remaps an allocation over V single-worker virtual cores onto
// n_physical cores: virtual v -> (v mod n_physical, v div n_physical).
// Throws Error(TooManyWorkers) past the per-core cap.
Allocation fold_allocation(const Allocation& a, std::uint32_t n_physical,
                           std::uint32_t max_workers_per_core = 32);

struct AllocationMetrics {
  double load_imbalance = 1.0;     // max core load / mean core load
  std::size_t cross_core_edges = 0;
};

AllocationMetrics allocation_metrics(const BlockGraph& g, const CostMap& costs,
                                     const Allocation& a);

// JSON form is exactly {"block": [core, worker], ...}, keys sorted.
std::string allocation_to_json_text(const Allocation& a);
Allocation allocation_from_json_text(const std::string& text, std::uint32_t n_cores_hint = 0);
Allocation load_allocation_file(const std::string& path, std::uint32_t n_cores_hint = 0);

}  // namespace blockflow
