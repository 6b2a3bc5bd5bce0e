#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "blockflow/graph.hpp"

namespace blockflow {

// Hardware cost table. cycle_time_ns converts cycles to wall time
// (0.4 for a 2.5 GHz part, 1.0 for 1 GHz). switch_cycles is charged by
// the makespan estimator whenever a core switches workers.
struct CostProfile {
  std::map<BlockKind, double> cycles_per_kind;
  double cycles_per_weight_unit = 0.0;
  double comm_cycles_per_message = 0.0;
  double cycle_time_ns = 1.0;
  double switch_cycles = 0.0;
  std::uint32_t max_workers_per_core = 32;

  double cycles_to_ns(double cycles) const { return cycles * cycle_time_ns; }
  double comm_ns() const { return cycles_to_ns(comm_cycles_per_message); }
};

using CostMap = std::map<std::string, double>;

// cost(b) = cycles_per_kind[kind] (+ w * cycles_per_weight_unit for
// Compute). Ports always cost zero.
CostMap annotate_costs(const BlockGraph& g, const CostProfile& p);

double block_cost(const Block& b, const CostProfile& p);

CostProfile profile_from_json_text(const std::string& text);
std::string profile_to_json_text(const CostProfile& p);
CostProfile load_profile_file(const std::string& path);

}  // namespace blockflow
