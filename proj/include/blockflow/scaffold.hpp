#pragma once

#include <string>

#include "blockflow/node_config.hpp"
#include "blockflow/plan.hpp"

namespace blockflow {

// Renders the node skeleton as deterministic pseudocode: per-topic data
// callbacks, the pattern trigger, one loop section per worker, and the
// main wiring section. Byte-identical across runs for identical inputs.
// Throws Error(PatternMismatch) when the plan and config do not line up.
std::string emit_scaffold(const ExecutionPlan& plan, const NodeConfig& nc);

}  // namespace blockflow
