#pragma once

#include <cstdint>
#include <tuple>
#include <vector>

#include "blockflow/cost_profile.hpp"
#include "blockflow/plan.hpp"

namespace blockflow {

struct DeadlockReport {
  bool ok = true;
  // (core, worker, step index) for every worker that failed to finish
  std::vector<std::tuple<std::uint32_t, std::uint32_t, std::size_t>> stuck_at;
};

// Abstract execution: workers advance independently (a blocked worker
// never holds its core), Recv needs a queued message, Send needs a free
// capacity slot. Progress is confluent here because channels are
// point-to-point, so a single maximal run decides the outcome.
DeadlockReport check_deadlock_free(const ExecutionPlan& plan);

// Cooperative timing simulation in cycles: Compute takes cost(b), a sent
// message arrives comm_cycles_per_message later, each core runs its
// lowest-ordinal ready worker and switches only when the running one
// blocks (charging switch_cycles). Throws Error(DeadlockedPlan) if the
// simulation cannot finish.
double estimate_makespan(const ExecutionPlan& plan, const CostMap& costs,
                         const CostProfile& p);

}  // namespace blockflow
