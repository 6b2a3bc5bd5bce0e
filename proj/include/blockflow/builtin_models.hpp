#pragma once

#include <optional>
#include <string>

#include "blockflow/allocation.hpp"
#include "blockflow/graph.hpp"

namespace blockflow {

// High-parallelism reference: n independent equal chains of Compute
// blocks, one inport and one outport per chain.
BlockGraph make_chain_bank(std::size_t n_chains, std::size_t blocks_per_chain,
                           std::uint64_t weight);

// Dependency-stall topology: b1->b2 feed one core while the other core
// runs b3, a Sum b4 waiting on b1 across cores, and an independent b5.
// With one worker per core b5 idles behind b4's wait; a second worker
// absorbs the gap.
BlockGraph make_dependency_stall(std::uint64_t w1, std::uint64_t w2, std::uint64_t w3,
                                 std::uint64_t w5);

// Hand allocations for make_dependency_stall.
Allocation stall_allocation_two_cores();          // {b1,b2} | {b3,b4,b5}
Allocation stall_allocation_four_virtual_cores(); // fold to 2 for a second worker

// Registry used by bench grids: "chains4" (4x4 chain bank) and "stall".
std::optional<BlockGraph> builtin_model(const std::string& name);

}  // namespace blockflow
