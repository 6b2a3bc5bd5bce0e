#include "blockflow/builtin_models.hpp"

namespace blockflow {

BlockGraph make_chain_bank(std::size_t n_chains, std::size_t blocks_per_chain,
                           std::uint64_t weight) {
  BlockGraph g;
  g.name = "chains" + std::to_string(n_chains);
  for (std::size_t c = 0; c < n_chains; ++c) {
    const std::string suffix = std::to_string(c);
    g.blocks.push_back({"in" + suffix, BlockKind::Inport});
    std::string prev = "in" + suffix;
    for (std::size_t i = 0; i < blocks_per_chain; ++i) {
      Block b;
      b.id = "c" + suffix + "_" + std::to_string(i);
      b.kind = BlockKind::Compute;
      b.weight = weight;
      g.blocks.push_back(b);
      g.edges.push_back({prev, b.id, 0});
      prev = b.id;
    }
    g.blocks.push_back({"out" + suffix, BlockKind::Outport});
    g.edges.push_back({prev, "out" + suffix, 0});
  }
  return g;
}

BlockGraph make_dependency_stall(std::uint64_t w1, std::uint64_t w2, std::uint64_t w3,
                                 std::uint64_t w5) {
  BlockGraph g;
  g.name = "stall";
  g.blocks.push_back({"in0", BlockKind::Inport});
  Block b1{"b1", BlockKind::Compute};
  b1.weight = w1;
  Block b2{"b2", BlockKind::Compute};
  b2.weight = w2;
  Block b3{"b3", BlockKind::Compute};
  b3.weight = w3;
  Block b4{"b4", BlockKind::Sum};
  Block b5{"b5", BlockKind::Compute};
  b5.weight = w5;
  g.blocks.push_back(b1);
  g.blocks.push_back(b2);
  g.blocks.push_back(b3);
  g.blocks.push_back(b4);
  g.blocks.push_back(b5);
  g.blocks.push_back({"out1", BlockKind::Outport});
  g.blocks.push_back({"out2", BlockKind::Outport});
  g.blocks.push_back({"out3", BlockKind::Outport});
  g.edges.push_back({"in0", "b1", 0});
  g.edges.push_back({"b1", "b2", 0});
  g.edges.push_back({"b2", "out1", 0});
  g.edges.push_back({"in0", "b3", 0});
  g.edges.push_back({"b1", "b4", 0});
  g.edges.push_back({"b3", "b4", 1});
  g.edges.push_back({"b4", "out2", 0});
  g.edges.push_back({"b3", "b5", 0});
  g.edges.push_back({"b5", "out3", 0});
  return g;
}

Allocation stall_allocation_two_cores() {
  Allocation a;
  a.n_cores = 2;
  a.n_workers_per_core = {{0, 1}, {1, 1}};
  a.assignment = {{"b1", {0, 0}},
                  {"b2", {0, 0}},
                  {"b3", {1, 0}},
                  {"b4", {1, 0}},
                  {"b5", {1, 0}}};
  return a;
}

Allocation stall_allocation_four_virtual_cores() {
  Allocation a;
  a.n_cores = 4;
  a.n_workers_per_core = {{0, 1}, {1, 1}, {2, 1}, {3, 1}};
  a.assignment = {{"b1", {0, 0}},
                  {"b2", {0, 0}},
                  {"b3", {1, 0}},
                  {"b4", {1, 0}},
                  {"b5", {3, 0}}};
  return a;
}

std::optional<BlockGraph> builtin_model(const std::string& name) {
  if (name == "chains4") return make_chain_bank(4, 4, 250000);
  if (name == "stall") return make_dependency_stall(600000, 200000, 100000, 500000);
  return std::nullopt;
}

}  // namespace blockflow
