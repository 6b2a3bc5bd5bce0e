#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace blockflow {

enum class BlockKind { Inport, Outport, Const, Gain, Sum, Delay, Compute };

const char* block_kind_name(BlockKind kind);
std::optional<BlockKind> block_kind_from_name(const std::string& name);

// One computation unit. Parameter fields are meaningful only for the
// matching kind: `const_value` for Const, `gain` for Gain, `weight`
// (synthetic cycles) for Compute. Delay state lives in the executor,
// initialized to 0.
struct Block {
  std::string id;
  BlockKind kind = BlockKind::Compute;
  double const_value = 0.0;
  double gain = 1.0;
  std::uint64_t weight = 0;

  bool is_port() const {
    return kind == BlockKind::Inport || kind == BlockKind::Outport;
  }
};

struct Edge {
  std::string src;
  std::string dst;
  std::uint32_t dst_port = 0;
};

struct BlockGraph {
  std::string name;
  std::vector<Block> blocks;
  std::vector<Edge> edges;

  const Block* find_block(const std::string& id) const;
  const Block& block_at(const std::string& id) const;
};

struct Violation {
  std::string rule;
  std::string subject;  // block or edge id ("src->dst#port")
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

// Checks every Block/Edge/BlockGraph invariant; violations are data,
// not errors.
ValidationReport validate_graph(const BlockGraph& g);

// Deterministic order over the subgraph that drops edges originating at
// Delay blocks (those carry the previous-step state, not a same-step
// dependency). Ties break lexicographically by id.
// Throws Error(CycleDetected) on an algebraic loop.
std::vector<std::string> topological_order(const BlockGraph& g);

// Single-step evaluator used as the correctness oracle for every parallel
// execution path. Delay blocks emit the state captured at step start and
// latch their input at step end, so evaluation order cannot change results.
class SequentialExecutor {
 public:
  explicit SequentialExecutor(const BlockGraph& g);

  // inputs must cover every Inport; throws Error(MissingInput) otherwise.
  std::map<std::string, double> step(const std::map<std::string, double>& inputs);

  void reset();

 private:
  const BlockGraph graph_;
  std::vector<std::string> order_;
  std::map<std::string, double> delay_state_;
  // per block: in-edge (src, port) pairs sorted by port
  std::map<std::string, std::vector<std::pair<std::uint32_t, std::string>>> inputs_of_;
};

std::map<std::string, std::vector<double>> sequential_execute(
    const BlockGraph& g, const std::map<std::string, double>& inputs,
    std::size_t steps);

}  // namespace blockflow
