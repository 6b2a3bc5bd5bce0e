#include "blockflow/graph.hpp"

#include <algorithm>
#include <queue>
#include <set>
#include <unordered_map>

#include "blockflow/errors.hpp"

namespace blockflow {

const char* block_kind_name(BlockKind kind) {
  switch (kind) {
    case BlockKind::Inport: return "Inport";
    case BlockKind::Outport: return "Outport";
    case BlockKind::Const: return "Const";
    case BlockKind::Gain: return "Gain";
    case BlockKind::Sum: return "Sum";
    case BlockKind::Delay: return "Delay";
    case BlockKind::Compute: return "Compute";
  }
  return "?";
}

std::optional<BlockKind> block_kind_from_name(const std::string& name) {
  static const std::unordered_map<std::string, BlockKind> table = {
      {"Inport", BlockKind::Inport},   {"Outport", BlockKind::Outport},
      {"Const", BlockKind::Const},     {"Gain", BlockKind::Gain},
      {"Sum", BlockKind::Sum},         {"Delay", BlockKind::Delay},
      {"Compute", BlockKind::Compute},
  };
  auto it = table.find(name);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

const Block* BlockGraph::find_block(const std::string& id) const {
  for (const Block& b : blocks)
    if (b.id == id) return &b;
  return nullptr;
}

const Block& BlockGraph::block_at(const std::string& id) const {
  const Block* b = find_block(id);
  if (!b) throw Error(ErrorCode::DanglingEdge, "no such block: " + id);
  return *b;
}

namespace {

std::string edge_label(const Edge& e) {
  return e.src + "->" + e.dst + "#" + std::to_string(e.dst_port);
}

struct Degrees {
  std::unordered_map<std::string, std::size_t> in;
  std::unordered_map<std::string, std::size_t> out;
};

Degrees count_degrees(const BlockGraph& g) {
  Degrees d;
  for (const Block& b : g.blocks) {
    d.in[b.id] = 0;
    d.out[b.id] = 0;
  }
  for (const Edge& e : g.edges) {
    auto si = d.out.find(e.src);
    auto di = d.in.find(e.dst);
    if (si != d.out.end()) ++si->second;
    if (di != d.in.end()) ++di->second;
  }
  return d;
}

}  // namespace

ValidationReport validate_graph(const BlockGraph& g) {
  ValidationReport report;
  auto add = [&](const std::string& rule, const std::string& subject) {
    report.violations.push_back({rule, subject});
  };

  std::unordered_map<std::string, const Block*> by_id;
  for (const Block& b : g.blocks) {
    if (!by_id.emplace(b.id, &b).second) add("duplicate block id", b.id);
  }

  bool endpoints_ok = true;
  std::set<std::pair<std::string, std::uint32_t>> seen_ports;
  for (const Edge& e : g.edges) {
    if (!by_id.count(e.src)) {
      add("edge source missing", edge_label(e));
      endpoints_ok = false;
    }
    if (!by_id.count(e.dst)) {
      add("edge destination missing", edge_label(e));
      endpoints_ok = false;
    }
    if (!seen_ports.emplace(e.dst, e.dst_port).second)
      add("duplicate destination port", edge_label(e));
    if (e.src == e.dst) {
      auto it = by_id.find(e.src);
      if (it != by_id.end() && it->second->kind != BlockKind::Delay)
        add("self-loop without Delay", edge_label(e));
    }
  }

  Degrees deg = count_degrees(g);
  for (const Block& b : g.blocks) {
    std::size_t in = deg.in[b.id];
    std::size_t out = deg.out[b.id];
    switch (b.kind) {
      case BlockKind::Inport:
        if (in != 0) add("Inport requires 0 inputs", b.id);
        if (out < 1) add("Inport requires >=1 output", b.id);
        break;
      case BlockKind::Outport:
        if (in != 1) add("Outport requires exactly 1 input", b.id);
        if (out != 0) add("Outport requires 0 outputs", b.id);
        break;
      case BlockKind::Const:
        if (in != 0) add("Const requires 0 inputs", b.id);
        break;
      case BlockKind::Gain:
        if (in != 1) add("Gain requires exactly 1 input", b.id);
        break;
      case BlockKind::Delay:
        if (in != 1) add("Delay requires exactly 1 input", b.id);
        break;
      case BlockKind::Sum:
        if (in < 2) add("Sum requires >=2 inputs", b.id);
        break;
      case BlockKind::Compute:
        if (in != 1) add("Compute requires exactly 1 input", b.id);
        break;
    }
  }

  // Algebraic-loop check on the subgraph without Delay-sourced edges.
  if (endpoints_ok) {
    std::unordered_map<std::string, std::size_t> indeg;
    std::unordered_map<std::string, std::vector<std::string>> succ;
    for (const Block& b : g.blocks) indeg[b.id] = 0;
    for (const Edge& e : g.edges) {
      if (by_id.at(e.src)->kind == BlockKind::Delay) continue;
      succ[e.src].push_back(e.dst);
      ++indeg[e.dst];
    }
    std::queue<std::string> ready;
    for (auto& [id, d] : indeg)
      if (d == 0) ready.push(id);
    std::size_t emitted = 0;
    while (!ready.empty()) {
      std::string id = ready.front();
      ready.pop();
      ++emitted;
      for (const std::string& d : succ[id])
        if (--indeg[d] == 0) ready.push(d);
    }
    if (emitted != g.blocks.size()) {
      std::vector<std::string> stuck;
      for (auto& [id, d] : indeg)
        if (d > 0) stuck.push_back(id);
      std::sort(stuck.begin(), stuck.end());
      std::string subject;
      for (const std::string& s : stuck) {
        if (!subject.empty()) subject += ",";
        subject += s;
      }
      add("algebraic loop", subject);
    }
  }

  return report;
}

std::vector<std::string> topological_order(const BlockGraph& g) {
  std::unordered_map<std::string, const Block*> by_id;
  for (const Block& b : g.blocks) by_id.emplace(b.id, &b);

  std::unordered_map<std::string, std::size_t> indeg;
  std::unordered_map<std::string, std::vector<std::string>> succ;
  for (const Block& b : g.blocks) indeg[b.id] = 0;
  for (const Edge& e : g.edges) {
    auto it = by_id.find(e.src);
    if (it == by_id.end() || !by_id.count(e.dst))
      throw Error(ErrorCode::DanglingEdge, e.src + "->" + e.dst);
    if (it->second->kind == BlockKind::Delay) continue;
    succ[e.src].push_back(e.dst);
    ++indeg[e.dst];
  }

  std::set<std::string> ready;
  for (auto& [id, d] : indeg)
    if (d == 0) ready.insert(id);

  std::vector<std::string> order;
  order.reserve(g.blocks.size());
  while (!ready.empty()) {
    std::string id = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(id);
    for (const std::string& d : succ[id])
      if (--indeg[d] == 0) ready.insert(d);
  }
  if (order.size() != g.blocks.size())
    throw Error(ErrorCode::CycleDetected, "algebraic loop in " + g.name);
  return order;
}

SequentialExecutor::SequentialExecutor(const BlockGraph& g)
    : graph_(g), order_(topological_order(g)) {
  for (const Block& b : graph_.blocks)
    if (b.kind == BlockKind::Delay) delay_state_[b.id] = 0.0;
  for (const Edge& e : graph_.edges)
    inputs_of_[e.dst].push_back({e.dst_port, e.src});
  for (auto& [id, ins] : inputs_of_) std::sort(ins.begin(), ins.end());
}

void SequentialExecutor::reset() {
  for (auto& [id, state] : delay_state_) state = 0.0;
}

std::map<std::string, double> SequentialExecutor::step(
    const std::map<std::string, double>& inputs) {
  std::unordered_map<std::string, double> value;
  value.reserve(graph_.blocks.size());

  // Delay outputs are the states captured at step start.
  for (const auto& [id, state] : delay_state_) value[id] = state;

  std::map<std::string, double> outputs;
  for (const std::string& id : order_) {
    const Block& b = graph_.block_at(id);
    auto input_at = [&](std::size_t i) -> double {
      const auto& ins = inputs_of_.at(id);
      return value.at(ins[i].second);
    };
    switch (b.kind) {
      case BlockKind::Inport: {
        auto it = inputs.find(id);
        if (it == inputs.end())
          throw Error(ErrorCode::MissingInput, "no input for inport " + id);
        value[id] = it->second;
        break;
      }
      case BlockKind::Const:
        value[id] = b.const_value;
        break;
      case BlockKind::Gain:
        value[id] = b.gain * input_at(0);
        break;
      case BlockKind::Sum: {
        // Fixed port-order accumulation; never reassociated.
        const auto& ins = inputs_of_.at(id);
        double acc = value.at(ins[0].second);
        for (std::size_t i = 1; i < ins.size(); ++i)
          acc += value.at(ins[i].second);
        value[id] = acc;
        break;
      }
      case BlockKind::Compute:
        value[id] = input_at(0) + static_cast<double>(b.weight) * 1e-9;
        break;
      case BlockKind::Delay:
        // Output already in `value`; nothing to compute here.
        break;
      case BlockKind::Outport:
        outputs[id] = input_at(0);
        break;
    }
  }

  // Latch delay inputs after the whole step so ordering cannot matter.
  for (auto& [id, state] : delay_state_) {
    const auto& ins = inputs_of_.at(id);
    state = value.at(ins[0].second);
  }
  return outputs;
}

std::map<std::string, std::vector<double>> sequential_execute(
    const BlockGraph& g, const std::map<std::string, double>& inputs,
    std::size_t steps) {
  SequentialExecutor exec(g);
  std::map<std::string, std::vector<double>> series;
  for (const Block& b : g.blocks)
    if (b.kind == BlockKind::Outport) series[b.id] = {};
  for (std::size_t s = 0; s < steps; ++s) {
    auto out = exec.step(inputs);
    for (auto& [id, v] : out) series[id].push_back(v);
  }
  return series;
}

}  // namespace blockflow
