#include "blockflow/cost_profile.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "blockflow/errors.hpp"

namespace blockflow {

double block_cost(const Block& b, const CostProfile& p) {
  if (b.is_port()) return 0.0;
  double cost = 0.0;
  auto it = p.cycles_per_kind.find(b.kind);
  if (it != p.cycles_per_kind.end()) cost += it->second;
  if (b.kind == BlockKind::Compute)
    cost += static_cast<double>(b.weight) * p.cycles_per_weight_unit;
  return cost;
}

CostMap annotate_costs(const BlockGraph& g, const CostProfile& p) {
  CostMap costs;
  for (const Block& b : g.blocks) costs[b.id] = block_cost(b, p);
  return costs;
}

CostProfile profile_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IoError, std::string("bad profile JSON: ") + e.what());
  }
  CostProfile p;
  if (j.contains("cycles_per_kind")) {
    for (auto& [kind_name, cycles] : j.at("cycles_per_kind").items()) {
      auto kind = block_kind_from_name(kind_name);
      if (!kind) throw Error(ErrorCode::UnknownKind, "profile kind '" + kind_name + "'");
      double v = cycles.get<double>();
      if (v < 0) throw Error(ErrorCode::IoError, "negative cycles for " + kind_name);
      p.cycles_per_kind[*kind] = v;
    }
  }
  p.cycles_per_weight_unit = j.value("cycles_per_weight_unit", 0.0);
  p.comm_cycles_per_message = j.value("comm_cycles_per_message", 0.0);
  p.cycle_time_ns = j.value("cycle_time_ns", 1.0);
  p.switch_cycles = j.value("switch_cycles", 0.0);
  p.max_workers_per_core = j.value("max_workers_per_core", 32u);
  if (p.cycles_per_weight_unit < 0 || p.comm_cycles_per_message < 0 || p.switch_cycles < 0)
    throw Error(ErrorCode::IoError, "profile entries must be >= 0");
  if (p.cycle_time_ns <= 0) throw Error(ErrorCode::IoError, "cycle_time_ns must be > 0");
  if (p.max_workers_per_core < 1)
    throw Error(ErrorCode::IoError, "max_workers_per_core must be >= 1");
  return p;
}

std::string profile_to_json_text(const CostProfile& p) {
  nlohmann::json kinds = nlohmann::json::object();
  for (auto& [kind, cycles] : p.cycles_per_kind) kinds[block_kind_name(kind)] = cycles;
  nlohmann::json j{{"cycles_per_kind", kinds},
                   {"cycles_per_weight_unit", p.cycles_per_weight_unit},
                   {"comm_cycles_per_message", p.comm_cycles_per_message},
                   {"cycle_time_ns", p.cycle_time_ns},
                   {"switch_cycles", p.switch_cycles},
                   {"max_workers_per_core", p.max_workers_per_core}};
  return j.dump(2) + "\n";
}

CostProfile load_profile_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return profile_from_json_text(buf.str());
}

}  // namespace blockflow
