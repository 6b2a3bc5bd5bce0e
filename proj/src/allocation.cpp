#include "blockflow/allocation.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "blockflow/errors.hpp"

namespace blockflow {

namespace {

struct DepGraph {
  std::unordered_map<std::string, const Block*> by_id;
  // non-delay edges between non-port blocks, both directions
  std::unordered_map<std::string, std::vector<std::string>> succ;
  std::unordered_map<std::string, std::vector<std::string>> pred;
  // all out-edges (for ranks, which run through ports too)
  std::unordered_map<std::string, std::vector<std::string>> succ_all;
};

DepGraph dep_graph(const BlockGraph& g) {
  DepGraph d;
  for (const Block& b : g.blocks) d.by_id.emplace(b.id, &b);
  for (const Edge& e : g.edges) {
    const Block* src = d.by_id.at(e.src);
    const Block* dst = d.by_id.at(e.dst);
    if (src->kind == BlockKind::Delay) continue;  // previous-step value
    d.succ_all[e.src].push_back(e.dst);
    if (!src->is_port() && !dst->is_port()) {
      d.succ[e.src].push_back(e.dst);
      d.pred[e.dst].push_back(e.src);
    }
  }
  return d;
}

std::map<std::string, double> upward_ranks(const BlockGraph& g, const CostMap& costs,
                                           const CostProfile& p) {
  DepGraph d = dep_graph(g);
  std::vector<std::string> order = topological_order(g);
  std::map<std::string, double> rank;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const std::string& id = *it;
    double best = 0.0;
    for (const std::string& dst : d.succ_all[id])
      best = std::max(best, p.comm_cycles_per_message + rank.at(dst));
    rank[id] = costs.at(id) + best;
  }
  return rank;
}

}  // namespace

std::vector<std::string> schedule_priority(const BlockGraph& g, const CostMap& costs,
                                           const CostProfile& p) {
  auto rank = upward_ranks(g, costs, p);
  std::vector<std::string> prio;
  for (const Block& b : g.blocks)
    if (!b.is_port()) prio.push_back(b.id);
  std::sort(prio.begin(), prio.end(), [&](const std::string& a, const std::string& b) {
    double ra = rank.at(a), rb = rank.at(b);
    if (ra != rb) return ra > rb;
    return a < b;
  });
  return prio;
}

double modeled_makespan(const BlockGraph& g, const CostMap& costs, const CostProfile& p,
                        const std::map<std::string, std::uint32_t>& core_of) {
  DepGraph d = dep_graph(g);
  std::vector<std::string> prio = schedule_priority(g, costs, p);
  std::map<std::uint32_t, double> core_avail;
  std::map<std::string, double> finish;
  double makespan = 0.0;
  for (const std::string& id : prio) {
    std::uint32_t core = core_of.at(id);
    double start = core_avail[core];
    for (const std::string& src : d.pred[id]) {
      double ready = finish.at(src);
      if (core_of.at(src) != core) ready += p.comm_cycles_per_message;
      start = std::max(start, ready);
    }
    double end = start + costs.at(id);
    core_avail[core] = end;
    finish[id] = end;
    makespan = std::max(makespan, end);
  }
  return makespan;
}

Allocation allocate_cores(const BlockGraph& g, const CostMap& costs, const CostProfile& p,
                          std::uint32_t n_cores) {
  if (n_cores < 1) throw Error(ErrorCode::UsageError, "n_cores must be >= 1");
  DepGraph d = dep_graph(g);
  std::vector<std::string> prio = schedule_priority(g, costs, p);

  std::map<std::string, std::uint32_t> core_of;
  std::vector<double> core_avail(n_cores, 0.0);
  std::map<std::string, double> finish;
  double makespan = 0.0;
  double seq_total = 0.0;
  for (const std::string& id : prio) seq_total += costs.at(id);

  for (const std::string& id : prio) {
    std::uint32_t best_core = 0;
    double best_finish = 0.0;
    for (std::uint32_t c = 0; c < n_cores; ++c) {
      double start = core_avail[c];
      for (const std::string& src : d.pred[id]) {
        double ready = finish.at(src);
        if (core_of.at(src) != c) ready += p.comm_cycles_per_message;
        start = std::max(start, ready);
      }
      double end = start + costs.at(id);
      if (c == 0 || end < best_finish) {
        best_core = c;
        best_finish = end;
      }
    }
    core_of[id] = best_core;
    core_avail[best_core] = best_finish;
    finish[id] = best_finish;
    makespan = std::max(makespan, best_finish);
  }

  // Greedy earliest-finish can beat sequential only until communication
  // dominates; never ship a schedule modeled slower than one core.
  if (n_cores > 1 && makespan > seq_total) {
    for (auto& [id, core] : core_of) core = 0;
  }

  Allocation a;
  a.n_cores = n_cores;
  for (std::uint32_t c = 0; c < n_cores; ++c) a.n_workers_per_core[c] = 1;
  for (auto& [id, core] : core_of) a.assignment[id] = {core, 0};
  return a;
}

Allocation fold_allocation(const Allocation& a, std::uint32_t n_physical,
                           std::uint32_t max_workers_per_core) {
  if (n_physical < 1 || a.n_cores < n_physical)
    throw Error(ErrorCode::UsageError, "need virtual cores >= physical cores >= 1");
  for (const auto& [id, ref] : a.assignment)
    if (ref.worker != 0)
      throw Error(ErrorCode::UsageError, "fold input must be one worker per core");

  const std::uint32_t v_cores = a.n_cores;
  const std::uint32_t max_fold = (v_cores + n_physical - 1) / n_physical;
  if (max_fold > max_workers_per_core)
    throw Error(ErrorCode::TooManyWorkers,
                std::to_string(max_fold) + " workers/core exceeds cap of " +
                    std::to_string(max_workers_per_core));

  Allocation out;
  out.n_cores = n_physical;
  for (std::uint32_t c = 0; c < n_physical; ++c)
    out.n_workers_per_core[c] = (v_cores - c + n_physical - 1) / n_physical;
  for (const auto& [id, ref] : a.assignment)
    out.assignment[id] = {ref.core % n_physical, ref.core / n_physical};
  return out;
}

AllocationMetrics allocation_metrics(const BlockGraph& g, const CostMap& costs,
                                     const Allocation& a) {
  AllocationMetrics m;
  std::vector<double> load(a.n_cores, 0.0);
  double total = 0.0;
  for (const auto& [id, ref] : a.assignment) {
    double c = costs.at(id);
    load.at(ref.core) += c;
    total += c;
  }
  if (total > 0.0 && a.n_cores > 0) {
    double mean = total / a.n_cores;
    m.load_imbalance = *std::max_element(load.begin(), load.end()) / mean;
  }
  for (const Edge& e : g.edges) {
    auto si = a.assignment.find(e.src);
    auto di = a.assignment.find(e.dst);
    if (si == a.assignment.end() || di == a.assignment.end()) continue;
    if (si->second.core != di->second.core) ++m.cross_core_edges;
  }
  return m;
}

std::string allocation_to_json_text(const Allocation& a) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [id, ref] : a.assignment) j[id] = {ref.core, ref.worker};
  return j.dump(2) + "\n";
}

Allocation allocation_from_json_text(const std::string& text, std::uint32_t n_cores_hint) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IoError, std::string("bad allocation JSON: ") + e.what());
  }
  Allocation a;
  std::uint32_t max_core = 0;
  for (auto& [id, pair] : j.items()) {
    if (!pair.is_array() || pair.size() != 2)
      throw Error(ErrorCode::IoError, "allocation entry for '" + id + "' must be [core, worker]");
    WorkerRef ref{pair[0].get<std::uint32_t>(), pair[1].get<std::uint32_t>()};
    a.assignment[id] = ref;
    max_core = std::max(max_core, ref.core);
    auto& per_core = a.n_workers_per_core[ref.core];
    per_core = std::max(per_core, ref.worker + 1);
  }
  a.n_cores = std::max(n_cores_hint, a.assignment.empty() ? 1 : max_core + 1);
  for (std::uint32_t c = 0; c < a.n_cores; ++c)
    if (!a.n_workers_per_core.count(c)) a.n_workers_per_core[c] = 1;
  return a;
}

Allocation load_allocation_file(const std::string& path, std::uint32_t n_cores_hint) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return allocation_from_json_text(buf.str(), n_cores_hint);
}

}  // namespace blockflow
