#include "blockflow/plan.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "blockflow/errors.hpp"

namespace blockflow {

const PlanWorker* ExecutionPlan::find_worker(WorkerRef ref) const {
  for (const PlanWorker& w : workers)
    if (w.core == ref.core && w.worker == ref.worker) return &w;
  return nullptr;
}

namespace {

// Union-find over delay co-location constraints.
class Groups {
 public:
  std::string find(const std::string& id) {
    auto it = parent_.find(id);
    if (it == parent_.end() || it->second == id) {
      parent_[id] = id;
      return id;
    }
    std::string root = find(it->second);
    parent_[id] = root;
    return root;
  }

  void merge(const std::string& a, const std::string& b) {
    std::string ra = find(a), rb = find(b);
    if (ra == rb) return;
    // smaller root wins, keeping grouping deterministic
    if (rb < ra) std::swap(ra, rb);
    parent_[rb] = ra;
  }

 private:
  std::unordered_map<std::string, std::string> parent_;
};

}  // namespace

ExecutionPlan build_plan(const BlockGraph& g, const Allocation& a) {
  std::unordered_map<std::string, const Block*> by_id;
  for (const Block& b : g.blocks) by_id.emplace(b.id, &b);

  std::map<std::string, WorkerRef> where;
  for (const Block& b : g.blocks) {
    if (b.is_port()) continue;
    auto it = a.assignment.find(b.id);
    if (it == a.assignment.end())
      throw Error(ErrorCode::UsageError, "allocation does not cover block " + b.id);
    where[b.id] = it->second;
  }

  // Delay co-location: each Delay and the consumers of its state must sit
  // on one worker; spanning several delays merges their groups.
  Groups groups;
  std::vector<Edge> sorted_edges = g.edges;
  std::sort(sorted_edges.begin(), sorted_edges.end(), [](const Edge& x, const Edge& y) {
    return std::tie(x.src, x.dst, x.dst_port) < std::tie(y.src, y.dst, y.dst_port);
  });
  for (const Edge& e : sorted_edges) {
    if (by_id.at(e.src)->kind != BlockKind::Delay) continue;
    if (by_id.at(e.dst)->is_port()) continue;
    groups.merge(e.src, e.dst);
  }
  std::map<std::string, std::vector<std::string>> members;
  for (const auto& [id, ref] : where) members[groups.find(id)].push_back(id);

  ExecutionPlan plan;
  for (auto& [root, ids] : members) {
    // target worker: the one assigned to the smallest-id Delay of the group
    std::string anchor;
    for (const std::string& id : ids)
      if (by_id.at(id)->kind == BlockKind::Delay && (anchor.empty() || id < anchor))
        anchor = id;
    if (anchor.empty()) continue;
    WorkerRef target = where.at(anchor);
    std::sort(ids.begin(), ids.end());
    for (const std::string& id : ids) {
      if (where.at(id) != target) {
        plan.relocations.push_back({id, where.at(id), target});
        where[id] = target;
      }
    }
  }

  plan.model_name = g.name;
  plan.blocks = g.blocks;
  plan.edges = g.edges;

  // Worker list covers every (core, worker) slot of the allocation, even
  // ones left without blocks by relocation or folding of empty cores.
  for (std::uint32_t c = 0; c < a.n_cores; ++c) {
    std::uint32_t n = 1;
    auto it = a.n_workers_per_core.find(c);
    if (it != a.n_workers_per_core.end()) n = it->second;
    for (std::uint32_t w = 0; w < n; ++w) plan.workers.push_back({c, w, {}});
  }
  auto worker_of = [&](WorkerRef ref) -> PlanWorker& {
    for (PlanWorker& w : plan.workers)
      if (w.core == ref.core && w.worker == ref.worker) return w;
    throw Error(ErrorCode::UsageError, "allocation names a worker outside the core map");
  };

  // in-edges per block sorted by port
  std::map<std::string, std::vector<std::pair<std::uint32_t, std::string>>> inputs_of;
  for (const Edge& e : g.edges) inputs_of[e.dst].push_back({e.dst_port, e.src});
  for (auto& [id, ins] : inputs_of) std::sort(ins.begin(), ins.end());

  // Channels in (consumer topo position, port) order.
  std::vector<std::string> order = topological_order(g);
  std::map<std::string, std::vector<std::uint32_t>> recv_before;  // block -> channel ids
  std::map<std::string, std::vector<std::uint32_t>> send_after;
  for (const std::string& id : order) {
    const Block& b = *by_id.at(id);
    if (b.is_port()) continue;
    auto ins = inputs_of.find(id);
    if (ins == inputs_of.end()) continue;
    for (const auto& [port, src] : ins->second) {
      const Block& sb = *by_id.at(src);
      if (sb.is_port() || sb.kind == BlockKind::Delay) continue;
      WorkerRef from = where.at(src), to = where.at(id);
      if (from == to) continue;
      Channel ch;
      ch.id = static_cast<std::uint32_t>(plan.channels.size());
      ch.src = src;
      ch.dst = id;
      ch.from = from;
      ch.to = to;
      plan.channels.push_back(ch);
      recv_before[id].push_back(ch.id);
      send_after[src].push_back(ch.id);
    }
  }

  for (const std::string& id : order) {
    const Block& b = *by_id.at(id);
    if (b.is_port()) continue;
    PlanWorker& w = worker_of(where.at(id));
    for (std::uint32_t ch : recv_before[id]) w.steps.push_back({Step::Kind::Recv, "", ch});
    w.steps.push_back({Step::Kind::Compute, id, 0});
    for (std::uint32_t ch : send_after[id]) w.steps.push_back({Step::Kind::Send, "", ch});
  }

  // Bindings: inports to the lowest worker consuming them, outports to
  // the worker producing their value.
  WorkerRef lowest{plan.workers.front().core, plan.workers.front().worker};
  for (const Block& b : g.blocks) {
    if (b.kind != BlockKind::Inport) continue;
    WorkerRef best;
    bool found = false;
    for (const Edge& e : sorted_edges) {
      if (e.src != b.id) continue;
      const Block& dst = *by_id.at(e.dst);
      if (dst.is_port()) continue;
      WorkerRef ref = where.at(e.dst);
      if (!found || ref < best) {
        best = ref;
        found = true;
      }
    }
    plan.inport_bindings[b.id] = found ? best : lowest;
  }
  for (const Block& b : g.blocks) {
    if (b.kind != BlockKind::Outport) continue;
    auto ins = inputs_of.find(b.id);
    if (ins == inputs_of.end() || ins->second.empty())
      throw Error(ErrorCode::UsageError, "outport " + b.id + " has no input edge");
    const std::string& src = ins->second.front().second;
    const Block& sb = *by_id.at(src);
    plan.outport_bindings[b.id] =
        sb.kind == BlockKind::Inport ? plan.inport_bindings.at(src) : where.at(src);
  }
  return plan;
}

namespace {

nlohmann::json step_to_json(const Step& s) {
  switch (s.kind) {
    case Step::Kind::Compute: return nlohmann::json::array({"compute", s.block});
    case Step::Kind::Send: return nlohmann::json::array({"send", s.channel});
    case Step::Kind::Recv: return nlohmann::json::array({"recv", s.channel});
  }
  throw Error(ErrorCode::IoError, "bad step kind");
}

Step step_from_json(const nlohmann::json& j) {
  Step s;
  const std::string kind = j.at(0).get<std::string>();
  if (kind == "compute") {
    s.kind = Step::Kind::Compute;
    s.block = j.at(1).get<std::string>();
  } else if (kind == "send") {
    s.kind = Step::Kind::Send;
    s.channel = j.at(1).get<std::uint32_t>();
  } else if (kind == "recv") {
    s.kind = Step::Kind::Recv;
    s.channel = j.at(1).get<std::uint32_t>();
  } else {
    throw Error(ErrorCode::IoError, "unknown step kind '" + kind + "'");
  }
  return s;
}

nlohmann::json block_to_json(const Block& b) {
  nlohmann::json j{{"id", b.id}, {"kind", block_kind_name(b.kind)}};
  if (b.kind == BlockKind::Const) j["c"] = b.const_value;
  if (b.kind == BlockKind::Gain) j["k"] = b.gain;
  if (b.kind == BlockKind::Compute) j["w"] = b.weight;
  return j;
}

Block block_from_json(const nlohmann::json& j) {
  Block b;
  b.id = j.at("id").get<std::string>();
  auto kind = block_kind_from_name(j.at("kind").get<std::string>());
  if (!kind) throw Error(ErrorCode::UnknownKind, "plan block " + b.id);
  b.kind = *kind;
  if (b.kind == BlockKind::Const) b.const_value = j.at("c").get<double>();
  if (b.kind == BlockKind::Gain) b.gain = j.at("k").get<double>();
  if (b.kind == BlockKind::Compute) b.weight = j.at("w").get<std::uint64_t>();
  return b;
}

nlohmann::json bindings_to_json(const std::map<std::string, WorkerRef>& m) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [id, ref] : m) j[id] = {ref.core, ref.worker};
  return j;
}

std::map<std::string, WorkerRef> bindings_from_json(const nlohmann::json& j) {
  std::map<std::string, WorkerRef> m;
  for (auto& [id, pair] : j.items())
    m[id] = {pair.at(0).get<std::uint32_t>(), pair.at(1).get<std::uint32_t>()};
  return m;
}

}  // namespace

std::string plan_to_json_text(const ExecutionPlan& plan) {
  nlohmann::json j;
  j["model"] = plan.model_name;
  j["blocks"] = nlohmann::json::array();
  for (const Block& b : plan.blocks) j["blocks"].push_back(block_to_json(b));
  j["edges"] = nlohmann::json::array();
  for (const Edge& e : plan.edges)
    j["edges"].push_back(nlohmann::json::array({e.src, e.dst, e.dst_port}));
  j["workers"] = nlohmann::json::array();
  for (const PlanWorker& w : plan.workers) {
    nlohmann::json steps = nlohmann::json::array();
    for (const Step& s : w.steps) steps.push_back(step_to_json(s));
    j["workers"].push_back({{"core", w.core}, {"worker", w.worker}, {"steps", steps}});
  }
  j["channels"] = nlohmann::json::array();
  for (const Channel& c : plan.channels) {
    j["channels"].push_back({{"id", c.id},
                             {"edge", {c.src, c.dst}},
                             {"from", {c.from.core, c.from.worker}},
                             {"to", {c.to.core, c.to.worker}},
                             {"capacity", c.capacity}});
  }
  j["inports"] = bindings_to_json(plan.inport_bindings);
  j["outports"] = bindings_to_json(plan.outport_bindings);
  j["relocations"] = nlohmann::json::array();
  for (const Relocation& r : plan.relocations) {
    j["relocations"].push_back({{"block", r.block},
                                {"from", {r.from.core, r.from.worker}},
                                {"to", {r.to.core, r.to.worker}}});
  }
  return j.dump(2) + "\n";
}

ExecutionPlan plan_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IoError, std::string("bad plan JSON: ") + e.what());
  }
  try {
    ExecutionPlan plan;
    plan.model_name = j.value("model", "");
    for (const auto& jb : j.at("blocks")) plan.blocks.push_back(block_from_json(jb));
    for (const auto& je : j.at("edges"))
      plan.edges.push_back(
          {je.at(0).get<std::string>(), je.at(1).get<std::string>(), je.at(2).get<std::uint32_t>()});
    for (const auto& jw : j.at("workers")) {
      PlanWorker w;
      w.core = jw.at("core").get<std::uint32_t>();
      w.worker = jw.at("worker").get<std::uint32_t>();
      for (const auto& js : jw.at("steps")) w.steps.push_back(step_from_json(js));
      plan.workers.push_back(std::move(w));
    }
    for (const auto& jc : j.at("channels")) {
      Channel c;
      c.id = jc.at("id").get<std::uint32_t>();
      c.src = jc.at("edge").at(0).get<std::string>();
      c.dst = jc.at("edge").at(1).get<std::string>();
      c.from = {jc.at("from").at(0).get<std::uint32_t>(), jc.at("from").at(1).get<std::uint32_t>()};
      c.to = {jc.at("to").at(0).get<std::uint32_t>(), jc.at("to").at(1).get<std::uint32_t>()};
      c.capacity = jc.at("capacity").get<std::uint32_t>();
      plan.channels.push_back(std::move(c));
    }
    plan.inport_bindings = bindings_from_json(j.at("inports"));
    plan.outport_bindings = bindings_from_json(j.at("outports"));
    if (j.contains("relocations")) {
      for (const auto& jr : j.at("relocations")) {
        Relocation r;
        r.block = jr.at("block").get<std::string>();
        r.from = {jr.at("from").at(0).get<std::uint32_t>(), jr.at("from").at(1).get<std::uint32_t>()};
        r.to = {jr.at("to").at(0).get<std::uint32_t>(), jr.at("to").at(1).get<std::uint32_t>()};
        plan.relocations.push_back(std::move(r));
      }
    }
    return plan;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IoError, std::string("bad plan JSON: ") + e.what());
  }
}

ExecutionPlan load_plan_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return plan_from_json_text(buf.str());
}

void save_plan_file(const ExecutionPlan& plan, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << plan_to_json_text(plan);
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

}  // namespace blockflow
