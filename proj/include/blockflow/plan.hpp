#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "blockflow/allocation.hpp"
#include "blockflow/graph.hpp"

namespace blockflow {

struct Step {
  enum class Kind { Compute, Send, Recv };
  Kind kind = Kind::Compute;
  std::string block;          // Compute
  std::uint32_t channel = 0;  // Send / Recv
};

// One-way link carrying one cross-worker edge value per run.
struct Channel {
  std::uint32_t id = 0;
  std::string src;
  std::string dst;
  WorkerRef from;
  WorkerRef to;
  std::uint32_t capacity = 1;
};

struct PlanWorker {
  std::uint32_t core = 0;
  std::uint32_t worker = 0;
  std::vector<Step> steps;
};

struct Relocation {
  std::string block;
  WorkerRef from;
  WorkerRef to;
};

// Self-contained executable form of a model + allocation: carries the
// block table and edges so a runtime needs nothing else.
struct ExecutionPlan {
  std::string model_name;
  std::vector<Block> blocks;
  std::vector<Edge> edges;
  std::vector<PlanWorker> workers;
  std::vector<Channel> channels;
  std::map<std::string, WorkerRef> inport_bindings;
  std::map<std::string, WorkerRef> outport_bindings;
  std::vector<Relocation> relocations;

  const PlanWorker* find_worker(WorkerRef ref) const;
};

// Expands an allocation into per-worker step lists. Delay blocks and all
// their consumers end up on one worker (relocations record the moves);
// every remaining cross-worker non-delay edge gets one channel, one Send
// right after the producing Compute and one Recv right before the
// consuming Compute.
ExecutionPlan build_plan(const BlockGraph& g, const Allocation& a);

std::string plan_to_json_text(const ExecutionPlan& plan);
ExecutionPlan plan_from_json_text(const std::string& text);
ExecutionPlan load_plan_file(const std::string& path);
void save_plan_file(const ExecutionPlan& plan, const std::string& path);

}  // namespace blockflow
