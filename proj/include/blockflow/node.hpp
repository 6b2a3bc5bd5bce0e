#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "blockflow/bus.hpp"
#include "blockflow/cost_profile.hpp"
#include "blockflow/node_config.hpp"
#include "blockflow/plan.hpp"
#include "blockflow/time_sync.hpp"

namespace blockflow {

struct RunResult {
  std::uint64_t run_index = 0;
  std::int64_t trigger_stamp_ns = 0;
  std::int64_t publish_stamp_ns = 0;
  std::map<std::string, double> inputs;   // snapshot the run consumed
  std::map<std::string, double> outputs;  // outport id -> value
};

struct NodeStats {
  std::uint64_t runs = 0;
  std::uint64_t coalesced_triggers = 0;
  std::uint64_t queue_drops = 0;       // bounded subscription queues
  std::uint64_t sync_drops = 0;        // sync matcher capacity drops
  std::uint64_t skipped_incomplete = 0;  // triggers before all inports latched
  std::uint64_t pin_warnings = 0;
};

std::string node_stats_to_json_text(const NodeStats& stats);

struct NodeOptions {
  bool pinning = true;
  // Called on the run thread after each publish; must not throw.
  std::function<void(const RunResult&)> observer;
};

// One running node: subscriptions latch into the data area, the pattern
// decides when to trigger, pinned workers execute the plan, and outport
// values are published with a fresh stamp. Runs are serialized; at most
// one trigger is held pending while a run is in flight (latest snapshot
// wins, overwrites are counted as coalesced).
class Node {
 public:
  static std::unique_ptr<Node> start(Bus& bus, const ExecutionPlan& plan,
                                     const NodeConfig& nc, const CostProfile& profile,
                                     NodeOptions options = {});
  ~Node();

  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;

  // Drains workers after the current run; idempotent.
  NodeStats stop();
  NodeStats stats() const;

  std::uint64_t completed_runs() const { return runs_.load(); }
  bool wait_for_runs(std::uint64_t count, std::chrono::nanoseconds timeout);

 private:
  struct RtChannel;
  struct RtStep;
  struct WorkerCtx;
  struct OutportInfo {
    std::string id;
    std::uint32_t src_index = 0;
    bool from_snapshot = false;  // direct Inport -> Outport pass-through
  };
  struct Pending {
    std::vector<double> values;             // by block index (inports)
    std::map<std::string, double> by_name;  // for RunResult.inputs
    std::int64_t trigger_stamp_ns = 0;
  };

  Node() = default;

  void compile(const ExecutionPlan& plan);
  void worker_main(WorkerCtx& ctx);
  void run_main();
  void dispatch_main();
  void timer_main();
  void handle_message(const Message& msg);
  void latch(std::uint32_t block_index, double value);
  void try_trigger();
  void execute_run(Pending p);

  // immutable after start()
  ExecutionPlan plan_;
  NodeConfig config_;
  CostProfile profile_;
  NodeOptions options_;
  double comm_ns_ = 0.0;
  std::vector<Block> blocks_;
  std::map<std::string, std::uint32_t> block_index_;
  std::vector<std::unique_ptr<RtChannel>> channels_;
  std::vector<std::unique_ptr<WorkerCtx>> worker_ctx_;
  std::vector<OutportInfo> outports_;
  std::vector<std::uint32_t> inport_indices_;

  Bus* bus_ = nullptr;
  std::vector<std::shared_ptr<Subscription>> subscriptions_;
  std::map<std::string, Bus::Publisher> publishers_;  // keyed by outport id
  std::map<std::string, std::string> topic_to_inport_;

  // data area + sync queues (state_mutex_)
  mutable std::mutex state_mutex_;
  std::vector<std::optional<double>> latched_;  // by block index
  std::size_t latched_count_ = 0;
  SyncQueues sync_queues_;

  // trigger slot (trigger_mutex_)
  std::mutex trigger_mutex_;
  std::condition_variable trigger_cv_;
  std::optional<Pending> pending_;
  bool stop_run_thread_ = false;

  // run coordination (run_mutex_)
  std::mutex run_mutex_;
  std::condition_variable start_cv_;
  std::condition_variable done_cv_;
  std::uint64_t run_generation_ = 0;
  std::size_t workers_done_ = 0;
  bool stop_workers_ = false;
  std::vector<double> values_;      // block outputs, by block index
  std::vector<double> recv_store_;  // received channel values, by channel id
  std::vector<double> snapshot_;    // inport values, by block index
  std::vector<double> delay_state_;

  // dispatcher (dispatch_mutex_)
  std::mutex dispatch_mutex_;
  std::condition_variable dispatch_cv_;
  bool data_ready_ = false;
  bool stop_dispatcher_ = false;

  // timer (timer_mutex_)
  std::mutex timer_mutex_;
  std::condition_variable timer_cv_;
  bool stop_timer_ = false;

  // run completion watchers
  mutable std::mutex runs_mutex_;
  std::condition_variable runs_cv_;

  std::atomic<std::uint64_t> runs_{0};
  std::atomic<std::uint64_t> coalesced_{0};
  std::atomic<std::uint64_t> sync_drops_{0};
  std::atomic<std::uint64_t> skipped_incomplete_{0};
  std::atomic<std::uint64_t> pin_warnings_{0};

  std::vector<std::thread> worker_threads_;
  std::thread run_thread_;
  std::thread dispatch_thread_;
  std::thread timer_thread_;

  bool pin_enabled_ = true;
  bool stopped_ = false;
  NodeStats final_stats_;
  std::mutex stop_mutex_;
};

inline std::unique_ptr<Node> run_node(Bus& bus, const ExecutionPlan& plan,
                                      const NodeConfig& nc, const CostProfile& profile,
                                      NodeOptions options = {}) {
  return Node::start(bus, plan, nc, profile, std::move(options));
}

inline NodeStats stop_node(Node& node) { return node.stop(); }

}  // namespace blockflow
