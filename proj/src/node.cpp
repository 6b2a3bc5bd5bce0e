#include "blockflow/node.hpp"

#include <pthread.h>

#include <algorithm>
#include <cstdlib>

#include <json.hpp>

#include "blockflow/errors.hpp"
#include "blockflow/plan_sim.hpp"

namespace blockflow {

std::string node_stats_to_json_text(const NodeStats& stats) {
  nlohmann::json j{{"runs", stats.runs},
                   {"coalesced_triggers", stats.coalesced_triggers},
                   {"queue_drops", stats.queue_drops},
                   {"sync_drops", stats.sync_drops},
                   {"skipped_incomplete", stats.skipped_incomplete},
                   {"pin_warnings", stats.pin_warnings}};
  return j.dump(2) + "\n";
}

// Capacity-bounded value channel with a transfer delay: a message becomes
// receivable comm_ns after the send. Blocked waits sleep on the condition
// variable, so a waiting worker never occupies its core.
struct Node::RtChannel {
  std::mutex mutex;
  std::condition_variable cv;
  std::deque<std::pair<double, std::int64_t>> queue;  // value, available_at_ns
  std::uint32_t capacity = 1;
  bool closed = false;

  void send(double value, std::int64_t available_at) {
    std::unique_lock lock(mutex);
    cv.wait(lock, [&] { return queue.size() < capacity || closed; });
    if (closed) throw Error(ErrorCode::BusClosed, "channel closed");
    queue.push_back({value, available_at});
    cv.notify_all();
  }

  double recv() {
    std::unique_lock lock(mutex);
    cv.wait(lock, [&] { return !queue.empty() || closed; });
    if (closed) throw Error(ErrorCode::BusClosed, "channel closed");
    const std::int64_t available_at = queue.front().second;
    if (steady_now_ns() < available_at) {
      auto deadline = std::chrono::steady_clock::time_point(
          std::chrono::nanoseconds(available_at));
      cv.wait_until(lock, deadline, [&] { return closed; });
      if (closed) throw Error(ErrorCode::BusClosed, "channel closed");
    }
    double value = queue.front().first;
    queue.pop_front();
    cv.notify_all();
    return value;
  }

  void close() {
    {
      std::lock_guard lock(mutex);
      closed = true;
    }
    cv.notify_all();
  }
};

struct ValueSource {
  enum class Kind { SnapshotInput, LocalValue, ChannelValue, DelayState };
  Kind kind = Kind::LocalValue;
  std::uint32_t index = 0;
};

struct Node::RtStep {
  Step::Kind kind = Step::Kind::Compute;
  std::uint32_t channel = 0;
  // Compute fields
  std::uint32_t block = 0;
  BlockKind block_kind = BlockKind::Compute;
  double gain = 1.0;
  double const_value = 0.0;
  double weight_effect = 0.0;
  std::int64_t busy_ns = 0;
  std::uint32_t delay_slot = 0;
  bool is_delay = false;
  std::vector<ValueSource> sources;
};

struct Node::WorkerCtx {
  std::uint32_t core = 0;
  std::uint32_t worker = 0;
  std::vector<RtStep> steps;
};

namespace {

void busy_spin(std::int64_t ns) {
  if (ns <= 0) return;
  const std::int64_t deadline = steady_now_ns() + ns;
  while (steady_now_ns() < deadline) {
    // burn cycles; emulated block load must contend for the core
  }
}

bool pin_to_core(std::uint32_t core) {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  cpu_set_t set;
  CPU_ZERO(&set);
  CPU_SET(core % hw, &set);
  return pthread_setaffinity_np(pthread_self(), sizeof(set), &set) == 0;
}

}  // namespace

std::unique_ptr<Node> Node::start(Bus& bus, const ExecutionPlan& plan, const NodeConfig& nc,
                                  const CostProfile& profile, NodeOptions options) {
  nc.validate();
  if (plan.workers.empty())
    throw Error(ErrorCode::PatternMismatch, "plan has no workers");
  DeadlockReport dl = check_deadlock_free(plan);
  if (!dl.ok) throw Error(ErrorCode::DeadlockedPlan, "plan fails the deadlock check");

  for (const auto& [inport, ref] : plan.inport_bindings) {
    bool bound = false;
    for (const auto& [topic, in] : nc.input_topics) bound |= in == inport;
    if (!bound) throw Error(ErrorCode::BindingMissing, "inport '" + inport + "' has no topic");
  }
  for (const auto& [topic, inport] : nc.input_topics)
    if (!plan.inport_bindings.count(inport))
      throw Error(ErrorCode::BindingMissing,
                  "topic '" + topic + "' names unknown inport '" + inport + "'");
  for (const auto& [outport, ref] : plan.outport_bindings)
    if (!nc.output_topics.count(outport))
      throw Error(ErrorCode::BindingMissing, "outport '" + outport + "' has no topic");
  for (const auto& [outport, topic] : nc.output_topics)
    if (!plan.outport_bindings.count(outport))
      throw Error(ErrorCode::BindingMissing,
                  "topic '" + topic + "' names unknown outport '" + outport + "'");

  std::unique_ptr<Node> node(new Node());
  node->plan_ = plan;
  node->config_ = nc;
  node->profile_ = profile;
  node->options_ = std::move(options);
  node->bus_ = &bus;
  node->comm_ns_ = profile.comm_ns();
  const char* no_pin = std::getenv("BLOCKFLOW_NO_PIN");
  node->pin_enabled_ = node->options_.pinning && !(no_pin && std::string(no_pin) == "1");

  node->compile(plan);

  for (const auto& [topic, inport] : nc.input_topics) {
    node->topic_to_inport_[topic] = inport;
    if (nc.pattern == PatternKind::EventTimeSync) node->sync_queues_[topic] = {};
    auto sub = bus.subscribe(topic, nc.queue_depth);
    Node* raw = node.get();
    sub->set_listener([raw] {
      {
        std::lock_guard lock(raw->dispatch_mutex_);
        raw->data_ready_ = true;
      }
      raw->dispatch_cv_.notify_one();
    });
    node->subscriptions_.push_back(std::move(sub));
  }
  for (const auto& [outport, topic] : nc.output_topics)
    node->publishers_.emplace(outport, bus.advertise(topic));

  node->run_thread_ = std::thread([raw = node.get()] { raw->run_main(); });
  node->dispatch_thread_ = std::thread([raw = node.get()] { raw->dispatch_main(); });
  if (nc.pattern == PatternKind::TimerDriven)
    node->timer_thread_ = std::thread([raw = node.get()] { raw->timer_main(); });
  return node;
}

void Node::compile(const ExecutionPlan& plan) {
  blocks_ = plan.blocks;
  for (std::uint32_t i = 0; i < blocks_.size(); ++i) block_index_[blocks_[i].id] = i;

  CostMap costs = annotate_costs(BlockGraph{plan.model_name, plan.blocks, plan.edges}, profile_);

  std::uint32_t delay_slots = 0;
  std::map<std::string, std::uint32_t> delay_slot_of;
  for (const Block& b : blocks_)
    if (b.kind == BlockKind::Delay) delay_slot_of[b.id] = delay_slots++;
  delay_state_.assign(delay_slots, 0.0);

  for (const Channel& c : plan.channels) {
    auto ch = std::make_unique<RtChannel>();
    ch->capacity = c.capacity;
    channels_.push_back(std::move(ch));
  }

  std::map<std::string, std::vector<std::pair<std::uint32_t, std::string>>> inputs_of;
  for (const Edge& e : plan.edges) inputs_of[e.dst].push_back({e.dst_port, e.src});
  for (auto& [id, ins] : inputs_of) std::sort(ins.begin(), ins.end());

  std::map<std::pair<std::string, std::string>, std::uint32_t> channel_of;
  for (const Channel& c : plan.channels) channel_of.emplace(std::make_pair(c.src, c.dst), c.id);

  for (const PlanWorker& w : plan.workers) {
    auto ctx = std::make_unique<WorkerCtx>();
    ctx->core = w.core;
    ctx->worker = w.worker;
    std::map<std::string, std::size_t> pos_in_worker;
    for (std::size_t i = 0; i < w.steps.size(); ++i)
      if (w.steps[i].kind == Step::Kind::Compute) pos_in_worker[w.steps[i].block] = i;

    for (std::size_t i = 0; i < w.steps.size(); ++i) {
      const Step& s = w.steps[i];
      RtStep rt;
      rt.kind = s.kind;
      if (s.kind != Step::Kind::Compute) {
        rt.channel = s.channel;
        if (s.kind == Step::Kind::Send)
          rt.block = block_index_.at(plan.channels.at(s.channel).src);
        ctx->steps.push_back(std::move(rt));
        continue;
      }
      const Block& b = blocks_.at(block_index_.at(s.block));
      rt.block = block_index_.at(s.block);
      rt.block_kind = b.kind;
      rt.gain = b.gain;
      rt.const_value = b.const_value;
      rt.weight_effect = static_cast<double>(b.weight) * 1e-9;
      rt.busy_ns = static_cast<std::int64_t>(profile_.cycles_to_ns(costs.at(b.id)));
      if (b.kind == BlockKind::Delay) {
        rt.is_delay = true;
        rt.delay_slot = delay_slot_of.at(b.id);
      }
      auto ins = inputs_of.find(b.id);
      if (ins != inputs_of.end()) {
        for (const auto& [port, src] : ins->second) {
          const Block& sb = blocks_.at(block_index_.at(src));
          ValueSource vs;
          vs.index = block_index_.at(src);
          if (sb.kind == BlockKind::Inport) {
            vs.kind = ValueSource::Kind::SnapshotInput;
          } else if (sb.kind == BlockKind::Delay && pos_in_worker.count(src) &&
                     pos_in_worker.at(src) > i) {
            // delay computes later in this worker; read its live state
            vs.kind = ValueSource::Kind::DelayState;
            vs.index = delay_slot_of.at(src);
          } else if (pos_in_worker.count(src)) {
            vs.kind = ValueSource::Kind::LocalValue;
          } else {
            vs.kind = ValueSource::Kind::ChannelValue;
            vs.index = channel_of.at({src, b.id});
          }
          rt.sources.push_back(vs);
        }
      }
      ctx->steps.push_back(std::move(rt));
    }
    worker_ctx_.push_back(std::move(ctx));
  }

  for (const Block& b : blocks_) {
    if (b.kind == BlockKind::Inport) inport_indices_.push_back(block_index_.at(b.id));
    if (b.kind != BlockKind::Outport) continue;
    OutportInfo info;
    info.id = b.id;
    const auto& ins = inputs_of.at(b.id);
    const std::string& src = ins.front().second;
    info.src_index = block_index_.at(src);
    info.from_snapshot = blocks_.at(info.src_index).kind == BlockKind::Inport;
    outports_.push_back(std::move(info));
  }

  values_.assign(blocks_.size(), 0.0);
  recv_store_.assign(channels_.size(), 0.0);
  snapshot_.assign(blocks_.size(), 0.0);
  latched_.assign(blocks_.size(), std::nullopt);

  for (auto& ctx : worker_ctx_) {
    WorkerCtx* raw = ctx.get();
    worker_threads_.emplace_back([this, raw] { worker_main(*raw); });
  }
}

void Node::worker_main(WorkerCtx& ctx) {
  if (pin_enabled_ && !pin_to_core(ctx.core)) ++pin_warnings_;

  auto eval = [this](const ValueSource& vs) -> double {
    switch (vs.kind) {
      case ValueSource::Kind::SnapshotInput: return snapshot_[vs.index];
      case ValueSource::Kind::LocalValue: return values_[vs.index];
      case ValueSource::Kind::ChannelValue: return recv_store_[vs.index];
      case ValueSource::Kind::DelayState: return delay_state_[vs.index];
    }
    return 0.0;
  };

  std::uint64_t seen = 0;
  for (;;) {
    {
      std::unique_lock lock(run_mutex_);
      start_cv_.wait(lock, [&] { return stop_workers_ || run_generation_ > seen; });
      if (stop_workers_) return;
      seen = run_generation_;
    }

    try {
      for (const RtStep& s : ctx.steps) {
        switch (s.kind) {
          case Step::Kind::Recv:
            recv_store_[s.channel] = channels_[s.channel]->recv();
            break;
          case Step::Kind::Send:
            channels_[s.channel]->send(values_[s.block],
                                       steady_now_ns() + static_cast<std::int64_t>(comm_ns_));
            break;
          case Step::Kind::Compute: {
            busy_spin(s.busy_ns);
            if (s.is_delay) {
              const double out = delay_state_[s.delay_slot];
              values_[s.block] = out;
              delay_state_[s.delay_slot] = eval(s.sources.at(0));
              break;
            }
            double v = 0.0;
            switch (s.block_kind) {
              case BlockKind::Const: v = s.const_value; break;
              case BlockKind::Gain: v = s.gain * eval(s.sources.at(0)); break;
              case BlockKind::Sum: {
                v = eval(s.sources.at(0));
                for (std::size_t i = 1; i < s.sources.size(); ++i) v += eval(s.sources[i]);
                break;
              }
              case BlockKind::Compute: v = eval(s.sources.at(0)) + s.weight_effect; break;
              default: break;
            }
            values_[s.block] = v;
            break;
          }
        }
      }
    } catch (const Error&) {
      // channels closed during teardown; report done and exit
      std::lock_guard lock(run_mutex_);
      ++workers_done_;
      done_cv_.notify_all();
      return;
    }

    {
      std::lock_guard lock(run_mutex_);
      ++workers_done_;
    }
    done_cv_.notify_all();
  }
}

void Node::run_main() {
  for (;;) {
    Pending p;
    {
      std::unique_lock lock(trigger_mutex_);
      trigger_cv_.wait(lock, [&] { return stop_run_thread_ || pending_.has_value(); });
      if (!pending_.has_value()) return;  // stopping and drained
      p = std::move(*pending_);
      pending_.reset();
    }
    execute_run(std::move(p));
  }
}

void Node::execute_run(Pending p) {
  {
    std::lock_guard lock(run_mutex_);
    snapshot_ = std::move(p.values);
    workers_done_ = 0;
    ++run_generation_;
  }
  start_cv_.notify_all();
  {
    std::unique_lock lock(run_mutex_);
    done_cv_.wait(lock, [&] { return workers_done_ == worker_ctx_.size(); });
  }

  RunResult result;
  result.run_index = runs_.load();
  result.trigger_stamp_ns = p.trigger_stamp_ns;
  result.inputs = std::move(p.by_name);
  const std::int64_t publish_stamp = steady_now_ns();
  result.publish_stamp_ns = publish_stamp;
  for (const OutportInfo& o : outports_) {
    double v = o.from_snapshot ? snapshot_[o.src_index] : values_[o.src_index];
    result.outputs[o.id] = v;
    publishers_.at(o.id).publish({v}, publish_stamp);
  }

  if (options_.observer) options_.observer(result);
  runs_.fetch_add(1);
  {
    std::lock_guard lock(runs_mutex_);
  }
  runs_cv_.notify_all();
}

void Node::latch(std::uint32_t block_index, double value) {
  if (!latched_[block_index].has_value()) ++latched_count_;
  latched_[block_index] = value;
}

void Node::try_trigger() {
  // caller holds state_mutex_
  if (latched_count_ < inport_indices_.size()) {
    ++skipped_incomplete_;
    return;
  }
  Pending p;
  p.values.assign(blocks_.size(), 0.0);
  for (std::uint32_t idx : inport_indices_) {
    p.values[idx] = *latched_[idx];
    p.by_name[blocks_[idx].id] = *latched_[idx];
  }
  p.trigger_stamp_ns = steady_now_ns();
  {
    std::lock_guard lock(trigger_mutex_);
    if (pending_.has_value()) ++coalesced_;
    pending_ = std::move(p);
  }
  trigger_cv_.notify_one();
}

void Node::handle_message(const Message& msg) {
  auto it = topic_to_inport_.find(msg.topic);
  if (it == topic_to_inport_.end() || msg.payload.empty()) return;
  const std::uint32_t idx = block_index_.at(it->second);
  const double value = msg.payload.front();

  std::lock_guard lock(state_mutex_);
  switch (config_.pattern) {
    case PatternKind::TimerDriven:
      latch(idx, value);
      break;
    case PatternKind::EventAll:
      latch(idx, value);
      try_trigger();
      break;
    case PatternKind::EventTrigger:
      latch(idx, value);
      if (msg.topic == config_.trigger_topic) try_trigger();
      break;
    case PatternKind::EventTimeSync: {
      auto& q = sync_queues_[msg.topic];
      q.push_back(msg);
      std::optional<MatchedSet> matched;
      if (config_.policy == SyncPolicy::Exact) {
        while (q.size() > config_.sync_queue_size) {
          q.pop_front();
          ++sync_drops_;
        }
        matched = exact_time_match(sync_queues_);
      } else {
        std::uint64_t drops = 0;
        matched = approximate_time_match(sync_queues_, config_.slop_ns,
                                         config_.sync_queue_size, &drops);
        sync_drops_ += drops;
      }
      if (matched) {
        // all-or-nothing latch of the matched set
        for (const auto& [topic, m] : *matched) {
          if (m.payload.empty()) continue;
          latch(block_index_.at(topic_to_inport_.at(topic)), m.payload.front());
        }
        try_trigger();
      }
      break;
    }
  }
}

void Node::dispatch_main() {
  for (;;) {
    {
      std::unique_lock lock(dispatch_mutex_);
      dispatch_cv_.wait(lock, [&] { return stop_dispatcher_ || data_ready_; });
      data_ready_ = false;
    }
    // replay deliveries across topics in publish order
    std::vector<Envelope> batch;
    for (auto& sub : subscriptions_)
      while (auto env = sub->try_take_envelope()) batch.push_back(std::move(*env));
    std::sort(batch.begin(), batch.end(),
              [](const Envelope& a, const Envelope& b) { return a.ticket < b.ticket; });
    for (const Envelope& env : batch) handle_message(env.msg);

    std::lock_guard lock(dispatch_mutex_);
    if (stop_dispatcher_ && !data_ready_) return;
  }
}

void Node::timer_main() {
  const auto period = std::chrono::nanoseconds(config_.period_ns);
  auto next = std::chrono::steady_clock::now() + period;
  for (;;) {
    {
      std::unique_lock lock(timer_mutex_);
      if (timer_cv_.wait_until(lock, next, [&] { return stop_timer_; })) return;
    }
    {
      std::lock_guard lock(state_mutex_);
      try_trigger();
    }
    next += period;
    const auto now = std::chrono::steady_clock::now();
    while (next <= now) next += period;  // skip missed periods after an overrun
  }
}

bool Node::wait_for_runs(std::uint64_t count, std::chrono::nanoseconds timeout) {
  std::unique_lock lock(runs_mutex_);
  return runs_cv_.wait_for(lock, timeout, [&] { return runs_.load() >= count; });
}

NodeStats Node::stats() const {
  NodeStats s;
  s.runs = runs_.load();
  s.coalesced_triggers = coalesced_.load();
  s.sync_drops = sync_drops_.load();
  s.skipped_incomplete = skipped_incomplete_.load();
  s.pin_warnings = pin_warnings_.load();
  for (const auto& sub : subscriptions_) s.queue_drops += sub->drops();
  return s;
}

NodeStats Node::stop() {
  std::lock_guard stop_lock(stop_mutex_);
  if (stopped_) return final_stats_;

  if (timer_thread_.joinable()) {
    {
      std::lock_guard lock(timer_mutex_);
      stop_timer_ = true;
    }
    timer_cv_.notify_all();
    timer_thread_.join();
  }
  {
    std::lock_guard lock(dispatch_mutex_);
    stop_dispatcher_ = true;
    data_ready_ = true;  // force one final drain
  }
  dispatch_cv_.notify_all();
  if (dispatch_thread_.joinable()) dispatch_thread_.join();
  {
    std::lock_guard lock(trigger_mutex_);
    stop_run_thread_ = true;
  }
  trigger_cv_.notify_all();
  if (run_thread_.joinable()) run_thread_.join();
  {
    std::lock_guard lock(run_mutex_);
    stop_workers_ = true;
  }
  start_cv_.notify_all();
  for (auto& t : worker_threads_)
    if (t.joinable()) t.join();
  for (auto& ch : channels_) ch->close();

  final_stats_ = stats();
  stopped_ = true;
  return final_stats_;
}

Node::~Node() { stop(); }

}  // namespace blockflow
