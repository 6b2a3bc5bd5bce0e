#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "blockflow/builtin_models.hpp"
#include "blockflow/errors.hpp"
#include "blockflow/scaffold.hpp"

using namespace blockflow;

namespace {

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t count = 0;
  for (std::size_t pos = text.find(needle); pos != std::string::npos;
       pos = text.find(needle, pos + needle.size()))
    ++count;
  return count;
}

// two inports feeding a Sum split over two workers
BlockGraph two_input_model() {
  BlockGraph g;
  g.name = "pairsum";
  g.blocks.push_back({"in1", BlockKind::Inport});
  g.blocks.push_back({"in2", BlockKind::Inport});
  Block a{"a", BlockKind::Compute};
  a.weight = 5;
  Block s{"s", BlockKind::Sum};
  g.blocks.push_back(a);
  g.blocks.push_back(s);
  g.blocks.push_back({"out1", BlockKind::Outport});
  g.edges.push_back({"in1", "a", 0});
  g.edges.push_back({"a", "s", 0});
  g.edges.push_back({"in2", "s", 1});
  g.edges.push_back({"s", "out1", 0});
  return g;
}

ExecutionPlan two_worker_plan() {
  Allocation alloc;
  alloc.n_cores = 2;
  alloc.n_workers_per_core = {{0, 1}, {1, 1}};
  alloc.assignment = {{"a", {0, 0}}, {"s", {1, 0}}};
  return build_plan(two_input_model(), alloc);
}

NodeConfig base_config() {
  NodeConfig nc;
  nc.input_topics = {{"T1", "in1"}, {"T2", "in2"}};
  nc.output_topics = {{"out1", "Tout"}};
  return nc;
}

}  // namespace

TEST_CASE("timer scaffold carries data callbacks, one trigger, worker loops") {
  NodeConfig nc = base_config();
  nc.pattern = PatternKind::TimerDriven;
  nc.period_ns = 100000000;
  const std::string text = emit_scaffold(two_worker_plan(), nc);

  CHECK(count_of(text, "callback1():") == 1);
  CHECK(count_of(text, "callback2():") == 1);
  CHECK(count_of(text, "timer_callback():") == 1);
  CHECK(count_of(text, "worker core") == 2);
  CHECK(count_of(text, "wait in a standby state for notification") == 2);
  CHECK(count_of(text, "create timer(period_ns=100000000)") == 1);
  CHECK(text.find("trigger_callback") == std::string::npos);
}

TEST_CASE("event-trigger scaffold separates the trigger topic") {
  NodeConfig nc = base_config();
  nc.pattern = PatternKind::EventTrigger;
  nc.trigger_topic = "T1";
  const std::string text = emit_scaffold(two_worker_plan(), nc);

  CHECK(count_of(text, "trigger_callback():") == 1);
  CHECK(text.find("trigger_callback():  # topic \"T1\"") != std::string::npos);
  CHECK(count_of(text, "callback1():  # topic \"T2\"") == 1);
  CHECK(text.find("create timer") == std::string::npos);
}

TEST_CASE("event-all scaffold gives every topic a trigger callback") {
  NodeConfig nc = base_config();
  nc.pattern = PatternKind::EventAll;
  const std::string text = emit_scaffold(two_worker_plan(), nc);
  CHECK(count_of(text, "trigger_callback1():") == 1);
  CHECK(count_of(text, "trigger_callback2():") == 1);
  CHECK(count_of(text, "run_cycle()") >= 3);  // definition plus both callbacks
}

TEST_CASE("sync scaffold wires message-filter subscribers") {
  NodeConfig nc = base_config();
  nc.pattern = PatternKind::EventTimeSync;
  nc.policy = SyncPolicy::Approximate;
  nc.slop_ns = 2000000;
  nc.sync_queue_size = 4;
  const std::string text = emit_scaffold(two_worker_plan(), nc);
  CHECK(count_of(text, "sync_subscriber1") == 1);
  CHECK(count_of(text, "sync_subscriber2") == 1);
  CHECK(count_of(text, "sync_callback():") == 1);
  CHECK(text.find("policy=approximate") != std::string::npos);
}

TEST_CASE("scaffold output is byte-identical across runs") {
  NodeConfig nc = base_config();
  nc.pattern = PatternKind::TimerDriven;
  nc.period_ns = 5000000;
  ExecutionPlan plan = two_worker_plan();
  CHECK(emit_scaffold(plan, nc) == emit_scaffold(plan, nc));
}

TEST_CASE("a zero-worker plan is rejected") {
  ExecutionPlan empty;
  empty.model_name = "empty";
  NodeConfig nc = base_config();
  nc.pattern = PatternKind::EventAll;
  CHECK_THROWS_AS(emit_scaffold(empty, nc), Error);
}

TEST_CASE("unbound ports are rejected") {
  NodeConfig nc;
  nc.pattern = PatternKind::EventAll;
  nc.input_topics = {{"T1", "in1"}};  // in2 unbound
  nc.output_topics = {{"out1", "Tout"}};
  CHECK_THROWS_AS(emit_scaffold(two_worker_plan(), nc), Error);
}

TEST_CASE("config validation catches pattern mismatches") {
  NodeConfig timer = base_config();
  timer.pattern = PatternKind::TimerDriven;
  timer.period_ns = 0;
  CHECK_THROWS_AS(timer.validate(), Error);

  NodeConfig trig = base_config();
  trig.pattern = PatternKind::EventTrigger;
  trig.trigger_topic = "missing";
  CHECK_THROWS_AS(trig.validate(), Error);

  NodeConfig sync = base_config();
  sync.pattern = PatternKind::EventTimeSync;
  sync.input_topics = {{"T1", "in1"}};
  CHECK_THROWS_AS(sync.validate(), Error);
}
