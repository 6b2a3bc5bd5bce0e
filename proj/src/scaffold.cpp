#include "blockflow/scaffold.hpp"

#include <set>
#include <sstream>

#include "blockflow/errors.hpp"

namespace blockflow {

namespace {

std::string worker_name(const PlanWorker& w) {
  return "core" + std::to_string(w.core) + "_worker" + std::to_string(w.worker);
}

void check_bindings(const ExecutionPlan& plan, const NodeConfig& nc) {
  std::set<std::string> bound_inports;
  for (const auto& [topic, inport] : nc.input_topics) {
    if (!plan.inport_bindings.count(inport))
      throw Error(ErrorCode::PatternMismatch,
                  "topic '" + topic + "' bound to unknown inport '" + inport + "'");
    bound_inports.insert(inport);
  }
  for (const auto& [inport, ref] : plan.inport_bindings)
    if (!bound_inports.count(inport))
      throw Error(ErrorCode::PatternMismatch, "inport '" + inport + "' has no input topic");
  for (const auto& [outport, topic] : nc.output_topics)
    if (!plan.outport_bindings.count(outport))
      throw Error(ErrorCode::PatternMismatch,
                  "topic '" + topic + "' bound to unknown outport '" + outport + "'");
  for (const auto& [outport, ref] : plan.outport_bindings)
    if (!nc.output_topics.count(outport))
      throw Error(ErrorCode::PatternMismatch, "outport '" + outport + "' has no output topic");
}

}  // namespace

std::string emit_scaffold(const ExecutionPlan& plan, const NodeConfig& nc) {
  nc.validate();
  if (plan.workers.empty())
    throw Error(ErrorCode::PatternMismatch, "plan has no workers");
  check_bindings(plan, nc);

  std::ostringstream out;
  out << "node \"" << plan.model_name << "\"\n";
  out << "pattern: ";
  switch (nc.pattern) {
    case PatternKind::TimerDriven:
      out << "timer(period_ns=" << nc.period_ns << ")";
      break;
    case PatternKind::EventAll:
      out << "event_all";
      break;
    case PatternKind::EventTrigger:
      out << "event_trigger(topic=\"" << nc.trigger_topic << "\")";
      break;
    case PatternKind::EventTimeSync:
      out << "event_time_sync(policy="
          << (nc.policy == SyncPolicy::Exact ? "exact" : "approximate")
          << ", slop_ns=" << nc.slop_ns << ", queue_size=" << nc.sync_queue_size << ")";
      break;
  }
  out << "\n\n";

  out << "run_cycle():\n";
  out << "  snapshot data_area\n";
  out << "  notify every worker to start (condition variable)\n";
  out << "  wait until all workers report done\n";
  for (const auto& [outport, topic] : nc.output_topics)
    out << "  publish outport \"" << outport << "\" on topic \"" << topic << "\"\n";
  out << "\n";

  // Data-update callbacks: everything except the pattern's own trigger.
  switch (nc.pattern) {
    case PatternKind::TimerDriven: {
      int n = 0;
      for (const auto& [topic, inport] : nc.input_topics) {
        out << "callback" << ++n << "():  # topic \"" << topic << "\"\n";
        out << "  write payload of \"" << topic << "\" into data_area[\"" << inport << "\"]\n\n";
      }
      out << "timer_callback():  # fires every " << nc.period_ns << " ns\n";
      out << "  run_cycle()\n\n";
      break;
    }
    case PatternKind::EventAll: {
      int n = 0;
      for (const auto& [topic, inport] : nc.input_topics) {
        out << "trigger_callback" << ++n << "():  # topic \"" << topic << "\"\n";
        out << "  write payload of \"" << topic << "\" into data_area[\"" << inport << "\"]\n";
        out << "  run_cycle()\n\n";
      }
      break;
    }
    case PatternKind::EventTrigger: {
      int n = 0;
      for (const auto& [topic, inport] : nc.input_topics) {
        if (topic == nc.trigger_topic) continue;
        out << "callback" << ++n << "():  # topic \"" << topic << "\"\n";
        out << "  write payload of \"" << topic << "\" into data_area[\"" << inport << "\"]\n\n";
      }
      out << "trigger_callback():  # topic \"" << nc.trigger_topic << "\"\n";
      out << "  write payload of \"" << nc.trigger_topic << "\" into data_area[\""
          << nc.input_topics.at(nc.trigger_topic) << "\"]\n";
      out << "  run_cycle()\n\n";
      break;
    }
    case PatternKind::EventTimeSync: {
      int n = 0;
      for (const auto& [topic, inport] : nc.input_topics) {
        out << "sync_subscriber" << ++n << " on topic \"" << topic << "\"  # -> data_area[\""
            << inport << "\"]\n";
      }
      out << "synchronizer(policy=" << (nc.policy == SyncPolicy::Exact ? "exact" : "approximate")
          << ") registers sync_callback\n\n";
      out << "sync_callback():  # timestamps matched across all topics\n";
      out << "  write matched payloads into data_area atomically\n";
      out << "  run_cycle()\n\n";
      break;
    }
  }

  for (const PlanWorker& w : plan.workers) {
    out << "worker " << worker_name(w) << "():\n";
    out << "  loop while node is alive:\n";
    out << "    wait in a standby state for notification\n";
    for (const Step& s : w.steps) {
      switch (s.kind) {
        case Step::Kind::Compute:
          out << "    compute \"" << s.block << "\"\n";
          break;
        case Step::Kind::Send:
          out << "    send channel " << s.channel << "\n";
          break;
        case Step::Kind::Recv:
          out << "    recv channel " << s.channel << "\n";
          break;
      }
    }
    out << "    report done\n\n";
  }

  out << "main():\n";
  for (const auto& [topic, inport] : nc.input_topics)
    out << "  create subscriber on \"" << topic << "\"\n";
  for (const auto& [outport, topic] : nc.output_topics)
    out << "  create publisher on \"" << topic << "\"\n";
  if (nc.pattern == PatternKind::TimerDriven)
    out << "  create timer(period_ns=" << nc.period_ns << ") linked to timer_callback\n";
  for (const PlanWorker& w : plan.workers) out << "  create worker " << worker_name(w) << "\n";
  for (const PlanWorker& w : plan.workers)
    out << "  assign " << worker_name(w) << " to core " << w.core << "\n";
  out << "  start workers\n";
  out << "  spin\n";
  out << "  shutdown\n";
  return out.str();
}

}  // namespace blockflow
