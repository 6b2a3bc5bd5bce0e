#include "blockflow/node_config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "blockflow/errors.hpp"

namespace blockflow {

const char* pattern_kind_name(PatternKind kind) {
  switch (kind) {
    case PatternKind::TimerDriven: return "timer";
    case PatternKind::EventAll: return "event_all";
    case PatternKind::EventTrigger: return "event_trigger";
    case PatternKind::EventTimeSync: return "event_time_sync";
  }
  return "?";
}

void NodeConfig::validate() const {
  if (queue_depth < 1)
    throw Error(ErrorCode::PatternMismatch, "queue_depth must be >= 1");
  switch (pattern) {
    case PatternKind::TimerDriven:
      if (period_ns <= 0)
        throw Error(ErrorCode::PatternMismatch, "timer pattern needs period_ns > 0");
      break;
    case PatternKind::EventAll:
      break;
    case PatternKind::EventTrigger:
      if (!input_topics.count(trigger_topic))
        throw Error(ErrorCode::PatternMismatch,
                    "trigger topic '" + trigger_topic + "' is not an input topic");
      break;
    case PatternKind::EventTimeSync:
      if (input_topics.size() < 2)
        throw Error(ErrorCode::PatternMismatch, "time sync needs >= 2 input topics");
      if (sync_queue_size < 1)
        throw Error(ErrorCode::PatternMismatch, "sync queue_size must be >= 1");
      if (policy == SyncPolicy::Approximate && slop_ns < 0)
        throw Error(ErrorCode::PatternMismatch, "slop_ns must be >= 0");
      break;
  }
}

NodeConfig node_config_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IoError, std::string("bad node config JSON: ") + e.what());
  }
  NodeConfig nc;
  try {
    const nlohmann::json& pat = j.at("pattern");
    if (pat.contains("timer")) {
      nc.pattern = PatternKind::TimerDriven;
      nc.period_ns = pat.at("timer").at("period_ns").get<std::int64_t>();
    } else if (pat.contains("event_all")) {
      nc.pattern = PatternKind::EventAll;
    } else if (pat.contains("event_trigger")) {
      nc.pattern = PatternKind::EventTrigger;
      nc.trigger_topic = pat.at("event_trigger").at("topic").get<std::string>();
    } else if (pat.contains("event_time_sync")) {
      nc.pattern = PatternKind::EventTimeSync;
      const nlohmann::json& sync = pat.at("event_time_sync");
      const std::string policy = sync.at("policy").get<std::string>();
      if (policy == "exact") nc.policy = SyncPolicy::Exact;
      else if (policy == "approximate") nc.policy = SyncPolicy::Approximate;
      else throw Error(ErrorCode::PatternMismatch, "unknown sync policy '" + policy + "'");
      nc.slop_ns = sync.value("slop_ns", 0);
      nc.sync_queue_size = sync.value("queue_size", std::size_t{1});
    } else {
      throw Error(ErrorCode::PatternMismatch, "pattern object names no known pattern");
    }
    nc.queue_depth = j.value("queue_depth", std::size_t{10});
    for (auto& [topic, inport] : j.at("inputs").items())
      nc.input_topics[topic] = inport.get<std::string>();
    for (auto& [outport, topic] : j.at("outputs").items())
      nc.output_topics[outport] = topic.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IoError, std::string("bad node config JSON: ") + e.what());
  }
  nc.validate();
  return nc;
}

std::string node_config_to_json_text(const NodeConfig& nc) {
  nlohmann::json pat = nlohmann::json::object();
  switch (nc.pattern) {
    case PatternKind::TimerDriven:
      pat["timer"] = {{"period_ns", nc.period_ns}};
      break;
    case PatternKind::EventAll:
      pat["event_all"] = nlohmann::json::object();
      break;
    case PatternKind::EventTrigger:
      pat["event_trigger"] = {{"topic", nc.trigger_topic}};
      break;
    case PatternKind::EventTimeSync:
      pat["event_time_sync"] = {
          {"policy", nc.policy == SyncPolicy::Exact ? "exact" : "approximate"},
          {"slop_ns", nc.slop_ns},
          {"queue_size", nc.sync_queue_size}};
      break;
  }
  nlohmann::json j{{"pattern", pat},
                   {"queue_depth", nc.queue_depth},
                   {"inputs", nc.input_topics},
                   {"outputs", nc.output_topics}};
  return j.dump(2) + "\n";
}

NodeConfig load_node_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return node_config_from_json_text(buf.str());
}

}  // namespace blockflow
