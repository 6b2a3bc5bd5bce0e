#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace blockflow {

enum class PatternKind { TimerDriven, EventAll, EventTrigger, EventTimeSync };
enum class SyncPolicy { Exact, Approximate };

const char* pattern_kind_name(PatternKind kind);

// Activation pattern plus topic bindings for one node.
struct NodeConfig {
  PatternKind pattern = PatternKind::EventAll;
  std::int64_t period_ns = 0;        // TimerDriven
  std::string trigger_topic;         // EventTrigger
  SyncPolicy policy = SyncPolicy::Exact;
  std::int64_t slop_ns = 0;          // Approximate only
  std::size_t sync_queue_size = 1;
  std::size_t queue_depth = 10;      // subscription queue depth
  std::map<std::string, std::string> input_topics;   // topic -> inport id
  std::map<std::string, std::string> output_topics;  // outport id -> topic

  // Throws Error(PatternMismatch) on an inconsistent configuration.
  void validate() const;
};

NodeConfig node_config_from_json_text(const std::string& text);
std::string node_config_to_json_text(const NodeConfig& nc);
NodeConfig load_node_config_file(const std::string& path);

}  // namespace blockflow
