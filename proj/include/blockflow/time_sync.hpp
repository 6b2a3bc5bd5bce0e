#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>

#include "blockflow/bus.hpp"

namespace blockflow {

using SyncQueues = std::map<std::string, std::deque<Message>>;
using MatchedSet = std::map<std::string, Message>;

// Fires iff every queue holds a message with one identical stamp; picks
// the smallest such stamp and consumes the chosen messages plus everything
// older in each queue. Queues are otherwise untouched.
std::optional<MatchedSet> exact_time_match(SyncQueues& queues);

// Picks one message per queue minimizing stamp spread, requiring
// spread <= slop_ns; ties break on smaller max stamp, then on the
// stamp vector in topic order. With no valid set, the oldest message of
// the first topic at queue_size capacity is dropped and matching retries.
// Consumes chosen messages plus everything older in each queue.
std::optional<MatchedSet> approximate_time_match(SyncQueues& queues, std::int64_t slop_ns,
                                                 std::size_t queue_size,
                                                 std::uint64_t* capacity_drops = nullptr);

}  // namespace blockflow
