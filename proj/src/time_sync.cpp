#include "blockflow/time_sync.hpp"

#include <algorithm>
#include <limits>
#include <set>

namespace blockflow {

namespace {

// Consume the earliest entry with the given stamp plus everything queued
// before it.
Message take_up_to(std::deque<Message>& q, std::int64_t stamp) {
  std::size_t idx = 0;
  while (q[idx].stamp_ns != stamp) ++idx;
  Message chosen = std::move(q[idx]);
  q.erase(q.begin(), q.begin() + idx + 1);
  return chosen;
}

}  // namespace

std::optional<MatchedSet> exact_time_match(SyncQueues& queues) {
  if (queues.empty()) return std::nullopt;

  auto first = queues.begin();
  std::set<std::int64_t> common;
  for (const Message& m : first->second) common.insert(m.stamp_ns);
  for (auto it = std::next(first); it != queues.end() && !common.empty(); ++it) {
    std::set<std::int64_t> stamps;
    for (const Message& m : it->second) stamps.insert(m.stamp_ns);
    std::set<std::int64_t> keep;
    for (std::int64_t s : common)
      if (stamps.count(s)) keep.insert(s);
    common.swap(keep);
  }
  if (common.empty()) return std::nullopt;

  const std::int64_t stamp = *common.begin();
  MatchedSet matched;
  for (auto& [topic, q] : queues) matched.emplace(topic, take_up_to(q, stamp));
  return matched;
}

namespace {

struct Candidate {
  bool valid = false;
  std::int64_t spread = 0;
  std::int64_t min_stamp = 0;
};

// Smallest stamp >= pivot in the queue, or nullopt.
std::optional<std::int64_t> least_at_or_above(const std::deque<Message>& q, std::int64_t pivot) {
  std::optional<std::int64_t> best;
  for (const Message& m : q)
    if (m.stamp_ns >= pivot && (!best || m.stamp_ns < *best)) best = m.stamp_ns;
  return best;
}

// A valid set's minimum stamp is some queued message's stamp; completing
// any pivot with each queue's least stamp >= pivot gives the smallest
// spread and max stamp achievable with that minimum, and the smallest
// per-topic stamps for the lexicographic tie-break. Sweeping pivots in
// ascending order therefore finds exactly the set the tie-break rules
// select.
Candidate best_set(const SyncQueues& queues) {
  std::set<std::int64_t> pivots;
  for (const auto& [topic, q] : queues)
    for (const Message& m : q) pivots.insert(m.stamp_ns);

  Candidate best;
  for (std::int64_t pivot : pivots) {
    std::int64_t hi = std::numeric_limits<std::int64_t>::min();
    bool feasible = true;
    for (const auto& [topic, q] : queues) {
      auto stamp = least_at_or_above(q, pivot);
      if (!stamp) {
        feasible = false;
        break;
      }
      hi = std::max(hi, *stamp);
    }
    if (!feasible) continue;
    std::int64_t spread = hi - pivot;
    if (!best.valid || spread < best.spread) {
      best = {true, spread, pivot};
    }
  }
  return best;
}

}  // namespace

std::optional<MatchedSet> approximate_time_match(SyncQueues& queues, std::int64_t slop_ns,
                                                 std::size_t queue_size,
                                                 std::uint64_t* capacity_drops) {
  if (queues.empty()) return std::nullopt;

  for (;;) {
    bool complete = true;
    for (const auto& [topic, q] : queues) complete &= !q.empty();

    if (complete) {
      Candidate c = best_set(queues);
      if (c.valid && c.spread <= slop_ns) {
        MatchedSet matched;
        for (auto& [topic, q] : queues) {
          std::int64_t stamp = *least_at_or_above(q, c.min_stamp);
          matched.emplace(topic, take_up_to(q, stamp));
        }
        return matched;
      }
    }

    // capacity rule: drop the oldest entry of the first full queue
    bool dropped = false;
    for (auto& [topic, q] : queues) {
      if (q.size() >= queue_size) {
        q.pop_front();
        if (capacity_drops) ++*capacity_drops;
        dropped = true;
        break;
      }
    }
    if (!dropped) return std::nullopt;
  }
}

}  // namespace blockflow
