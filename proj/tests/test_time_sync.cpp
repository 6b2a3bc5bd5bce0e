#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "blockflow/time_sync.hpp"

using namespace blockflow;

namespace {

std::deque<Message> q(std::initializer_list<std::int64_t> stamps) {
  std::deque<Message> out;
  for (std::int64_t s : stamps) {
    Message m;
    m.stamp_ns = s;
    m.payload = {static_cast<double>(s)};
    out.push_back(m);
  }
  return out;
}

std::map<std::string, std::int64_t> stamps_of(const MatchedSet& m) {
  std::map<std::string, std::int64_t> out;
  for (auto& [topic, msg] : m) out[topic] = msg.stamp_ns;
  return out;
}

// Literal enumeration over one message per queue with the stated
// tie-break: min spread, then min max-stamp, then the stamp vector in
// topic order. Independent of the production pivot sweep.
std::optional<std::map<std::string, std::int64_t>> oracle_pick(const SyncQueues& queues,
                                                               std::int64_t slop) {
  std::vector<std::string> topics;
  std::vector<std::vector<std::int64_t>> stamps;
  for (auto& [topic, queue] : queues) {
    topics.push_back(topic);
    std::vector<std::int64_t> s;
    for (const Message& m : queue) s.push_back(m.stamp_ns);
    if (s.empty()) return std::nullopt;
    stamps.push_back(std::move(s));
  }

  std::vector<std::size_t> idx(topics.size(), 0);
  bool have_best = false;
  std::int64_t best_spread = 0, best_max = 0;
  std::vector<std::int64_t> best_vec;
  for (;;) {
    std::vector<std::int64_t> vec;
    std::int64_t lo = stamps[0][idx[0]], hi = lo;
    for (std::size_t t = 0; t < topics.size(); ++t) {
      std::int64_t s = stamps[t][idx[t]];
      vec.push_back(s);
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    const std::int64_t spread = hi - lo;
    if (spread <= slop) {
      bool better = !have_best || std::tie(spread, hi, vec) < std::tie(best_spread, best_max, best_vec);
      if (better) {
        have_best = true;
        best_spread = spread;
        best_max = hi;
        best_vec = vec;
      }
    }
    std::size_t t = 0;
    for (; t < idx.size(); ++t) {
      if (++idx[t] < stamps[t].size()) break;
      idx[t] = 0;
    }
    if (t == idx.size()) break;
  }
  if (!have_best) return std::nullopt;
  std::map<std::string, std::int64_t> out;
  for (std::size_t t = 0; t < topics.size(); ++t) out[topics[t]] = best_vec[t];
  return out;
}

// Replays the capacity-drop loop on a copy; consumption removes the
// earliest entry with the chosen stamp plus everything older.
std::optional<std::map<std::string, std::int64_t>> oracle_match(SyncQueues& queues,
                                                                std::int64_t slop,
                                                                std::size_t queue_size) {
  for (;;) {
    bool complete = true;
    for (auto& [topic, queue] : queues) complete &= !queue.empty();
    if (complete) {
      auto pick = oracle_pick(queues, slop);
      if (pick) {
        for (auto& [topic, queue] : queues) {
          std::size_t i = 0;
          while (queue[i].stamp_ns != pick->at(topic)) ++i;
          queue.erase(queue.begin(), queue.begin() + i + 1);
        }
        return pick;
      }
    }
    bool dropped = false;
    for (auto& [topic, queue] : queues) {
      if (queue.size() >= queue_size) {
        queue.pop_front();
        dropped = true;
        break;
      }
    }
    if (!dropped) return std::nullopt;
  }
}

bool queues_equal(const SyncQueues& a, const SyncQueues& b) {
  if (a.size() != b.size()) return false;
  for (auto& [topic, queue] : a) {
    auto it = b.find(topic);
    if (it == b.end() || it->second.size() != queue.size()) return false;
    for (std::size_t i = 0; i < queue.size(); ++i)
      if (queue[i].stamp_ns != it->second[i].stamp_ns) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("exact match fires on a shared stamp") {
  SyncQueues queues{{"a", q({5})}, {"b", q({5})}};
  auto m = exact_time_match(queues);
  REQUIRE(m.has_value());
  CHECK(stamps_of(*m) == std::map<std::string, std::int64_t>{{"a", 5}, {"b", 5}});
  CHECK(queues.at("a").empty());
  CHECK(queues.at("b").empty());
}

TEST_CASE("exact match needs identical stamps") {
  SyncQueues queues{{"a", q({5})}, {"b", q({6})}};
  CHECK_FALSE(exact_time_match(queues).has_value());
  CHECK(queues.at("a").size() == 1);  // untouched
  CHECK(queues.at("b").size() == 1);
}

TEST_CASE("exact match picks the smallest common stamp and trims older") {
  SyncQueues queues{{"a", q({3, 7, 9})}, {"b", q({7, 9})}};
  auto m = exact_time_match(queues);
  REQUIRE(m.has_value());
  CHECK(stamps_of(*m) == std::map<std::string, std::int64_t>{{"a", 7}, {"b", 7}});
  REQUIRE(queues.at("a").size() == 1);
  CHECK(queues.at("a")[0].stamp_ns == 9);
  REQUIRE(queues.at("b").size() == 1);
  CHECK(queues.at("b")[0].stamp_ns == 9);
}

TEST_CASE("approximate match within slop") {
  SyncQueues queues{{"a", q({10})}, {"b", q({12})}};
  auto m = approximate_time_match(queues, 5, 8);
  REQUIRE(m.has_value());
  CHECK(stamps_of(*m) == std::map<std::string, std::int64_t>{{"a", 10}, {"b", 12}});
}

TEST_CASE("approximate match refuses a spread beyond slop") {
  SyncQueues queues{{"a", q({10})}, {"b", q({20})}};
  CHECK_FALSE(approximate_time_match(queues, 5, 8).has_value());
  CHECK(queues.at("a").size() == 1);  // below capacity: nothing dropped
  CHECK(queues.at("b").size() == 1);
}

TEST_CASE("approximate match minimizes the spread") {
  SyncQueues queues{{"a", q({10, 14})}, {"b", q({12})}, {"c", q({13})}};
  auto m = approximate_time_match(queues, 4, 8);
  REQUIRE(m.has_value());
  CHECK(stamps_of(*m) ==
        std::map<std::string, std::int64_t>{{"a", 14}, {"b", 12}, {"c", 13}});
  CHECK(queues.at("a").empty());  // 10 consumed as older than the chosen 14
}

TEST_CASE("approximate capacity rule drops the oldest of a full queue") {
  // no valid set while "a" sits at capacity; dropping its 0 unlocks {8,9}
  SyncQueues queues{{"a", q({0, 8})}, {"b", q({9})}};
  std::uint64_t drops = 0;
  auto m = approximate_time_match(queues, 1, 2, &drops);
  REQUIRE(m.has_value());
  CHECK(stamps_of(*m) == std::map<std::string, std::int64_t>{{"a", 8}, {"b", 9}});
  CHECK(drops == 1);
}

TEST_CASE("approximate match agrees with brute force on exhaustive small grids") {
  // all queue contents of 1..3 messages over stamps {0..5}, two topics
  std::vector<std::vector<std::int64_t>> contents;
  for (std::int64_t a = 0; a < 6; ++a) {
    contents.push_back({a});
    for (std::int64_t b = a; b < 6; ++b) {
      contents.push_back({a, b});
      for (std::int64_t c = b; c < 6; ++c) contents.push_back({a, b, c});
    }
  }
  std::size_t checked = 0;
  for (const auto& qa : contents) {
    for (const auto& qb : contents) {
      for (std::int64_t slop : {0, 2, 5}) {
        SyncQueues prod;
        prod["a"] = q({});
        prod["b"] = q({});
        for (auto s : qa) prod["a"].push_back({"", s, 0, {0.0}});
        for (auto s : qb) prod["b"].push_back({"", s, 0, {0.0}});
        SyncQueues want = prod;

        auto got = approximate_time_match(prod, slop, 4);
        auto expect = oracle_match(want, slop, 4);
        CAPTURE(slop);
        REQUIRE(got.has_value() == expect.has_value());
        if (got) CHECK(stamps_of(*got) == *expect);
        CHECK(queues_equal(prod, want));
        ++checked;
      }
    }
  }
  CHECK(checked > 10000);
}

TEST_CASE("approximate match agrees with brute force on random 3-4 topic grids") {
  std::mt19937_64 rng(42);
  for (int round = 0; round < 4000; ++round) {
    const std::size_t topics = 3 + round % 2;
    const std::size_t queue_size = 4;
    SyncQueues prod;
    for (std::size_t t = 0; t < topics; ++t) {
      std::string name = "t" + std::to_string(t);
      std::vector<std::int64_t> stamps;
      const std::size_t n = 1 + rng() % 4;
      for (std::size_t i = 0; i < n; ++i) stamps.push_back(static_cast<std::int64_t>(rng() % 10));
      std::sort(stamps.begin(), stamps.end());
      prod[name] = q({});
      for (auto s : stamps) prod[name].push_back({"", s, 0, {0.0}});
    }
    SyncQueues want = prod;
    const std::int64_t slop = static_cast<std::int64_t>(rng() % 6);

    auto got = approximate_time_match(prod, slop, queue_size);
    auto expect = oracle_match(want, slop, queue_size);
    CAPTURE(round);
    REQUIRE(got.has_value() == expect.has_value());
    if (got) CHECK(stamps_of(*got) == *expect);
    CHECK(queues_equal(prod, want));

    if (got) {
      std::int64_t lo = got->begin()->second.stamp_ns, hi = lo;
      for (auto& [topic, msg] : *got) {
        lo = std::min(lo, msg.stamp_ns);
        hi = std::max(hi, msg.stamp_ns);
      }
      CHECK(hi - lo <= slop);
    }
  }
}
