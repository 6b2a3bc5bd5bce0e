#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <thread>

#include "blockflow/bus.hpp"
#include "blockflow/errors.hpp"

using namespace blockflow;

TEST_CASE("publish with no subscribers is a no-op") {
  Bus bus;
  Message m;
  m.topic = "t";
  m.payload = {1.0};
  CHECK_NOTHROW(bus.publish(m));
}

TEST_CASE("publish fans out to every subscriber in order") {
  Bus bus;
  auto s1 = bus.subscribe("t", 4);
  auto s2 = bus.subscribe("t", 4);
  Message m;
  m.topic = "t";
  m.payload = {2.5};
  bus.publish(m);
  auto r1 = s1->try_take();
  auto r2 = s2->try_take();
  REQUIRE(r1.has_value());
  REQUIRE(r2.has_value());
  CHECK(r1->payload == std::vector<double>{2.5});
  CHECK(r2->payload == std::vector<double>{2.5});
}

TEST_CASE("no history for late subscribers") {
  Bus bus;
  Message m;
  m.topic = "t";
  m.payload = {1.0};
  bus.publish(m);
  auto sub = bus.subscribe("t", 4);
  CHECK_FALSE(sub->try_take().has_value());
}

TEST_CASE("bounded queue drops the oldest and counts it") {
  Bus bus;
  auto sub = bus.subscribe("t", 10);
  for (int i = 0; i < 11; ++i) {
    Message m;
    m.topic = "t";
    m.seq = static_cast<std::uint64_t>(i);
    m.payload = {static_cast<double>(i)};
    bus.publish(m);
  }
  CHECK(sub->size() == 10);
  CHECK(sub->drops() == 1);
  auto first = sub->try_take();
  REQUIRE(first.has_value());
  CHECK(first->payload[0] == 1.0);  // message 0 was dropped
}

TEST_CASE("two subscriptions by one consumer stay independent") {
  Bus bus;
  auto s1 = bus.subscribe("t", 4);
  auto s2 = bus.subscribe("t", 4);
  Message m;
  m.topic = "t";
  m.payload = {7.0};
  bus.publish(m);
  CHECK(s1->try_take().has_value());
  CHECK(s2->size() == 1);  // taking from s1 does not consume s2
}

TEST_CASE("blocking take wakes on publish") {
  Bus bus;
  auto sub = bus.subscribe("t", 4);
  std::thread pub([&] {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    Message m;
    m.topic = "t";
    m.payload = {3.0};
    bus.publish(m);
  });
  auto got = sub->take(std::chrono::seconds(2));
  pub.join();
  REQUIRE(got.has_value());
  CHECK(got->payload[0] == 3.0);
}

TEST_CASE("publisher stamps are non-decreasing and seqs strictly increase") {
  Bus bus;
  auto sub = bus.subscribe("t", 16);
  Bus::Publisher pub = bus.advertise("t");
  pub.publish({1.0}, 100);
  pub.publish({2.0}, 50);  // stamp clamps to 100
  pub.publish({3.0}, 200);
  std::vector<Message> got;
  while (auto m = sub->try_take()) got.push_back(*m);
  REQUIRE(got.size() == 3);
  CHECK(got[0].stamp_ns == 100);
  CHECK(got[1].stamp_ns == 100);
  CHECK(got[2].stamp_ns == 200);
  CHECK(got[0].seq == 0);
  CHECK(got[1].seq == 1);
  CHECK(got[2].seq == 2);
}

TEST_CASE("tickets order messages across topics") {
  Bus bus;
  auto sa = bus.subscribe("a", 4);
  auto sb = bus.subscribe("b", 4);
  Message ma;
  ma.topic = "a";
  ma.payload = {1.0};
  Message mb;
  mb.topic = "b";
  mb.payload = {2.0};
  bus.publish(ma);
  bus.publish(mb);
  auto ea = sa->try_take_envelope();
  auto eb = sb->try_take_envelope();
  REQUIRE(ea.has_value());
  REQUIRE(eb.has_value());
  CHECK(ea->ticket < eb->ticket);
}

TEST_CASE("a closed bus rejects traffic") {
  Bus bus;
  auto sub = bus.subscribe("t", 4);
  bus.close();
  Message m;
  m.topic = "t";
  CHECK_THROWS_AS(bus.publish(m), Error);
  CHECK_THROWS_AS(bus.subscribe("t", 4), Error);
}
