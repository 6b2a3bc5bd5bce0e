#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace blockflow {

struct Message {
  std::string topic;
  std::int64_t stamp_ns = 0;
  std::uint64_t seq = 0;
  std::vector<double> payload;
};

// Message plus the bus-global arrival ticket, used to replay deliveries
// across topics in publish order.
struct Envelope {
  Message msg;
  std::uint64_t ticket = 0;
};

class Bus;

// One bounded subscriber queue. Oldest messages are dropped (and counted)
// when the queue is full. No history: only messages published after the
// subscribe call are delivered.
class Subscription {
 public:
  std::optional<Message> try_take();
  std::optional<Message> take(std::chrono::nanoseconds timeout);
  std::optional<Envelope> try_take_envelope();

  const std::string& topic() const { return topic_; }
  std::uint64_t drops() const;
  std::size_t size() const;

  // Invoked after each enqueue (from the publishing thread); used by
  // nodes to park one dispatcher on many subscriptions.
  void set_listener(std::function<void()> listener);

 private:
  friend class Bus;
  Subscription(std::string topic, std::size_t depth)
      : topic_(std::move(topic)), depth_(depth) {}

  void deliver(const Envelope& env);
  void close();

  const std::string topic_;
  const std::size_t depth_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<Envelope> queue_;
  std::uint64_t drops_ = 0;
  bool closed_ = false;
  std::function<void()> listener_;
};

// In-process topic bus. publish() fans out to every live subscription of
// the topic in subscription order; thread-safe throughout.
class Bus {
 public:
  Bus() = default;
  ~Bus();

  std::shared_ptr<Subscription> subscribe(const std::string& topic, std::size_t queue_depth);
  void publish(const Message& msg);
  void close();

  // Stamps and sequence numbers per publisher: stamps are clamped
  // non-decreasing, seq increments on every publish.
  class Publisher {
   public:
    void publish(std::vector<double> payload);
    void publish(std::vector<double> payload, std::int64_t stamp_ns);

   private:
    friend class Bus;
    Publisher(Bus* bus, std::string topic) : bus_(bus), topic_(std::move(topic)) {}
    Bus* bus_;
    std::string topic_;
    std::uint64_t next_seq_ = 0;
    std::int64_t last_stamp_ = 0;
  };

  Publisher advertise(const std::string& topic);

 private:
  mutable std::mutex mutex_;
  std::uint64_t next_ticket_ = 0;
  bool closed_ = false;
  std::vector<std::pair<std::string, std::weak_ptr<Subscription>>> subs_;
};

std::int64_t steady_now_ns();

}  // namespace blockflow
