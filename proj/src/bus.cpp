#include "blockflow/bus.hpp"

#include <algorithm>

#include "blockflow/errors.hpp"

namespace blockflow {

std::int64_t steady_now_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

void Subscription::deliver(const Envelope& env) {
  std::function<void()> listener;
  {
    std::lock_guard lock(mutex_);
    if (closed_) return;
    if (queue_.size() >= depth_) {
      queue_.pop_front();
      ++drops_;
    }
    queue_.push_back(env);
    listener = listener_;
  }
  cv_.notify_all();
  if (listener) listener();
}

std::optional<Message> Subscription::try_take() {
  auto env = try_take_envelope();
  if (!env) return std::nullopt;
  return std::move(env->msg);
}

std::optional<Envelope> Subscription::try_take_envelope() {
  std::lock_guard lock(mutex_);
  if (queue_.empty()) return std::nullopt;
  Envelope env = std::move(queue_.front());
  queue_.pop_front();
  return env;
}

std::optional<Message> Subscription::take(std::chrono::nanoseconds timeout) {
  std::unique_lock lock(mutex_);
  cv_.wait_for(lock, timeout, [&] { return !queue_.empty() || closed_; });
  if (queue_.empty()) return std::nullopt;
  Message msg = std::move(queue_.front().msg);
  queue_.pop_front();
  return msg;
}

std::uint64_t Subscription::drops() const {
  std::lock_guard lock(mutex_);
  return drops_;
}

std::size_t Subscription::size() const {
  std::lock_guard lock(mutex_);
  return queue_.size();
}

void Subscription::set_listener(std::function<void()> listener) {
  std::lock_guard lock(mutex_);
  listener_ = std::move(listener);
}

void Subscription::close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
  }
  cv_.notify_all();
}

Bus::~Bus() { close(); }

std::shared_ptr<Subscription> Bus::subscribe(const std::string& topic,
                                             std::size_t queue_depth) {
  if (queue_depth < 1) throw Error(ErrorCode::UsageError, "queue_depth must be >= 1");
  std::lock_guard lock(mutex_);
  if (closed_) throw Error(ErrorCode::BusClosed, "subscribe on closed bus");
  auto sub = std::shared_ptr<Subscription>(new Subscription(topic, queue_depth));
  subs_.push_back({topic, sub});
  return sub;
}

void Bus::publish(const Message& msg) {
  std::vector<std::shared_ptr<Subscription>> targets;
  Envelope env{msg, 0};
  {
    std::lock_guard lock(mutex_);
    if (closed_) throw Error(ErrorCode::BusClosed, "publish on closed bus");
    env.ticket = next_ticket_++;
    bool stale = false;
    for (auto& [topic, weak] : subs_) {
      if (topic != msg.topic) continue;
      if (auto sub = weak.lock()) targets.push_back(std::move(sub));
      else stale = true;
    }
    if (stale) {
      subs_.erase(std::remove_if(subs_.begin(), subs_.end(),
                                 [](const auto& e) { return e.second.expired(); }),
                  subs_.end());
    }
  }
  for (auto& sub : targets) sub->deliver(env);
}

void Bus::close() {
  std::vector<std::shared_ptr<Subscription>> live;
  {
    std::lock_guard lock(mutex_);
    if (closed_) return;
    closed_ = true;
    for (auto& [topic, weak] : subs_)
      if (auto sub = weak.lock()) live.push_back(std::move(sub));
    subs_.clear();
  }
  for (auto& sub : live) sub->close();
}

Bus::Publisher Bus::advertise(const std::string& topic) { return Publisher(this, topic); }

void Bus::Publisher::publish(std::vector<double> payload) {
  publish(std::move(payload), steady_now_ns());
}

void Bus::Publisher::publish(std::vector<double> payload, std::int64_t stamp_ns) {
  Message msg;
  msg.topic = topic_;
  msg.stamp_ns = last_stamp_ = std::max(stamp_ns, last_stamp_);
  msg.seq = next_seq_++;
  msg.payload = std::move(payload);
  bus_->publish(msg);
}

}  // namespace blockflow
