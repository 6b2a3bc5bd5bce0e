#include "blockflow/plan_sim.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <map>

#include "blockflow/errors.hpp"

namespace blockflow {

DeadlockReport check_deadlock_free(const ExecutionPlan& plan) {
  std::vector<std::size_t> pos(plan.workers.size(), 0);
  std::vector<std::uint32_t> tokens(plan.channels.size(), 0);

  bool progressed = true;
  while (progressed) {
    progressed = false;
    for (std::size_t w = 0; w < plan.workers.size(); ++w) {
      const auto& steps = plan.workers[w].steps;
      while (pos[w] < steps.size()) {
        const Step& s = steps[pos[w]];
        if (s.kind == Step::Kind::Send) {
          if (tokens.at(s.channel) >= plan.channels.at(s.channel).capacity) break;
          ++tokens[s.channel];
        } else if (s.kind == Step::Kind::Recv) {
          if (tokens.at(s.channel) == 0) break;
          --tokens[s.channel];
        }
        ++pos[w];
        progressed = true;
      }
    }
  }

  DeadlockReport report;
  for (std::size_t w = 0; w < plan.workers.size(); ++w) {
    if (pos[w] < plan.workers[w].steps.size()) {
      report.ok = false;
      report.stuck_at.push_back({plan.workers[w].core, plan.workers[w].worker, pos[w]});
    }
  }
  return report;
}

namespace {

constexpr double kNever = std::numeric_limits<double>::infinity();

struct SimChannel {
  std::uint32_t capacity = 1;
  std::deque<double> arrivals;  // in-flight message arrival times
};

struct SimWorker {
  std::uint32_t core = 0;
  const std::vector<Step>* steps = nullptr;
  std::size_t pos = 0;
  bool done() const { return pos >= steps->size(); }
};

}  // namespace

double estimate_makespan(const ExecutionPlan& plan, const CostMap& costs,
                         const CostProfile& p) {
  std::vector<SimWorker> workers;
  workers.reserve(plan.workers.size());
  for (const PlanWorker& w : plan.workers) workers.push_back({w.core, &w.steps, 0});

  std::vector<SimChannel> channels;
  for (const Channel& c : plan.channels) channels.push_back({c.capacity, {}});

  std::map<std::uint32_t, double> core_free;
  std::map<std::uint32_t, std::size_t> core_last;  // last worker index run per core
  for (const SimWorker& w : workers) {
    core_free.emplace(w.core, 0.0);
    core_last.emplace(w.core, workers.size());
  }

  double makespan = 0.0;
  for (;;) {
    // earliest time each blocked/ready worker could take its next step
    std::size_t best = workers.size();
    double best_time = kNever;
    for (std::size_t i = 0; i < workers.size(); ++i) {
      SimWorker& w = workers[i];
      if (w.done()) continue;
      const Step& s = (*w.steps)[w.pos];
      double t = core_free.at(w.core);
      if (s.kind == Step::Kind::Send) {
        const SimChannel& ch = channels[s.channel];
        if (ch.arrivals.size() >= ch.capacity) continue;  // waiting on a Recv
      } else if (s.kind == Step::Kind::Recv) {
        const SimChannel& ch = channels[s.channel];
        if (ch.arrivals.empty()) continue;  // waiting on a Send
        t = std::max(t, ch.arrivals.front());
      }
      if (t < best_time) {
        best_time = t;
        best = i;
      }
    }
    if (best == workers.size()) {
      bool all_done = true;
      for (const SimWorker& w : workers) all_done &= w.done();
      if (all_done) return makespan;
      throw Error(ErrorCode::DeadlockedPlan, "timing simulation cannot make progress");
    }

    SimWorker& w = workers[best];
    double t = best_time;
    if (core_last.at(w.core) != best && core_last.at(w.core) != workers.size())
      t += p.switch_cycles;
    core_last[w.core] = best;

    // run cooperatively until the worker blocks or finishes
    while (!w.done()) {
      const Step& s = (*w.steps)[w.pos];
      if (s.kind == Step::Kind::Compute) {
        t += costs.at(s.block);
      } else if (s.kind == Step::Kind::Send) {
        SimChannel& ch = channels[s.channel];
        if (ch.arrivals.size() >= ch.capacity) break;
        ch.arrivals.push_back(t + p.comm_cycles_per_message);
      } else {
        SimChannel& ch = channels[s.channel];
        if (ch.arrivals.empty() || ch.arrivals.front() > t) break;
        ch.arrivals.pop_front();
      }
      ++w.pos;
    }
    core_free[w.core] = t;
    makespan = std::max(makespan, t);
  }
}

}  // namespace blockflow
