#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <vector>

#include "moldtask/ptt.hpp"
#include "moldtask/scheduler.hpp"
#include "moldtask/task_graph.hpp"
#include "moldtask/trace.hpp"

namespace moldtask {

// Per-worker ready queue. The owner pops its newest non-stealable
// (pre-placed, high-priority) entry first, then ordinary work LIFO; thieves
// take the oldest stealable entry. Remote pushes are allowed: release-time
// placement inserts high-priority tasks into another worker's queue.
class WorkQueue {
 public:
  void push(TaskNode* task);
  TaskNode* pop();    // owner end (LIFO)
  TaskNode* steal();  // oldest stealable entry, or nullptr
  bool empty() const;

 private:
  mutable std::mutex mutex_;
  std::deque<TaskNode*> queue_;
};

// Threaded executor: one worker per topology core, per-worker WSQ + FIFO
// assembly queue, moldable dispatch with leader timing and PTT updates.
class Runtime {
 public:
  struct Options {
    bool pin_workers = true;
    std::uint64_t seed = 1;
    int weight_old = 4;
    int weight_new = 1;
  };

  struct Result {
    std::vector<TraceEvent> events;  // sorted by (start, task id)
    std::int64_t makespan_ns = 0;
    bool pinned = false;
    std::vector<PttSnapshot> ptt;
    // Place chosen by the scheduler for each task, recorded at decision
    // time; lets tests check that execution honored every decision.
    std::vector<ExecutionPlace> decided_place;
  };

  Runtime(const Topology& topo, Policy policy) : Runtime(topo, policy, Options()) {}
  Runtime(const Topology& topo, Policy policy, Options options);

  // Blocking. Throws on task failure or on a stuck (cyclic) DAG.
  Result run(Dag& dag);

 private:
  const Topology* topo_;
  Scheduler scheduler_;
  Options options_;
};

}  // namespace moldtask
