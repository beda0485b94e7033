#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <functional>
#include <vector>

#include "moldtask/topology.hpp"

namespace moldtask {

// Kernel closure: (member index within the place, resource width). Bodies
// must be data-parallel over member indices with no cross-member
// synchronization. An empty body is legal (used by the simulator).
using TaskBody = std::function<void(int member_index, int width)>;

struct TaskNode {
  int id = 0;
  int type = 0;
  Priority priority = Priority::Low;
  TaskBody body;
  std::vector<int> successors;
  int num_predecessors = 0;

  // Per-run state, reset by the executor before each run.
  std::atomic<int> pending_deps{0};
  std::atomic<int> remaining_members{0};
  ExecutionPlace assigned_place{};
  bool has_place = false;
  bool stealable = true;
  std::int64_t leader_start_ns = 0;
};

// A task DAG. Node ids are dense 0..size()-1; edges may only be added
// between existing nodes. Node addresses are stable.
class Dag {
 public:
  int add_task(int type, Priority priority, TaskBody body = {});
  void add_edge(int pred, int succ);

  TaskNode& node(int id) { return nodes_[id]; }
  const TaskNode& node(int id) const { return nodes_[id]; }
  int size() const { return (int)nodes_.size(); }

  std::vector<int> roots() const;
  std::vector<int> task_types() const;  // distinct, ascending

  // Restore pending_deps / placement state so the DAG can be executed again.
  void reset_run_state();

 private:
  std::deque<TaskNode> nodes_;
};

}  // namespace moldtask
