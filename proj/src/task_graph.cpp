#include "moldtask/task_graph.hpp"

#include <algorithm>
#include <stdexcept>

namespace moldtask {

int Dag::add_task(int type, Priority priority, TaskBody body) {
  TaskNode& n = nodes_.emplace_back();
  n.id = (int)nodes_.size() - 1;
  n.type = type;
  n.priority = priority;
  n.body = std::move(body);
  return n.id;
}

void Dag::add_edge(int pred, int succ) {
  if (pred < 0 || pred >= size() || succ < 0 || succ >= size())
    throw std::invalid_argument("dag: edge references unknown task");
  if (pred == succ) throw std::invalid_argument("dag: self edge");
  nodes_[pred].successors.push_back(succ);
  nodes_[succ].num_predecessors++;
}

std::vector<int> Dag::roots() const {
  std::vector<int> out;
  for (const TaskNode& n : nodes_)
    if (n.num_predecessors == 0) out.push_back(n.id);
  return out;
}

std::vector<int> Dag::task_types() const {
  std::vector<int> out;
  for (const TaskNode& n : nodes_) out.push_back(n.type);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void Dag::reset_run_state() {
  for (TaskNode& n : nodes_) {
    n.pending_deps.store(n.num_predecessors, std::memory_order_relaxed);
    n.remaining_members.store(0, std::memory_order_relaxed);
    n.assigned_place = {};
    n.has_place = false;
    n.stealable = true;
    n.leader_start_ns = 0;
  }
}

}  // namespace moldtask
