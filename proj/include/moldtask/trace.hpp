#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>

#include "moldtask/topology.hpp"

namespace moldtask {

// One record per executed task, written by the leader core. `duration_ns`
// is the leader's own elapsed time; `complete_ns` is when the last member
// finished (kept for verification, not part of the CSV schema).
struct TraceEvent {
  int task_id = 0;
  int type = 0;
  Priority priority = Priority::Low;
  ExecutionPlace place{};
  std::int64_t start_ns = 0;
  std::int64_t duration_ns = 0;
  CoreId leader = 0;
  std::int64_t complete_ns = 0;
};

// task_id,type,priority,leader,width,start_us,duration_us[,vtime_us]
void write_trace_csv(std::ostream& os, std::span<const TraceEvent> events,
                     bool vtime_column = false);

struct Metrics {
  double throughput_tasks_per_s = 0.0;
  std::map<ExecutionPlace, int> priority_distribution;  // High tasks per place
  std::map<CoreId, std::int64_t> per_core_worktime_ns;
};

Metrics compute_metrics(std::span<const TraceEvent> events,
                        std::int64_t makespan_ns);

}  // namespace moldtask
