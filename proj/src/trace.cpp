#include "moldtask/trace.hpp"

#include <cstdio>
#include <ostream>

namespace moldtask {

void write_trace_csv(std::ostream& os, std::span<const TraceEvent> events,
                     bool vtime_column) {
  os << "task_id,type,priority,leader,width,start_us,duration_us";
  if (vtime_column) os << ",vtime_us";
  os << "\n";
  char buf[192];
  for (const TraceEvent& e : events) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%s,%d,%d,%.3f,%.3f", e.task_id,
                  e.type, e.priority == Priority::High ? "high" : "low",
                  e.leader, e.place.width, e.start_ns / 1e3,
                  e.duration_ns / 1e3);
    os << buf;
    if (vtime_column) {
      std::snprintf(buf, sizeof(buf), ",%.3f", e.complete_ns / 1e3);
      os << buf;
    }
    os << "\n";
  }
}

Metrics compute_metrics(std::span<const TraceEvent> events,
                        std::int64_t makespan_ns) {
  Metrics m;
  if (events.empty()) return m;
  if (makespan_ns > 0)
    m.throughput_tasks_per_s = (double)events.size() / (makespan_ns * 1e-9);
  for (const TraceEvent& e : events) {
    if (e.priority == Priority::High) m.priority_distribution[e.place]++;
    for (int i = 0; i < e.place.width; ++i)
      m.per_core_worktime_ns[e.place.leader + i] += e.duration_ns;
  }
  return m;
}

}  // namespace moldtask
