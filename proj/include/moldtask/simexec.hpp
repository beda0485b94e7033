#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "moldtask/interference.hpp"
#include "moldtask/ptt.hpp"
#include "moldtask/scheduler.hpp"
#include "moldtask/task_graph.hpp"
#include "moldtask/trace.hpp"

namespace moldtask {

// Scenario for the virtual-time executor: base service times per
// (task type, cluster, width) plus per-core speed profiles. Virtual time is
// integer nanoseconds, so identical inputs give identical traces.
struct SimConfig {
  Topology topology;
  std::map<std::tuple<int, int, int>, std::int64_t> base_time_ns;
  SpeedProfileSet profiles;
  std::uint64_t seed = 1;
  std::int64_t steal_latency_ns = 0;
  int weight_old = 4;
  int weight_new = 1;

  explicit SimConfig(Topology topo)
      : topology(std::move(topo)), profiles(topology.total_cores()) {}

  void set_base_time(int task_type, int cluster, int width, double seconds);
  std::int64_t base_time(int task_type, const ExecutionPlace& place) const;

  static SimConfig from_json_text(const std::string& text);
  static SimConfig from_file(const std::string& path);
};

struct SimResult {
  std::vector<TraceEvent> events;  // sorted by (start, task id)
  std::int64_t makespan_ns = 0;
  std::vector<PttSnapshot> ptt;
  std::vector<ExecutionPlace> decided_place;  // per task, see Runtime::Result
};

// Deterministic discrete-event execution of the DAG under the same dispatch
// rules as the threaded runtime. Pure function of (dag, policy, config).
SimResult simulate(Dag& dag, Policy policy, const SimConfig& config);

}  // namespace moldtask
