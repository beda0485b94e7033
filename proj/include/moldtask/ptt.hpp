#pragma once

#include <array>
#include <atomic>
#include <iosfwd>
#include <span>
#include <vector>

#include "moldtask/topology.hpp"

namespace moldtask {

enum class Objective { Cost, Perf };

// Performance Trace Table: per-task-type table of smoothed execution-time
// estimates indexed by (core, width). An estimate of 0 means "never
// measured" and marks the place for exploration. Rows are written only by
// their own core (the leader of the measured place); concurrent readers may
// observe stale but never torn values.
class PerfTraceTable {
 public:
  static constexpr int kMaxWidthsPerCluster = 8;

  PerfTraceTable(const Topology& topo, int task_type, int weight_old = 4,
                 int weight_new = 1);

  PerfTraceTable(const PerfTraceTable&) = delete;
  PerfTraceTable& operator=(const PerfTraceTable&) = delete;

  int task_type() const { return task_type_; }

  // First measurement overwrites the zero sentinel; afterwards
  // e' = (weight_old*e + weight_new*measured) / (weight_old + weight_new).
  void update(CoreId leader, int width, double measured_s);

  double lookup(const ExecutionPlace& place) const;

  // Unexplored-first: while any domain place has estimate 0, returns the
  // unexplored place smallest by (leader, width). Otherwise minimizes
  // estimate*width (Cost) or estimate (Perf); ties go to smaller width,
  // then smaller leader.
  ExecutionPlace argmin(std::span<const ExecutionPlace> domain,
                        Objective objective) const;

  struct Entry {
    int core;
    int width;
    double estimate_s;
  };
  std::vector<Entry> snapshot() const;
  // task_type,core,width,estimate_us
  void dump_csv(std::ostream& os) const;

 private:
  struct alignas(64) Row {
    std::array<std::atomic<double>, kMaxWidthsPerCluster> estimate;
  };

  int width_slot(CoreId core, int width) const;  // -1 if not a valid place

  const Topology* topo_;
  int task_type_;
  int weight_old_;
  int weight_new_;
  std::vector<Row> rows_;
};

struct PttSnapshot {
  int task_type;
  std::vector<PerfTraceTable::Entry> entries;
};

}  // namespace moldtask
