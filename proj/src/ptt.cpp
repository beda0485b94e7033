#include "moldtask/ptt.hpp"

#include <algorithm>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace moldtask {

namespace {

std::string place_str(CoreId core, int width) {
  return "(" + std::to_string(core) + "," + std::to_string(width) + ")";
}

}  // namespace

PerfTraceTable::PerfTraceTable(const Topology& topo, int task_type,
                               int weight_old, int weight_new)
    : topo_(&topo),
      task_type_(task_type),
      weight_old_(weight_old),
      weight_new_(weight_new),
      rows_(topo.total_cores()) {
  if (weight_old_ < 0 || weight_new_ < 1)
    throw std::invalid_argument("ptt: weights must satisfy old >= 0, new >= 1");
  for (const Cluster& c : topo.clusters())
    if ((int)c.widths.size() > kMaxWidthsPerCluster)
      throw std::invalid_argument("ptt: too many widths in cluster");
  for (Row& r : rows_)
    for (auto& e : r.estimate) e.store(0.0, std::memory_order_relaxed);
}

int PerfTraceTable::width_slot(CoreId core, int width) const {
  if (!topo_->is_valid_place({core, width})) return -1;
  const Cluster& c = topo_->clusters()[topo_->cluster_of(core)];
  auto it = std::find(c.widths.begin(), c.widths.end(), width);
  return (int)(it - c.widths.begin());
}

void PerfTraceTable::update(CoreId leader, int width, double measured_s) {
  int slot = width_slot(leader, width);
  if (slot < 0)
    throw std::invalid_argument("ptt update: invalid place " +
                                place_str(leader, width));
  if (measured_s < 0)
    throw std::invalid_argument("ptt update: negative measurement");
  auto& cell = rows_[leader].estimate[slot];
  double old = cell.load(std::memory_order_relaxed);
  double next =
      old == 0.0
          ? measured_s
          : (weight_old_ * old + weight_new_ * measured_s) /
                (weight_old_ + weight_new_);
  cell.store(next, std::memory_order_relaxed);
}

double PerfTraceTable::lookup(const ExecutionPlace& place) const {
  int slot = width_slot(place.leader, place.width);
  if (slot < 0)
    throw std::invalid_argument("ptt lookup: invalid place " +
                                place_str(place.leader, place.width));
  return rows_[place.leader].estimate[slot].load(std::memory_order_relaxed);
}

ExecutionPlace PerfTraceTable::argmin(std::span<const ExecutionPlace> domain,
                                      Objective objective) const {
  if (domain.empty()) throw std::invalid_argument("ptt argmin: empty domain");

  const ExecutionPlace* unexplored = nullptr;
  for (const ExecutionPlace& p : domain) {
    if (lookup(p) != 0.0) continue;
    if (!unexplored || std::pair(p.leader, p.width) <
                           std::pair(unexplored->leader, unexplored->width))
      unexplored = &p;
  }
  if (unexplored) return *unexplored;

  const ExecutionPlace* best = nullptr;
  double best_key = std::numeric_limits<double>::infinity();
  for (const ExecutionPlace& p : domain) {
    double e = lookup(p);
    double key = objective == Objective::Cost ? e * p.width : e;
    bool better =
        key < best_key ||
        (key == best_key && best &&
         std::pair(p.width, p.leader) < std::pair(best->width, best->leader));
    if (!best || better) {
      best = &p;
      best_key = key;
    }
  }
  return *best;
}

std::vector<PerfTraceTable::Entry> PerfTraceTable::snapshot() const {
  std::vector<Entry> out;
  for (const ExecutionPlace& p : topo_->valid_places())
    out.push_back({p.leader, p.width, lookup(p)});
  return out;
}

void PerfTraceTable::dump_csv(std::ostream& os) const {
  for (const Entry& e : snapshot()) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%d,%d,%d,%.6g\n", task_type_, e.core,
                  e.width, e.estimate_s * 1e6);
    os << buf;
  }
}

}  // namespace moldtask
