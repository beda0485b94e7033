#pragma once

#include <compare>
#include <string>
#include <vector>

namespace moldtask {

using CoreId = int;

enum class Priority { Low, High };

// A (leader core, resource width) pair. Members are the contiguous cores
// leader .. leader+width-1; the leader is always the smallest core id.
struct ExecutionPlace {
  CoreId leader = 0;
  int width = 1;

  bool contains(CoreId core) const {
    return core >= leader && core < leader + width;
  }
  auto operator<=>(const ExecutionPlace&) const = default;
};

struct Cluster {
  CoreId first_core = 0;
  int size = 0;
  std::vector<int> widths;  // ascending, unique, always contains 1
  std::string label;
};

// Machine model: clusters of contiguous cores, each with its own set of
// valid moldable widths. Immutable after construction and freely shared.
class Topology {
 public:
  explicit Topology(std::vector<Cluster> clusters);

  static Topology from_json_text(const std::string& text);
  static Topology from_file(const std::string& path);

  int total_cores() const { return total_cores_; }
  const std::vector<Cluster>& clusters() const { return clusters_; }

  int cluster_of(CoreId core) const;
  bool is_valid_place(const ExecutionPlace& place) const;

  // Every legal (leader, width), ascending by (leader, width). Places of
  // width w > 1 start at offsets divisible by w within their cluster.
  const std::vector<ExecutionPlace>& valid_places() const { return places_; }

  // All valid places whose member set contains `core`, ascending by
  // (width, leader). Always non-empty: (core, 1) is legal everywhere.
  std::vector<ExecutionPlace> local_domain(CoreId core) const;

 private:
  std::vector<Cluster> clusters_;
  std::vector<int> cluster_index_of_core_;
  std::vector<ExecutionPlace> places_;
  int total_cores_ = 0;
};

}  // namespace moldtask
