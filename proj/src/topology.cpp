#include "moldtask/topology.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace moldtask {

namespace {

[[noreturn]] void cluster_error(size_t index, const std::string& what) {
  throw std::invalid_argument("cluster " + std::to_string(index) + ": " + what);
}

}  // namespace

Topology::Topology(std::vector<Cluster> clusters) : clusters_(std::move(clusters)) {
  if (clusters_.empty()) throw std::invalid_argument("topology has no clusters");

  CoreId next = 0;
  for (size_t i = 0; i < clusters_.size(); ++i) {
    const Cluster& c = clusters_[i];
    if (c.size < 1) cluster_error(i, "size must be >= 1");
    if (c.first_core != next)
      cluster_error(i, "first_core " + std::to_string(c.first_core) +
                           " does not continue the core-id space (expected " +
                           std::to_string(next) + ")");
    if (c.widths.empty()) cluster_error(i, "no valid widths");
    if (!std::is_sorted(c.widths.begin(), c.widths.end()))
      cluster_error(i, "widths must be ascending");
    if (std::adjacent_find(c.widths.begin(), c.widths.end()) != c.widths.end())
      cluster_error(i, "widths must be unique");
    if (c.widths.front() != 1) cluster_error(i, "width 1 must be valid");
    if (c.widths.back() > c.size)
      cluster_error(i, "width " + std::to_string(c.widths.back()) +
                           " exceeds cluster size " + std::to_string(c.size));
    for (int k = 0; k < c.size; ++k) cluster_index_of_core_.push_back((int)i);
    next += c.size;
  }
  total_cores_ = next;

  for (const Cluster& c : clusters_) {
    for (CoreId core = c.first_core; core < c.first_core + c.size; ++core) {
      for (int w : c.widths) {
        if (w > 1 && (core - c.first_core) % w != 0) continue;
        if (core + w > c.first_core + c.size) continue;
        places_.push_back({core, w});
      }
    }
  }
  std::sort(places_.begin(), places_.end());
}

int Topology::cluster_of(CoreId core) const {
  if (core < 0 || core >= total_cores_)
    throw std::invalid_argument("core " + std::to_string(core) + " out of range");
  return cluster_index_of_core_[core];
}

bool Topology::is_valid_place(const ExecutionPlace& p) const {
  if (p.leader < 0 || p.leader >= total_cores_ || p.width < 1) return false;
  const Cluster& c = clusters_[cluster_index_of_core_[p.leader]];
  if (std::find(c.widths.begin(), c.widths.end(), p.width) == c.widths.end())
    return false;
  if (p.width > 1 && (p.leader - c.first_core) % p.width != 0) return false;
  return p.leader + p.width <= c.first_core + c.size;
}

std::vector<ExecutionPlace> Topology::local_domain(CoreId core) const {
  (void)cluster_of(core);  // range check
  std::vector<ExecutionPlace> out;
  for (const ExecutionPlace& p : places_)
    if (p.contains(core)) out.push_back(p);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::pair(a.width, a.leader) < std::pair(b.width, b.leader);
  });
  return out;
}

Topology Topology::from_json_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (!j.contains("clusters") || !j["clusters"].is_array())
    throw std::invalid_argument("topology config: missing \"clusters\" array");
  std::vector<Cluster> clusters;
  for (size_t i = 0; i < j["clusters"].size(); ++i) {
    const auto& jc = j["clusters"][i];
    Cluster c;
    try {
      c.first_core = jc.at("first_core").get<int>();
      c.size = jc.at("size").get<int>();
      c.widths = jc.at("widths").get<std::vector<int>>();
      c.label = jc.value("label", std::string{});
    } catch (const nlohmann::json::exception& e) {
      cluster_error(i, e.what());
    }
    clusters.push_back(std::move(c));
  }
  return Topology(std::move(clusters));
}

Topology Topology::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open topology file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

}  // namespace moldtask
