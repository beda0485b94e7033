#include "moldtask/scheduler.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <string>

namespace moldtask {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return (char)std::tolower(c); });
  return out;
}

}  // namespace

std::optional<PolicyKind> parse_policy_kind(std::string_view name) {
  std::string n = lower(name);
  if (n == "rws") return PolicyKind::Rws;
  if (n == "rwsm-c") return PolicyKind::RwsmC;
  if (n == "fa") return PolicyKind::Fa;
  if (n == "fam-c") return PolicyKind::FamC;
  if (n == "da") return PolicyKind::Da;
  if (n == "dam-c") return PolicyKind::DamC;
  if (n == "dam-p") return PolicyKind::DamP;
  return std::nullopt;
}

std::string_view policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::Rws: return "rws";
    case PolicyKind::RwsmC: return "rwsm-c";
    case PolicyKind::Fa: return "fa";
    case PolicyKind::FamC: return "fam-c";
    case PolicyKind::Da: return "da";
    case PolicyKind::DamC: return "dam-c";
    case PolicyKind::DamP: return "dam-p";
  }
  return "?";
}

std::vector<std::string_view> all_policy_names() {
  return {"rws", "rwsm-c", "fa", "fam-c", "da", "dam-c", "dam-p"};
}

bool policy_uses_ptt(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::Rws:
    case PolicyKind::Fa:
      return false;
    case PolicyKind::Da:  // high-priority global search reads the table
    case PolicyKind::RwsmC:
    case PolicyKind::FamC:
    case PolicyKind::DamC:
    case PolicyKind::DamP:
      return true;
  }
  return false;
}

bool policy_preplaces_high(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::Rws:
    case PolicyKind::RwsmC:
      return false;
    case PolicyKind::Fa:
    case PolicyKind::FamC:
    case PolicyKind::Da:
    case PolicyKind::DamC:
    case PolicyKind::DamP:
      return true;
  }
  return false;
}

Scheduler::Scheduler(Policy policy, const Topology& topo)
    : policy_(policy), topo_(&topo) {
  for (CoreId c = 0; c < topo.total_cores(); ++c)
    local_domains_.push_back(topo.local_domain(c));
  for (const ExecutionPlace& p : topo.valid_places())
    if (p.width == 1) width1_places_.push_back(p);

  if (policy_.kind == PolicyKind::Fa || policy_.kind == PolicyKind::FamC) {
    if (policy_.fast_cluster < 0 ||
        policy_.fast_cluster >= (int)topo.clusters().size())
      throw std::invalid_argument("scheduler: fast_cluster out of range");
    const Cluster& fc = topo.clusters()[policy_.fast_cluster];
    for (CoreId c = fc.first_core; c < fc.first_core + fc.size; ++c)
      fast_cores_.push_back(c);
    for (const ExecutionPlace& p : topo.valid_places())
      if (topo.cluster_of(p.leader) == policy_.fast_cluster)
        fast_places_.push_back(p);
  }
}

const PerfTraceTable& Scheduler::require_ptt(const PerfTraceTable* ptt) const {
  if (!ptt)
    throw std::logic_error(std::string("policy ") +
                           std::string(policy_name(policy_.kind)) +
                           " requires a performance trace table");
  return *ptt;
}

PlacementDecision Scheduler::decide(const PerfTraceTable* ptt, CoreId worker,
                                    Priority priority) const {
  if (worker < 0 || worker >= topo_->total_cores())
    throw std::invalid_argument("scheduler: invalid worker core");

  switch (policy_.kind) {
    case PolicyKind::Rws:
      return {{worker, 1}, SearchScope::None};

    case PolicyKind::RwsmC: {
      const auto& dom = local_domains_[worker];
      return {require_ptt(ptt).argmin(dom, Objective::Cost),
              SearchScope::Local};
    }

    case PolicyKind::Fa: {
      if (priority == Priority::Low) return {{worker, 1}, SearchScope::None};
      CoreId f = fast_cores_[round_robin_.fetch_add(
                                 1, std::memory_order_relaxed) %
                             fast_cores_.size()];
      return {{f, 1}, SearchScope::None};
    }

    case PolicyKind::FamC: {
      const PerfTraceTable& table = require_ptt(ptt);
      if (priority == Priority::High)
        return {table.argmin(fast_places_, Objective::Cost),
                SearchScope::Global};
      return {table.argmin(local_domains_[worker], Objective::Cost),
              SearchScope::Local};
    }

    case PolicyKind::Da: {
      if (priority == Priority::Low) return {{worker, 1}, SearchScope::None};
      return {require_ptt(ptt).argmin(width1_places_, Objective::Perf),
              SearchScope::Global};
    }

    case PolicyKind::DamC: {
      const PerfTraceTable& table = require_ptt(ptt);
      if (priority == Priority::High)
        return {table.argmin(topo_->valid_places(), Objective::Cost),
                SearchScope::Global};
      return {table.argmin(local_domains_[worker], Objective::Cost),
              SearchScope::Local};
    }

    case PolicyKind::DamP: {
      const PerfTraceTable& table = require_ptt(ptt);
      if (priority == Priority::High)
        return {table.argmin(topo_->valid_places(), Objective::Perf),
                SearchScope::Global};
      return {table.argmin(local_domains_[worker], Objective::Cost),
              SearchScope::Local};
    }
  }
  throw std::logic_error("unreachable policy kind");
}

}  // namespace moldtask
