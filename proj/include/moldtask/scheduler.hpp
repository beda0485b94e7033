#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "moldtask/ptt.hpp"
#include "moldtask/topology.hpp"

namespace moldtask {

enum class PolicyKind { Rws, RwsmC, Fa, FamC, Da, DamC, DamP };

struct Policy {
  PolicyKind kind = PolicyKind::Rws;
  int fast_cluster = 0;  // used by FA / FAM-C only
};

// Case-insensitive: rws, rwsm-c, fa, fam-c, da, dam-c, dam-p.
std::optional<PolicyKind> parse_policy_kind(std::string_view name);
std::string_view policy_name(PolicyKind kind);
std::vector<std::string_view> all_policy_names();

// Whether the policy consults a PerfTraceTable at all.
bool policy_uses_ptt(PolicyKind kind);
// Whether high-priority tasks are placed at release time (decision final,
// steal disabled) rather than at dequeue time.
bool policy_preplaces_high(PolicyKind kind);

enum class SearchScope { None, Local, Global };

struct PlacementDecision {
  ExecutionPlace place;
  SearchScope searched = SearchScope::None;
};

// Maps a ready task to an execution place according to the selected policy.
// Stateless apart from FA's round-robin counter; safe to call concurrently
// from all workers.
class Scheduler {
 public:
  Scheduler(Policy policy, const Topology& topo);

  const Policy& policy() const { return policy_; }
  const Topology& topology() const { return *topo_; }

  // `ptt` may be null for policies that do not use one (RWS, FA, DA low).
  PlacementDecision decide(const PerfTraceTable* ptt, CoreId worker,
                           Priority priority) const;

 private:
  const PerfTraceTable& require_ptt(const PerfTraceTable* ptt) const;

  Policy policy_;
  const Topology* topo_;
  std::vector<std::vector<ExecutionPlace>> local_domains_;  // per core
  std::vector<ExecutionPlace> width1_places_;               // DA high
  std::vector<ExecutionPlace> fast_places_;                 // FAM-C high
  std::vector<CoreId> fast_cores_;                          // FA high
  mutable std::atomic<std::uint64_t> round_robin_{0};
};

}  // namespace moldtask
