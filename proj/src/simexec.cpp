#include "moldtask/simexec.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <queue>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"

namespace moldtask {

void SimConfig::set_base_time(int task_type, int cluster, int width,
                              double seconds) {
  if (seconds < 0)
    throw std::invalid_argument("sim config: negative base time");
  base_time_ns[{task_type, cluster, width}] =
      (std::int64_t)std::llround(seconds * 1e9);
}

std::int64_t SimConfig::base_time(int task_type,
                                  const ExecutionPlace& place) const {
  int cluster = topology.cluster_of(place.leader);
  auto it = base_time_ns.find({task_type, cluster, place.width});
  if (it == base_time_ns.end())
    throw std::runtime_error(
        "sim config: no base time for task type " + std::to_string(task_type) +
        " at place (" + std::to_string(place.leader) + "," +
        std::to_string(place.width) + ") in cluster " +
        std::to_string(cluster));
  return it->second;
}

SimConfig SimConfig::from_json_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  SimConfig cfg(Topology::from_json_text(j.at("topology").dump()));
  for (const auto& row : j.at("base_time_us"))
    cfg.set_base_time(row.at("type").get<int>(), row.at("cluster").get<int>(),
                      row.at("width").get<int>(),
                      row.at("us").get<double>() * 1e-6);
  cfg.seed = j.value("seed", 1u);
  cfg.steal_latency_ns =
      (std::int64_t)std::llround(j.value("steal_latency_us", 0.0) * 1e3);
  if (j.contains("weights")) {
    cfg.weight_old = j["weights"].value("old", 4);
    cfg.weight_new = j["weights"].value("new", 1);
  }
  if (j.contains("interference")) {
    const auto& ji = j["interference"];
    std::string kind = ji.value("kind", "none");
    if (kind == "corun") {
      for (int core : ji.at("cores").get<std::vector<int>>())
        cfg.profiles.set_constant(core, ji.value("slowdown", 4.0));
    } else if (kind == "dvfs") {
      auto cores = ji.at("cores").get<std::vector<int>>();
      double period = ji.at("period_s").get<double>();
      double duty = ji.value("duty", 0.5);
      double factor = ji.at("factor").get<double>();
      SpeedProfileSet wave =
          dvfs_profile(period, duty, factor, cores, cfg.topology.total_cores());
      for (int core : cores)
        cfg.profiles.set_profile(core, wave.profile(core));
    } else if (kind != "none") {
      throw std::invalid_argument("sim config: unknown interference kind \"" +
                                  kind + "\"");
    }
  }
  return cfg;
}

SimConfig SimConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sim config: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

namespace {

enum class EvKind { MemberDone, StealArrival };

struct Event {
  std::int64_t time;
  int task_id;
  CoreId core;
  EvKind kind;
  TaskNode* task;  // StealArrival payload
};

struct EventLater {
  bool operator()(const Event& a, const Event& b) const {
    return std::tuple(a.time, a.task_id, a.core, (int)a.kind) >
           std::tuple(b.time, b.task_id, b.core, (int)b.kind);
  }
};

struct SimAqEntry {
  TaskNode* task;
  int member;
};

struct SimCore {
  std::deque<TaskNode*> wsq;  // back = owner end
  std::deque<SimAqEntry> aq;
  bool busy = false;
  TaskNode* current = nullptr;
  int member = -1;
  std::int64_t start = 0;
};

class SimEngine {
 public:
  SimEngine(Dag& dag, Policy policy, const SimConfig& cfg)
      : dag_(dag),
        cfg_(cfg),
        sched_(policy, cfg.topology),
        cores_(cfg.topology.total_cores()),
        rng_(cfg.seed) {
    if (policy_uses_ptt(policy.kind))
      for (int type : dag.task_types())
        ptts_.emplace(type,
                      std::make_unique<PerfTraceTable>(
                          cfg.topology, type, cfg.weight_old, cfg.weight_new));
    complete_ns_.assign(dag.size(), 0);
    decisions_.assign(dag.size(), ExecutionPlace{});
  }

  SimResult run() {
    dag_.reset_run_state();
    unfinished_ = dag_.size();

    auto roots = dag_.roots();
    for (size_t i = 0; i < roots.size(); ++i)
      schedule_ready(dag_.node(roots[i]), (CoreId)(i % cores_.size()));
    activate();

    while (!events_.empty()) {
      Event ev = events_.top();
      events_.pop();
      now_ = ev.time;
      if (ev.kind == EvKind::MemberDone) {
        finish_member(ev.core);
      } else {
        cores_[ev.core].busy = false;  // the in-flight steal has landed
        dispatch(*ev.task, ev.core);
      }
      activate();
    }

    if (unfinished_ > 0)
      throw std::runtime_error("stuck DAG: " + std::to_string(unfinished_) +
                               " tasks never completed (dependency cycle?)");

    SimResult result;
    result.events = std::move(trace_);
    for (TraceEvent& e : result.events) {
      e.complete_ns = complete_ns_[e.task_id];
      result.makespan_ns = std::max(result.makespan_ns, e.complete_ns);
    }
    std::sort(result.events.begin(), result.events.end(),
              [](const TraceEvent& a, const TraceEvent& b) {
                return std::pair(a.start_ns, a.task_id) <
                       std::pair(b.start_ns, b.task_id);
              });
    std::vector<int> types;
    for (auto& [type, table] : ptts_) types.push_back(type);
    std::sort(types.begin(), types.end());
    for (int type : types)
      result.ptt.push_back({type, ptts_.at(type)->snapshot()});
    result.decided_place = std::move(decisions_);
    return result;
  }

 private:
  PerfTraceTable* ptt(int type) {
    auto it = ptts_.find(type);
    return it == ptts_.end() ? nullptr : it->second.get();
  }

  void schedule_ready(TaskNode& t, CoreId releasing_core) {
    if (t.priority == Priority::High &&
        policy_preplaces_high(sched_.policy().kind)) {
      auto d = sched_.decide(ptt(t.type), releasing_core, Priority::High);
      decisions_[t.id] = d.place;
      t.assigned_place = d.place;
      t.has_place = true;
      t.stealable = false;
      cores_[d.place.leader].wsq.push_back(&t);
    } else {
      t.stealable = true;
      cores_[releasing_core].wsq.push_back(&t);
    }
  }

  void dispatch(TaskNode& t, CoreId worker) {
    if (!t.has_place) {
      auto d = sched_.decide(ptt(t.type), worker, t.priority);
      decisions_[t.id] = d.place;
      t.assigned_place = d.place;
      t.has_place = true;
    }
    const ExecutionPlace place = t.assigned_place;
    t.remaining_members.store(place.width, std::memory_order_relaxed);
    for (int i = 0; i < place.width; ++i)
      cores_[place.leader + i].aq.push_back({&t, i});
  }

  void start_member(CoreId c) {
    SimCore& core = cores_[c];
    SimAqEntry entry = core.aq.front();
    core.aq.pop_front();
    TaskNode& t = *entry.task;
    std::int64_t base = cfg_.base_time(t.type, t.assigned_place);
    std::int64_t finish = cfg_.profiles.finish_time(c, now_, base);
    core.busy = true;
    core.current = &t;
    core.member = entry.member;
    core.start = now_;
    if (entry.member == 0) t.leader_start_ns = now_;
    events_.push({finish, t.id, c, EvKind::MemberDone, nullptr});
  }

  void finish_member(CoreId c) {
    SimCore& core = cores_[c];
    TaskNode& t = *core.current;
    const ExecutionPlace place = t.assigned_place;
    if (core.member == 0) {
      std::int64_t duration = now_ - t.leader_start_ns;
      if (PerfTraceTable* table = ptt(t.type))
        table->update(place.leader, place.width, duration * 1e-9);
      trace_.push_back({t.id, t.type, t.priority, place, t.leader_start_ns,
                        duration, place.leader, 0});
    }
    core.busy = false;
    core.current = nullptr;
    core.member = -1;
    if (t.remaining_members.fetch_sub(1, std::memory_order_relaxed) == 1) {
      complete_ns_[t.id] = now_;
      for (int succ : t.successors)
        if (dag_.node(succ).pending_deps.fetch_sub(
                1, std::memory_order_relaxed) == 1)
          schedule_ready(dag_.node(succ), c);
      --unfinished_;
    }
  }

  bool try_steal(CoreId c) {
    int n = (int)cores_.size();
    if (n == 1) return false;
    for (int attempt = 0; attempt < 2 * n; ++attempt) {
      int victim = (int)(rng_() % n);
      if (victim == c) continue;
      auto& q = cores_[victim].wsq;
      for (auto it = q.begin(); it != q.end(); ++it) {
        if (!(*it)->stealable) continue;
        TaskNode* t = *it;
        q.erase(it);
        if (cfg_.steal_latency_ns > 0) {
          cores_[c].busy = true;  // in-flight steal occupies the thief
          events_.push({now_ + cfg_.steal_latency_ns, t->id, c,
                        EvKind::StealArrival, t});
        } else {
          dispatch(*t, c);
        }
        return true;
      }
    }
    return false;
  }

  void activate() {
    bool progress = true;
    while (progress) {
      progress = false;
      for (CoreId c = 0; c < (int)cores_.size(); ++c) {
        SimCore& core = cores_[c];
        if (core.busy) continue;
        if (!core.aq.empty()) {
          start_member(c);
          progress = true;
        } else if (!core.wsq.empty()) {
          // Newest non-stealable (pre-placed) task first, then ordinary LIFO;
          // mirrors WorkQueue::pop in the threaded runtime.
          auto pick = core.wsq.rbegin();
          for (auto it = core.wsq.rbegin(); it != core.wsq.rend(); ++it)
            if (!(*it)->stealable) {
              pick = it;
              break;
            }
          TaskNode* t = *pick;
          core.wsq.erase(std::next(pick).base());
          dispatch(*t, c);
          progress = true;
        } else if (try_steal(c)) {
          progress = true;
        }
      }
    }
  }

  Dag& dag_;
  const SimConfig& cfg_;
  Scheduler sched_;
  std::vector<SimCore> cores_;
  std::mt19937_64 rng_;
  std::unordered_map<int, std::unique_ptr<PerfTraceTable>> ptts_;
  std::priority_queue<Event, std::vector<Event>, EventLater> events_;
  std::vector<TraceEvent> trace_;
  std::vector<std::int64_t> complete_ns_;
  std::vector<ExecutionPlace> decisions_;
  std::int64_t now_ = 0;
  int unfinished_ = 0;
};

}  // namespace

SimResult simulate(Dag& dag, Policy policy, const SimConfig& config) {
  SimEngine engine(dag, policy, config);
  return engine.run();
}

}  // namespace moldtask
