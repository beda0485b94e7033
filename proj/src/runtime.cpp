#include "moldtask/runtime.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <memory>
#include <random>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include <pthread.h>
#include <sched.h>

namespace moldtask {

void WorkQueue::push(TaskNode* task) {
  std::lock_guard lock(mutex_);
  queue_.push_back(task);
}

TaskNode* WorkQueue::pop() {
  std::lock_guard lock(mutex_);
  if (queue_.empty()) return nullptr;
  // Pre-placed (non-stealable) tasks are urgent: the owner is their leader
  // and nobody else may run them, so they outrank ordinary LIFO work.
  for (auto it = queue_.rbegin(); it != queue_.rend(); ++it) {
    if ((*it)->stealable) continue;
    TaskNode* t = *it;
    queue_.erase(std::next(it).base());
    return t;
  }
  TaskNode* t = queue_.back();
  queue_.pop_back();
  return t;
}

TaskNode* WorkQueue::steal() {
  std::lock_guard lock(mutex_);
  for (auto it = queue_.begin(); it != queue_.end(); ++it) {
    if (!(*it)->stealable) continue;
    TaskNode* t = *it;
    queue_.erase(it);
    return t;
  }
  return nullptr;
}

bool WorkQueue::empty() const {
  std::lock_guard lock(mutex_);
  return queue_.empty();
}

namespace {

struct AqEntry {
  TaskNode* task;
  int member;
};

struct Worker {
  CoreId core = 0;
  WorkQueue wsq;
  std::mutex aq_mutex;
  std::deque<AqEntry> aq;
  std::vector<TraceEvent> events;
  std::mt19937_64 rng;
  std::thread thread;

  bool aq_empty() {
    std::lock_guard lock(aq_mutex);
    return aq.empty();
  }
};

class Engine {
 public:
  Engine(const Topology& topo, const Scheduler& sched,
         const Runtime::Options& opts, Dag& dag)
      : topo_(topo), sched_(sched), opts_(opts), dag_(dag) {
    int n = topo.total_cores();
    workers_.reserve(n);
    for (int c = 0; c < n; ++c) {
      auto w = std::make_unique<Worker>();
      w->core = c;
      w->rng.seed(opts.seed + 0x9e3779b97f4a7c15ull * (c + 1));
      workers_.push_back(std::move(w));
    }
    complete_ns_.assign(dag.size(), 0);
    decisions_.assign(dag.size(), ExecutionPlace{});
    if (policy_uses_ptt(sched.policy().kind))
      for (int type : dag.task_types())
        ptts_.emplace(type, std::make_unique<PerfTraceTable>(
                                topo, type, opts.weight_old, opts.weight_new));
  }

  Runtime::Result run() {
    dag_.reset_run_state();
    unfinished_.store(dag_.size(), std::memory_order_relaxed);

    Runtime::Result result;
    result.pinned = opts_.pin_workers;
    if (dag_.size() == 0) {
      fill_ptt(result);
      return result;
    }

    t0_ = std::chrono::steady_clock::now();
    auto roots = dag_.roots();
    for (size_t i = 0; i < roots.size(); ++i)
      schedule_ready(*workers_[i % workers_.size()], dag_.node(roots[i]));

    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    for (auto& w : workers_) {
      Worker* wp = w.get();
      w->thread = std::thread([this, wp] { worker_loop(*wp); });
      if (opts_.pin_workers) {
        cpu_set_t set;
        CPU_ZERO(&set);
        CPU_SET(wp->core % hw, &set);
        if (pthread_setaffinity_np(w->thread.native_handle(), sizeof(set),
                                   &set) != 0)
          result.pinned = false;
      } else {
        result.pinned = false;
      }
    }

    wait_with_stuck_detection();
    for (auto& w : workers_) w->thread.join();

    if (!error_.empty()) throw std::runtime_error(error_);
    if (stuck_)
      throw std::runtime_error(
          "stuck DAG: " +
          std::to_string(unfinished_.load(std::memory_order_relaxed)) +
          " tasks never completed (dependency cycle?)");

    for (auto& w : workers_)
      result.events.insert(result.events.end(), w->events.begin(),
                           w->events.end());
    for (TraceEvent& e : result.events) {
      e.complete_ns = complete_ns_[e.task_id];
      result.makespan_ns = std::max(result.makespan_ns, e.complete_ns);
    }
    std::sort(result.events.begin(), result.events.end(),
              [](const TraceEvent& a, const TraceEvent& b) {
                return std::pair(a.start_ns, a.task_id) <
                       std::pair(b.start_ns, b.task_id);
              });
    result.decided_place = decisions_;
    fill_ptt(result);
    return result;
  }

 private:
  std::int64_t now_ns() const {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now() - t0_)
        .count();
  }

  PerfTraceTable* ptt(int type) {
    auto it = ptts_.find(type);
    return it == ptts_.end() ? nullptr : it->second.get();
  }

  void fill_ptt(Runtime::Result& result) {
    std::vector<int> types;
    for (auto& [type, table] : ptts_) types.push_back(type);
    std::sort(types.begin(), types.end());
    for (int type : types)
      result.ptt.push_back({type, ptts_.at(type)->snapshot()});
  }

  void schedule_ready(Worker& w, TaskNode& t) {
    if (t.priority == Priority::High &&
        policy_preplaces_high(sched_.policy().kind)) {
      auto d = sched_.decide(ptt(t.type), w.core, Priority::High);
      decisions_[t.id] = d.place;
      t.assigned_place = d.place;
      t.has_place = true;
      t.stealable = false;
      workers_[d.place.leader]->wsq.push(&t);
    } else {
      t.stealable = true;
      w.wsq.push(&t);
    }
    cv_.notify_all();
  }

  void dispatch(Worker& w, TaskNode& t) {
    if (!t.has_place) {
      auto d = sched_.decide(ptt(t.type), w.core, t.priority);
      decisions_[t.id] = d.place;
      t.assigned_place = d.place;
      t.has_place = true;
    }
    const ExecutionPlace place = t.assigned_place;
    t.remaining_members.store(place.width, std::memory_order_relaxed);
    for (int i = 0; i < place.width; ++i) {
      Worker& member = *workers_[place.leader + i];
      std::lock_guard lock(member.aq_mutex);
      member.aq.push_back({&t, i});
    }
    cv_.notify_all();
  }

  void execute(Worker& w, const AqEntry& entry) {
    TaskNode& t = *entry.task;
    const ExecutionPlace place = t.assigned_place;
    std::int64_t start = now_ns();
    if (t.body) {
      try {
        t.body(entry.member, place.width);
      } catch (const std::exception& e) {
        fail("task " + std::to_string(t.id) + " failed: " + e.what());
        return;
      } catch (...) {
        fail("task " + std::to_string(t.id) + " failed");
        return;
      }
    }
    std::int64_t end = now_ns();
    if (entry.member == 0) {
      t.leader_start_ns = start;
      if (PerfTraceTable* table = ptt(t.type))
        table->update(place.leader, place.width, (end - start) * 1e-9);
      w.events.push_back({t.id, t.type, t.priority, place, start, end - start,
                          place.leader, 0});
    }
    if (t.remaining_members.fetch_sub(1, std::memory_order_acq_rel) == 1) {
      complete_ns_[t.id] = end;
      for (int succ : t.successors)
        if (dag_.node(succ).pending_deps.fetch_sub(
                1, std::memory_order_acq_rel) == 1)
          schedule_ready(w, dag_.node(succ));
      if (unfinished_.fetch_sub(1, std::memory_order_acq_rel) == 1) {
        done_.store(true, std::memory_order_release);
        cv_.notify_all();
      }
    }
  }

  bool drain_aq(Worker& w) {
    AqEntry entry{};
    {
      std::lock_guard lock(w.aq_mutex);
      if (w.aq.empty()) return false;
      entry = w.aq.front();
      w.aq.pop_front();
    }
    execute(w, entry);
    return true;
  }

  bool try_steal(Worker& w) {
    int n = (int)workers_.size();
    if (n == 1) return false;
    for (int attempt = 0; attempt < 2 * n; ++attempt) {
      int victim = (int)(w.rng() % n);
      if (victim == w.core) continue;
      if (TaskNode* t = workers_[victim]->wsq.steal()) {
        dispatch(w, *t);  // re-decision from the thief's perspective
        return true;
      }
    }
    return false;
  }

  void worker_loop(Worker& w) {
    while (!done_.load(std::memory_order_acquire)) {
      if (drain_aq(w)) continue;
      if (TaskNode* t = w.wsq.pop()) {
        dispatch(w, *t);
        continue;
      }
      if (try_steal(w)) continue;
      std::unique_lock lock(cv_mutex_);
      if (done_.load(std::memory_order_acquire)) break;
      idle_.fetch_add(1, std::memory_order_relaxed);
      cv_.wait_for(lock, std::chrono::microseconds(200));
      idle_.fetch_sub(1, std::memory_order_relaxed);
    }
  }

  void fail(const std::string& message) {
    {
      std::lock_guard lock(cv_mutex_);
      if (error_.empty()) error_ = message;
    }
    done_.store(true, std::memory_order_release);
    cv_.notify_all();
  }

  void wait_with_stuck_detection() {
    int strikes = 0;
    std::unique_lock lock(cv_mutex_);
    while (!done_.load(std::memory_order_acquire)) {
      cv_.wait_for(lock, std::chrono::milliseconds(10));
      if (done_.load(std::memory_order_acquire)) break;
      bool all_idle =
          idle_.load(std::memory_order_relaxed) == (int)workers_.size();
      bool queues_empty = true;
      for (auto& w : workers_)
        if (!w->wsq.empty() || !w->aq_empty()) queues_empty = false;
      if (all_idle && queues_empty &&
          unfinished_.load(std::memory_order_relaxed) > 0) {
        if (++strikes >= 3) {
          stuck_ = true;
          done_.store(true, std::memory_order_release);
          cv_.notify_all();
          break;
        }
      } else {
        strikes = 0;
      }
    }
  }

  const Topology& topo_;
  const Scheduler& sched_;
  Runtime::Options opts_;
  Dag& dag_;
  std::vector<std::unique_ptr<Worker>> workers_;
  std::unordered_map<int, std::unique_ptr<PerfTraceTable>> ptts_;
  std::vector<std::int64_t> complete_ns_;
  std::vector<ExecutionPlace> decisions_;
  std::atomic<int> unfinished_{0};
  std::atomic<int> idle_{0};
  std::atomic<bool> done_{false};
  bool stuck_ = false;
  std::string error_;
  std::mutex cv_mutex_;
  std::condition_variable cv_;
  std::chrono::steady_clock::time_point t0_;
};

}  // namespace

Runtime::Runtime(const Topology& topo, Policy policy, Options options)
    : topo_(&topo), scheduler_(policy, topo), options_(options) {}

Runtime::Result Runtime::run(Dag& dag) {
  Engine engine(*topo_, scheduler_, options_, dag);
  return engine.run();
}

}  // namespace moldtask
