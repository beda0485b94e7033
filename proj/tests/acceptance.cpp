// Acceptance gate: one self-contained check per criterion, each printing a
// single pass/fail line. Run with no arguments for all criteria or with a
// criterion number to run one. Exit code is the number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "moldtask/runtime.hpp"
#include "moldtask/simexec.hpp"
#include "moldtask/trace.hpp"
#include "moldtask/workloads.hpp"

using namespace moldtask;

namespace {

// ---------------------------------------------------------------------------
// helpers

struct Check {
  bool ok = true;
  std::string detail;

  void expect(bool cond, const std::string& msg) {
    if (cond) return;
    ok = false;
    if (!detail.empty()) detail += "; ";
    detail += msg;
  }
};

Topology big_little() {
  return Topology({{0, 2, {1, 2}, "fast"}, {2, 4, {1, 2, 4}, "slow"}});
}

Topology quad() { return Topology({{0, 4, {1, 2, 4}, ""}}); }

// Two-cluster scenario: the fast cluster is quick at width 1, the slow
// cluster only becomes competitive when molded wide.
SimConfig big_little_config() {
  SimConfig cfg(big_little());
  cfg.set_base_time(0, 0, 1, 1.0e-3);
  cfg.set_base_time(0, 0, 2, 0.7e-3);
  cfg.set_base_time(0, 1, 1, 2.0e-3);
  cfg.set_base_time(0, 1, 2, 1.4e-3);
  cfg.set_base_time(0, 1, 4, 1.1e-3);
  return cfg;
}

SimConfig quad_config() {
  SimConfig cfg(quad());
  cfg.set_base_time(0, 0, 1, 1.0e-3);
  cfg.set_base_time(0, 0, 2, 0.7e-3);
  cfg.set_base_time(0, 0, 4, 0.5e-3);
  return cfg;
}

SimResult run_synthetic(const SimConfig& cfg, Policy policy, int parallelism,
                        int tasks) {
  SyntheticDagSpec spec;
  spec.parallelism = parallelism;
  spec.total_tasks = tasks;
  spec.attach_bodies = false;
  SyntheticWorkload w(spec);
  return simulate(w.dag(), policy, cfg);
}

double throughput(const SimResult& r, int tasks) {
  return tasks / (r.makespan_ns * 1e-9);
}

// High-priority placement counts, skipping the first `warmup` events so the
// exploration phase does not drown the steady state.
std::map<ExecutionPlace, int> high_distribution(const SimResult& r,
                                                int warmup) {
  std::map<ExecutionPlace, int> dist;
  for (size_t i = warmup; i < r.events.size(); ++i)
    if (r.events[i].priority == Priority::High) ++dist[r.events[i].place];
  return dist;
}

int total(const std::map<ExecutionPlace, int>& dist) {
  int n = 0;
  for (const auto& [p, c] : dist) n += c;
  return n;
}

int on_core(const std::map<ExecutionPlace, int>& dist, CoreId core) {
  int n = 0;
  for (const auto& [p, c] : dist)
    if (p.leader == core) n += c;
  return n;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// criterion 1: table update arithmetic is exact

bool c1_table_arithmetic(Check& ck) {
  Topology topo = big_little();
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> dist(1e-6, 10.0);

  // Weighted recurrence against an independent long-double evaluation.
  for (int trial = 0; trial < 200; ++trial) {
    PerfTraceTable t(topo, 0);
    long double ref = 0.0L;
    for (int k = 0; k < 50; ++k) {
      double m = dist(rng);
      t.update(2, 4, m);
      ref = ref == 0.0L ? (long double)m : (4.0L * ref + m) / 5.0L;
      double got = t.lookup({2, 4});
      ck.expect(std::fabs(got - (double)ref) <= 1e-12 * (double)ref,
                "weighted average diverged from reference at step " +
                    std::to_string(k));
      if (!ck.ok) return false;
    }
  }

  // Contraction toward a constant measurement: the gap shrinks by exactly
  // 4/5 per update.
  PerfTraceTable t(topo, 0);
  t.update(0, 1, 8.0);
  const double target = 3.0;
  for (int k = 1; k <= 40; ++k) {
    t.update(0, 1, target);
    double gap = t.lookup({0, 1}) - target;
    double expected = (8.0 - target) * std::pow(0.8, k);
    ck.expect(std::fabs(gap - expected) <= 1e-12,
              "contraction gap off at step " + std::to_string(k) + " by " +
                  fmt(std::fabs(gap - expected)));
  }

  // First measurement replaces the never-measured sentinel verbatim.
  PerfTraceTable f(topo, 0);
  f.update(4, 2, 0.125);
  ck.expect(f.lookup({4, 2}) == 0.125, "first measurement not stored exactly");
  return ck.ok;
}

// ---------------------------------------------------------------------------
// criterion 2: scheduler searches match a brute-force oracle

ExecutionPlace oracle_argmin(const std::map<ExecutionPlace, double>& est,
                             std::vector<ExecutionPlace> domain,
                             bool cost_objective) {
  std::sort(domain.begin(), domain.end(),
            [](const ExecutionPlace& a, const ExecutionPlace& b) {
              return std::pair(a.leader, a.width) < std::pair(b.leader, b.width);
            });
  for (const ExecutionPlace& p : domain)
    if (est.at(p) == 0.0) return p;  // explore before exploiting

  const ExecutionPlace* best = nullptr;
  double best_key = 0.0;
  for (const ExecutionPlace& p : domain) {
    double key = cost_objective ? est.at(p) * p.width : est.at(p);
    if (!best || key < best_key ||
        (key == best_key &&
         std::pair(p.width, p.leader) < std::pair(best->width, best->leader)))
      best = &p, best_key = key;
  }
  return *best;
}

bool c2_search_oracle(Check& ck) {
  Topology topo = big_little();
  auto all = topo.valid_places();
  std::vector<ExecutionPlace> width1;
  for (const ExecutionPlace& p : all)
    if (p.width == 1) width1.push_back(p);

  Scheduler dam_c({PolicyKind::DamC}, topo);
  Scheduler dam_p({PolicyKind::DamP}, topo);
  Scheduler da({PolicyKind::Da}, topo);

  std::mt19937_64 rng(4242);
  // Discrete values force exact ties; zeros force exploration.
  const double values[] = {0.0, 0.0, 0.5e-3, 1.0e-3, 1.0e-3, 2.0e-3, 3.5e-3};
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    PerfTraceTable t(topo, 0);
    std::map<ExecutionPlace, double> est;
    for (const ExecutionPlace& p : all) {
      double v = values[rng() % std::size(values)];
      if (v > 0) t.update(p.leader, p.width, v);
      est[p] = v;
    }
    CoreId worker = (CoreId)(rng() % topo.total_cores());
    if (dam_c.decide(&t, worker, Priority::High).place !=
        oracle_argmin(est, all, true))
      ++mismatches;
    if (dam_p.decide(&t, worker, Priority::High).place !=
        oracle_argmin(est, all, false))
      ++mismatches;
    if (da.decide(&t, worker, Priority::High).place !=
        oracle_argmin(est, width1, false))
      ++mismatches;
  }
  ck.expect(mismatches == 0,
            std::to_string(mismatches) + " of 3000 decisions disagreed");
  return ck.ok;
}

// ---------------------------------------------------------------------------
// criterion 3: exploration measures every place at least once

bool c3_full_exploration(Check& ck) {
  SimConfig cfg = big_little_config();
  SimResult r = run_synthetic(cfg, {PolicyKind::DamC}, 2, 200);
  ck.expect(r.events.size() == 200, "not all tasks executed");
  ck.expect(r.ptt.size() == 1, "expected one table");
  int unexplored = 0;
  for (const auto& e : r.ptt[0].entries)
    if (e.estimate_s == 0.0) ++unexplored;
  ck.expect(unexplored == 0,
            std::to_string(unexplored) + " places never measured");
  return ck.ok;
}

// ---------------------------------------------------------------------------
// criteria 4/5: steering away from a slowed core, and throughput gains

SimConfig slowed_core_config() {
  SimConfig cfg = big_little_config();
  cfg.profiles.set_constant(0, 4.0);  // core 0 runs 4x slower throughout
  return cfg;
}

bool c4_steering(Check& ck) {
  SimConfig cfg = slowed_core_config();
  const int tasks = 2000, warmup = 100;

  for (PolicyKind kind : {PolicyKind::Da, PolicyKind::DamP}) {
    SimResult r = run_synthetic(cfg, {kind}, 2, tasks);
    auto dist = high_distribution(r, warmup);
    int n = total(dist);
    ck.expect(n > 0, "no high-priority tasks after warmup");
    double on0 = (double)on_core(dist, 0) / n;
    ck.expect(on0 <= 0.05, std::string(policy_name(kind)) + " left " +
                               fmt(100 * on0) + "% of critical tasks on the "
                               "slowed core");
    if (kind == PolicyKind::DamP) {
      double on1 = (double)on_core(dist, 1) / n;
      ck.expect(on1 >= 0.80, "dam-p put only " + fmt(100 * on1) +
                                 "% of critical tasks on core 1");
    }
  }

  SimResult fa = run_synthetic(cfg, {PolicyKind::Fa, 0}, 2, tasks);
  auto dist = high_distribution(fa, warmup);
  int n = total(dist);
  int fast = on_core(dist, 0) + on_core(dist, 1);
  ck.expect(fast == n, "fa placed critical tasks outside the fast cluster");
  double share0 = (double)on_core(dist, 0) / n;
  ck.expect(std::fabs(share0 - 0.5) <= 0.05,
            "fa round-robin split is " + fmt(100 * share0) + "/" +
                fmt(100 * (1 - share0)));
  return ck.ok;
}

bool c5_throughput_gain(Check& ck) {
  SimConfig cfg = slowed_core_config();
  const int tasks = 2000;
  double dam_c = throughput(run_synthetic(cfg, {PolicyKind::DamC}, 2, tasks), tasks);
  double rws = throughput(run_synthetic(cfg, {PolicyKind::Rws}, 2, tasks), tasks);
  double fa = throughput(run_synthetic(cfg, {PolicyKind::Fa, 0}, 2, tasks), tasks);
  ck.expect(dam_c >= 1.5 * rws, "dam-c/rws ratio " + fmt(dam_c / rws) +
                                    " below 1.5");
  ck.expect(dam_c >= 1.2 * fa,
            "dam-c/fa ratio " + fmt(dam_c / fa) + " below 1.2");
  return ck.ok;
}

// ---------------------------------------------------------------------------
// criteria 6/7: frequency square wave on the fast cluster

SimConfig dvfs_config() {
  SimConfig cfg = big_little_config();
  SpeedProfileSet wave = dvfs_profile(/*period_s=*/0.02, /*duty=*/0.5,
                                      /*slow_factor=*/5.9, {0, 1},
                                      cfg.topology.total_cores());
  cfg.profiles.set_profile(0, wave.profile(0));
  cfg.profiles.set_profile(1, wave.profile(1));
  return cfg;
}

bool c6_dvfs_throughput(Check& ck) {
  SimConfig cfg = dvfs_config();
  const int tasks = 2000;
  for (int p : {2, 3}) {
    double dam_p =
        throughput(run_synthetic(cfg, {PolicyKind::DamP}, p, tasks), tasks);
    double fa =
        throughput(run_synthetic(cfg, {PolicyKind::Fa, 0}, p, tasks), tasks);
    double rws =
        throughput(run_synthetic(cfg, {PolicyKind::Rws}, p, tasks), tasks);
    ck.expect(dam_p > fa, "P=" + std::to_string(p) + ": dam-p " + fmt(dam_p) +
                              " not above fa " + fmt(fa));
    ck.expect(dam_p > rws, "P=" + std::to_string(p) + ": dam-p " + fmt(dam_p) +
                               " not above rws " + fmt(rws));
  }
  return ck.ok;
}

bool c7_perf_vs_cost(Check& ck) {
  SimConfig cfg = dvfs_config();
  const int tasks = 2000;
  double dam_p =
      throughput(run_synthetic(cfg, {PolicyKind::DamP}, 2, tasks), tasks);
  double dam_c =
      throughput(run_synthetic(cfg, {PolicyKind::DamC}, 2, tasks), tasks);
  ck.expect(dam_p >= dam_c,
            "dam-p " + fmt(dam_p) + " below dam-c " + fmt(dam_c));
  return ck.ok;
}

// ---------------------------------------------------------------------------
// criterion 8: threaded execution is correct on random graphs

bool c8_random_graphs(Check& ck) {
  auto wall0 = std::chrono::steady_clock::now();
  Topology topo = quad();
  std::mt19937_64 rng(1u);
  const PolicyKind kinds[] = {PolicyKind::Rws,  PolicyKind::RwsmC,
                              PolicyKind::Fa,   PolicyKind::FamC,
                              PolicyKind::Da,   PolicyKind::DamC,
                              PolicyKind::DamP};

  for (int trial = 0; trial < 1000 && ck.ok; ++trial) {
    int n = 1 + (int)(rng() % 50);
    Dag dag;
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i)
      dag.add_task((int)(rng() % 3),
                   rng() % 4 == 0 ? Priority::High : Priority::Low);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (rng() % 100 < 8) {
          dag.add_edge(i, j);
          edges.emplace_back(i, j);
        }

    Runtime::Options opts;
    opts.pin_workers = false;
    opts.seed = rng();
    Runtime rt(topo, {kinds[trial % 7], 0}, opts);
    auto r = rt.run(dag);

    ck.expect((int)r.events.size() == n, "trial " + std::to_string(trial) +
                                             ": event count mismatch");
    std::vector<const TraceEvent*> by_id(n, nullptr);
    for (const TraceEvent& e : r.events) {
      ck.expect(e.task_id >= 0 && e.task_id < n && !by_id[e.task_id],
                "trial " + std::to_string(trial) + ": duplicate task event");
      if (e.task_id >= 0 && e.task_id < n) by_id[e.task_id] = &e;
      ck.expect(e.place == r.decided_place[e.task_id],
                "trial " + std::to_string(trial) +
                    ": executed place differs from the recorded decision");
    }
    for (auto [pred, succ] : edges)
      if (by_id[pred] && by_id[succ])
        ck.expect(by_id[pred]->complete_ns <= by_id[succ]->start_ns,
                  "trial " + std::to_string(trial) + ": task " +
                      std::to_string(succ) + " started before task " +
                      std::to_string(pred) + " finished");
  }

  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              wall0)
                    .count();
  ck.expect(secs < 10.0, "took " + fmt(secs) + " s (budget 10 s)");
  return ck.ok;
}

// ---------------------------------------------------------------------------
// criterion 9: kernels give bitwise-identical results at every width

bool c9_kernel_invariance(Check& ck) {
  for (KernelKind kind :
       {KernelKind::MatMul, KernelKind::Copy, KernelKind::Stencil}) {
    for (int tile : {8, 16, 33}) {  // 33 is not divisible by 2 or 4
      KernelBuffers ref = KernelBuffers::make(kind, tile, 7);
      run_kernel(kind, ref, 0, 1);
      for (int width : {2, 4}) {
        KernelBuffers b = KernelBuffers::make(kind, tile, 7);
        for (int m = 0; m < width; ++m) run_kernel(kind, b, m, width);
        const auto& expect = kind == KernelKind::MatMul ? ref.c : ref.dst;
        const auto& got = kind == KernelKind::MatMul ? b.c : b.dst;
        bool same = std::memcmp(expect.data(), got.data(),
                                expect.size() * sizeof(float)) == 0;
        ck.expect(same, std::string(kernel_name(kind)) + " tile " +
                            std::to_string(tile) + " differs at width " +
                            std::to_string(width));
      }
    }
  }
  return ck.ok;
}

// ---------------------------------------------------------------------------
// criterion 10: virtual-time runs are reproducible and conserve work

bool c10_determinism(Check& ck) {
  SimConfig cfg = quad_config();
  cfg.seed = 31337;
  std::string first;
  for (int rep = 0; rep < 2; ++rep) {
    SimResult r = run_synthetic(cfg, {PolicyKind::DamC}, 4, 1000);
    std::ostringstream os;
    write_trace_csv(os, r.events, /*vtime_column=*/true);
    if (rep == 0) {
      first = os.str();

      // Work conservation: with flat speed every member core is busy for
      // exactly the base time, so trace durations must sum to the base
      // schedule to the nanosecond.
      std::int64_t traced = 0, expected = 0;
      for (const TraceEvent& e : r.events) {
        traced += e.duration_ns * e.place.width;
        expected += cfg.base_time(e.type, e.place) * e.place.width;
        ck.expect(e.duration_ns == cfg.base_time(e.type, e.place),
                  "task " + std::to_string(e.task_id) +
                      " duration differs from its base time");
      }
      ck.expect(traced == expected, "work not conserved");
      auto m = compute_metrics(r.events, r.makespan_ns);
      std::int64_t busy = 0;
      for (const auto& [core, ns] : m.per_core_worktime_ns) busy += ns;
      ck.expect(busy == traced, "per-core busy time does not add up");
      ck.expect(busy <= 4 * r.makespan_ns, "busy time exceeds capacity");
    } else {
      ck.expect(first == os.str(), "repeat run produced a different trace");
    }
  }
  ck.expect(!first.empty(), "empty trace");
  return ck.ok;
}

// ---------------------------------------------------------------------------
// criterion 11: threaded end-to-end run of every policy

bool c11_threaded_smoke(Check& ck) {
  Topology topo = quad();
  for (PolicyKind kind : {PolicyKind::Rws, PolicyKind::RwsmC, PolicyKind::Fa,
                          PolicyKind::FamC, PolicyKind::Da, PolicyKind::DamC,
                          PolicyKind::DamP}) {
    SyntheticDagSpec spec;
    spec.kernel = KernelKind::MatMul;
    spec.parallelism = 4;
    spec.total_tasks = 500;
    spec.tile = 32;
    SyntheticWorkload w(spec);
    Runtime rt(topo, {kind, 0}, {});
    auto r = rt.run(w.dag());
    ck.expect(r.events.size() == 500, std::string(policy_name(kind)) +
                                          ": not all tasks executed");
    ck.expect(r.makespan_ns > 0,
              std::string(policy_name(kind)) + ": zero makespan");
    auto m = compute_metrics(r.events, r.makespan_ns);
    ck.expect(m.throughput_tasks_per_s > 0,
              std::string(policy_name(kind)) + ": zero throughput");
  }
  return ck.ok;
}

// ---------------------------------------------------------------------------

struct Criterion {
  int id;
  const char* summary;
  std::function<bool(Check&)> fn;
};

const Criterion kCriteria[] = {
    {1, "trace-table update arithmetic is exact", c1_table_arithmetic},
    {2, "search decisions match a brute-force oracle", c2_search_oracle},
    {3, "every execution place is measured at least once", c3_full_exploration},
    {4, "adaptive policies steer critical tasks off a slowed core",
     c4_steering},
    {5, "adaptive molding beats random stealing and fixed affinity",
     c5_throughput_gain},
    {6, "adaptive molding wins under a frequency square wave",
     c6_dvfs_throughput},
    {7, "time objective is at least as good as cost under the square wave",
     c7_perf_vs_cost},
    {8, "threaded runs on random graphs are exactly-once and ordered",
     c8_random_graphs},
    {9, "kernels are bitwise width-invariant", c9_kernel_invariance},
    {10, "virtual-time runs are reproducible and conserve work",
     c10_determinism},
    {11, "all policies complete a threaded matmul workload",
     c11_threaded_smoke},
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  if (argc > 1) {
    only = std::atoi(argv[1]);
    if (only < 1 || only > 11) {
      std::fprintf(stderr, "usage: %s [criterion 1..11]\n", argv[0]);
      return 2;
    }
  }

  int failures = 0;
  for (const Criterion& c : kCriteria) {
    if (only && c.id != only) continue;
    Check ck;
    bool ok = false;
    std::string detail;
    try {
      ok = c.fn(ck) && ck.ok;
      detail = ck.detail;
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    if (ok) {
      std::printf("criterion %2d: PASS - %s\n", c.id, c.summary);
    } else {
      std::printf("criterion %2d: FAIL - %s (%s)\n", c.id, c.summary,
                  detail.c_str());
      ++failures;
    }
    std::fflush(stdout);
  }
  return failures;
}
