#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "moldtask/interference.hpp"
#include "moldtask/runtime.hpp"
#include "moldtask/simexec.hpp"
#include "moldtask/trace.hpp"
#include "moldtask/workloads.hpp"

namespace fs = std::filesystem;
using namespace moldtask;

namespace {

struct InterferenceArgs {
  enum class Kind { None, CoRun, Dvfs } kind = Kind::None;
  int core = 0;                   // corun
  KernelKind kernel = KernelKind::MatMul;
  double slowdown = 4.0;          // corun in simulation
  double period_s = 10.0;         // dvfs
  double duty = 0.5;
  double factor = 5.9;
  std::vector<int> cores;         // dvfs
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

InterferenceArgs parse_interference(const std::string& spec) {
  InterferenceArgs out;
  if (spec.empty() || spec == "none") return out;
  auto colon = spec.find(':');
  std::string kind = spec.substr(0, colon);
  std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (kind == "corun")
    out.kind = InterferenceArgs::Kind::CoRun;
  else if (kind == "dvfs")
    out.kind = InterferenceArgs::Kind::Dvfs;
  else
    throw CLI::ValidationError("--interference",
                               "unknown interference kind: " + kind);
  for (const std::string& kv : split(rest, ',')) {
    if (kv.empty()) continue;
    auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw CLI::ValidationError("--interference", "expected key=value: " + kv);
    std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
    if (key == "core") {
      out.core = std::stoi(value);
    } else if (key == "kernel") {
      auto k = parse_kernel(value);
      if (!k)
        throw CLI::ValidationError("--interference", "unknown kernel " + value);
      out.kernel = *k;
    } else if (key == "factor") {
      out.factor = out.slowdown = std::stod(value);
    } else if (key == "period") {
      out.period_s = std::stod(value);
    } else if (key == "duty") {
      out.duty = std::stod(value);
    } else if (key == "cores") {
      auto dash = value.find('-');
      if (dash == std::string::npos) {
        out.cores.push_back(std::stoi(value));
      } else {
        int a = std::stoi(value.substr(0, dash));
        int b = std::stoi(value.substr(dash + 1));
        for (int c = a; c <= b; ++c) out.cores.push_back(c);
      }
    } else {
      throw CLI::ValidationError("--interference", "unknown key " + key);
    }
  }
  return out;
}

Topology default_host_topology() {
  int n = (int)std::max(2u, std::thread::hardware_concurrency());
  std::vector<int> widths{1};
  if (n >= 2) widths.push_back(2);
  if (n >= 4) widths.push_back(4);
  return Topology({{0, n, widths, "host"}});
}

std::pair<int, int> parse_parallelism(const std::string& s) {
  auto dots = s.find("..");
  if (dots == std::string::npos) {
    int p = std::stoi(s);
    return {p, p};
  }
  return {std::stoi(s.substr(0, dots)), std::stoi(s.substr(dots + 2))};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"moldtask: moldable task-DAG scheduling benchmark harness"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run an experiment matrix");
  std::string executor, policy_arg, kernel_arg = "matmul";
  std::string parallelism_arg = "2", interference_arg = "none";
  std::string topology_file, sim_config_file, out_dir;
  int tasks = 500, tile = 32, reps = 1;
  std::uint64_t seed = 1;
  int weight_old = 4, weight_new = 1;
  bool dump_trace = false, dump_ptt = false;

  run->add_option("--executor", executor, "threads|sim")
      ->required()
      ->check(CLI::IsMember({"threads", "sim"}));
  run->add_option("--policy", policy_arg,
                  "comma-separated list: rws,rwsm-c,fa,fam-c,da,dam-c,dam-p")
      ->required();
  run->add_option("--kernel", kernel_arg, "matmul|copy|stencil")
      ->check(CLI::IsMember({"matmul", "copy", "stencil"}));
  run->add_option("--parallelism", parallelism_arg, "P or P..Q sweep");
  run->add_option("--tasks", tasks, "total tasks in the DAG");
  run->add_option("--tile", tile, "kernel tile size N");
  run->add_option("--interference", interference_arg,
                  "none | corun:core=K,kernel=X[,factor=F] | "
                  "dvfs:period=S,duty=D,factor=F,cores=A-B");
  run->add_option("--topology", topology_file, "topology JSON file");
  run->add_option("--sim-config", sim_config_file,
                  "scenario JSON (required for --executor sim)");
  run->add_option("--reps", reps, "repetitions")->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "output directory")->required();
  run->add_option("--seed", seed, "base RNG seed (MOLDTASK_SEED overrides)");
  run->add_option("--weight-old", weight_old, "PTT weight of the old value");
  run->add_option("--weight-new", weight_new, "PTT weight of the new value");
  run->add_flag("--dump-trace", dump_trace, "write per-run trace CSVs");
  run->add_flag("--dump-ptt", dump_ptt, "write final PTT CSVs");

  CLI11_PARSE(app, argc, argv);

  try {
    if (const char* env = std::getenv("MOLDTASK_SEED")) seed = std::stoull(env);

    std::vector<Policy> policies;
    for (const std::string& name : split(policy_arg, ',')) {
      auto kind = parse_policy_kind(name);
      if (!kind) {
        std::ostringstream names;
        for (auto n : all_policy_names()) names << n << " ";
        std::cerr << "unknown policy \"" << name << "\"; valid names: "
                  << names.str() << "\n";
        return 2;
      }
      policies.push_back({*kind, 0});
    }
    KernelKind kernel = *parse_kernel(kernel_arg);
    auto [p_lo, p_hi] = parse_parallelism(parallelism_arg);
    InterferenceArgs interference = parse_interference(interference_arg);
    bool sim = executor == "sim";

    std::optional<SimConfig> sim_cfg;
    std::optional<Topology> topo;
    if (sim) {
      if (sim_config_file.empty()) {
        std::cerr << "--executor sim requires --sim-config\n";
        return 2;
      }
      sim_cfg.emplace(SimConfig::from_file(sim_config_file));
      sim_cfg->weight_old = weight_old;
      sim_cfg->weight_new = weight_new;
      if (interference.kind == InterferenceArgs::Kind::CoRun) {
        sim_cfg->profiles.set_constant(interference.core,
                                       interference.slowdown);
      } else if (interference.kind == InterferenceArgs::Kind::Dvfs) {
        SpeedProfileSet wave = dvfs_profile(
            interference.period_s, interference.duty, interference.factor,
            interference.cores, sim_cfg->topology.total_cores());
        for (int c : interference.cores)
          sim_cfg->profiles.set_profile(c, wave.profile(c));
      }
      topo.emplace(sim_cfg->topology);
    } else {
      topo.emplace(topology_file.empty() ? default_host_topology()
                                         : Topology::from_file(topology_file));
    }

    fs::create_directories(out_dir);
    std::ofstream throughput_csv(fs::path(out_dir) / "throughput.csv");
    std::ofstream dist_csv(fs::path(out_dir) / "priority_distribution.csv");
    std::ofstream work_csv(fs::path(out_dir) / "core_worktime.csv");
    throughput_csv << "policy,kernel,parallelism,tasks,tile,rep,executor,"
                      "pinned,seed,makespan_us,throughput_tasks_per_s\n";
    dist_csv << "policy,parallelism,rep,leader,width,count\n";
    work_csv << "policy,parallelism,rep,core,worktime_us\n";

    for (const Policy& policy : policies) {
      for (int p = p_lo; p <= p_hi; ++p) {
        for (int rep = 0; rep < reps; ++rep) {
          std::uint64_t run_seed = seed + (std::uint64_t)rep;
          SyntheticDagSpec spec;
          spec.kernel = kernel;
          spec.parallelism = p;
          spec.total_tasks = tasks;
          spec.tile = tile;
          spec.seed = run_seed;
          spec.attach_bodies = !sim;
          SyntheticWorkload workload(spec);

          std::vector<TraceEvent> events;
          std::int64_t makespan = 0;
          bool pinned = false;
          std::vector<PttSnapshot> ptts;

          if (sim) {
            SimConfig cfg = *sim_cfg;
            cfg.seed = run_seed;
            SimResult r = simulate(workload.dag(), policy, cfg);
            events = std::move(r.events);
            makespan = r.makespan_ns;
            ptts = std::move(r.ptt);
          } else {
            CoRunHandle corun;
            if (interference.kind == InterferenceArgs::Kind::CoRun) {
              CoRunSpec cs;
              cs.core = interference.core;
              cs.kernel = interference.kernel;
              corun = launch_corun(cs);
            }
            std::vector<CoRunHandle> duty_cycled;
            if (interference.kind == InterferenceArgs::Kind::Dvfs) {
              // No frequency control from user space: approximate the DVFS
              // cycle with duty-cycled co-runners on the affected cores.
              for (int c : interference.cores) {
                CoRunSpec cs;
                cs.core = c;
                cs.kernel = kernel;
                cs.period_s = interference.period_s;
                cs.duty = interference.duty;
                duty_cycled.push_back(launch_corun(cs));
              }
            }
            Runtime::Options opts;
            opts.seed = run_seed;
            opts.weight_old = weight_old;
            opts.weight_new = weight_new;
            Runtime runtime(*topo, policy, opts);
            Runtime::Result r = runtime.run(workload.dag());
            events = std::move(r.events);
            makespan = r.makespan_ns;
            pinned = r.pinned;
            ptts = std::move(r.ptt);
            if (!pinned)
              std::cerr << "warning: workers not pinned; results flagged "
                           "pinned=false\n";
          }

          Metrics m = compute_metrics(events, makespan);
          char row[256];
          std::snprintf(row, sizeof(row),
                        "%s,%s,%d,%d,%d,%d,%s,%s,%llu,%.6g,%.6g\n",
                        std::string(policy_name(policy.kind)).c_str(),
                        std::string(kernel_name(kernel)).c_str(), p, tasks,
                        tile, rep, executor.c_str(), pinned ? "true" : "false",
                        (unsigned long long)run_seed, makespan / 1e3,
                        m.throughput_tasks_per_s);
          throughput_csv << row;
          for (const auto& [place, count] : m.priority_distribution) {
            std::snprintf(row, sizeof(row), "%s,%d,%d,%d,%d,%d\n",
                          std::string(policy_name(policy.kind)).c_str(), p,
                          rep, place.leader, place.width, count);
            dist_csv << row;
          }
          for (const auto& [core, ns] : m.per_core_worktime_ns) {
            std::snprintf(row, sizeof(row), "%s,%d,%d,%d,%.6g\n",
                          std::string(policy_name(policy.kind)).c_str(), p,
                          rep, core, ns / 1e3);
            work_csv << row;
          }

          if (dump_trace) {
            std::string name = "trace_" +
                               std::string(policy_name(policy.kind)) + "_p" +
                               std::to_string(p) + "_r" + std::to_string(rep) +
                               ".csv";
            std::ofstream trace_out(fs::path(out_dir) / name);
            write_trace_csv(trace_out, events, sim);
          }
          if (dump_ptt && !ptts.empty()) {
            std::string name = "ptt_" + std::string(policy_name(policy.kind)) +
                               "_p" + std::to_string(p) + "_r" +
                               std::to_string(rep) + ".csv";
            std::ofstream ptt_out(fs::path(out_dir) / name);
            ptt_out << "task_type,core,width,estimate_us\n";
            for (const PttSnapshot& snap : ptts) {
              for (const auto& e : snap.entries) {
                std::snprintf(row, sizeof(row), "%d,%d,%d,%.6g\n",
                              snap.task_type, e.core, e.width,
                              e.estimate_s * 1e6);
                ptt_out << row;
              }
            }
          }
        }
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
