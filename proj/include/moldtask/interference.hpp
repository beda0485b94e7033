#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <thread>
#include <vector>

#include "moldtask/topology.hpp"
#include "moldtask/workloads.hpp"

namespace moldtask {

// Piecewise-constant slowdown multiplier over virtual time. An empty
// pattern is a flat 1.0. Non-periodic profiles keep the last multiplier
// after the pattern ends.
struct CoreProfile {
  struct Segment {
    std::int64_t len_ns = 0;
    double multiplier = 1.0;
  };
  std::vector<Segment> pattern;
  bool periodic = false;
};

class SpeedProfileSet {
 public:
  explicit SpeedProfileSet(int num_cores);

  int num_cores() const { return (int)per_core_.size(); }

  void set_profile(CoreId core, CoreProfile profile);
  void set_constant(CoreId core, double multiplier);
  const CoreProfile& profile(CoreId core) const;

  double multiplier_at(CoreId core, std::int64_t t_ns) const;

  // Virtual completion time of base_ns of work started at t0 on `core`:
  // work accrues at rate 1/multiplier, integrated across segments.
  std::int64_t finish_time(CoreId core, std::int64_t t0_ns,
                           std::int64_t base_ns) const;

 private:
  std::vector<CoreProfile> per_core_;
};

// Square wave: the first duty*period of each cycle runs at multiplier 1,
// the rest at slow_factor. duty must lie in (0,1), slow_factor >= 1.
SpeedProfileSet dvfs_profile(double period_s, double duty, double slow_factor,
                             const std::vector<CoreId>& cores, int num_cores);

// Co-running interference: an OS thread pinned to one core executing a
// kernel chain in a loop until stopped.
struct CoRunSpec {
  CoreId core = 0;
  KernelKind kernel = KernelKind::MatMul;
  int tile = 64;
  double start_s = 0.0;
  double stop_s = -1.0;    // < 0: run until stop() is called
  double period_s = 0.0;   // > 0: duty-cycled (runs only in the slow phase)
  double duty = 0.5;
};

class CoRunHandle {
 public:
  CoRunHandle() = default;
  CoRunHandle(CoRunHandle&&) noexcept = default;
  CoRunHandle& operator=(CoRunHandle&&) noexcept = default;
  ~CoRunHandle();

  void stop();
  bool active() const { return state_ != nullptr; }

 private:
  friend CoRunHandle launch_corun(const CoRunSpec& spec);
  struct State {
    std::atomic<bool> stop{false};
    std::thread thread;
  };
  std::unique_ptr<State> state_;
};

// Throws std::runtime_error if the target core cannot be pinned.
CoRunHandle launch_corun(const CoRunSpec& spec);

}  // namespace moldtask
