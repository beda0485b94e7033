#include "moldtask/interference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <numeric>
#include <stdexcept>

#include <pthread.h>
#include <sched.h>

namespace moldtask {

SpeedProfileSet::SpeedProfileSet(int num_cores) : per_core_(num_cores) {
  if (num_cores < 1)
    throw std::invalid_argument("speed profile: need at least one core");
}

void SpeedProfileSet::set_profile(CoreId core, CoreProfile profile) {
  if (core < 0 || core >= num_cores())
    throw std::invalid_argument("speed profile: core out of range");
  std::int64_t total = 0;
  for (const auto& s : profile.pattern) {
    if (s.len_ns <= 0)
      throw std::invalid_argument("speed profile: segment length must be > 0");
    if (s.multiplier <= 0)
      throw std::invalid_argument("speed profile: multiplier must be > 0");
    total += s.len_ns;
  }
  if (profile.periodic && total == 0)
    throw std::invalid_argument("speed profile: periodic pattern is empty");
  per_core_[core] = std::move(profile);
}

const CoreProfile& SpeedProfileSet::profile(CoreId core) const {
  if (core < 0 || core >= num_cores())
    throw std::invalid_argument("speed profile: core out of range");
  return per_core_[core];
}

void SpeedProfileSet::set_constant(CoreId core, double multiplier) {
  CoreProfile p;
  p.pattern.push_back({1'000'000'000, multiplier});
  p.periodic = true;
  set_profile(core, std::move(p));
}

namespace {

struct SegPos {
  double multiplier;
  std::int64_t remaining_ns;  // until the next multiplier change; -1 = forever
};

SegPos locate(const CoreProfile& p, std::int64_t t) {
  if (p.pattern.empty()) return {1.0, -1};
  std::int64_t total = 0;
  for (const auto& s : p.pattern) total += s.len_ns;
  std::int64_t pos;
  if (p.periodic) {
    pos = t % total;
  } else if (t >= total) {
    return {p.pattern.back().multiplier, -1};
  } else {
    pos = t;
  }
  for (const auto& s : p.pattern) {
    if (pos < s.len_ns) return {s.multiplier, s.len_ns - pos};
    pos -= s.len_ns;
  }
  return {p.pattern.back().multiplier, -1};  // unreachable
}

}  // namespace

double SpeedProfileSet::multiplier_at(CoreId core, std::int64_t t_ns) const {
  if (core < 0 || core >= num_cores())
    throw std::invalid_argument("speed profile: core out of range");
  return locate(per_core_[core], t_ns).multiplier;
}

std::int64_t SpeedProfileSet::finish_time(CoreId core, std::int64_t t0_ns,
                                          std::int64_t base_ns) const {
  if (core < 0 || core >= num_cores())
    throw std::invalid_argument("speed profile: core out of range");
  const CoreProfile& p = per_core_[core];
  double remaining = (double)base_ns;
  std::int64_t t = t0_ns;
  for (;;) {
    SegPos seg = locate(p, t);
    if (seg.remaining_ns < 0)
      return t + (std::int64_t)std::llround(remaining * seg.multiplier);
    double capacity = seg.remaining_ns / seg.multiplier;
    if (remaining <= capacity)
      return t + (std::int64_t)std::llround(remaining * seg.multiplier);
    remaining -= capacity;
    t += seg.remaining_ns;
  }
}

SpeedProfileSet dvfs_profile(double period_s, double duty, double slow_factor,
                             const std::vector<CoreId>& cores, int num_cores) {
  if (period_s <= 0) throw std::invalid_argument("dvfs: period must be > 0");
  if (!(duty > 0.0 && duty < 1.0))
    throw std::invalid_argument("dvfs: duty must lie in (0,1)");
  if (slow_factor < 1.0)
    throw std::invalid_argument("dvfs: slow factor must be >= 1");

  SpeedProfileSet set(num_cores);
  std::int64_t fast_ns = (std::int64_t)std::llround(period_s * duty * 1e9);
  std::int64_t slow_ns =
      (std::int64_t)std::llround(period_s * 1e9) - fast_ns;
  for (CoreId c : cores) {
    if (slow_factor == 1.0) {
      set.set_constant(c, 1.0);
      continue;
    }
    CoreProfile p;
    p.pattern.push_back({fast_ns, 1.0});
    p.pattern.push_back({slow_ns, slow_factor});
    p.periodic = true;
    set.set_profile(c, std::move(p));
  }
  return set;
}

CoRunHandle::~CoRunHandle() { stop(); }

void CoRunHandle::stop() {
  if (!state_) return;
  state_->stop.store(true, std::memory_order_relaxed);
  if (state_->thread.joinable()) state_->thread.join();
  state_.reset();
}

CoRunHandle launch_corun(const CoRunSpec& spec) {
  CoRunHandle handle;
  if (spec.stop_s >= 0 && spec.stop_s <= spec.start_s) return handle;  // no-op

  auto state = std::make_unique<CoRunHandle::State>();
  std::promise<bool> pinned;
  auto pinned_future = pinned.get_future();

  state->thread = std::thread([spec, st = state.get(),
                               p = std::move(pinned)]() mutable {
    cpu_set_t set;
    CPU_ZERO(&set);
    CPU_SET(spec.core % std::max(1u, std::thread::hardware_concurrency()),
            &set);
    bool ok =
        pthread_setaffinity_np(pthread_self(), sizeof(set), &set) == 0;
    p.set_value(ok);
    if (!ok) return;

    using clock = std::chrono::steady_clock;
    auto t0 = clock::now();
    auto elapsed_s = [&] {
      return std::chrono::duration<double>(clock::now() - t0).count();
    };
    while (elapsed_s() < spec.start_s) {
      if (st->stop.load(std::memory_order_relaxed)) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
    KernelBuffers buf = KernelBuffers::make(spec.kernel, spec.tile, 1);
    while (!st->stop.load(std::memory_order_relaxed)) {
      double t = elapsed_s();
      if (spec.stop_s >= 0 && t >= spec.stop_s) return;
      if (spec.period_s > 0) {
        double phase = std::fmod(t, spec.period_s);
        if (phase < spec.period_s * spec.duty) {  // fast phase: stay quiet
          std::this_thread::sleep_for(std::chrono::microseconds(200));
          continue;
        }
      }
      run_kernel(spec.kernel, buf, 0, 1);
    }
  });

  if (!pinned_future.get()) {
    state->stop.store(true);
    state->thread.join();
    throw std::runtime_error("corun: cannot pin thread to core " +
                             std::to_string(spec.core));
  }
  handle.state_ = std::move(state);
  return handle;
}

}  // namespace moldtask
