#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "moldtask/task_graph.hpp"

namespace moldtask {

enum class KernelKind { MatMul, Copy, Stencil };

std::optional<KernelKind> parse_kernel(std::string_view name);
std::string_view kernel_name(KernelKind kind);

// Per-task working set, allocated before timing begins.
struct KernelBuffers {
  int tile = 0;
  std::vector<float> a, b, c;    // matmul operands / result
  std::vector<float> src, dst;   // copy / stencil grids

  static KernelBuffers make(KernelKind kind, int tile, std::uint64_t seed);
};

// Executes this member's row-block share of the kernel. Row splits keep
// per-element summation order fixed, so results are bitwise identical
// across widths. N not divisible by width leaves the remainder rows to the
// last member.
void run_kernel(KernelKind kind, KernelBuffers& buffers, int member_index,
                int width);

struct SyntheticDagSpec {
  KernelKind kernel = KernelKind::MatMul;
  int parallelism = 2;       // tasks per layer, P
  int total_tasks = 500;
  int tile = 32;
  std::uint64_t seed = 1;
  bool attach_bodies = true;  // false for simulator runs
  int task_type = 0;
};

// Layered DAG: ceil(total/P) layers of P tasks of one type, the first task
// of each layer marked High. Only the critical task releases the next
// layer, so the critical chain is the longest path and DAG parallelism
// equals P.
class SyntheticWorkload {
 public:
  explicit SyntheticWorkload(const SyntheticDagSpec& spec);

  SyntheticWorkload(const SyntheticWorkload&) = delete;
  SyntheticWorkload& operator=(const SyntheticWorkload&) = delete;

  Dag& dag() { return dag_; }
  const SyntheticDagSpec& spec() const { return spec_; }
  int layer_count() const { return layers_; }

 private:
  SyntheticDagSpec spec_;
  int layers_ = 0;
  std::vector<KernelBuffers> buffers_;  // one per task when bodies attached
  Dag dag_;
};

}  // namespace moldtask
