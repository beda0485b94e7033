#include "moldtask/workloads.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

namespace moldtask {

std::optional<KernelKind> parse_kernel(std::string_view name) {
  if (name == "matmul") return KernelKind::MatMul;
  if (name == "copy") return KernelKind::Copy;
  if (name == "stencil") return KernelKind::Stencil;
  return std::nullopt;
}

std::string_view kernel_name(KernelKind kind) {
  switch (kind) {
    case KernelKind::MatMul: return "matmul";
    case KernelKind::Copy: return "copy";
    case KernelKind::Stencil: return "stencil";
  }
  return "?";
}

KernelBuffers KernelBuffers::make(KernelKind kind, int tile,
                                  std::uint64_t seed) {
  if (tile < 1) throw std::invalid_argument("kernel tile must be >= 1");
  KernelBuffers b;
  b.tile = tile;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  auto fill = [&](std::vector<float>& v) {
    v.resize((size_t)tile * tile);
    for (float& x : v) x = dist(rng);
  };
  switch (kind) {
    case KernelKind::MatMul:
      fill(b.a);
      fill(b.b);
      b.c.assign((size_t)tile * tile, 0.0f);
      break;
    case KernelKind::Copy:
    case KernelKind::Stencil:
      fill(b.src);
      b.dst.assign((size_t)tile * tile, 0.0f);
      break;
  }
  return b;
}

void run_kernel(KernelKind kind, KernelBuffers& b, int member_index,
                int width) {
  const int n = b.tile;
  if (member_index < 0 || member_index >= width)
    throw std::invalid_argument("kernel member index out of range");
  const int per = n / width;
  const int r0 = member_index * per;
  const int r1 = member_index == width - 1 ? n : r0 + per;

  switch (kind) {
    case KernelKind::MatMul:
      for (int i = r0; i < r1; ++i)
        for (int j = 0; j < n; ++j) {
          float acc = 0.0f;
          for (int k = 0; k < n; ++k) acc += b.a[i * n + k] * b.b[k * n + j];
          b.c[i * n + j] = acc;
        }
      break;

    case KernelKind::Copy:
      std::copy(b.src.begin() + (size_t)r0 * n, b.src.begin() + (size_t)r1 * n,
                b.dst.begin() + (size_t)r0 * n);
      break;

    case KernelKind::Stencil:
      // One 5-point sweep src -> dst; boundary points pass through. Tiles
      // are independent per task, so no halo crosses task boundaries.
      for (int i = r0; i < r1; ++i)
        for (int j = 0; j < n; ++j) {
          if (i == 0 || j == 0 || i == n - 1 || j == n - 1) {
            b.dst[i * n + j] = b.src[i * n + j];
          } else {
            b.dst[i * n + j] =
                0.2f * (b.src[i * n + j] + b.src[(i - 1) * n + j] +
                        b.src[(i + 1) * n + j] + b.src[i * n + j - 1] +
                        b.src[i * n + j + 1]);
          }
        }
      break;
  }
}

SyntheticWorkload::SyntheticWorkload(const SyntheticDagSpec& spec)
    : spec_(spec) {
  if (spec.parallelism < 1)
    throw std::invalid_argument("synthetic dag: parallelism must be >= 1");
  if (spec.total_tasks < spec.parallelism)
    throw std::invalid_argument("synthetic dag: total_tasks must be >= P");

  layers_ = (spec.total_tasks + spec.parallelism - 1) / spec.parallelism;

  if (spec.attach_bodies) {
    buffers_.reserve(spec.total_tasks);
    for (int i = 0; i < spec.total_tasks; ++i)
      buffers_.push_back(
          KernelBuffers::make(spec.kernel, spec.tile, spec.seed + i));
  }

  int made = 0;
  int prev_critical = -1;
  for (int layer = 0; layer < layers_; ++layer) {
    int count = std::min(spec.parallelism, spec.total_tasks - made);
    int critical = -1;
    for (int t = 0; t < count; ++t) {
      Priority prio = t == 0 ? Priority::High : Priority::Low;
      TaskBody body;
      if (spec.attach_bodies) {
        KernelBuffers* buf = &buffers_[made];
        KernelKind kind = spec.kernel;
        body = [kind, buf](int member, int width) {
          run_kernel(kind, *buf, member, width);
        };
      }
      int id = dag_.add_task(spec.task_type, prio, std::move(body));
      if (t == 0) critical = id;
      if (prev_critical >= 0) dag_.add_edge(prev_critical, id);
      ++made;
    }
    prev_critical = critical;
  }
}

}  // namespace moldtask
