// Compares the OpenMP kernels against the serial reference at a few sizes.
#include <omp.h>

#include <cstdio>
#include <vector>

#include "ottd/numerics/kernels.hpp"
#include "ottd/rng.hpp"

namespace {

using ottd::kernels::matmul;
using ottd::kernels::matvec;
namespace serial = ottd::kernels::serial;

std::vector<double> random_buffer(std::size_t n, ottd::Rng& rng) {
  std::vector<double> out(n);
  for (double& x : out) x = rng.uniform(-1.0, 1.0);
  return out;
}

template <typename F>
double time_best_of(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const double t0 = omp_get_wtime();
    f();
    best = std::min(best, omp_get_wtime() - t0);
  }
  return best;
}

}  // namespace

int main() {
  ottd::Rng rng(42);
  std::printf("threads: %d\n", omp_get_max_threads());
  std::printf("%-10s %6s %12s %12s %8s %10s\n", "kernel", "n", "serial[s]", "omp[s]", "speedup", "max|diff|");

  for (std::size_t n : {64u, 128u, 256u, 384u, 512u, 768u}) {
    const auto a = random_buffer(n * n, rng);
    const auto b = random_buffer(n * n, rng);
    std::vector<double> c1(n * n), c2(n * n);
    const double ts = time_best_of(3, [&] { serial::matmul(a.data(), b.data(), c1.data(), n, n, n); });
    const double tp = time_best_of(3, [&] { matmul(a.data(), b.data(), c2.data(), n, n, n); });
    double diff = 0.0;
    for (std::size_t i = 0; i < c1.size(); ++i) diff = std::max(diff, std::abs(c1[i] - c2[i]));
    std::printf("%-10s %6zu %12.6f %12.6f %8.2f %10.3g\n", "matmul", n, ts, tp, ts / tp, diff);
  }

  for (std::size_t n : {256u, 1024u, 4096u}) {
    const auto a = random_buffer(n * n, rng);
    const auto x = random_buffer(n, rng);
    std::vector<double> y1(n), y2(n);
    const double ts = time_best_of(5, [&] { serial::matvec(a.data(), x.data(), y1.data(), n, n); });
    const double tp = time_best_of(5, [&] { matvec(a.data(), x.data(), y2.data(), n, n); });
    double diff = 0.0;
    for (std::size_t i = 0; i < n; ++i) diff = std::max(diff, std::abs(y1[i] - y2[i]));
    std::printf("%-10s %6zu %12.6f %12.6f %8.2f %10.3g\n", "matvec", n, ts, tp, ts / tp, diff);
  }
  return 0;
}
