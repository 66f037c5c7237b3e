// Times the OpenMP kernels against their serial reference twins and reports
// the speedup. Run with OMP_NUM_THREADS to control the parallel side.

#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "sslspk/kernels.hpp"
#include "sslspk/rng.hpp"

using namespace sslspk;
using Clock = std::chrono::steady_clock;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm up
  auto t0 = Clock::now();
  for (int i = 0; i < reps; ++i) fn();
  auto t1 = Clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

void report(const char* name, double serial_ms, double parallel_ms) {
  std::printf("%-24s serial %8.3f ms   parallel %8.3f ms   speedup %5.2fx\n",
              name, serial_ms, parallel_ms, serial_ms / parallel_ms);
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("OpenMP enabled, max threads = %d\n", omp_get_max_threads());
#else
  std::printf("OpenMP not enabled; both columns run serially\n");
#endif

  Rng rng(1234);
  const std::size_t m = 384, k = 384, n = 384;
  std::vector<double> a(m * k), b(k * n), c(m * n);
  for (double& v : a) v = rng.uniform(-1, 1);
  for (double& v : b) v = rng.uniform(-1, 1);

  report("matmul_nn 384^3",
         time_ms([&] { kernels::matmul_nn_serial(a.data(), b.data(), c.data(), m, k, n); }, 5),
         time_ms([&] { kernels::matmul_nn(a.data(), b.data(), c.data(), m, k, n); }, 5));
  report("matmul_nt 384^3",
         time_ms([&] { kernels::matmul_nt_serial(a.data(), b.data(), c.data(), m, k, n); }, 5),
         time_ms([&] { kernels::matmul_nt(a.data(), b.data(), c.data(), m, k, n); }, 5));
  report("matmul_tn 384^3",
         time_ms([&] { kernels::matmul_tn_serial(a.data(), b.data(), c.data(), m, k, n); }, 5),
         time_ms([&] { kernels::matmul_tn(a.data(), b.data(), c.data(), m, k, n); }, 5));

  const std::size_t frames = 512, flen = 400, nfft = 512;
  std::vector<double> fr(frames * flen), spec(frames * (nfft / 2 + 1));
  for (double& v : fr) v = rng.uniform(-1, 1);
  report("power_spectra 512 fr",
         time_ms([&] { kernels::power_spectra_serial(fr.data(), frames, flen, nfft, spec.data()); }, 5),
         time_ms([&] { kernels::power_spectra(fr.data(), frames, flen, nfft, spec.data()); }, 5));

  return 0;
}
