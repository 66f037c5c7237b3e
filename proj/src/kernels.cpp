#include "sslspk/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "sslspk/errors.hpp"

namespace sslspk::kernels {

namespace {
// below this many multiply-adds the fork/join overhead dominates
constexpr std::size_t kParallelCutoff = 1 << 15;

inline void mm_nn_row(const double* a, const double* b, double* c,
                      std::size_t i, std::size_t k, std::size_t n) {
  const double* ai = a + i * k;
  double* ci = c + i * n;
  std::fill(ci, ci + n, 0.0);
  for (std::size_t p = 0; p < k; ++p) {
    const double av = ai[p];
    const double* bp = b + p * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
  }
}

inline void mm_nt_row(const double* a, const double* b, double* c,
                      std::size_t i, std::size_t k, std::size_t n) {
  const double* ai = a + i * k;
  double* ci = c + i * n;
  for (std::size_t j = 0; j < n; ++j) {
    const double* bj = b + j * k;
    double s = 0.0;
    for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
    ci[j] = s;
  }
}

inline void mm_tn_row(const double* a, const double* b, double* c,
                      std::size_t i, std::size_t m, std::size_t k,
                      std::size_t n) {
  // row i of c (k x n): c[i][j] = sum_r a[r][i] * b[r][j]
  double* ci = c + i * n;
  std::fill(ci, ci + n, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    const double av = a[r * k + i];
    const double* br = b + r * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] += av * br[j];
  }
}
}  // namespace

void matmul_nn_serial(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) mm_nn_row(a, b, c, i, k, n);
}

void matmul_nn(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static) if (m * k * n > kParallelCutoff)
  for (long long i = 0; i < static_cast<long long>(m); ++i) {
    mm_nn_row(a, b, c, static_cast<std::size_t>(i), k, n);
  }
}

void matmul_nt_serial(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) mm_nt_row(a, b, c, i, k, n);
}

void matmul_nt(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static) if (m * k * n > kParallelCutoff)
  for (long long i = 0; i < static_cast<long long>(m); ++i) {
    mm_nt_row(a, b, c, static_cast<std::size_t>(i), k, n);
  }
}

void matmul_tn_serial(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < k; ++i) mm_tn_row(a, b, c, i, m, k, n);
}

void matmul_tn(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static) if (m * k * n > kParallelCutoff)
  for (long long i = 0; i < static_cast<long long>(k); ++i) {
    mm_tn_row(a, b, c, static_cast<std::size_t>(i), m, k, n);
  }
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void fft_inplace(std::complex<double>* x, std::size_t n) {
  if (n == 0 || (n & (n - 1)) != 0) {
    throw ShapeError("fft: length must be a power of two");
  }
  // bit-reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -6.283185307179586476925286766559 / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        std::complex<double> u = x[i + j];
        std::complex<double> v = x[i + j + len / 2] * w;
        x[i + j] = u + v;
        x[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

namespace {
inline void frame_power_spectrum(const double* frame, std::size_t l,
                                 std::size_t nfft, double* out,
                                 std::complex<double>* scratch) {
  for (std::size_t i = 0; i < l; ++i) scratch[i] = frame[i];
  for (std::size_t i = l; i < nfft; ++i) scratch[i] = 0.0;
  fft_inplace(scratch, nfft);
  const std::size_t bins = nfft / 2 + 1;
  for (std::size_t b = 0; b < bins; ++b) out[b] = std::norm(scratch[b]);
}
}  // namespace

void power_spectra_serial(const double* frames, std::size_t t, std::size_t l,
                          std::size_t nfft, double* out) {
  if (l > nfft) throw ShapeError("power_spectra: frame length exceeds nfft");
  const std::size_t bins = nfft / 2 + 1;
  std::vector<std::complex<double>> scratch(nfft);
  for (std::size_t i = 0; i < t; ++i) {
    frame_power_spectrum(frames + i * l, l, nfft, out + i * bins,
                         scratch.data());
  }
}

void power_spectra(const double* frames, std::size_t t, std::size_t l,
                   std::size_t nfft, double* out) {
  if (l > nfft) throw ShapeError("power_spectra: frame length exceeds nfft");
  const std::size_t bins = nfft / 2 + 1;
#pragma omp parallel if (t > 8)
  {
    std::vector<std::complex<double>> scratch(nfft);
#pragma omp for schedule(static)
    for (long long i = 0; i < static_cast<long long>(t); ++i) {
      frame_power_spectrum(frames + static_cast<std::size_t>(i) * l, l, nfft,
                           out + static_cast<std::size_t>(i) * bins,
                           scratch.data());
    }
  }
}

std::vector<double> fft_convolve(const std::vector<double>& x,
                                 const std::vector<double>& h) {
  if (x.empty() || h.empty()) return {};
  const std::size_t out_len = x.size() + h.size() - 1;
  const std::size_t nfft = std::max<std::size_t>(next_pow2(2 * h.size()), 256);
  const std::size_t block = nfft - h.size() + 1;

  std::vector<std::complex<double>> hf(nfft, 0.0);
  for (std::size_t i = 0; i < h.size(); ++i) hf[i] = h[i];
  fft_inplace(hf.data(), nfft);

  std::vector<double> out(out_len, 0.0);
  std::vector<std::complex<double>> buf(nfft);
  for (std::size_t start = 0; start < x.size(); start += block) {
    const std::size_t len = std::min(block, x.size() - start);
    for (std::size_t i = 0; i < len; ++i) buf[i] = x[start + i];
    for (std::size_t i = len; i < nfft; ++i) buf[i] = 0.0;
    fft_inplace(buf.data(), nfft);
    for (std::size_t i = 0; i < nfft; ++i) buf[i] *= hf[i];
    // inverse FFT via conjugation
    for (auto& v : buf) v = std::conj(v);
    fft_inplace(buf.data(), nfft);
    const double inv_n = 1.0 / static_cast<double>(nfft);
    const std::size_t copy = std::min(nfft, out_len - start);
    for (std::size_t i = 0; i < copy; ++i) {
      out[start + i] += std::conj(buf[i]).real() * inv_n;
    }
  }
  return out;
}

}  // namespace sslspk::kernels
