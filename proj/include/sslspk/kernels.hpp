#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace sslspk::kernels {

// Data-parallel numeric kernels. Each has an OpenMP variant (the default,
// parallel over independent output rows) and a serial reference twin used by
// the tests and the benchmark. Every output element is written by exactly one
// thread with a fixed inner summation order, so results are bit-identical for
// any thread count.

// c[m x n] = a[m x k] * b[k x n]
void matmul_nn(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n);
void matmul_nn_serial(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n);

// c[m x n] = a[m x k] * b[n x k]^T
void matmul_nt(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n);
void matmul_nt_serial(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n);

// c[k x n] = a[m x k]^T * b[m x n]
void matmul_tn(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n);
void matmul_tn_serial(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n);

// In-place radix-2 FFT; n must be a power of two.
void fft_inplace(std::complex<double>* x, std::size_t n);

// out[t x (nfft/2+1)]: squared-magnitude spectrum of each length-l frame,
// zero-padded to nfft. Parallel over frames.
void power_spectra(const double* frames, std::size_t t, std::size_t l,
                   std::size_t nfft, double* out);
void power_spectra_serial(const double* frames, std::size_t t, std::size_t l,
                          std::size_t nfft, double* out);

// Full linear convolution via FFT overlap-add; result length x + h - 1.
std::vector<double> fft_convolve(const std::vector<double>& x,
                                 const std::vector<double>& h);

std::size_t next_pow2(std::size_t n);

}  // namespace sslspk::kernels
