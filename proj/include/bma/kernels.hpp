#pragma once

#include <cstddef>

// Arithmetic inner loops used by the samplers and the pipeline. Each kernel
// has a scalar reference implementation and an AVX2+FMA variant; the active
// set is picked once at startup from CPU capabilities. Set BMA_KERNELS=scalar
// (or =avx2) in the environment to override the selection.
namespace bma::kernels {

struct Ops {
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* a, std::size_t n);
  double (*sumsq)(const double* a, std::size_t n);
  // sum over i of (a[i] - shift)^2
  double (*sumsq_shifted)(const double* a, double shift, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  const char* name;
};

const Ops& scalar();

// nullptr when the running CPU lacks AVX2/FMA.
const Ops* avx2();

const Ops& active();

inline double dot(const double* a, const double* b, std::size_t n) {
  return active().dot(a, b, n);
}
inline double sum(const double* a, std::size_t n) { return active().sum(a, n); }
inline double sumsq(const double* a, std::size_t n) { return active().sumsq(a, n); }
inline double sumsq_shifted(const double* a, double shift, std::size_t n) {
  return active().sumsq_shifted(a, shift, n);
}
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  active().axpy(alpha, x, y, n);
}

}  // namespace bma::kernels
