#include "bma/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace bma::kernels {

const Ops* avx2_ops_compiled();  // kernels_avx2.cpp

const Ops* avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
    return avx2_ops_compiled();
#endif
  return nullptr;
}

namespace {

const Ops& select() {
  const char* force = std::getenv("BMA_KERNELS");
  if (force != nullptr) {
    if (std::strcmp(force, "scalar") == 0) return scalar();
    if (std::strcmp(force, "avx2") == 0 && avx2() != nullptr) return *avx2();
  }
  const Ops* vec = avx2();
  return vec != nullptr ? *vec : scalar();
}

}  // namespace

const Ops& active() {
  static const Ops& ops = select();
  return ops;
}

}  // namespace bma::kernels
