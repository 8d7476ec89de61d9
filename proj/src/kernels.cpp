#include "nfp/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace nfp::kernels {

#if defined(__x86_64__) || defined(__i386__)
const KernelTable* avx2_table_impl();  // kernels_avx2.cpp
#endif

const KernelTable* avx2_table() {
#if defined(__x86_64__) || defined(__i386__)
  if (__builtin_cpu_supports("avx2")) return avx2_table_impl();
#endif
  return nullptr;
}

const KernelTable& active() {
  static const KernelTable* chosen = [] {
    const char* env = std::getenv("NFP_SIMD");
    if (env && std::strcmp(env, "scalar") == 0) return &scalar_table();
    const KernelTable* simd = avx2_table();
    if (env && std::strcmp(env, "avx2") == 0 && simd) return simd;
    if (env && std::strcmp(env, "avx2") == 0) return &scalar_table();  // not available
    return simd ? simd : &scalar_table();
  }();
  return *chosen;
}

}  // namespace nfp::kernels
