#include <atomic>
#include <cstdlib>

#include "perclim/simd.hpp"

namespace perclim::simd {
namespace {

std::atomic<const KernelTable*> g_active{nullptr};

const KernelTable* pick(const std::string& name) {
#if defined(__x86_64__)
  if (name == "avx2") return cpu_has_avx2() ? &avx2_table() : nullptr;
  if (name == "auto") return cpu_has_avx2() ? &avx2_table() : &scalar_table();
#else
  if (name == "auto") return &scalar_table();
#endif
  if (name == "scalar") return &scalar_table();
  return nullptr;
}

const KernelTable* initial() {
  const char* env = std::getenv("PERCLIM_SIMD");
  if (env != nullptr) {
    if (const KernelTable* t = pick(env)) return t;
  }
  return pick("auto");
}

}  // namespace

const KernelTable& active() {
  const KernelTable* t = g_active.load(std::memory_order_acquire);
  if (t == nullptr) {
    t = initial();
    g_active.store(t, std::memory_order_release);
  }
  return *t;
}

bool select(const std::string& name) {
  const KernelTable* t = pick(name);
  if (t == nullptr) return false;
  g_active.store(t, std::memory_order_release);
  return true;
}

std::vector<std::string> available() {
  std::vector<std::string> names{"scalar"};
#if defined(__x86_64__)
  if (cpu_has_avx2()) names.push_back("avx2");
#endif
  return names;
}

}  // namespace perclim::simd
