#include <atomic>
#include <cmath>
#include <cstdlib>
#include <string>

#include "sgmflow/kernels.hpp"

namespace sgmflow::kernels {

#if !defined(__x86_64__) && !defined(_M_X64) && !defined(__aarch64__)
const KernelTable* avx2_table() { return nullptr; }
const KernelTable* neon_table() { return nullptr; }
#endif

namespace {

const KernelTable* by_name(std::string_view name) {
  if (name == "scalar") return &scalar_table();
  if (name == "avx2") return avx2_table();
  if (name == "neon") return neon_table();
  return nullptr;
}

const KernelTable* detect() {
  if (const char* env = std::getenv("SGMFLOW_KERNELS")) {
    if (const KernelTable* t = by_name(env)) return t;
  }
  if (const KernelTable* t = avx2_table()) return t;
  if (const KernelTable* t = neon_table()) return t;
  return &scalar_table();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> current{detect()};
  return current;
}

}  // namespace

std::vector<const KernelTable*> available_tables() {
  std::vector<const KernelTable*> out{&scalar_table()};
  if (const KernelTable* t = avx2_table()) out.push_back(t);
  if (const KernelTable* t = neon_table()) out.push_back(t);
  return out;
}

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

bool select(std::string_view name) {
  const KernelTable* t = by_name(name);
  if (t == nullptr) return false;
  slot().store(t, std::memory_order_release);
  return true;
}

double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size() < b.size() ? a.size() : b.size());
}

double norm_sq(std::span<const double> a) { return active().norm_sq(a.data(), a.size()); }

double norm(std::span<const double> a) { return std::sqrt(norm_sq(a)); }

void axpy(double a, std::span<const double> x, std::span<double> y) {
  active().axpy(a, x.data(), y.data(), x.size() < y.size() ? x.size() : y.size());
}

}  // namespace sgmflow::kernels
