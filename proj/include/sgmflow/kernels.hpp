#pragma once

// Dense vector kernels used by the flow evaluation and the Runge-Kutta stages.
//
// Every kernel has a portable scalar reference implementation. Wider variants
// (AVX2 on x86-64, NEON on aarch64) are compiled in when the target allows it
// and selected at runtime from the host CPU features. Element-wise kernels
// (axpy, combine) perform the same operations in the same order as the scalar
// reference and are bit-identical to it; reductions (dot, norm_sq) reassociate
// the sum and agree to rounding.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace sgmflow::kernels {

struct KernelTable {
  const char* name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*norm_sq)(const double* a, std::size_t n);
  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // out = y + h * sum_{j<m} c[j] * k[j]
  void (*combine)(double* out, const double* y, double h, const double* c,
                  const double* const* k, std::size_t m, std::size_t n);
};

const KernelTable& scalar_table();

/// nullptr when the variant is not compiled in or the CPU lacks the feature.
const KernelTable* avx2_table();
const KernelTable* neon_table();

/// Every table usable on this host, scalar first.
std::vector<const KernelTable*> available_tables();

/// The table used by the library. Chosen once from CPU features; the
/// environment variable SGMFLOW_KERNELS=scalar|avx2|neon overrides it.
const KernelTable& active();

/// Switches the active table by name. Returns false if unavailable.
bool select(std::string_view name);

double dot(std::span<const double> a, std::span<const double> b);
double norm_sq(std::span<const double> a);
double norm(std::span<const double> a);
void axpy(double a, std::span<const double> x, std::span<double> y);

}  // namespace sgmflow::kernels
