#include "sgmflow/kernels.hpp"

namespace sgmflow::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double norm_sq_scalar(const double* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * a[i];
  return s;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + a * x[i];
}

void combine_scalar(double* out, const double* y, double h, const double* c,
                    const double* const* k, std::size_t m, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) acc = acc + c[j] * k[j][i];
    out[i] = y[i] + h * acc;
  }
}

constexpr KernelTable kScalar{"scalar", dot_scalar, norm_sq_scalar, axpy_scalar, combine_scalar};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace sgmflow::kernels
