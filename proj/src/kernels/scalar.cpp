#include <bit>

#include "lsopt/kernels.hpp"

namespace lsopt::kernels::scalar {

double squared_l2(const double* a, const double* b, std::size_t n) {
  // Lane layout mirrors a 4-wide vector accumulator.
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (std::size_t l = 0; l < 4; ++l) {
      const double d = a[i + l] - b[i + l];
      lane[l] += d * d;
    }
  }
  double sum = (lane[0] + lane[2]) + (lane[1] + lane[3]);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

void squared_l2_rows(const double* q, const double* rows, std::size_t dim, std::size_t n_rows,
                     double* out) {
  for (std::size_t r = 0; r < n_rows; ++r) out[r] = squared_l2(q, rows + r * dim, dim);
}

std::uint64_t hamming(const std::uint64_t* a, const std::uint64_t* b, std::size_t words) {
  std::uint64_t count = 0;
  for (std::size_t w = 0; w < words; ++w) count += std::popcount(a[w] ^ b[w]);
  return count;
}

void hamming_rows(const std::uint64_t* q, const std::uint64_t* rows, std::size_t words,
                  std::size_t n_rows, double* out) {
  for (std::size_t r = 0; r < n_rows; ++r) {
    out[r] = static_cast<double>(hamming(q, rows + r * words, words));
  }
}

void axpy(const double* z, double sigma, const double* eps, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double step = sigma * eps[i];
    out[i] = z[i] + step;
  }
}

}  // namespace lsopt::kernels::scalar
