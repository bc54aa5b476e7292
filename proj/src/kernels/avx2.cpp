#include <bit>

#include "lsopt/kernels.hpp"

#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
#define LSOPT_HAVE_AVX2_KERNELS 1
#include <immintrin.h>
#else
#define LSOPT_HAVE_AVX2_KERNELS 0
#endif

namespace lsopt::kernels::avx2 {

#if LSOPT_HAVE_AVX2_KERNELS

#define LSOPT_AVX2 __attribute__((target("avx2")))

bool compiled() { return true; }

namespace {

// Per-64-bit-lane popcount (nibble lookup + SAD).
LSOPT_AVX2 inline __m256i popcount_epi64(__m256i v) {
  const __m256i lookup = _mm256_setr_epi8(0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4,  //
                                          0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4);
  const __m256i low_mask = _mm256_set1_epi8(0x0f);
  const __m256i lo = _mm256_and_si256(v, low_mask);
  const __m256i hi = _mm256_and_si256(_mm256_srli_epi16(v, 4), low_mask);
  const __m256i cnt = _mm256_add_epi8(_mm256_shuffle_epi8(lookup, lo),
                                      _mm256_shuffle_epi8(lookup, hi));
  return _mm256_sad_epu8(cnt, _mm256_setzero_si256());
}

LSOPT_AVX2 inline std::uint64_t hsum_epi64(__m256i v) {
  alignas(32) std::uint64_t lanes[4];
  _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), v);
  return lanes[0] + lanes[1] + lanes[2] + lanes[3];
}

}  // namespace

LSOPT_AVX2 double squared_l2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
  }
  // (l0 + l2) + (l1 + l3), matching the scalar lane combine.
  const __m128d pair = _mm_add_pd(_mm256_castpd256_pd128(acc), _mm256_extractf128_pd(acc, 1));
  double sum = _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

LSOPT_AVX2 void squared_l2_rows(const double* q, const double* rows, std::size_t dim,
                                std::size_t n_rows, double* out) {
  for (std::size_t r = 0; r < n_rows; ++r) out[r] = squared_l2(q, rows + r * dim, dim);
}

LSOPT_AVX2 std::uint64_t hamming(const std::uint64_t* a, const std::uint64_t* b,
                                 std::size_t words) {
  __m256i acc = _mm256_setzero_si256();
  std::size_t w = 0;
  for (; w + 4 <= words; w += 4) {
    const __m256i x = _mm256_xor_si256(
        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + w)),
        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + w)));
    acc = _mm256_add_epi64(acc, popcount_epi64(x));
  }
  std::uint64_t count = hsum_epi64(acc);
  for (; w < words; ++w) count += std::popcount(a[w] ^ b[w]);
  return count;
}

LSOPT_AVX2 void hamming_rows(const std::uint64_t* q, const std::uint64_t* rows, std::size_t words,
                             std::size_t n_rows, double* out) {
  if (words == 1) {
    // Four single-word rows per vector.
    const __m256i query = _mm256_set1_epi64x(static_cast<long long>(q[0]));
    alignas(32) std::uint64_t counts[4];
    std::size_t r = 0;
    for (; r + 4 <= n_rows; r += 4) {
      const __m256i x = _mm256_xor_si256(
          query, _mm256_loadu_si256(reinterpret_cast<const __m256i*>(rows + r)));
      _mm256_store_si256(reinterpret_cast<__m256i*>(counts), popcount_epi64(x));
      for (int l = 0; l < 4; ++l) out[r + l] = static_cast<double>(counts[l]);
    }
    for (; r < n_rows; ++r) out[r] = static_cast<double>(std::popcount(q[0] ^ rows[r]));
    return;
  }
  for (std::size_t r = 0; r < n_rows; ++r) {
    out[r] = static_cast<double>(hamming(q, rows + r * words, words));
  }
}

LSOPT_AVX2 void axpy(const double* z, double sigma, const double* eps, double* out,
                     std::size_t n) {
  const __m256d s = _mm256_set1_pd(sigma);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d step = _mm256_mul_pd(s, _mm256_loadu_pd(eps + i));
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(z + i), step));
  }
  for (; i < n; ++i) {
    const double step = sigma * eps[i];
    out[i] = z[i] + step;
  }
}

#else

bool compiled() { return false; }

double squared_l2(const double* a, const double* b, std::size_t n) {
  return scalar::squared_l2(a, b, n);
}
void squared_l2_rows(const double* q, const double* rows, std::size_t dim, std::size_t n_rows,
                     double* out) {
  scalar::squared_l2_rows(q, rows, dim, n_rows, out);
}
std::uint64_t hamming(const std::uint64_t* a, const std::uint64_t* b, std::size_t words) {
  return scalar::hamming(a, b, words);
}
void hamming_rows(const std::uint64_t* q, const std::uint64_t* rows, std::size_t words,
                  std::size_t n_rows, double* out) {
  scalar::hamming_rows(q, rows, words, n_rows, out);
}
void axpy(const double* z, double sigma, const double* eps, double* out, std::size_t n) {
  scalar::axpy(z, sigma, eps, out, n);
}

#endif

}  // namespace lsopt::kernels::avx2
