#include <doctest.h>

#include <bit>
#include <cstring>
#include <random>

#include "lsopt/errors.hpp"
#include "lsopt/kernels.hpp"

using namespace lsopt;
namespace k = lsopt::kernels;

namespace {

std::vector<double> normals(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

std::vector<std::uint64_t> words(std::mt19937_64& rng, std::size_t n) {
  std::vector<std::uint64_t> v(n);
  for (auto& x : v) x = rng();
  return v;
}

bool same_bits(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

/// Restores the startup ISA when a test case exits.
struct IsaGuard {
  k::Isa saved = k::active_isa();
  ~IsaGuard() { k::set_isa(saved); }
};

}  // namespace

TEST_CASE("scalar kernels against naive loops") {
  std::mt19937_64 rng(1);
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 64u, 129u}) {
    // Integer-valued inputs keep every sum exact.
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = static_cast<double>(rng() % 9) - 4.0;
      b[i] = static_cast<double>(rng() % 9) - 4.0;
    }
    double expect = 0.0;
    for (std::size_t i = 0; i < n; ++i) expect += (a[i] - b[i]) * (a[i] - b[i]);
    CHECK(k::scalar::squared_l2(a.data(), b.data(), n) == expect);

    const auto x = words(rng, n), y = words(rng, n);
    std::uint64_t h = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (int bit = 0; bit < 64; ++bit) h += ((x[i] ^ y[i]) >> bit) & 1u;
    }
    CHECK(k::scalar::hamming(x.data(), y.data(), n) == h);
  }
}

TEST_CASE("avx2 kernels are bitwise identical to scalar") {
  if (!k::avx2::compiled() || !k::supported(k::Isa::Avx2)) {
    MESSAGE("AVX2 unavailable; skipping equivalence");
    return;
  }
  std::mt19937_64 rng(2);
  for (std::size_t n = 0; n <= 70; ++n) {
    for (int rep = 0; rep < 20; ++rep) {
      const auto a = normals(rng, n, 3.0), b = normals(rng, n, 0.01);
      CHECK(same_bits(k::scalar::squared_l2(a.data(), b.data(), n),
                      k::avx2::squared_l2(a.data(), b.data(), n)));

      std::vector<double> o1(n), o2(n);
      const double sigma = 0.1 + 0.9 * (rep / 19.0);
      k::scalar::axpy(a.data(), sigma, b.data(), o1.data(), n);
      k::avx2::axpy(a.data(), sigma, b.data(), o2.data(), n);
      CHECK(std::memcmp(o1.data(), o2.data(), n * sizeof(double)) == 0);

      const auto x = words(rng, n), y = words(rng, n);
      CHECK(k::scalar::hamming(x.data(), y.data(), n) == k::avx2::hamming(x.data(), y.data(), n));
    }
  }
}

TEST_CASE("avx2 row kernels are bitwise identical to scalar") {
  if (!k::avx2::compiled() || !k::supported(k::Isa::Avx2)) return;
  std::mt19937_64 rng(3);
  for (std::size_t dim : {1u, 2u, 5u, 8u, 60u, 61u}) {
    for (std::size_t rows : {0u, 1u, 3u, 4u, 5u, 17u, 200u}) {
      const auto q = normals(rng, dim), m = normals(rng, dim * rows);
      std::vector<double> o1(rows), o2(rows);
      k::scalar::squared_l2_rows(q.data(), m.data(), dim, rows, o1.data());
      k::avx2::squared_l2_rows(q.data(), m.data(), dim, rows, o2.data());
      CHECK(std::memcmp(o1.data(), o2.data(), rows * sizeof(double)) == 0);
    }
  }
  for (std::size_t w : {1u, 2u, 3u, 4u, 5u, 32u}) {
    for (std::size_t rows : {0u, 1u, 3u, 4u, 7u, 250u}) {
      const auto q = words(rng, w), m = words(rng, w * rows);
      std::vector<double> o1(rows), o2(rows);
      k::scalar::hamming_rows(q.data(), m.data(), w, rows, o1.data());
      k::avx2::hamming_rows(q.data(), m.data(), w, rows, o2.data());
      CHECK(o1 == o2);
    }
  }
}

TEST_CASE("dispatch honours set_isa and validates lengths") {
  IsaGuard guard;
  k::set_isa(k::Isa::Scalar);
  CHECK(k::active_isa() == k::Isa::Scalar);
  std::vector<double> a{1.0, 2.0}, b{1.0};
  CHECK_THROWS_AS(k::squared_l2(a, b), InvalidInput);
  std::vector<double> out(1);
  CHECK_THROWS_AS(k::axpy(a, 1.0, b, out), InvalidInput);
  CHECK(k::squared_l2(a, std::vector<double>{0.0, 0.0}) == 5.0);

  if (!k::supported(k::Isa::Avx2)) {
    CHECK_THROWS_AS(k::set_isa(k::Isa::Avx2), InvalidInput);
  } else {
    k::set_isa(k::Isa::Avx2);
    CHECK(k::active_isa() == k::Isa::Avx2);
  }
}
