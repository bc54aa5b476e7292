#pragma once

// Data-parallel inner loops: fingerprint distances and latent perturbation.
//
// Every kernel has a scalar reference and an AVX2 variant. The variants are
// bitwise identical: floating-point reductions in the scalar code accumulate
// in four interleaved lanes and combine them in the same order the vector code
// does, and no fused multiply-add is used anywhere. The active variant is
// chosen once at startup from CPUID and can be overridden with
// LSOPT_ISA=scalar|avx2 or set_isa().

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace lsopt::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa);
bool supported(Isa isa);
/// Best ISA this CPU supports.
Isa detected_isa();
Isa active_isa();
/// Throws InvalidInput when the CPU lacks `isa`.
void set_isa(Isa isa);

/// Sum of squared differences.
double squared_l2(std::span<const double> a, std::span<const double> b);
/// out[r] = squared_l2(query, rows[r*dim .. (r+1)*dim)).
void squared_l2_rows(std::span<const double> query, std::span<const double> rows,
                     std::span<double> out);
/// Number of differing bits between two packed vectors.
std::uint64_t hamming(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b);
/// out[r] = hamming(query, rows[r*words .. (r+1)*words)).
void hamming_rows(std::span<const std::uint64_t> query, std::span<const std::uint64_t> rows,
                  std::span<double> out);
/// out = z + sigma * eps, element-wise.
void axpy(std::span<const double> z, double sigma, std::span<const double> eps,
          std::span<double> out);

// Direct entry points for equivalence tests. Lengths are not re-checked here;
// the dispatched wrappers above validate them.
namespace scalar {
double squared_l2(const double* a, const double* b, std::size_t n);
void squared_l2_rows(const double* q, const double* rows, std::size_t dim, std::size_t n_rows,
                     double* out);
std::uint64_t hamming(const std::uint64_t* a, const std::uint64_t* b, std::size_t words);
void hamming_rows(const std::uint64_t* q, const std::uint64_t* rows, std::size_t words,
                  std::size_t n_rows, double* out);
void axpy(const double* z, double sigma, const double* eps, double* out, std::size_t n);
}  // namespace scalar

namespace avx2 {
bool compiled();
double squared_l2(const double* a, const double* b, std::size_t n);
void squared_l2_rows(const double* q, const double* rows, std::size_t dim, std::size_t n_rows,
                     double* out);
std::uint64_t hamming(const std::uint64_t* a, const std::uint64_t* b, std::size_t words);
void hamming_rows(const std::uint64_t* q, const std::uint64_t* rows, std::size_t words,
                  std::size_t n_rows, double* out);
void axpy(const double* z, double sigma, const double* eps, double* out, std::size_t n);
}  // namespace avx2

}  // namespace lsopt::kernels
