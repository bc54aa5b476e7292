#include <atomic>
#include <cstdlib>
#include <string>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "lsopt/errors.hpp"
#include "lsopt/kernels.hpp"

namespace lsopt::kernels {

namespace {

Isa initial_isa() {
  Isa isa = detected_isa();
  if (const char* env = std::getenv("LSOPT_ISA")) {
    const std::string want(env);
    if (want == "scalar") {
      isa = Isa::Scalar;
    } else if (want == "avx2") {
      if (supported(Isa::Avx2)) isa = Isa::Avx2;
      else spdlog::warn("LSOPT_ISA=avx2 requested but unsupported; using scalar kernels");
    } else if (!want.empty()) {
      spdlog::warn("ignoring unknown LSOPT_ISA value '{}'", want);
    }
  }
  return isa;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

void check_same(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw InvalidInput(fmt::format("{}: length mismatch ({} vs {})", what, a, b));
}

}  // namespace

std::string_view to_string(Isa isa) {
  return isa == Isa::Avx2 ? "avx2" : "scalar";
}

bool supported(Isa isa) {
  if (isa == Isa::Scalar) return true;
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  return avx2::compiled() && __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Isa detected_isa() { return supported(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar; }

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void set_isa(Isa isa) {
  if (!supported(isa)) {
    throw InvalidInput(fmt::format("ISA '{}' is not supported on this CPU", to_string(isa)));
  }
  current().store(isa, std::memory_order_relaxed);
}

double squared_l2(std::span<const double> a, std::span<const double> b) {
  check_same(a.size(), b.size(), "squared_l2");
  return active_isa() == Isa::Avx2 ? avx2::squared_l2(a.data(), b.data(), a.size())
                                   : scalar::squared_l2(a.data(), b.data(), a.size());
}

void squared_l2_rows(std::span<const double> query, std::span<const double> rows,
                     std::span<double> out) {
  const std::size_t dim = query.size();
  if (dim == 0) throw InvalidInput("squared_l2_rows: empty query");
  check_same(rows.size(), dim * out.size(), "squared_l2_rows");
  if (active_isa() == Isa::Avx2) {
    avx2::squared_l2_rows(query.data(), rows.data(), dim, out.size(), out.data());
  } else {
    scalar::squared_l2_rows(query.data(), rows.data(), dim, out.size(), out.data());
  }
}

std::uint64_t hamming(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  check_same(a.size(), b.size(), "hamming");
  return active_isa() == Isa::Avx2 ? avx2::hamming(a.data(), b.data(), a.size())
                                   : scalar::hamming(a.data(), b.data(), a.size());
}

void hamming_rows(std::span<const std::uint64_t> query, std::span<const std::uint64_t> rows,
                  std::span<double> out) {
  const std::size_t words = query.size();
  if (words == 0) throw InvalidInput("hamming_rows: empty query");
  check_same(rows.size(), words * out.size(), "hamming_rows");
  if (active_isa() == Isa::Avx2) {
    avx2::hamming_rows(query.data(), rows.data(), words, out.size(), out.data());
  } else {
    scalar::hamming_rows(query.data(), rows.data(), words, out.size(), out.data());
  }
}

void axpy(std::span<const double> z, double sigma, std::span<const double> eps,
          std::span<double> out) {
  check_same(z.size(), eps.size(), "axpy");
  check_same(z.size(), out.size(), "axpy");
  if (active_isa() == Isa::Avx2) {
    avx2::axpy(z.data(), sigma, eps.data(), out.data(), z.size());
  } else {
    scalar::axpy(z.data(), sigma, eps.data(), out.data(), z.size());
  }
}

}  // namespace lsopt::kernels
