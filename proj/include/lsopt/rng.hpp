#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>

namespace lsopt {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stream tags that keep differently-purposed streams disjoint for one seed.
enum class StreamTag : std::uint64_t {
  Prior = 0x7072696f72ULL,
  Perturbation = 0x7065727475ULL,
  Test = 0x74657374ULL,
};

/// Counter-based random stream.
///
/// Output k of a stream is a pure function of (key, k), so a stream can be
/// reconstructed from its key alone. Keys are built from an arbitrary tuple of
/// integers, e.g. (seed, tag, iteration, elite, noise index).
class CounterStream {
 public:
  CounterStream(std::initializer_list<std::uint64_t> key);

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1).
  double next_uniform();
  /// Standard normal via Box-Muller; pairs are consumed in order.
  double next_normal();
  void fill_normal(std::span<double> out);

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace lsopt
