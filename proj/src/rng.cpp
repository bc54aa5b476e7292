#include "lsopt/rng.hpp"

#include <cmath>
#include <numbers>

namespace lsopt {

CounterStream::CounterStream(std::initializer_list<std::uint64_t> key) {
  std::uint64_t h = 0x6a09e667f3bcc908ULL;
  for (auto k : key) h = mix64(h ^ mix64(k));
  key_ = h;
}

std::uint64_t CounterStream::next_u64() {
  return mix64(key_ + 0xd1b54a32d192ed03ULL * (counter_++));
}

double CounterStream::next_uniform() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterStream::next_normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = next_uniform();
  const double u2 = next_uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

void CounterStream::fill_normal(std::span<double> out) {
  for (auto& v : out) v = next_normal();
}

}  // namespace lsopt
