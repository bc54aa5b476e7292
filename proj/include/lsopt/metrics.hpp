#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>

#include "lsopt/core.hpp"

namespace lsopt {

/// Mean fitness of the k best distinct candidates (best record per canonical
/// key). With fewer than k distinct candidates, averages all of them and logs
/// a warning.
double top_k_mean(std::span<const AssessedRecord> archive, std::size_t k);

/// Mean pairwise fingerprint distance over all unordered pairs.
double diversity(std::span<const AssessedRecord> records);

/// Incremental best-fitness-per-key table for per-iteration top-K reporting.
class TopKTracker {
 public:
  void add(std::span<const AssessedRecord> records);
  /// As top_k_mean, without the warning. NaN when empty.
  double mean(std::size_t k) const;
  std::size_t distinct() const { return best_.size(); }

 private:
  std::unordered_map<std::string, double> best_;
};

}  // namespace lsopt
