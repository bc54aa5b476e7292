#include "lsopt/metrics.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <vector>

#include <spdlog/spdlog.h>

#include "lsopt/prescreener.hpp"

namespace lsopt {

void TopKTracker::add(std::span<const AssessedRecord> records) {
  for (const auto& r : records) {
    auto [it, inserted] = best_.try_emplace(r.candidate.key(), r.fitness.value);
    if (!inserted) it->second = std::max(it->second, r.fitness.value);
  }
}

double TopKTracker::mean(std::size_t k) const {
  if (best_.empty() || k == 0) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> values;
  values.reserve(best_.size());
  for (const auto& [key, f] : best_) values.push_back(f);
  const std::size_t take = std::min(k, values.size());
  std::partial_sort(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(take),
                    values.end(), std::greater<>());
  double sum = 0.0;
  for (std::size_t i = 0; i < take; ++i) sum += values[i];
  return sum / static_cast<double>(take);
}

double top_k_mean(std::span<const AssessedRecord> archive, std::size_t k) {
  if (archive.empty()) throw InvalidInput("top_k_mean: empty archive");
  if (k == 0) throw InvalidInput("top_k_mean: k must be positive");
  TopKTracker tracker;
  tracker.add(archive);
  if (tracker.distinct() < k) {
    spdlog::warn("top_k_mean: only {} distinct candidates for k = {}", tracker.distinct(), k);
  }
  return tracker.mean(k);
}

double diversity(std::span<const AssessedRecord> records) {
  if (records.size() < 2) throw InvalidInput("diversity: needs at least two records");
  std::vector<Fingerprint> fps;
  fps.reserve(records.size());
  for (const auto& r : records) fps.push_back(r.fingerprint);
  FingerprintMatrix matrix(fps);
  std::vector<double> row(records.size());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < records.size(); ++i) {
    matrix.distances(fps[i], row);
    for (std::size_t j = i + 1; j < records.size(); ++j) total += row[j];
  }
  const double pairs = static_cast<double>(records.size()) *
                       static_cast<double>(records.size() - 1) / 2.0;
  return total / pairs;
}

}  // namespace lsopt
