#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "lsopt/core.hpp"

namespace lsopt {

/// Identity features for bitstrings and real vectors; tokens must carry a
/// fingerprint supplied by an external source.
Fingerprint fingerprint(const Candidate& candidate);

/// Squared Euclidean distance. Two binary fingerprints take the popcount path.
double distance(const Fingerprint& a, const Fingerprint& b);

inline constexpr double kInfiniteUncertainty = std::numeric_limits<double>::infinity();

/// Minimum distance from `x` to any selected fingerprint; +inf when none.
double uncertainty(const Fingerprint& x, std::span<const Fingerprint> selected);

/// Row-major store of equal-length fingerprints with a batched distance query.
class FingerprintMatrix {
 public:
  FingerprintMatrix() = default;
  explicit FingerprintMatrix(std::span<const Fingerprint> rows);

  void push_back(const Fingerprint& fp);
  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }
  bool empty() const { return rows_ == 0; }

  /// out[r] = distance(query, row r); out.size() must equal rows().
  void distances(const Fingerprint& query, std::span<double> out) const;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::size_t words_ = 0;
  bool binary_ = true;
  std::vector<double> values_;
  std::vector<std::uint64_t> packed_;
};

enum class Weighting { Uniform, InverseDistance };

Weighting parse_weighting(std::string_view name);
std::string_view to_string(Weighting w);

/// Surrogate for the combined fitness of unassessed candidates.
class UtilityModel {
 public:
  virtual ~UtilityModel() = default;
  virtual void add(std::span<const AssessedRecord> records) = 0;
  virtual double predict(const Fingerprint& x) const = 0;
  virtual std::size_t size() const = 0;
};

/// k-nearest-neighbour regressor over fingerprints.
///
/// Neighbours are ordered by (distance, call_id, insertion order). Predictions
/// are the uniform or inverse-distance weighted mean of the first k fitnesses,
/// summed in neighbour order. A neighbour at distance zero short-circuits the
/// weighting: the result is the mean over the zero-distance neighbours.
class KnnUtilityModel final : public UtilityModel {
 public:
  KnnUtilityModel(std::size_t k, Weighting weighting);

  void add(std::span<const AssessedRecord> records) override;
  double predict(const Fingerprint& x) const override;
  std::size_t size() const override { return fitness_.size(); }

  std::size_t k() const { return k_; }
  Weighting weighting() const { return weighting_; }

 private:
  std::size_t k_;
  Weighting weighting_;
  FingerprintMatrix matrix_;
  std::vector<double> fitness_;
  std::vector<std::uint64_t> call_ids_;
  mutable std::vector<double> scratch_;
};

KnnUtilityModel fit_utility(std::span<const AssessedRecord> assessed, std::size_t k = 5,
                            Weighting weighting = Weighting::InverseDistance);
double predict_utility(const UtilityModel& model, const Fingerprint& x);

struct ScreeningConfig {
  double lambda = 0.35;
  std::size_t n_select = 1;

  void validate() const;
};

/// One greedy round of offspring selection.
struct ScreeningRound {
  std::size_t chosen = 0;  // index into the candidate pool
  double threshold = 0.0;  // lambda * max remaining uncertainty; +inf in round one
  double max_uncertainty = 0.0;
  double uncertainty = 0.0;
  double utility = 0.0;
  bool first = false;
  bool fallback = false;
};

struct Selection {
  std::vector<std::size_t> indices;  // selection order
  std::vector<ScreeningRound> rounds;
};

/// Greedy constrained selection over precomputed fingerprints and utilities.
///
/// Each round recomputes every remaining candidate's uncertainty against the
/// selected set, sets tau = lambda * max remaining uncertainty, and picks the
/// highest-utility candidate with uncertainty > tau (ties to pool order). Round
/// one picks the utility argmax; a round where nothing passes falls back to
/// the utility argmax.
Selection select_offspring(std::span<const Fingerprint> fingerprints,
                           std::span<const double> utilities, const ScreeningConfig& cfg);

Selection select_offspring(std::span<const Candidate> candidates, const UtilityModel& model,
                           const ScreeningConfig& cfg);

/// Pre-screener variants.
enum class Ablation {
  None,         // pool-order truncation
  Utility,      // greedy with lambda forced to 0
  Uncertainty,  // argmax uncertainty per round
  Full,         // utility under the uncertainty constraint
};

Ablation parse_ablation(std::string_view name);
std::string_view to_string(Ablation a);

/// Picks up to cfg.n_select pool members under the given variant. `model` may
/// be null for Ablation::None and Ablation::Uncertainty.
Selection screen(Ablation ablation, std::span<const Candidate> pool, const UtilityModel* model,
                 const ScreeningConfig& cfg);

/// The oracle proxy used by the generation loop: a selection variant plus the
/// utility surrogate it trains on every assessed generation.
class Prescreener {
 public:
  Prescreener(Ablation ablation, double lambda, std::unique_ptr<UtilityModel> model);

  /// k-NN surrogate with the given neighbour count and weighting.
  static Prescreener knn(Ablation ablation, double lambda, std::size_t k = 5,
                         Weighting weighting = Weighting::InverseDistance);

  Ablation ablation() const { return ablation_; }
  double lambda() const { return lambda_; }
  const UtilityModel* model() const { return model_.get(); }

  void observe(std::span<const AssessedRecord> records);
  Selection select(std::span<const Candidate> pool, std::size_t n_select) const;

 private:
  Ablation ablation_;
  double lambda_;
  std::unique_ptr<UtilityModel> model_;
};

}  // namespace lsopt
