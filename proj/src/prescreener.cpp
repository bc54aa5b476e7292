#include "lsopt/prescreener.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "lsopt/kernels.hpp"

namespace lsopt {

Fingerprint fingerprint(const Candidate& candidate) {
  switch (candidate.domain()) {
    case Domain::BitString: {
      const auto bits = candidate.bits();
      return Fingerprint(std::vector<double>(bits.begin(), bits.end()));
    }
    case Domain::RealVector: {
      const auto v = candidate.reals();
      return Fingerprint(std::vector<double>(v.begin(), v.end()));
    }
    case Domain::Token:
      if (const auto& fp = candidate.supplied_fingerprint()) return *fp;
      throw UnsupportedDomain(
          fmt::format("token '{}' has no supplied fingerprint", candidate.token_text()));
  }
  throw UnsupportedDomain("unknown candidate domain");
}

double distance(const Fingerprint& a, const Fingerprint& b) {
  if (a.size() != b.size()) {
    throw InvalidInput(fmt::format("distance: length mismatch ({} vs {})", a.size(), b.size()));
  }
  if (a.binary() && b.binary()) return static_cast<double>(kernels::hamming(a.packed(), b.packed()));
  return kernels::squared_l2(a.values(), b.values());
}

double uncertainty(const Fingerprint& x, std::span<const Fingerprint> selected) {
  double best = kInfiniteUncertainty;
  for (const auto& s : selected) best = std::min(best, distance(x, s));
  return best;
}

// ---------------------------------------------------------------------------
// FingerprintMatrix

FingerprintMatrix::FingerprintMatrix(std::span<const Fingerprint> rows) {
  for (const auto& fp : rows) push_back(fp);
}

void FingerprintMatrix::push_back(const Fingerprint& fp) {
  if (rows_ == 0) {
    if (fp.size() == 0) throw InvalidInput("empty fingerprint");
    dim_ = fp.size();
    words_ = (dim_ + 63) / 64;
  } else if (fp.size() != dim_) {
    throw InvalidInput(
        fmt::format("fingerprint length {} does not match matrix width {}", fp.size(), dim_));
  }
  values_.insert(values_.end(), fp.values().begin(), fp.values().end());
  if (binary_ && fp.binary()) {
    packed_.insert(packed_.end(), fp.packed().begin(), fp.packed().end());
  } else if (binary_) {
    binary_ = false;
    packed_.clear();
    packed_.shrink_to_fit();
  }
  ++rows_;
}

void FingerprintMatrix::distances(const Fingerprint& query, std::span<double> out) const {
  if (out.size() != rows_) throw InvalidInput("distances: output size must equal row count");
  if (rows_ == 0) return;
  if (query.size() != dim_) {
    throw InvalidInput(
        fmt::format("distance: length mismatch ({} vs {})", query.size(), dim_));
  }
  if (binary_ && query.binary()) {
    kernels::hamming_rows(query.packed(), packed_, out);
  } else {
    kernels::squared_l2_rows(query.values(), values_, out);
  }
}

// ---------------------------------------------------------------------------
// Utility model

Weighting parse_weighting(std::string_view name) {
  if (name == "uniform") return Weighting::Uniform;
  if (name == "inverse_distance") return Weighting::InverseDistance;
  throw ConfigError(fmt::format("unknown weighting '{}'", name));
}

std::string_view to_string(Weighting w) {
  return w == Weighting::Uniform ? "uniform" : "inverse_distance";
}

KnnUtilityModel::KnnUtilityModel(std::size_t k, Weighting weighting)
    : k_(k), weighting_(weighting) {
  if (k_ < 1) throw InvalidInput("k-NN utility model needs k >= 1");
}

void KnnUtilityModel::add(std::span<const AssessedRecord> records) {
  for (const auto& r : records) {
    matrix_.push_back(r.fingerprint);
    fitness_.push_back(r.fitness.value);
    call_ids_.push_back(r.call_id);
  }
}

double KnnUtilityModel::predict(const Fingerprint& x) const {
  const std::size_t n = fitness_.size();
  if (n == 0) throw InvalidInput("utility model has no training records");
  scratch_.resize(n);
  matrix_.distances(x, scratch_);
  const auto& d = scratch_;

  const auto closer = [&](std::size_t a, std::size_t b) {
    if (d[a] != d[b]) return d[a] < d[b];
    if (call_ids_[a] != call_ids_[b]) return call_ids_[a] < call_ids_[b];
    return a < b;
  };
  const std::size_t k = std::min(k_, n);
  std::vector<std::size_t> best;
  best.reserve(k + 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (best.size() == k && !closer(i, best.back())) continue;
    best.insert(std::upper_bound(best.begin(), best.end(), i, closer), i);
    if (best.size() > k) best.pop_back();
  }

  double lo = fitness_[best.front()];
  double hi = lo;
  for (auto i : best) {
    lo = std::min(lo, fitness_[i]);
    hi = std::max(hi, fitness_[i]);
  }

  double estimate = 0.0;
  if (d[best.front()] == 0.0) {
    double sum = 0.0;
    std::size_t m = 0;
    bool same = true;
    for (auto i : best) {
      if (d[i] != 0.0) break;
      same = same && fitness_[i] == fitness_[best.front()];
      sum += fitness_[i];
      ++m;
    }
    estimate = same ? fitness_[best.front()] : sum / static_cast<double>(m);
  } else if (weighting_ == Weighting::Uniform) {
    double sum = 0.0;
    for (auto i : best) sum += fitness_[i];
    estimate = sum / static_cast<double>(best.size());
  } else {
    double num = 0.0;
    double den = 0.0;
    for (auto i : best) {
      const double w = 1.0 / d[i];
      num += w * fitness_[i];
      den += w;
    }
    estimate = num / den;
  }
  return std::clamp(estimate, lo, hi);
}

KnnUtilityModel fit_utility(std::span<const AssessedRecord> assessed, std::size_t k,
                            Weighting weighting) {
  if (assessed.empty()) throw InvalidInput("fit_utility: empty training set");
  KnnUtilityModel model(k, weighting);
  model.add(assessed);
  return model;
}

double predict_utility(const UtilityModel& model, const Fingerprint& x) {
  return model.predict(x);
}

// ---------------------------------------------------------------------------
// Selection

void ScreeningConfig::validate() const {
  if (!(lambda >= 0.0 && lambda < 1.0)) {
    throw ConfigError(fmt::format("screening lambda {} must lie in [0, 1)", lambda));
  }
  if (n_select < 1) throw ConfigError("screening n_select must be >= 1");
}

namespace {

/// Running min-distance of every pool member to the selected set.
class UncertaintyTracker {
 public:
  explicit UncertaintyTracker(std::span<const Fingerprint> fps)
      : fps_(fps), matrix_(fps), min_(fps.size(), kInfiniteUncertainty), scratch_(fps.size()) {}

  void add_selected(std::size_t idx) {
    matrix_.distances(fps_[idx], scratch_);
    for (std::size_t i = 0; i < min_.size(); ++i) min_[i] = std::min(min_[i], scratch_[i]);
  }
  double operator[](std::size_t i) const { return min_[i]; }

 private:
  std::span<const Fingerprint> fps_;
  FingerprintMatrix matrix_;
  std::vector<double> min_;
  std::vector<double> scratch_;
};

std::size_t argmax_utility(std::span<const double> utilities, const std::vector<bool>& taken) {
  std::size_t best = utilities.size();
  for (std::size_t i = 0; i < utilities.size(); ++i) {
    if (taken[i]) continue;
    if (best == utilities.size() || utilities[i] > utilities[best]) best = i;
  }
  return best;
}

}  // namespace

Selection select_offspring(std::span<const Fingerprint> fingerprints,
                           std::span<const double> utilities, const ScreeningConfig& cfg) {
  cfg.validate();
  if (fingerprints.empty()) throw InvalidInput("select_offspring: empty candidate list");
  if (fingerprints.size() != utilities.size()) {
    throw InvalidInput("select_offspring: fingerprints and utilities differ in length");
  }
  const std::size_t n = fingerprints.size();
  const std::size_t rounds = std::min(cfg.n_select, n);
  UncertaintyTracker unc(fingerprints);
  std::vector<bool> taken(n, false);
  Selection sel;
  sel.indices.reserve(rounds);
  sel.rounds.reserve(rounds);

  for (std::size_t r = 0; r < rounds; ++r) {
    ScreeningRound round;
    if (r == 0) {
      round.first = true;
      round.threshold = kInfiniteUncertainty;
      round.max_uncertainty = kInfiniteUncertainty;
      round.chosen = argmax_utility(utilities, taken);
    } else {
      double max_u = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!taken[i]) max_u = std::max(max_u, unc[i]);
      }
      const double tau = cfg.lambda * max_u;
      std::size_t best = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (taken[i] || !(unc[i] > tau)) continue;
        if (best == n || utilities[i] > utilities[best]) best = i;
      }
      round.threshold = tau;
      round.max_uncertainty = max_u;
      if (best == n) {
        round.fallback = true;
        best = argmax_utility(utilities, taken);
      }
      round.chosen = best;
    }
    round.uncertainty = unc[round.chosen];
    round.utility = utilities[round.chosen];
    taken[round.chosen] = true;
    unc.add_selected(round.chosen);
    sel.indices.push_back(round.chosen);
    sel.rounds.push_back(round);
  }
  return sel;
}

Selection select_offspring(std::span<const Candidate> candidates, const UtilityModel& model,
                           const ScreeningConfig& cfg) {
  if (candidates.empty()) throw InvalidInput("select_offspring: empty candidate list");
  std::vector<Fingerprint> fps;
  std::vector<double> utilities;
  fps.reserve(candidates.size());
  utilities.reserve(candidates.size());
  for (const auto& c : candidates) {
    fps.push_back(fingerprint(c));
    utilities.push_back(model.predict(fps.back()));
  }
  return select_offspring(fps, utilities, cfg);
}

Ablation parse_ablation(std::string_view name) {
  if (name == "none") return Ablation::None;
  if (name == "utility") return Ablation::Utility;
  if (name == "uncertainty") return Ablation::Uncertainty;
  if (name == "full") return Ablation::Full;
  throw ConfigError(fmt::format("unknown ablation '{}'", name));
}

std::string_view to_string(Ablation a) {
  switch (a) {
    case Ablation::None: return "none";
    case Ablation::Utility: return "utility";
    case Ablation::Uncertainty: return "uncertainty";
    case Ablation::Full: return "full";
  }
  return "unknown";
}

Selection screen(Ablation ablation, std::span<const Candidate> pool, const UtilityModel* model,
                 const ScreeningConfig& cfg) {
  cfg.validate();
  if (pool.empty()) throw InvalidInput("screen: empty candidate pool");
  const std::size_t rounds = std::min(cfg.n_select, pool.size());

  switch (ablation) {
    case Ablation::None: {
      Selection sel;
      for (std::size_t i = 0; i < rounds; ++i) sel.indices.push_back(i);
      return sel;
    }
    case Ablation::Uncertainty: {
      std::vector<Fingerprint> fps;
      fps.reserve(pool.size());
      for (const auto& c : pool) fps.push_back(fingerprint(c));
      UncertaintyTracker unc(fps);
      std::vector<bool> taken(pool.size(), false);
      Selection sel;
      for (std::size_t r = 0; r < rounds; ++r) {
        std::size_t best = pool.size();
        for (std::size_t i = 0; i < pool.size(); ++i) {
          if (taken[i]) continue;
          if (best == pool.size() || unc[i] > unc[best]) best = i;
        }
        ScreeningRound round;
        round.first = r == 0;
        round.chosen = best;
        round.uncertainty = unc[best];
        round.max_uncertainty = unc[best];
        round.threshold = round.first ? kInfiniteUncertainty : 0.0;
        taken[best] = true;
        unc.add_selected(best);
        sel.indices.push_back(best);
        sel.rounds.push_back(round);
      }
      return sel;
    }
    case Ablation::Utility:
    case Ablation::Full: {
      if (!model) throw InvalidInput("screen: utility-based selection needs a utility model");
      ScreeningConfig effective = cfg;
      if (ablation == Ablation::Utility) effective.lambda = 0.0;
      return select_offspring(pool, *model, effective);
    }
  }
  throw InvalidInput("screen: unknown ablation");
}

Prescreener::Prescreener(Ablation ablation, double lambda, std::unique_ptr<UtilityModel> model)
    : ablation_(ablation), lambda_(lambda), model_(std::move(model)) {
  ScreeningConfig{lambda_, 1}.validate();
  if (!model_ && (ablation_ == Ablation::Utility || ablation_ == Ablation::Full)) {
    throw ConfigError("utility-based pre-screening needs a utility model");
  }
}

Prescreener Prescreener::knn(Ablation ablation, double lambda, std::size_t k, Weighting weighting) {
  return Prescreener(ablation, lambda, std::make_unique<KnnUtilityModel>(k, weighting));
}

void Prescreener::observe(std::span<const AssessedRecord> records) {
  if (model_) model_->add(records);
}

Selection Prescreener::select(std::span<const Candidate> pool, std::size_t n_select) const {
  return screen(ablation_, pool, model_.get(), ScreeningConfig{lambda_, n_select});
}

}  // namespace lsopt
