#include "lsopt/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "lsopt/prescreener.hpp"

namespace lsopt {

ObjectiveKind parse_objective_kind(std::string_view name) {
  if (name == "onemax") return ObjectiveKind::OneMax;
  if (name == "leading_ones") return ObjectiveKind::LeadingOnes;
  if (name == "trap_k") return ObjectiveKind::TrapK;
  if (name == "motif_match") return ObjectiveKind::MotifMatch;
  if (name == "gaussian_peak") return ObjectiveKind::GaussianPeak;
  throw ConfigError(fmt::format("unknown objective kind '{}'", name));
}

std::string_view to_string(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::OneMax: return "onemax";
    case ObjectiveKind::LeadingOnes: return "leading_ones";
    case ObjectiveKind::TrapK: return "trap_k";
    case ObjectiveKind::MotifMatch: return "motif_match";
    case ObjectiveKind::GaussianPeak: return "gaussian_peak";
  }
  return "unknown";
}

void ObjectiveSpec::validate() const {
  switch (kind) {
    case ObjectiveKind::TrapK:
      if (trap_k < 1) throw ConfigError("trap_k block size must be >= 1");
      break;
    case ObjectiveKind::MotifMatch:
      if (motif.empty()) throw ConfigError("motif_match needs a non-empty target");
      if (motif.find_first_not_of("01") != std::string::npos) {
        throw ConfigError("motif_match target must be a 0/1 string");
      }
      break;
    case ObjectiveKind::GaussianPeak:
      if (center.empty()) throw ConfigError("gaussian_peak needs a center");
      if (!(width > 0.0) || !std::isfinite(width)) {
        throw ConfigError("gaussian_peak width must be positive");
      }
      break;
    default:
      break;
  }
}

Domain ObjectiveSpec::domain() const {
  return kind == ObjectiveKind::GaussianPeak ? Domain::RealVector : Domain::BitString;
}

std::string ObjectiveSpec::name() const {
  if (kind == ObjectiveKind::TrapK) return fmt::format("trap_{}", trap_k);
  return std::string(to_string(kind));
}

namespace {

double trap_score(std::span<const std::uint8_t> bits, std::size_t k) {
  if (bits.size() % k != 0) {
    throw InvalidInput(
        fmt::format("trap_k: length {} is not a multiple of block size {}", bits.size(), k));
  }
  // Deceptive trap: a full block scores k, otherwise k - 1 - ones.
  const std::size_t blocks = bits.size() / k;
  std::size_t total = 0;
  for (std::size_t b = 0; b < blocks; ++b) {
    std::size_t ones = 0;
    for (std::size_t i = 0; i < k; ++i) ones += bits[b * k + i];
    total += ones == k ? k : k - 1 - ones;
  }
  return static_cast<double>(total) / static_cast<double>(blocks * k);
}

}  // namespace

double score_objective(const ObjectiveSpec& spec, const Candidate& candidate) {
  if (candidate.domain() != spec.domain()) {
    throw InvalidInput(fmt::format("{} scores {} candidates, got {}", spec.name(),
                                   to_string(spec.domain()), to_string(candidate.domain())));
  }
  if (spec.kind == ObjectiveKind::GaussianPeak) {
    const auto x = candidate.reals();
    if (x.size() != spec.center.size()) {
      throw InvalidInput(fmt::format("gaussian_peak: dimension {} vs center {}", x.size(),
                                     spec.center.size()));
    }
    double sq = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - spec.center[i];
      sq += d * d;
    }
    return std::exp(-sq / spec.width);
  }

  const auto bits = candidate.bits();
  const double len = static_cast<double>(bits.size());
  switch (spec.kind) {
    case ObjectiveKind::OneMax:
      return static_cast<double>(std::count(bits.begin(), bits.end(), std::uint8_t{1})) / len;
    case ObjectiveKind::LeadingOnes: {
      const auto first_zero = std::find(bits.begin(), bits.end(), std::uint8_t{0});
      return static_cast<double>(first_zero - bits.begin()) / len;
    }
    case ObjectiveKind::TrapK:
      return trap_score(bits, spec.trap_k);
    case ObjectiveKind::MotifMatch: {
      if (spec.motif.size() != bits.size()) {
        throw InvalidInput(fmt::format("motif_match: length {} vs target {}", bits.size(),
                                       spec.motif.size()));
      }
      std::size_t same = 0;
      for (std::size_t i = 0; i < bits.size(); ++i) {
        same += (bits[i] == 1) == (spec.motif[i] == '1');
      }
      return static_cast<double>(same) / len;
    }
    case ObjectiveKind::GaussianPeak:
      break;
  }
  throw InvalidInput("unknown objective kind");
}

// ---------------------------------------------------------------------------
// BudgetLedger

BudgetLedger::BudgetLedger(std::optional<std::uint64_t> cap) : cap_(cap) {
  if (cap_ && *cap_ == 0) throw ConfigError("budget cap must be positive");
}

bool BudgetLedger::can_debit(std::uint64_t n) const {
  return !cap_ || n <= *cap_ - spent_;
}

std::uint64_t BudgetLedger::debit(std::uint64_t n, std::uint64_t iteration) {
  if (!can_debit(n)) {
    throw BudgetError(fmt::format("budget cap {} cannot cover {} more calls ({} spent)", *cap_, n,
                                  spent_));
  }
  const std::uint64_t first = spent_;
  if (n == 0) return first;
  spent_ += n;
  if (!log_.empty() && log_.back().first == iteration) {
    log_.back().second += n;
  } else {
    log_.emplace_back(iteration, n);
  }
  return first;
}

// ---------------------------------------------------------------------------
// OracleSpec

void OracleSpec::validate() const {
  if (kind == OracleKind::Builtin) {
    if (objectives.empty()) throw ConfigError("builtin oracle needs at least one objective");
    for (const auto& o : objectives) o.validate();
  } else {
    if (objective_names.empty()) throw ConfigError("external oracle must declare objectives");
    if (!endpoint) throw ConfigError("external oracle needs an endpoint");
  }
}

std::size_t OracleSpec::num_objectives() const {
  return kind == OracleKind::Builtin ? objectives.size() : objective_names.size();
}

// ---------------------------------------------------------------------------
// Oracle

std::vector<AssessedRecord> Oracle::assess(std::span<const Candidate> candidates,
                                           BudgetLedger& ledger, std::uint64_t iteration) {
  if (candidates.empty()) return {};
  if (!ledger.can_debit(candidates.size())) {
    throw BudgetError(fmt::format("budget cannot cover {} assessments ({} of {} spent)",
                                  candidates.size(), ledger.spent(), *ledger.cap()));
  }
  Scored scored = score_batch(candidates);

  std::vector<AssessedRecord> out;
  out.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    auto& scores = scored.scores[i].values;
    for (double& s : scores) {
      if (!std::isfinite(s)) throw ProtocolError("oracle returned a non-finite score");
      if (s < 0.0 || s > 1.0) {
        spdlog::warn("clamping out-of-range score {} for candidate {}", s, candidates[i].key());
        s = std::clamp(s, 0.0, 1.0);
      }
    }
    AssessedRecord rec{candidates[i], std::move(scored.fingerprints[i]), std::move(scored.scores[i]),
                       {}, iteration, 0};
    rec.fitness = combine_scores(rec.scores, combiner_);
    out.push_back(std::move(rec));
  }
  const std::uint64_t first = ledger.debit(candidates.size(), iteration);
  ledger.count_requests(candidates.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i].call_id = first + i;
  return out;
}

BuiltinOracle::BuiltinOracle(std::vector<ObjectiveSpec> objectives, Combiner combiner)
    : Oracle(combiner), objectives_(std::move(objectives)) {
  if (objectives_.empty()) throw ConfigError("builtin oracle needs at least one objective");
  for (const auto& o : objectives_) o.validate();
}

std::vector<std::string> BuiltinOracle::objective_names() const {
  std::vector<std::string> names;
  for (const auto& o : objectives_) names.push_back(o.name());
  return names;
}

Oracle::Scored BuiltinOracle::score_batch(std::span<const Candidate> candidates) {
  Scored out;
  out.scores.reserve(candidates.size());
  out.fingerprints.reserve(candidates.size());
  for (const auto& c : candidates) {
    ObjectiveScores s;
    s.values.reserve(objectives_.size());
    for (const auto& o : objectives_) s.values.push_back(score_objective(o, c));
    out.scores.push_back(std::move(s));
    out.fingerprints.push_back(fingerprint(c));
  }
  return out;
}

ExternalOracle::ExternalOracle(std::shared_ptr<protocol::WireClient> client, Combiner combiner)
    : Oracle(combiner), client_(std::move(client)) {
  if (!client_) throw InvalidInput("external oracle needs a wire client");
}

std::vector<std::string> ExternalOracle::objective_names() const {
  return client_->hello().objectives;
}

Oracle::Scored ExternalOracle::score_batch(std::span<const Candidate> candidates) {
  std::vector<std::string> tokens;
  tokens.reserve(candidates.size());
  for (const auto& c : candidates) {
    switch (c.domain()) {
      case Domain::Token: tokens.push_back(c.token_text()); break;
      case Domain::BitString: tokens.push_back(c.bit_text()); break;
      case Domain::RealVector:
        throw UnsupportedDomain("external oracles assess token or bitstring candidates");
    }
  }
  auto result = client_->assess(tokens);
  Scored out;
  out.scores.reserve(candidates.size());
  out.fingerprints.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    out.scores.push_back({std::move(result.scores[i])});
    out.fingerprints.emplace_back(std::move(result.fingerprints[i]));
  }
  return out;
}

std::unique_ptr<Oracle> make_oracle(const OracleSpec& spec) {
  spec.validate();
  if (spec.kind == OracleKind::Builtin) {
    return std::make_unique<BuiltinOracle>(spec.objectives, spec.combiner);
  }
  auto client = std::make_shared<protocol::WireClient>(protocol::open_transport(*spec.endpoint),
                                                       spec.endpoint->timeout);
  client->handshake(spec.objective_names);
  return std::make_unique<ExternalOracle>(std::move(client), spec.combiner);
}

// ---------------------------------------------------------------------------
// AssessmentCache

std::vector<AssessedRecord> AssessmentCache::assess(Oracle& oracle,
                                                    std::span<const Candidate> candidates,
                                                    BudgetLedger& ledger,
                                                    std::uint64_t iteration) {
  std::vector<Candidate> misses;
  std::unordered_map<std::string, std::size_t> miss_index;
  for (const auto& c : candidates) {
    if (records_.contains(c.key()) || miss_index.contains(c.key())) continue;
    miss_index.emplace(c.key(), misses.size());
    misses.push_back(c);
  }
  auto fresh = oracle.assess(misses, ledger, iteration);
  ledger.count_requests(candidates.size() - misses.size());
  for (auto& r : fresh) records_.emplace(r.candidate.key(), r);

  std::vector<AssessedRecord> out;
  out.reserve(candidates.size());
  std::unordered_map<std::string, bool> served;
  for (const auto& c : candidates) {
    AssessedRecord r = records_.at(c.key());
    const bool first_fresh = miss_index.contains(c.key()) && !served[c.key()];
    if (first_fresh) {
      served[c.key()] = true;
    } else {
      ++hits_;
    }
    r.iteration = iteration;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace lsopt
