#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lsopt/core.hpp"
#include "lsopt/protocol.hpp"

namespace lsopt {

enum class ObjectiveKind { OneMax, LeadingOnes, TrapK, MotifMatch, GaussianPeak };

ObjectiveKind parse_objective_kind(std::string_view name);
std::string_view to_string(ObjectiveKind kind);

/// A synthetic objective with its parameters. Every kind maps a valid
/// candidate into [0,1].
struct ObjectiveSpec {
  ObjectiveKind kind = ObjectiveKind::OneMax;
  /// Block size for trap_k; the bitstring length must be a multiple of it.
  std::size_t trap_k = 4;
  /// Target bitstring for motif_match, as '0'/'1' text.
  std::string motif;
  /// Center and width for gaussian_peak.
  std::vector<double> center;
  double width = 1.0;

  void validate() const;
  Domain domain() const;
  std::string name() const;
};

double score_objective(const ObjectiveSpec& spec, const Candidate& candidate);

/// Monotone count of oracle debits with an optional hard cap.
class BudgetLedger {
 public:
  explicit BudgetLedger(std::optional<std::uint64_t> cap = std::nullopt);

  std::uint64_t spent() const { return spent_; }
  const std::optional<std::uint64_t>& cap() const { return cap_; }
  bool can_debit(std::uint64_t n) const;

  /// Debits `n` calls against `iteration` and returns the first call id of
  /// the block. Throws BudgetError without debiting when the cap would be
  /// exceeded.
  std::uint64_t debit(std::uint64_t n, std::uint64_t iteration);

  /// (iteration, debits) in first-debit order; sums to spent().
  const std::vector<std::pair<std::uint64_t, std::uint64_t>>& log() const { return log_; }

  /// Assessment requests including cache hits.
  void count_requests(std::uint64_t n) { requested_ += n; }
  std::uint64_t requested() const { return requested_; }

 private:
  std::uint64_t spent_ = 0;
  std::uint64_t requested_ = 0;
  std::optional<std::uint64_t> cap_;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> log_;
};

enum class OracleKind { Builtin, External };

struct OracleSpec {
  OracleKind kind = OracleKind::Builtin;
  std::vector<ObjectiveSpec> objectives;        // builtin
  std::vector<std::string> objective_names;     // external
  std::optional<protocol::EndpointAddress> endpoint;
  Combiner combiner = Combiner::Mean;

  void validate() const;
  std::size_t num_objectives() const;
};

/// The expensive assessor.
class Oracle {
 public:
  virtual ~Oracle() = default;

  virtual std::vector<std::string> objective_names() const = 0;
  Combiner combiner() const { return combiner_; }

  /// Scores every candidate, debits the ledger once per candidate and assigns
  /// sequential call ids. On any error nothing is debited.
  std::vector<AssessedRecord> assess(std::span<const Candidate> candidates, BudgetLedger& ledger,
                                     std::uint64_t iteration);

 protected:
  explicit Oracle(Combiner combiner) : combiner_(combiner) {}

  struct Scored {
    std::vector<ObjectiveScores> scores;
    std::vector<Fingerprint> fingerprints;
  };
  virtual Scored score_batch(std::span<const Candidate> candidates) = 0;

 private:
  Combiner combiner_;
};

class BuiltinOracle final : public Oracle {
 public:
  BuiltinOracle(std::vector<ObjectiveSpec> objectives, Combiner combiner);
  std::vector<std::string> objective_names() const override;

 protected:
  Scored score_batch(std::span<const Candidate> candidates) override;

 private:
  std::vector<ObjectiveSpec> objectives_;
};

/// Sends each batch as a single assess request.
class ExternalOracle final : public Oracle {
 public:
  ExternalOracle(std::shared_ptr<protocol::WireClient> client, Combiner combiner);
  std::vector<std::string> objective_names() const override;

 protected:
  Scored score_batch(std::span<const Candidate> candidates) override;

 private:
  std::shared_ptr<protocol::WireClient> client_;
};

/// Builds the oracle; external oracles connect and handshake, and a mismatch
/// between declared and served objectives raises ConfigError.
std::unique_ptr<Oracle> make_oracle(const OracleSpec& spec);

/// Remembers assessed candidates by canonical key so repeats are served
/// without a debit. Served copies keep the original call id and take the
/// current iteration.
class AssessmentCache {
 public:
  std::vector<AssessedRecord> assess(Oracle& oracle, std::span<const Candidate> candidates,
                                     BudgetLedger& ledger, std::uint64_t iteration);
  std::size_t size() const { return records_.size(); }
  std::uint64_t hits() const { return hits_; }

 private:
  std::unordered_map<std::string, AssessedRecord> records_;
  std::uint64_t hits_ = 0;
};

}  // namespace lsopt
