#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lsopt/errors.hpp"

namespace lsopt {

enum class Domain { BitString, RealVector, Token };

std::string_view to_string(Domain d);

/// Fixed-length feature vector used for distances and the utility surrogate.
///
/// When every entry is exactly 0 or 1 the vector is also kept bit-packed, and
/// distances on two packed fingerprints reduce to a popcount of their XOR.
class Fingerprint {
 public:
  Fingerprint() = default;
  explicit Fingerprint(std::vector<double> values);

  std::span<const double> values() const { return values_; }
  std::span<const std::uint64_t> packed() const { return packed_; }
  bool binary() const { return binary_; }
  std::size_t size() const { return values_.size(); }

  friend bool operator==(const Fingerprint& a, const Fingerprint& b) {
    return a.values_ == b.values_;
  }

 private:
  std::vector<double> values_;
  std::vector<std::uint64_t> packed_;
  bool binary_ = false;
};

/// An element of observation space.
class Candidate {
 public:
  static Candidate bitstring(std::vector<std::uint8_t> bits);
  /// Parses a string of '0'/'1' characters.
  static Candidate bitstring(std::string_view text);
  static Candidate real_vector(std::vector<double> values);
  /// Token candidates carry their fingerprint when an external source
  /// supplied one; the library cannot compute it.
  static Candidate token(std::string text,
                         std::optional<Fingerprint> fingerprint = std::nullopt);

  Domain domain() const;
  std::size_t size() const;

  std::span<const std::uint8_t> bits() const;
  std::span<const double> reals() const;
  const std::string& token_text() const;
  const std::optional<Fingerprint>& supplied_fingerprint() const;

  /// Canonical serialization; equal payloads give equal keys.
  const std::string& key() const { return key_; }

  /// Bitstring payload as "0101"; throws for other domains.
  std::string bit_text() const;

  friend bool operator==(const Candidate& a, const Candidate& b) {
    return a.key_ == b.key_;
  }

 private:
  struct Bits {
    std::vector<std::uint8_t> bits;
  };
  struct Reals {
    std::vector<double> values;
  };
  struct Token {
    std::string text;
    std::optional<Fingerprint> fingerprint;
  };

  explicit Candidate(std::variant<Bits, Reals, Token> payload);

  std::variant<Bits, Reals, Token> payload_;
  std::string key_;
};

/// Per-objective scores, each in [0,1].
struct ObjectiveScores {
  std::vector<double> values;
};

struct Fitness {
  double value = 0.0;
};

struct AssessedRecord {
  Candidate candidate;
  Fingerprint fingerprint;
  ObjectiveScores scores;
  Fitness fitness;
  std::uint64_t iteration = 0;
  std::uint64_t call_id = 0;
};

enum class Combiner { Sum, Mean, Product };

Combiner parse_combiner(std::string_view name);
std::string_view to_string(Combiner c);

Fitness combine_scores(const ObjectiveScores& scores, Combiner combiner = Combiner::Mean);

/// The `n_elite` highest-fitness records, ordered by descending fitness and
/// then ascending call_id.
std::vector<AssessedRecord> select_elites(std::span<const AssessedRecord> assessed,
                                          std::size_t n_elite);

/// Positions of the records select_elites would return, in the same order.
std::vector<std::size_t> rank_elites(std::span<const AssessedRecord> assessed, std::size_t n_elite);

}  // namespace lsopt
