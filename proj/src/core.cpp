#include "lsopt/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace lsopt {

std::string_view to_string(Domain d) {
  switch (d) {
    case Domain::BitString: return "bitstring";
    case Domain::RealVector: return "real_vector";
    case Domain::Token: return "token";
  }
  return "unknown";
}

Fingerprint::Fingerprint(std::vector<double> values) : values_(std::move(values)) {
  binary_ = true;
  for (double v : values_) {
    if (!std::isfinite(v)) throw InvalidInput("fingerprint entries must be finite");
    if (v != 0.0 && v != 1.0) binary_ = false;
  }
  if (binary_) {
    packed_.assign((values_.size() + 63) / 64, 0);
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (values_[i] == 1.0) packed_[i / 64] |= std::uint64_t{1} << (i % 64);
    }
  }
}

Candidate::Candidate(std::variant<Bits, Reals, Token> payload) : payload_(std::move(payload)) {
  if (const auto* b = std::get_if<Bits>(&payload_)) {
    key_.reserve(b->bits.size() + 2);
    key_ = "b:";
    for (auto bit : b->bits) key_.push_back(bit ? '1' : '0');
  } else if (const auto* r = std::get_if<Reals>(&payload_)) {
    key_ = "r:";
    for (std::size_t i = 0; i < r->values.size(); ++i) {
      // -0.0 and 0.0 are the same payload.
      double v = r->values[i] == 0.0 ? 0.0 : r->values[i];
      if (i) key_.push_back(',');
      key_ += fmt::format("{:a}", v);
    }
  } else {
    key_ = "t:" + std::get<Token>(payload_).text;
  }
}

Candidate Candidate::bitstring(std::vector<std::uint8_t> bits) {
  if (bits.empty()) throw InvalidInput("bitstring must have length >= 1");
  for (auto b : bits) {
    if (b > 1) throw InvalidInput("bitstring entries must be 0 or 1");
  }
  return Candidate(Bits{std::move(bits)});
}

Candidate Candidate::bitstring(std::string_view text) {
  std::vector<std::uint8_t> bits;
  bits.reserve(text.size());
  for (char c : text) {
    if (c != '0' && c != '1') throw InvalidInput(fmt::format("invalid bit character '{}'", c));
    bits.push_back(c == '1' ? 1 : 0);
  }
  return bitstring(std::move(bits));
}

Candidate Candidate::real_vector(std::vector<double> values) {
  if (values.empty()) throw InvalidInput("real vector must have dimension >= 1");
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidInput("real vector entries must be finite");
  }
  return Candidate(Reals{std::move(values)});
}

Candidate Candidate::token(std::string text, std::optional<Fingerprint> fingerprint) {
  return Candidate(Token{std::move(text), std::move(fingerprint)});
}

Domain Candidate::domain() const {
  switch (payload_.index()) {
    case 0: return Domain::BitString;
    case 1: return Domain::RealVector;
    default: return Domain::Token;
  }
}

std::size_t Candidate::size() const {
  return std::visit(
      [](const auto& p) -> std::size_t {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Bits>) return p.bits.size();
        else if constexpr (std::is_same_v<T, Reals>) return p.values.size();
        else return p.text.size();
      },
      payload_);
}

std::span<const std::uint8_t> Candidate::bits() const {
  const auto* b = std::get_if<Bits>(&payload_);
  if (!b) throw InvalidInput(fmt::format("expected bitstring candidate, got {}", to_string(domain())));
  return b->bits;
}

std::span<const double> Candidate::reals() const {
  const auto* r = std::get_if<Reals>(&payload_);
  if (!r) throw InvalidInput(fmt::format("expected real_vector candidate, got {}", to_string(domain())));
  return r->values;
}

const std::string& Candidate::token_text() const {
  const auto* t = std::get_if<Token>(&payload_);
  if (!t) throw InvalidInput(fmt::format("expected token candidate, got {}", to_string(domain())));
  return t->text;
}

const std::optional<Fingerprint>& Candidate::supplied_fingerprint() const {
  static const std::optional<Fingerprint> none;
  const auto* t = std::get_if<Token>(&payload_);
  return t ? t->fingerprint : none;
}

std::string Candidate::bit_text() const {
  bits();  // throws for non-bitstring candidates
  return key_.substr(2);
}

Combiner parse_combiner(std::string_view name) {
  if (name == "sum") return Combiner::Sum;
  if (name == "mean") return Combiner::Mean;
  if (name == "product") return Combiner::Product;
  throw ConfigError(fmt::format("unknown combiner '{}'", name));
}

std::string_view to_string(Combiner c) {
  switch (c) {
    case Combiner::Sum: return "sum";
    case Combiner::Mean: return "mean";
    case Combiner::Product: return "product";
  }
  return "unknown";
}

Fitness combine_scores(const ObjectiveScores& scores, Combiner combiner) {
  const auto& s = scores.values;
  if (s.empty()) throw InvalidInput("combine_scores: empty score vector");
  for (double v : s) {
    if (!std::isfinite(v)) throw InvalidInput("combine_scores: non-finite score");
    if (v < 0.0 || v > 1.0) throw InvalidInput(fmt::format("combine_scores: score {} outside [0,1]", v));
  }
  switch (combiner) {
    case Combiner::Sum:
      return {std::accumulate(s.begin(), s.end(), 0.0)};
    case Combiner::Mean:
      return {std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size())};
    case Combiner::Product:
      return {std::accumulate(s.begin(), s.end(), 1.0, std::multiplies<>())};
  }
  return {};
}

std::vector<std::size_t> rank_elites(std::span<const AssessedRecord> assessed,
                                     std::size_t n_elite) {
  if (n_elite == 0) throw InvalidInput("select_elites: n_elite must be positive");
  if (n_elite > assessed.size()) {
    throw InvalidInput(fmt::format("select_elites: n_elite {} exceeds {} records", n_elite,
                                   assessed.size()));
  }
  std::vector<std::size_t> order(assessed.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Stable so records sharing a call_id (assessment-cache hits) keep input order.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ra = assessed[a];
    const auto& rb = assessed[b];
    if (ra.fitness.value != rb.fitness.value) return ra.fitness.value > rb.fitness.value;
    return ra.call_id < rb.call_id;
  });
  order.resize(n_elite);
  return order;
}

std::vector<AssessedRecord> select_elites(std::span<const AssessedRecord> assessed,
                                          std::size_t n_elite) {
  std::vector<AssessedRecord> out;
  out.reserve(n_elite);
  for (auto i : rank_elites(assessed, n_elite)) out.push_back(assessed[i]);
  return out;
}

}  // namespace lsopt
