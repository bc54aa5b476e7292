#include <doctest.h>

#include <algorithm>
#include <random>

#include "lsopt/oracle.hpp"

using namespace lsopt;

namespace {

ObjectiveSpec objective(ObjectiveKind kind) {
  ObjectiveSpec o;
  o.kind = kind;
  return o;
}

ObjectiveSpec motif(std::string target) {
  auto o = objective(ObjectiveKind::MotifMatch);
  o.motif = std::move(target);
  return o;
}

ObjectiveSpec trap(std::size_t k) {
  auto o = objective(ObjectiveKind::TrapK);
  o.trap_k = k;
  return o;
}

std::string random_bits(std::mt19937_64& rng, std::size_t n) {
  std::string s(n, '0');
  for (auto& c : s) c = (rng() & 1u) ? '1' : '0';
  return s;
}

std::vector<Candidate> bitstrings(std::initializer_list<const char*> texts) {
  std::vector<Candidate> out;
  for (auto t : texts) out.push_back(Candidate::bitstring(t));
  return out;
}

}  // namespace

TEST_CASE("objective examples") {
  const auto om = objective(ObjectiveKind::OneMax);
  CHECK(score_objective(om, Candidate::bitstring("1111")) == 1.0);
  CHECK(score_objective(om, Candidate::bitstring("1010")) == 0.5);

  const auto lo = objective(ObjectiveKind::LeadingOnes);
  CHECK(score_objective(lo, Candidate::bitstring("1101")) == 0.5);
  CHECK(score_objective(lo, Candidate::bitstring("0111")) == 0.0);

  CHECK(score_objective(motif("1100"), Candidate::bitstring("1100")) == 1.0);
  CHECK(score_objective(motif("1100"), Candidate::bitstring("1111")) == 0.5);

  auto peak = objective(ObjectiveKind::GaussianPeak);
  peak.center = {1.0, 0.0};
  peak.width = 2.0;
  CHECK(score_objective(peak, Candidate::real_vector({1.0, 0.0})) == 1.0);
  CHECK(score_objective(peak, Candidate::real_vector({0.0, 0.0})) ==
        doctest::Approx(std::exp(-0.5)));

  CHECK(trap(4).name() == "trap_4");
  CHECK(om.name() == "onemax");
}

TEST_CASE("trap_k on every 4-bit block") {
  // Hand table: all-ones scores k, otherwise k-1-ones, divided by k.
  const double by_ones[] = {3.0 / 4, 2.0 / 4, 1.0 / 4, 0.0, 1.0};
  for (unsigned v = 0; v < 16; ++v) {
    std::string s;
    for (int b = 3; b >= 0; --b) s.push_back((v >> b) & 1u ? '1' : '0');
    const auto ones = std::count(s.begin(), s.end(), '1');
    CAPTURE(s);
    CHECK(score_objective(trap(4), Candidate::bitstring(s)) == by_ones[ones]);
  }
  CHECK(score_objective(trap(4), Candidate::bitstring("0000")) == 0.75);
  CHECK(score_objective(trap(4), Candidate::bitstring("1111")) == 1.0);
  // Two blocks average.
  CHECK(score_objective(trap(4), Candidate::bitstring("11110000")) == doctest::Approx(0.875));
  CHECK(score_objective(trap(2), Candidate::bitstring("1101")) == doctest::Approx(0.5));
}

TEST_CASE("objective domain and shape errors") {
  CHECK_THROWS_AS(score_objective(trap(4), Candidate::bitstring("111")), InvalidInput);
  CHECK_THROWS_AS(score_objective(motif("11"), Candidate::bitstring("111")), InvalidInput);
  CHECK_THROWS_AS(score_objective(objective(ObjectiveKind::OneMax), Candidate::real_vector({1.0})),
                  InvalidInput);
  auto peak = objective(ObjectiveKind::GaussianPeak);
  peak.center = {0.0};
  CHECK_THROWS_AS(score_objective(peak, Candidate::bitstring("1")), InvalidInput);
  CHECK_THROWS_AS(score_objective(peak, Candidate::real_vector({1.0, 2.0})), InvalidInput);

  CHECK_THROWS_AS(motif("").validate(), ConfigError);
  CHECK_THROWS_AS(motif("10x").validate(), ConfigError);
  CHECK_THROWS_AS(trap(0).validate(), ConfigError);
  CHECK_THROWS_AS(parse_objective_kind("qed"), ConfigError);
}

TEST_CASE("scores stay in [0,1] on random inputs") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 3.0);
  auto peak = objective(ObjectiveKind::GaussianPeak);
  peak.center = {0.5, -0.5, 2.0};
  peak.width = 0.3;
  for (int t = 0; t < 2000; ++t) {
    const std::size_t n = 4 * (1 + rng() % 16);
    const auto c = Candidate::bitstring(random_bits(rng, n));
    for (const auto& o : {objective(ObjectiveKind::OneMax), objective(ObjectiveKind::LeadingOnes),
                          trap(4), trap(2), motif(random_bits(rng, n))}) {
      const double s = score_objective(o, c);
      CHECK((s >= 0.0 && s <= 1.0));
    }
    const double p =
        score_objective(peak, Candidate::real_vector({g(rng), g(rng), g(rng)}));
    CHECK((p >= 0.0 && p <= 1.0));
  }
}

TEST_CASE("onemax equals motif_match against all ones") {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 1 + rng() % 100;
    const auto c = Candidate::bitstring(random_bits(rng, n));
    CHECK(score_objective(objective(ObjectiveKind::OneMax), c) ==
          score_objective(motif(std::string(n, '1')), c));
  }
}

TEST_CASE("budget ledger") {
  BudgetLedger ledger(10);
  CHECK(ledger.debit(4, 1) == 0);
  CHECK(ledger.debit(3, 2) == 4);
  CHECK(ledger.spent() == 7);
  CHECK_THROWS_AS(ledger.debit(4, 3), BudgetError);
  CHECK(ledger.spent() == 7);
  CHECK(ledger.can_debit(3));
  CHECK_FALSE(ledger.can_debit(4));
  CHECK(ledger.debit(3, 3) == 7);
  std::uint64_t total = 0;
  for (const auto& [it, n] : ledger.log()) total += n;
  CHECK(total == ledger.spent());

  BudgetLedger open;
  open.debit(1000000, 1);
  CHECK(open.spent() == 1000000);
  CHECK_THROWS_AS(BudgetLedger(0), ConfigError);
}

TEST_CASE("assess debits once per candidate") {
  BuiltinOracle oracle({objective(ObjectiveKind::OneMax), motif("1100")}, Combiner::Mean);
  BudgetLedger ledger;
  const auto recs = oracle.assess(bitstrings({"1100", "0000", "1111"}), ledger, 4);
  REQUIRE(recs.size() == 3);
  CHECK(ledger.spent() == 3);
  CHECK(recs[0].scores.values == std::vector<double>{0.5, 1.0});
  CHECK(recs[0].fitness.value == 0.75);
  CHECK(recs[0].iteration == 4);
  CHECK(recs[0].fingerprint == Fingerprint({1, 1, 0, 0}));
  for (std::size_t i = 0; i < 3; ++i) CHECK(recs[i].call_id == i);

  const auto more = oracle.assess(bitstrings({"1010"}), ledger, 5);
  CHECK(more[0].call_id == 3);
  CHECK(oracle.objective_names() == std::vector<std::string>{"onemax", "motif_match"});
}

TEST_CASE("assess is atomic") {
  BuiltinOracle oracle({objective(ObjectiveKind::OneMax)}, Combiner::Mean);
  BudgetLedger capped(10);
  std::vector<Candidate> fifty(50, Candidate::bitstring("1"));
  CHECK_THROWS_AS(oracle.assess(fifty, capped, 1), BudgetError);
  CHECK(capped.spent() == 0);

  // A scoring failure half way through debits nothing either.
  BuiltinOracle tr({trap(4)}, Combiner::Mean);
  BudgetLedger ledger;
  CHECK_THROWS_AS(tr.assess(bitstrings({"1111", "111"}), ledger, 1), InvalidInput);
  CHECK(ledger.spent() == 0);

  CHECK(oracle.assess({}, ledger, 1).empty());
  CHECK(ledger.spent() == 0);
}

TEST_CASE("assess is order-insensitive") {
  std::mt19937_64 rng(8);
  BuiltinOracle oracle({objective(ObjectiveKind::OneMax), objective(ObjectiveKind::LeadingOnes),
                        trap(4)},
                       Combiner::Mean);
  std::vector<Candidate> cands;
  for (int i = 0; i < 40; ++i) cands.push_back(Candidate::bitstring(random_bits(rng, 16)));
  auto shuffled = cands;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  BudgetLedger l1, l2;
  const auto a = oracle.assess(cands, l1, 1);
  const auto b = oracle.assess(shuffled, l2, 1);
  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto it = std::find_if(a.begin(), a.end(),
                                 [&](const auto& r) { return r.candidate == b[i].candidate; });
    REQUIRE(it != a.end());
    CHECK(it->scores.values == b[i].scores.values);
    CHECK(it->fitness.value == b[i].fitness.value);
  }
}

TEST_CASE("assessment cache serves repeats without debits") {
  BuiltinOracle oracle({objective(ObjectiveKind::OneMax)}, Combiner::Mean);
  BudgetLedger ledger;
  AssessmentCache cache;
  const auto first = cache.assess(oracle, bitstrings({"10", "11", "10"}), ledger, 1);
  CHECK(ledger.spent() == 2);
  CHECK(ledger.requested() == 3);
  REQUIRE(first.size() == 3);
  CHECK(first[2].call_id == first[0].call_id);

  const auto second = cache.assess(oracle, bitstrings({"11", "00"}), ledger, 2);
  CHECK(ledger.spent() == 3);
  CHECK(ledger.requested() == 5);
  CHECK(second[0].call_id == first[1].call_id);
  CHECK(second[0].iteration == 2);
  CHECK(cache.size() == 3);
  CHECK(cache.hits() == 2);
}

TEST_CASE("make_oracle validates its spec") {
  OracleSpec spec;
  CHECK_THROWS_AS(make_oracle(spec), ConfigError);
  spec.objectives = {objective(ObjectiveKind::OneMax)};
  CHECK(make_oracle(spec)->objective_names().size() == 1);
  spec.kind = OracleKind::External;
  CHECK_THROWS_AS(make_oracle(spec), ConfigError);
}
