#include "lsopt/evolution.hpp"

#include <cmath>
#include <limits>
#include <unordered_set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "lsopt/kernels.hpp"
#include "lsopt/metrics.hpp"
#include "lsopt/rng.hpp"

namespace lsopt {

void PerturbationPlan::validate() const {
  if (noises_per_elite < 1) throw ConfigError("noises_per_elite must be >= 1");
  if (sigmas.empty()) throw ConfigError("sigma schedule must not be empty");
  for (double s : sigmas) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("every sigma must be positive");
  }
}

void EvolutionConfig::validate() const {
  if (n_pop < 1) throw ConfigError("n_pop must be >= 1");
  if (n_elite < 1) throw ConfigError("n_elite must be >= 1");
  if (n_elite > n_pop) throw ConfigError("n_elite must not exceed n_pop");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (budget_cap && *budget_cap == 0) throw ConfigError("budget_cap must be positive");
  if (elitism && n_elite >= n_pop) throw ConfigError("elitism needs n_elite < n_pop");
  plan.validate();
}

LatentVector perturb(const LatentVector& z, double sigma, const LatentVector& eps) {
  if (z.size() != eps.size()) {
    throw InvalidInput(fmt::format("perturb: dimension mismatch ({} vs {})", z.size(), eps.size()));
  }
  LatentVector out;
  out.values.resize(z.size());
  kernels::axpy(z.values, sigma, eps.values, out.values);
  return out;
}

LatentVector perturbation_noise(std::uint64_t seed, std::uint64_t iteration, std::size_t elite,
                                std::size_t noise_index, std::size_t dim) {
  CounterStream stream{seed, static_cast<std::uint64_t>(StreamTag::Perturbation), iteration,
                       elite, noise_index};
  LatentVector eps;
  eps.values.resize(dim);
  stream.fill_normal(eps.values);
  return eps;
}

std::vector<PoolMember> generate_pool(std::span<const LatentVector> elite_latents,
                                      const GenerativeModel& model, const PerturbationPlan& plan,
                                      std::uint64_t iteration, std::uint64_t seed) {
  plan.validate();
  if (elite_latents.empty()) throw InvalidInput("generate_candidates: no elites");
  const std::size_t c = plan.noises_per_elite;
  std::vector<LatentVector> latents;
  latents.reserve(elite_latents.size() * c);
  for (std::size_t i = 0; i < elite_latents.size(); ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const auto eps = perturbation_noise(seed, iteration, i, j, elite_latents[i].size());
      latents.push_back(perturb(elite_latents[i], plan.sigma_for(j), eps));
    }
  }
  auto decoded = model.decode_batch(latents);

  std::vector<PoolMember> pool;
  pool.reserve(decoded.size());
  std::unordered_set<std::string> seen;
  for (std::size_t n = 0; n < decoded.size(); ++n) {
    if (plan.dedup && !seen.insert(decoded[n].key()).second) continue;
    pool.push_back({std::move(decoded[n]), std::move(latents[n]), n / c, n % c});
  }
  return pool;
}

std::vector<Candidate> generate_candidates(std::span<const AssessedRecord> elites,
                                           const GenerativeModel& model,
                                           const PerturbationPlan& plan, std::uint64_t iteration,
                                           std::uint64_t seed) {
  if (elites.empty()) throw InvalidInput("generate_candidates: no elites");
  std::vector<Candidate> cands;
  cands.reserve(elites.size());
  for (const auto& e : elites) cands.push_back(e.candidate);
  const auto latents = model.encode_batch(cands);
  auto pool = generate_pool(latents, model, plan, iteration, seed);
  std::vector<Candidate> out;
  out.reserve(pool.size());
  for (auto& m : pool) out.push_back(std::move(m.candidate));
  return out;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

EvolutionResult run_evolution(const EvolutionConfig& cfg, const GenerativeModel& model,
                              Oracle& oracle, Prescreener& prescreener) {
  cfg.validate();
  BudgetLedger ledger(cfg.budget_cap);
  AssessmentCache cache;
  TopKTracker top;
  EvolutionResult result;

  std::vector<LatentVector> latents = sample_prior(model.spec(), cfg.n_pop, cfg.seed);
  std::vector<Candidate> population = model.decode_batch(latents);
  const std::size_t n_select = cfg.elitism ? cfg.n_pop - cfg.n_elite : cfg.n_pop;

  for (std::uint64_t t = 1; t <= cfg.epochs; ++t) {
    std::vector<AssessedRecord> records;
    try {
      records = cfg.assessment_cache ? cache.assess(oracle, population, ledger, t)
                                     : oracle.assess(population, ledger, t);
    } catch (const BudgetError&) {
      if (t == 1) throw;
      spdlog::info("budget cap reached; stopping before iteration {}", t);
      result.stopped_by_budget = true;
      break;
    }
    result.archive.insert(result.archive.end(), records.begin(), records.end());
    prescreener.observe(records);
    top.add(records);

    IterationTrace row;
    row.iteration = t;
    row.budget_spent = ledger.spent();
    row.top20 = top.mean(20);
    row.top50 = top.mean(50);
    row.top100 = top.mean(100);
    row.diversity = records.size() >= 2 ? diversity(records) : kNaN;
    row.mean_threshold = kNaN;
    row.population_size = records.size();

    if (t == cfg.epochs) {
      result.trace.push_back(row);
      break;
    }

    const auto elite_idx = rank_elites(records, std::min(cfg.n_elite, records.size()));
    std::vector<LatentVector> elite_latents;
    elite_latents.reserve(elite_idx.size());
    if (cfg.latent_cache) {
      for (auto i : elite_idx) elite_latents.push_back(latents[i]);
    } else {
      std::vector<Candidate> elites;
      elites.reserve(elite_idx.size());
      for (auto i : elite_idx) elites.push_back(records[i].candidate);
      elite_latents = model.encode_batch(elites);
    }

    auto pool = generate_pool(elite_latents, model, cfg.plan, t, cfg.seed);
    row.pool_size = pool.size();
    if (pool.size() < n_select) {
      spdlog::warn("iteration {}: candidate pool of {} is smaller than {}; population shrinks", t,
                   pool.size(), n_select);
    }
    std::vector<Candidate> pool_candidates;
    pool_candidates.reserve(pool.size());
    for (const auto& m : pool) pool_candidates.push_back(m.candidate);
    const Selection sel = prescreener.select(pool_candidates, n_select);

    double threshold_sum = 0.0;
    std::size_t threshold_rounds = 0;
    for (const auto& r : sel.rounds) {
      if (r.first) continue;
      threshold_sum += r.threshold;
      ++threshold_rounds;
      if (r.fallback) ++row.fallback_count;
    }
    if (threshold_rounds > 0) row.mean_threshold = threshold_sum / static_cast<double>(threshold_rounds);
    result.trace.push_back(row);

    std::vector<Candidate> next;
    std::vector<LatentVector> next_latents;
    if (cfg.elitism) {
      for (std::size_t k = 0; k < elite_idx.size(); ++k) {
        next.push_back(records[elite_idx[k]].candidate);
        next_latents.push_back(elite_latents[k]);
      }
    }
    for (auto i : sel.indices) {
      next.push_back(std::move(pool[i].candidate));
      next_latents.push_back(std::move(pool[i].latent));
    }
    population = std::move(next);
    latents = std::move(next_latents);
  }

  result.budget_spent = ledger.spent();
  result.requested = ledger.requested();
  return result;
}

}  // namespace lsopt
