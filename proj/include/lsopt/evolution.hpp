#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lsopt/core.hpp"
#include "lsopt/genmodel.hpp"
#include "lsopt/oracle.hpp"
#include "lsopt/prescreener.hpp"

namespace lsopt {

struct PerturbationPlan {
  /// Noises drawn per elite.
  std::size_t noises_per_elite = 20;
  /// Step sizes, cycled over each elite's noise indices.
  std::vector<double> sigmas{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  /// Drop pool members whose canonical key already occurred earlier in the pool.
  bool dedup = true;

  void validate() const;
  double sigma_for(std::size_t noise_index) const { return sigmas[noise_index % sigmas.size()]; }
};

struct EvolutionConfig {
  std::size_t n_pop = 50;
  std::size_t n_elite = 20;
  std::size_t epochs = 20;
  PerturbationPlan plan;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> budget_cap;
  /// Carry the elites into the next population ahead of the screened offspring.
  bool elitism = false;
  /// Perturb the latent a candidate was decoded from instead of re-encoding it.
  bool latent_cache = false;
  /// Serve repeated candidates from an assessment cache without a debit.
  bool assessment_cache = false;

  void validate() const;
};

/// z + sigma * eps. sigma = 0 is allowed.
LatentVector perturb(const LatentVector& z, double sigma, const LatentVector& eps);

/// Noise for (seed, iteration, elite, noise index); independent of any other
/// draw made during the run.
LatentVector perturbation_noise(std::uint64_t seed, std::uint64_t iteration, std::size_t elite,
                                std::size_t noise_index, std::size_t dim);

struct PoolMember {
  Candidate candidate;
  LatentVector latent;
  std::size_t elite = 0;
  std::size_t noise_index = 0;
};

/// Perturbs each elite latent with plan.noises_per_elite indexed noises and
/// decodes the results in (elite, noise) order, deduplicating when asked.
std::vector<PoolMember> generate_pool(std::span<const LatentVector> elite_latents,
                                      const GenerativeModel& model, const PerturbationPlan& plan,
                                      std::uint64_t iteration, std::uint64_t seed);

/// Encodes the elites and returns the decoded candidate pool.
std::vector<Candidate> generate_candidates(std::span<const AssessedRecord> elites,
                                           const GenerativeModel& model,
                                           const PerturbationPlan& plan, std::uint64_t iteration,
                                           std::uint64_t seed);

struct IterationTrace {
  std::uint64_t iteration = 0;
  std::uint64_t budget_spent = 0;
  double top20 = 0.0;
  double top50 = 0.0;
  double top100 = 0.0;
  /// Of the population assessed this iteration; NaN below two members.
  double diversity = 0.0;
  /// Mean tau over the screening rounds after the first; NaN when none ran.
  double mean_threshold = 0.0;
  std::size_t fallback_count = 0;
  std::size_t population_size = 0;
  std::size_t pool_size = 0;
};

struct EvolutionResult {
  std::vector<AssessedRecord> archive;
  std::vector<IterationTrace> trace;
  std::uint64_t budget_spent = 0;
  /// Assessment requests including cache hits.
  std::uint64_t requested = 0;
  bool stopped_by_budget = false;
};

/// Runs the generation loop: assess, select elites, perturb in latent space,
/// pre-screen the pool into the next population. Each generation is assessed
/// atomically; the run stops before a generation the budget cap cannot cover.
/// Throws BudgetError when not even the first generation fits.
EvolutionResult run_evolution(const EvolutionConfig& cfg, const GenerativeModel& model,
                              Oracle& oracle, Prescreener& prescreener);

}  // namespace lsopt
