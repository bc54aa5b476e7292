#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lsopt/config.hpp"
#include "lsopt/evolution.hpp"

namespace lsopt {

/// Column header of the per-iteration trace CSV.
inline constexpr const char* kTraceHeader =
    "seed,iteration,budget_spent,top20,top50,top100,diversity,mean_threshold,fallback_count";

struct SeedRun {
  std::uint64_t seed = 0;
  EvolutionResult result;
};

struct FinalRow {
  std::uint64_t seed = 0;
  std::uint64_t budget_spent = 0;
  double top20 = 0.0;
  double top50 = 0.0;
  double top100 = 0.0;
  /// Mean of the per-iteration population diversities.
  double mean_diversity = 0.0;
};

struct RunReport {
  Ablation ablation = Ablation::Full;
  std::vector<SeedRun> runs;
  std::vector<FinalRow> finals;
};

/// Executes one run per seed under cfg.ablation. When `write_files` is set,
/// writes trace.csv, final.csv, config.json and one archive_seed<N>.jsonl per
/// seed into cfg.out_dir. The whole config is validated, and any external
/// endpoint connected, before the first assessment.
RunReport run_experiment(const ExperimentConfig& cfg, bool write_files = true);

/// Assesses `budget` prior samples as a single generation.
std::vector<AssessedRecord> run_random_baseline(Oracle& oracle, std::uint64_t budget,
                                                const GenerativeModel& model, std::uint64_t seed);

FinalRow summarize(std::uint64_t seed, const EvolutionResult& result);

/// Shortest round-trip decimal; "nan" for NaN.
std::string format_number(double v);

void write_trace_csv(std::ostream& out, std::span<const SeedRun> runs);
void write_final_csv(std::ostream& out, std::span<const FinalRow> rows);

/// One JSON object per line.
void write_archive(std::ostream& out, std::span<const AssessedRecord> archive);
std::vector<AssessedRecord> read_archive(std::istream& in);
std::vector<AssessedRecord> read_archive(const std::filesystem::path& path);

}  // namespace lsopt
