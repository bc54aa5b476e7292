#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "lsopt/evolution.hpp"
#include "lsopt/genmodel.hpp"
#include "lsopt/oracle.hpp"
#include "lsopt/prescreener.hpp"

namespace lsopt {

struct ScreenerSettings {
  double lambda = 0.35;
  std::size_t knn_k = 5;
  Weighting weighting = Weighting::InverseDistance;
};

/// Everything one experiment needs. `evolution.seed` is replaced by each
/// entry of `seeds` in turn.
struct ExperimentConfig {
  EvolutionConfig evolution;
  GenerativeModelSpec model;
  OracleSpec oracle;
  ScreenerSettings screening;
  Ablation ablation = Ablation::Full;
  std::vector<std::uint64_t> seeds{0};
  std::string out_dir = "out";

  /// Checks every section and their mutual consistency (domains, lengths).
  /// Throws ConfigError.
  void validate() const;
};

/// Parses the JSON config layout. Unknown keys are rejected.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& cfg);

/// Four-objective bitstring task (onemax, motif_match, leading_ones, trap_4)
/// at desk scale.
ExperimentConfig desk_four_objective_config();
/// Two-objective bitstring task (onemax, motif_match) at desk scale.
ExperimentConfig desk_two_objective_config();
/// "1100" repeated and truncated to `length`.
std::string default_motif(std::size_t length);

}  // namespace lsopt
