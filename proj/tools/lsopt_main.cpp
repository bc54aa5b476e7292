// Command-line front end: run, baseline random, report, ablation-sweep.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "lsopt/experiment.hpp"
#include "lsopt/kernels.hpp"
#include "lsopt/metrics.hpp"

namespace {

using namespace lsopt;

void print_finals(const RunReport& report) {
  fmt::print("ablation={}\n", to_string(report.ablation));
  fmt::print("{:>6} {:>8} {:>10} {:>10} {:>10} {:>10}\n", "seed", "budget", "top20", "top50",
             "top100", "diversity");
  for (const auto& f : report.finals) {
    fmt::print("{:>6} {:>8} {:>10.4f} {:>10.4f} {:>10.4f} {:>10.4f}\n", f.seed, f.budget_spent,
               f.top20, f.top50, f.top100, f.mean_diversity);
  }
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed,
            std::optional<std::string> out) {
  auto cfg = load_config(config_path);
  if (seed) cfg.seeds = {*seed};
  if (out) cfg.out_dir = *out;
  const auto report = run_experiment(cfg);
  print_finals(report);
  fmt::print("wrote {}\n", cfg.out_dir);
  return 0;
}

int cmd_baseline_random(const std::string& config_path, std::uint64_t budget,
                        std::optional<std::uint64_t> seed, std::optional<std::string> out) {
  auto cfg = load_config(config_path);
  const std::uint64_t s = seed.value_or(cfg.seeds.front());
  const auto model = make_model(cfg.model);
  const auto oracle = make_oracle(cfg.oracle);
  const auto archive = run_random_baseline(*oracle, budget, *model, s);

  const std::filesystem::path dir = out.value_or(cfg.out_dir);
  std::filesystem::create_directories(dir);
  const auto path = dir / fmt::format("random_seed{}.jsonl", s);
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  write_archive(file, archive);

  fmt::print("random baseline: seed={} budget={} records={}\n", s, budget, archive.size());
  for (std::size_t k : {20, 50, 100}) {
    fmt::print("top{}={}\n", k, format_number(top_k_mean(archive, k)));
  }
  fmt::print("wrote {}\n", path.string());
  return 0;
}

int cmd_report(const std::string& archive_path, std::size_t top_k) {
  const auto archive = read_archive(archive_path);
  TopKTracker tracker;
  tracker.add(archive);
  fmt::print("records={}\n", archive.size());
  fmt::print("distinct={}\n", tracker.distinct());
  fmt::print("top{}={}\n", top_k, format_number(top_k_mean(archive, top_k)));
  if (archive.size() >= 2) fmt::print("diversity={}\n", format_number(diversity(archive)));
  return 0;
}

int cmd_sweep(const std::string& config_path, std::size_t n_seeds,
              std::optional<std::string> out) {
  auto base = load_config(config_path);
  if (out) base.out_dir = *out;
  base.seeds.clear();
  for (std::size_t s = 0; s < n_seeds; ++s) base.seeds.push_back(s);

  const std::filesystem::path root(base.out_dir);
  std::filesystem::create_directories(root);
  std::ofstream sweep(root / "sweep.csv", std::ios::binary | std::ios::trunc);
  sweep << "ablation,seed,budget_spent,top20,top50,top100,mean_diversity\n";
  for (auto ablation : {Ablation::None, Ablation::Utility, Ablation::Uncertainty, Ablation::Full}) {
    auto cfg = base;
    cfg.ablation = ablation;
    cfg.out_dir = (root / std::string(to_string(ablation))).string();
    const auto report = run_experiment(cfg);
    print_finals(report);
    for (const auto& f : report.finals) {
      sweep << to_string(ablation) << ',' << f.seed << ',' << f.budget_spent << ','
            << format_number(f.top20) << ',' << format_number(f.top50) << ','
            << format_number(f.top100) << ',' << format_number(f.mean_diversity) << '\n';
    }
  }
  fmt::print("wrote {}\n", (root / "sweep.csv").string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Surrogate-screened evolution in a generative model's latent space"};
  app.require_subcommand(1);

  std::string isa;
  bool quiet = false;
  app.add_option("--isa", isa, "Kernel variant: scalar or avx2 (default: best available)")
      ->check(CLI::IsMember({"scalar", "avx2"}));
  app.add_flag("-q,--quiet", quiet, "Only log warnings and errors");

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;

  auto* run = app.add_subcommand("run", "Run the optimizer for every configured seed");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--seed", seed, "Run only this seed");
  run->add_option("--out", out, "Output directory (overrides out_dir)");

  std::uint64_t budget = 0;
  auto* baseline = app.add_subcommand("baseline", "Baselines at a fixed assessment budget");
  baseline->require_subcommand(1);
  auto* random = baseline->add_subcommand("random", "Assess random prior samples");
  random->add_option("--budget", budget, "Number of assessments")->required()->check(CLI::PositiveNumber);
  random->add_option("--config", config_path, "Experiment config (JSON)")->required();
  random->add_option("--seed", seed, "Seed (default: first configured seed)");
  random->add_option("--out", out, "Output directory (overrides out_dir)");

  std::string archive_path;
  std::size_t top_k = 100;
  auto* report = app.add_subcommand("report", "Summarize an archive file");
  report->add_option("--archive", archive_path, "Archive (.jsonl)")->required();
  report->add_option("--top-k", top_k, "K for the top-K mean")->check(CLI::PositiveNumber);

  std::size_t n_seeds = 10;
  auto* sweep = app.add_subcommand("ablation-sweep", "Run all pre-screener variants over seeds 0..n-1");
  sweep->add_option("--config", config_path, "Experiment config (JSON)")->required();
  sweep->add_option("--seeds", n_seeds, "Number of seeds")->check(CLI::PositiveNumber);
  sweep->add_option("--out", out, "Output directory (overrides out_dir)");

  CLI11_PARSE(app, argc, argv);

  spdlog::set_default_logger(spdlog::stderr_color_mt("lsopt"));
  spdlog::set_level(quiet ? spdlog::level::warn : spdlog::level::info);

  try {
    if (!isa.empty()) {
      kernels::set_isa(isa == "avx2" ? kernels::Isa::Avx2 : kernels::Isa::Scalar);
    }
    spdlog::info("kernels: {}", kernels::to_string(kernels::active_isa()));
    if (*run) return cmd_run(config_path, seed, out);
    if (*random) return cmd_baseline_random(config_path, budget, seed, out);
    if (*report) return cmd_report(archive_path, top_k);
    if (*sweep) return cmd_sweep(config_path, n_seeds, out);
  } catch (const lsopt::Error& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("unexpected failure: {}", e.what());
    return 3;
  }
  return 1;
}
