#include "lsopt/experiment.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "lsopt/metrics.hpp"

namespace lsopt {

using nlohmann::json;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  return fmt::format("{}", v);
}

FinalRow summarize(std::uint64_t seed, const EvolutionResult& result) {
  FinalRow row;
  row.seed = seed;
  row.budget_spent = result.budget_spent;
  if (!result.trace.empty()) {
    const auto& last = result.trace.back();
    row.top20 = last.top20;
    row.top50 = last.top50;
    row.top100 = last.top100;
  }
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& t : result.trace) {
    if (std::isnan(t.diversity)) continue;
    sum += t.diversity;
    ++n;
  }
  row.mean_diversity = n ? sum / static_cast<double>(n) : std::nan("");
  return row;
}

void write_trace_csv(std::ostream& out, std::span<const SeedRun> runs) {
  out << kTraceHeader << '\n';
  for (const auto& run : runs) {
    for (const auto& t : run.result.trace) {
      out << run.seed << ',' << t.iteration << ',' << t.budget_spent << ','
          << format_number(t.top20) << ',' << format_number(t.top50) << ','
          << format_number(t.top100) << ',' << format_number(t.diversity) << ','
          << format_number(t.mean_threshold) << ',' << t.fallback_count << '\n';
    }
  }
}

void write_final_csv(std::ostream& out, std::span<const FinalRow> rows) {
  out << "seed,budget_spent,top20,top50,top100,mean_diversity\n";
  for (const auto& r : rows) {
    out << r.seed << ',' << r.budget_spent << ',' << format_number(r.top20) << ','
        << format_number(r.top50) << ',' << format_number(r.top100) << ','
        << format_number(r.mean_diversity) << '\n';
  }
}

namespace {

json candidate_json(const Candidate& c) {
  switch (c.domain()) {
    case Domain::BitString: return {{"kind", "bitstring"}, {"value", c.bit_text()}};
    case Domain::RealVector:
      return {{"kind", "real_vector"},
              {"value", std::vector<double>(c.reals().begin(), c.reals().end())}};
    case Domain::Token: return {{"kind", "token"}, {"value", c.token_text()}};
  }
  return {};
}

Candidate candidate_from_json(const json& j, const Fingerprint& fp) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "bitstring") return Candidate::bitstring(j.at("value").get<std::string>());
  if (kind == "real_vector") return Candidate::real_vector(j.at("value").get<std::vector<double>>());
  if (kind == "token") return Candidate::token(j.at("value").get<std::string>(), fp);
  throw InvalidInput(fmt::format("unknown candidate kind '{}'", kind));
}

json fingerprint_json(const Fingerprint& fp) {
  json arr = json::array();
  for (double v : fp.values()) {
    if (fp.binary()) arr.push_back(static_cast<int>(v));
    else arr.push_back(v);
  }
  return arr;
}

}  // namespace

void write_archive(std::ostream& out, std::span<const AssessedRecord> archive) {
  for (const auto& r : archive) {
    const json line{{"call_id", r.call_id},
                    {"iteration", r.iteration},
                    {"candidate", candidate_json(r.candidate)},
                    {"fingerprint", fingerprint_json(r.fingerprint)},
                    {"scores", r.scores.values},
                    {"fitness", r.fitness.value}};
    out << line.dump() << '\n';
  }
}

std::vector<AssessedRecord> read_archive(std::istream& in) {
  std::vector<AssessedRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      Fingerprint fp(j.at("fingerprint").get<std::vector<double>>());
      AssessedRecord r{candidate_from_json(j.at("candidate"), fp),
                       fp,
                       {j.at("scores").get<std::vector<double>>()},
                       {j.at("fitness").get<double>()},
                       j.at("iteration").get<std::uint64_t>(),
                       j.at("call_id").get<std::uint64_t>()};
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw InvalidInput(fmt::format("archive line {}: {}", line_no, e.what()));
    }
  }
  return out;
}

std::vector<AssessedRecord> read_archive(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput(fmt::format("cannot open archive '{}'", path.string()));
  return read_archive(in);
}

std::vector<AssessedRecord> run_random_baseline(Oracle& oracle, std::uint64_t budget,
                                                const GenerativeModel& model, std::uint64_t seed) {
  if (budget < 1) throw InvalidInput("random baseline needs a budget of at least 1");
  const auto latents = sample_prior(model.spec(), budget, seed);
  const auto candidates = model.decode_batch(latents);
  BudgetLedger ledger(budget);
  return oracle.assess(candidates, ledger, 1);
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError(fmt::format("cannot write '{}'", path.string()));
  out << contents;
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& cfg, bool write_files) {
  cfg.validate();
  if (write_files) std::filesystem::create_directories(cfg.out_dir);

  const auto model = make_model(cfg.model);
  const auto oracle = make_oracle(cfg.oracle);

  RunReport report;
  report.ablation = cfg.ablation;
  for (auto seed : cfg.seeds) {
    EvolutionConfig evo = cfg.evolution;
    evo.seed = seed;
    auto prescreener = Prescreener::knn(cfg.ablation, cfg.screening.lambda, cfg.screening.knn_k,
                                        cfg.screening.weighting);
    spdlog::info("seed {}: ablation={} n_pop={} epochs={}", seed, to_string(cfg.ablation),
                 evo.n_pop, evo.epochs);
    auto result = run_evolution(evo, *model, *oracle, prescreener);
    report.finals.push_back(summarize(seed, result));
    report.runs.push_back({seed, std::move(result)});
  }

  if (write_files) {
    const std::filesystem::path dir(cfg.out_dir);
    std::ostringstream trace;
    write_trace_csv(trace, report.runs);
    write_file(dir / "trace.csv", trace.str());
    std::ostringstream finals;
    write_final_csv(finals, report.finals);
    write_file(dir / "final.csv", finals.str());
    write_file(dir / "config.json", to_json(cfg).dump(2) + "\n");
    for (const auto& run : report.runs) {
      std::ostringstream archive;
      write_archive(archive, run.result.archive);
      write_file(dir / fmt::format("archive_seed{}.jsonl", run.seed), archive.str());
    }
  }
  return report;
}

}  // namespace lsopt
