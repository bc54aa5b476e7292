#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "lsopt/experiment.hpp"
#include "lsopt/metrics.hpp"

using namespace lsopt;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

AssessedRecord rec(const std::string& bits, double fitness, std::uint64_t id = 0) {
  const auto c = Candidate::bitstring(bits);
  return {c, Fingerprint(std::vector<double>(c.bits().begin(), c.bits().end())), {{fitness}},
          {fitness}, 1, id};
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("lsopt_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json small_doc() {
  return json::parse(R"({
    "evolution": {"n_pop": 12, "n_elite": 4, "epochs": 4, "noises_per_elite": 20},
    "model": {"kind": "bitstring_threshold", "dim": 16},
    "oracle": {"objectives": [{"kind": "onemax"}, {"kind": "trap_k", "k": 4},
                              {"kind": "motif_match", "target": "1100110011001100"}]},
    "seeds": [0, 1],
    "out_dir": "unused"
  })");
}

int run_cli(const std::string& args, const fs::path& stdout_file) {
  const std::string cmd = std::string(LSOPT_CLI) + " -q " + args + " > " + stdout_file.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("top_k_mean keeps the best record per candidate") {
  std::vector<AssessedRecord> a{rec("11", 0.9), rec("11", 0.1), rec("10", 0.5), rec("00", 0.0)};
  CHECK(top_k_mean(a, 1) == 0.9);
  CHECK(top_k_mean(a, 2) == doctest::Approx(0.7));
  // Fewer distinct candidates than k averages everything distinct.
  CHECK(top_k_mean(a, 10) == doctest::Approx(1.4 / 3));
  TopKTracker t;
  CHECK(std::isnan(t.mean(5)));
  t.add(a);
  CHECK(t.distinct() == 3);
  CHECK(t.mean(2) == doctest::Approx(0.7));
}

TEST_CASE("top_k_mean is non-increasing in k") {
  std::mt19937_64 rng(1);
  std::vector<AssessedRecord> a;
  for (int i = 0; i < 300; ++i) {
    std::string s(10, '0');
    for (auto& c : s) c = rng() & 1 ? '1' : '0';
    a.push_back(rec(s, std::uniform_real_distribution<double>()(rng)));
  }
  double prev = top_k_mean(a, 1);
  for (std::size_t k = 2; k <= 150; ++k) {
    const double m = top_k_mean(a, k);
    CHECK(m <= prev + 1e-12);
    prev = m;
  }
}

TEST_CASE("diversity") {
  std::vector<AssessedRecord> a{rec("0000", 0), rec("1111", 0), rec("1100", 0)};
  CHECK(diversity(a) == doctest::Approx((4.0 + 2.0 + 2.0) / 3));
  std::swap(a[0], a[2]);
  CHECK(diversity(a) == doctest::Approx(8.0 / 3));
  CHECK_THROWS_AS(diversity(std::vector<AssessedRecord>{a[0]}), InvalidInput);
}

TEST_CASE("diversity is invariant under permutation") {
  std::mt19937_64 rng(2);
  std::vector<AssessedRecord> a;
  for (int i = 0; i < 40; ++i) {
    std::string s(20, '0');
    for (auto& c : s) c = rng() & 1 ? '1' : '0';
    a.push_back(rec(s, 0));
  }
  const double d = diversity(a);
  for (int t = 0; t < 10; ++t) {
    std::shuffle(a.begin(), a.end(), rng);
    CHECK(diversity(a) == d);
  }
}

TEST_CASE("config parsing") {
  const auto cfg = parse_config(small_doc());
  CHECK(cfg.evolution.n_pop == 12);
  CHECK(cfg.evolution.plan.sigmas.size() == 10);
  CHECK(cfg.evolution.plan.dedup);
  CHECK(cfg.oracle.objectives.size() == 3);
  CHECK(cfg.oracle.objectives[1].trap_k == 4);
  CHECK(cfg.screening.lambda == 0.35);
  CHECK(cfg.ablation == Ablation::Full);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{0, 1});

  // to_json round-trips.
  const auto again = parse_config(to_json(cfg));
  CHECK(to_json(again) == to_json(cfg));
}

TEST_CASE("config errors") {
  auto doc = small_doc();
  doc["evolution"]["n_pops"] = 3;
  CHECK_THROWS_AS(parse_config(doc), ConfigError);

  doc = small_doc();
  doc["model"]["dim"] = 15;  // trap block does not divide
  CHECK_THROWS_AS(parse_config(doc), ConfigError);

  doc = small_doc();
  doc["model"]["dim"] = "16";
  CHECK_THROWS_AS(parse_config(doc), ConfigError);

  doc = small_doc();
  doc["evolution"]["n_pop"] = -5;
  CHECK_THROWS_AS(parse_config(doc), ConfigError);

  doc = small_doc();
  doc["model"]["kind"] = "continuous_identity";
  CHECK_THROWS_AS(parse_config(doc), ConfigError);

  doc = small_doc();
  doc["screening"] = {{"lambda", 1.0}};
  CHECK_THROWS_AS(parse_config(doc), ConfigError);

  doc = small_doc();
  doc["ablation"] = "random";
  CHECK_THROWS_AS(parse_config(doc), ConfigError);

  doc = small_doc();
  doc.erase("model");
  CHECK_THROWS_AS(parse_config(doc), ConfigError);

  doc = small_doc();
  doc["oracle"] = {{"kind", "external"}, {"objectives", {"qed"}}};
  CHECK_THROWS_AS(parse_config(doc), ConfigError);

  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("shipped configs parse") {
  for (const char* name : {"desk_4obj.json", "desk_2obj.json", "full_scale.json"}) {
    CAPTURE(name);
    const auto cfg = load_config(fs::path(LSOPT_SOURCE_DIR) / "configs" / name);
    CHECK(cfg.model.dim == 60);
  }
  const auto desk = load_config(fs::path(LSOPT_SOURCE_DIR) / "configs" / "desk_4obj.json");
  CHECK(to_json(desk)["oracle"] == to_json(desk_four_objective_config())["oracle"]);
}

TEST_CASE("experiment files are byte-identical across runs") {
  auto cfg = parse_config(small_doc());
  const auto a = scratch("files_a"), b = scratch("files_b");
  cfg.out_dir = a.string();
  const auto report = run_experiment(cfg);
  cfg.out_dir = b.string();
  run_experiment(cfg);
  for (const char* f : {"trace.csv", "final.csv", "archive_seed0.jsonl", "archive_seed1.jsonl"}) {
    CAPTURE(f);
    CHECK(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }

  // One trace row per seed and iteration.
  std::istringstream trace(slurp(a / "trace.csv"));
  std::string line;
  std::getline(trace, line);
  CHECK(line == kTraceHeader);
  std::size_t rows = 0;
  while (std::getline(trace, line)) ++rows;
  CHECK(rows == 2 * 4);
  CHECK(report.finals.size() == 2);
  CHECK(report.finals[0].budget_spent == 48);
}

TEST_CASE("archive round-trips") {
  auto cfg = parse_config(small_doc());
  cfg.seeds = {5};
  const auto report = run_experiment(cfg, false);
  std::stringstream ss;
  write_archive(ss, report.runs[0].result.archive);
  const auto back = read_archive(ss);
  const auto& orig = report.runs[0].result.archive;
  REQUIRE(back.size() == orig.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].candidate == orig[i].candidate);
    CHECK(back[i].fitness.value == orig[i].fitness.value);
    CHECK(back[i].scores.values == orig[i].scores.values);
    CHECK(back[i].fingerprint == orig[i].fingerprint);
    CHECK(back[i].call_id == orig[i].call_id);
    CHECK(back[i].iteration == orig[i].iteration);
  }
  std::stringstream bad("{\"call_id\": 1}\n");
  CHECK_THROWS_AS(read_archive(bad), InvalidInput);
}

TEST_CASE("random baseline spends exactly its budget") {
  const auto cfg = parse_config(small_doc());
  auto model = make_model(cfg.model);
  auto oracle = make_oracle(cfg.oracle);
  const auto archive = run_random_baseline(*oracle, 100, *model, 0);
  CHECK(archive.size() == 100);
  CHECK(archive.back().call_id == 99);
}

TEST_CASE("command-line interface") {
  const auto dir = scratch("cli");
  const auto config = dir / "cfg.json";
  auto doc = small_doc();
  doc["out_dir"] = (dir / "run").string();
  std::ofstream(config) << doc.dump();
  const auto out = dir / "stdout.txt";

  CHECK(run_cli("run --config " + config.string() + " --seed 3", out) == 0);
  CHECK(fs::exists(dir / "run" / "archive_seed3.jsonl"));
  CHECK_FALSE(fs::exists(dir / "run" / "archive_seed0.jsonl"));

  CHECK(run_cli("report --archive " + (dir / "run" / "archive_seed3.jsonl").string() + " --top-k 5",
                out) == 0);
  const auto report = slurp(out);
  CHECK(report.find("records=48") != std::string::npos);
  CHECK(report.find("top5=") != std::string::npos);

  CHECK(run_cli("baseline random --budget 30 --config " + config.string() + " --out " +
                    (dir / "rb").string(),
                out) == 0);
  CHECK(read_archive(dir / "rb" / "random_seed0.jsonl").size() == 30);

  CHECK(run_cli("ablation-sweep --config " + config.string() + " --seeds 2 --out " +
                    (dir / "sweep").string(),
                out) == 0);
  std::istringstream sweep(slurp(dir / "sweep" / "sweep.csv"));
  std::string line;
  std::size_t rows = 0;
  while (std::getline(sweep, line)) ++rows;
  CHECK(rows == 1 + 4 * 2);
  CHECK(fs::exists(dir / "sweep" / "uncertainty" / "trace.csv"));

  CHECK(run_cli("run --config /nonexistent.json", out) == 2);
  CHECK(run_cli("frobnicate", out) != 0);
}
