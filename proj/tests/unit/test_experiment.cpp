#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include "properties.hpp"
#include "recbase/audit.hpp"
#include "recbase/experiment.hpp"

using namespace recbase;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = RECBASE_SOURCE_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("recbase_test_experiment_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct Shell {
  int status;
  std::string out;
};

Shell shell(const std::string& args) {
  const std::string cmd = std::string(RECBASE_CLI) + " " + args + " 2>/dev/null";
  std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(cmd.c_str(), "r"), pclose);
  std::string out;
  std::array<char, 4096> buf{};
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe.get())) out.append(buf.data(), n);
  const int raw = pclose(pipe.release());
  return {WEXITSTATUS(raw), out};
}

bool has_diagnostic(const std::vector<Diagnostic>& ds, const std::string& path) {
  for (const auto& d : ds) {
    if (d.path == path) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("bundled configs validate and round trip") {
  std::size_t n = 0;
  for (const auto& entry : fs::directory_iterator(kSource / "configs")) {
    if (entry.path().extension() != ".json") continue;
    CAPTURE(entry.path().string());
    ++n;
    const auto j = read_config_json(entry.path());
    const auto diagnostics = validate_config(j);
    for (const auto& d : diagnostics) MESSAGE(d.path << ": " << d.message);
    CHECK(diagnostics.empty());
    const auto cfg = parse_config(j);
    const auto canonical = to_json(cfg);
    CHECK(validate_config(canonical).empty());
    CHECK(to_json(parse_config(canonical)) == canonical);
    CHECK(config_digest(parse_config(canonical)) == config_digest(cfg));
  }
  CHECK(n == 8);
}

TEST_CASE("validation names the offending field") {
  auto j = props::synthetic_experiment(scratch("diag"), 1);
  j["algorithms"][1]["id"] = "itemknn";
  j["tuning"]["budget"] = -3;
  j["split"]["test_ratio"] = 0.2;
  j["surprise"] = true;
  const auto ds = validate_config(j);
  CHECK(has_diagnostic(ds, "algorithms[1].id"));
  CHECK(has_diagnostic(ds, "tuning.budget"));
  CHECK(has_diagnostic(ds, "split.test_ratio"));
  CHECK(has_diagnostic(ds, "surprise"));
  try {
    parse_config(j);
    FAIL("expected a validation error");
  } catch (const ConfigValidationError& e) {
    CHECK(e.diagnostics().size() == ds.size());
  }
}

TEST_CASE("cross-field checks") {
  const auto base = props::synthetic_experiment(scratch("cross"), 1);
  SUBCASE("sampled evaluation needs negatives") {
    auto j = base;
    j.erase("negatives");
    CHECK(has_diagnostic(validate_config(j), "negatives"));
  }
  SUBCASE("tuning needs a validation source") {
    auto j = base;
    j["split"].erase("with_validation");
    CHECK(!validate_config(j).empty());
  }
  SUBCASE("content algorithms need content") {
    auto j = base;
    j["algorithms"].push_back({{"id", "itemknn_cbf"}});
    CHECK(!validate_config(j).empty());
  }
  SUBCASE("target metric must be evaluated") {
    auto j = base;
    j["tuning"]["target"]["metric"] = "map";
    CHECK(!validate_config(j).empty());
  }
  SUBCASE("duplicate labels") {
    auto j = base;
    j["algorithms"].push_back({{"id", "rp3beta"}});
    CHECK(!validate_config(j).empty());
  }
  SUBCASE("syntax errors carry a line") {
    const auto dir = scratch("syntax");
    std::ofstream(dir / "bad.json") << "{\n  \"name\": \"x\",\n  oops\n}\n";
    try {
      read_config_json(dir / "bad.json");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }
}

TEST_CASE("runs are deterministic and write every artifact") {
  const auto dir = scratch("determinism");
  auto j = props::synthetic_experiment(dir, 7);
  const auto cfg = parse_config(j);
  RunOptions a, b;
  a.output_dir = dir / "a";
  b.output_dir = dir / "b";
  b.threads = 3;
  const auto first = run_experiment(cfg, a);
  const auto second = run_experiment(cfg, b);
  CHECK(first.exit_code == kExitOk);
  CHECK(second.exit_code == kExitOk);
  for (const auto& o : first.algorithms) {
    CAPTURE(o.label);
    CHECK(o.ok);
  }
  CHECK(slurp(dir / "a" / "report.csv") == slurp(dir / "b" / "report.csv"));
  CHECK(slurp(dir / "a" / "comparison.md") == slurp(dir / "b" / "comparison.md"));
  for (const char* f : {"report.json", "split/train.tsv", "split/test.tsv", "audit/split_audit.json",
                        "audit/popularity.csv", "audit/negatives_audit.json"}) {
    CAPTURE(f);
    CHECK(fs::exists(dir / "a" / f));
  }
  CHECK(fs::exists(dir / "a" / "trials"));
  const auto report = nlohmann::json::parse(slurp(dir / "a" / "report.json"));
  CHECK(report.at("provenance").at("config_digest") == config_digest(cfg));
  CHECK(report.at("provenance").at("seed") == 7);

  // A different seed changes the split.
  RunOptions c;
  c.output_dir = dir / "c";
  c.seed = 8;
  run_experiment(cfg, c);
  CHECK(slurp(dir / "a" / "split/negatives.tsv") != slurp(dir / "c" / "split/negatives.tsv"));

  // The written split is consistent and the negatives audit clean.
  const auto bundle = read_bundle(dir / "a" / "split");
  CHECK(audit_negatives(bundle, std::size_t{20}).defects() == 0);
}

TEST_CASE("one failing algorithm does not stop the others") {
  const auto dir = scratch("partial");
  auto j = props::synthetic_experiment(dir, 3);
  j["algorithms"] = {{{"id", "toppop"}, {"tune", false}},
                     {{"id", "puresvd"}, {"tune", false}, {"params", {{"num_factors", 5000}}}},
                     {{"id", "itemknn_cf"}, {"tune", false}, {"params", {{"topK", 10}, {"shrink", 5}}}}};
  const auto summary = run_experiment(parse_config(j));
  CHECK(summary.exit_code == kExitRuntime);
  REQUIRE(summary.algorithms.size() == 3);
  CHECK(summary.algorithms[0].ok);
  CHECK(!summary.algorithms[1].ok);
  CHECK(!summary.algorithms[1].error.empty());
  CHECK(summary.algorithms[2].ok);
  const auto csv = slurp(dir / "out" / "report.csv");
  CHECK(csv.find("toppop") != std::string::npos);
  CHECK(csv.find("puresvd") == std::string::npos);
}

TEST_CASE("models and per-user values are saved on request") {
  const auto dir = scratch("saved");
  auto j = props::synthetic_experiment(dir, 4);
  j["algorithms"] = {{{"id", "itemknn_cf"}, {"tune", false}, {"params", {{"topK", 10}}}}};
  j["save_models"] = true;
  j["evaluation"]["keep_per_user"] = true;
  const auto summary = run_experiment(parse_config(j));
  CHECK(summary.exit_code == kExitOk);
  std::size_t models = 0;
  for (const auto& e : fs::directory_iterator(dir / "out" / "models")) models += e.path().extension() == ".rbm";
  CHECK(models == 1);
  CHECK(!fs::is_empty(dir / "out" / "per_user"));
}

TEST_CASE("comparison table marks the best value") {
  EvaluationReport a, b;
  a.algorithm = "alpha";
  b.algorithm = "beta";
  a.request = b.request = MetricRequest{{Metric::ndcg}, {10}};
  a.means = {0.25};
  b.means = {0.5};
  const std::vector<EvaluationReport> reports{a, b};
  const auto md = comparison_markdown(reports);
  CHECK(md.find("**0.5000**") != std::string::npos);
  CHECK(md.find("0.2500") != std::string::npos);
}

TEST_CASE("command line") {
  SUBCASE("list-algorithms") {
    const auto r = shell("list-algorithms");
    CHECK(r.status == 0);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 13);
  }
  SUBCASE("validate") {
    CHECK(shell("validate " + (kSource / "configs" / "ml1m-ncf-protocol.json").string()).status == 0);
    const auto dir = scratch("cli_validate");
    auto j = props::synthetic_experiment(dir, 1);
    j["algorithms"][0]["id"] = "nope";
    std::ofstream(dir / "bad.json") << j.dump(2);
    const auto r = shell("validate " + (dir / "bad.json").string());
    CHECK(r.status == 1);
    CHECK(r.out.find("algorithms[0].id") != std::string::npos);
  }
  SUBCASE("run and audit") {
    const auto dir = scratch("cli_run");
    auto j = props::synthetic_experiment(dir, 2);
    j["algorithms"] = {{{"id", "toppop"}, {"tune", false}}};
    std::ofstream(dir / "cfg.json") << j.dump(2);
    CHECK(shell("run " + (dir / "cfg.json").string() + " --output-dir " + (dir / "run").string()).status == 0);
    CHECK(shell("audit " + (dir / "run" / "split").string() + " --target 20").status == 0);
    std::ofstream(dir / "negs.tsv") << "0\t0\n0\t0\n";
    CHECK(shell("audit " + (dir / "run" / "split").string() + " --negatives " + (dir / "negs.tsv").string())
              .status == 3);
    CHECK(shell("run " + (dir / "missing.json").string()).status != 0);
  }
}
