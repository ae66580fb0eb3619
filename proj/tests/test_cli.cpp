#include <fstream>
#include <sstream>

#include "doctest.h"
#include "support.hpp"
#include "synpa/cli.hpp"
#include "synpa/engine.hpp"
#include "synpa/interference.hpp"

using namespace synpa;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "synpa");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
}

const std::string kQuick = R"({
  "generate": {"recipe": "mixed", "count": 1, "seed": 2},
  "simulation": {"target_quanta": 30, "noise_sigma": 0.01},
  "policies": ["synpa", "random"], "runs": 2, "seed": 5
})";

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"train"}).code == kExitUsage);
  CHECK(cli({"gen-workload", "--recipe", "cpu", "--out", "x.json"}).code == kExitUsage);
  synpa::test::TempDir dir("cli-usage");
  write(dir.path() / "c.json", kQuick);
  const auto r = cli({"simulate", "--config", (dir.path() / "c.json").string(), "--out", dir.path().string(),
                      "--policy", "greedy"});
  CHECK(r.code == kExitUsage);
  CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("domain errors exit with 1") {
  synpa::test::TempDir dir("cli-domain");
  const auto missing = (dir.path() / "nope").string();
  CHECK(cli({"train", "--profiles", missing, "--out", (dir.path() / "c.json").string()}).code == kExitDomainError);
  CHECK(cli({"replay", "--trace", missing, "--out", (dir.path() / "l.jsonl").string()}).code == kExitDomainError);
  write(dir.path() / "bad.json", "{not json");
  const auto r = cli({"simulate", "--config", (dir.path() / "bad.json").string(), "--out", dir.path().string()});
  CHECK(r.code == kExitDomainError);
  CHECK(r.err.find("error") != std::string::npos);
  fs::create_directories(dir.path() / "empty");
  CHECK(cli({"train", "--profiles", (dir.path() / "empty").string(), "--out", (dir.path() / "c.json").string()}).code ==
        kExitDomainError);
}

TEST_CASE("generated profiles train back to their ground truth, deterministically") {
  synpa::test::TempDir dir("cli-train");
  const auto p1 = (dir.path() / "p1").string(), p2 = (dir.path() / "p2").string();
  REQUIRE(cli({"gen-profiles", "--out", p1, "--seed", "4", "--apps", "4", "--quanta", "150"}).code == kExitOk);
  REQUIRE(cli({"gen-profiles", "--out", p2, "--seed", "4", "--apps", "4", "--quanta", "150"}).code == kExitOk);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(p1)) {
    CHECK(slurp(e.path()) == slurp(fs::path(p2) / e.path().filename()));
    ++files;
  }
  CHECK(files == 4 + 6);

  const auto c1 = (dir.path() / "c1.json").string(), c2 = (dir.path() / "c2.json").string();
  REQUIRE(cli({"train", "--profiles", p1, "--out", c1, "--seed", "1"}).code == kExitOk);
  REQUIRE(cli({"train", "--config", p2, "--out", c2, "--seed", "1"}).code == kExitOk);
  CHECK(slurp(c1) == slurp(c2));
  const auto fitted = load_coefficients(c1);
  const auto truth = ModelCoefficients::published();
  for (auto c : kCategories) {
    CHECK(fitted[c].alpha == doctest::Approx(truth[c].alpha).epsilon(1e-3));
    CHECK(fitted[c].beta == doctest::Approx(truth[c].beta).epsilon(1e-3));
  }
  CHECK(cli({"train", "--profiles", p1, "--out", c1, "--split", "2"}).code != kExitOk);
}

TEST_CASE("simulate and report agree and repeat byte for byte") {
  synpa::test::TempDir dir("cli-sim");
  write(dir.path() / "c.json", kQuick);
  const auto cfg = (dir.path() / "c.json").string();
  const auto a = dir.path() / "a", b = dir.path() / "b";
  REQUIRE(cli({"simulate", "--config", cfg, "--out", a.string()}).code == kExitOk);
  REQUIRE(cli({"simulate", "--config", cfg, "--out", b.string()}).code == kExitOk);
  CHECK(slurp(a / "metrics.json") == slurp(b / "metrics.json"));
  CHECK(slurp(a / "metrics.csv") == slurp(b / "metrics.csv"));

  std::vector<std::string> logs;
  for (const auto& e : fs::directory_iterator(a / "logs")) logs.push_back(e.path().string());
  std::sort(logs.begin(), logs.end());
  REQUIRE(logs.size() == 4);
  for (const auto& l : logs) CHECK(slurp(l) == slurp(b / "logs" / fs::path(l).filename()));

  std::vector<std::string> args{"report", "--out", (dir.path() / "r").string()};
  for (const auto& l : logs) {
    args.push_back("--log");
    args.push_back(l);
  }
  const auto r = cli(args);
  REQUIRE(r.code == kExitOk);
  const auto sim = nlohmann::json::parse(slurp(a / "metrics.json"));
  const auto rep = nlohmann::json::parse(slurp(dir.path() / "r" / "metrics.json"));
  REQUIRE(rep.at("summary").size() == 2);
  for (const auto& s : sim.at("summary")) {
    bool found = false;
    for (const auto& t : rep.at("summary")) {
      if (t.at("policy") != s.at("policy")) continue;
      found = true;
      CHECK(t.at("turnaround_quanta").get<double>() == doctest::Approx(s.at("turnaround_quanta").get<double>()));
      CHECK(t.at("fairness").get<double>() == doctest::Approx(s.at("fairness").get<double>()));
    }
    CHECK(found);
  }
  CHECK(rep.at("comparisons").size() == 1);

  const auto c = cli({"simulate", "--config", cfg, "--out", (dir.path() / "c").string(), "--seed", "6", "--runs", "1",
                      "--policy", "static"});
  CHECK(c.code == kExitOk);
  CHECK(fs::exists(dir.path() / "c" / "logs" / "mixed-2-static-seed6.jsonl"));
}

TEST_CASE("replay and gen-workload are deterministic") {
  synpa::test::TempDir dir("cli-replay");
  const fs::path trace = fs::path(SYNPA_SOURCE_DIR) / "configs" / "trace-4apps.csv";
  const auto l1 = dir.path() / "l1.jsonl", l2 = dir.path() / "l2.jsonl";
  REQUIRE(cli({"replay", "--trace", trace.string(), "--out", l1.string(), "--seed", "3"}).code == kExitOk);
  REQUIRE(cli({"replay", "--config", trace.string(), "--out", l2.string(), "--seed", "3"}).code == kExitOk);
  CHECK(slurp(l1) == slurp(l2));
  const auto log = read_log_file(l1);
  CHECK(log.complete);
  CHECK(log.roster.size() == 4);
  CHECK(cli({"replay", "--trace", trace.string(), "--out", l2.string(), "--policy", "synpa,random"}).code == kExitUsage);

  const auto w1 = dir.path() / "w1.json", w2 = dir.path() / "w2.json";
  REQUIRE(cli({"gen-workload", "--recipe", "mixed", "--seed", "9", "--out", w1.string()}).code == kExitOk);
  REQUIRE(cli({"gen-workload", "--recipe", "mixed", "--seed", "9", "--out", w2.string()}).code == kExitOk);
  CHECK(slurp(w1) == slurp(w2));
  CHECK(nlohmann::json::parse(slurp(w1)).at("apps").size() == 8);

  write(dir.path() / "roster.json", R"({"roster": [{"id": "a", "class": "backend"}, {"id": "b", "class": "backend"},
    {"id": "c", "class": "frontend"}]})");
  CHECK(cli({"gen-workload", "--recipe", "mixed", "--config", (dir.path() / "roster.json").string(), "--out",
             w1.string()}).code == kExitDomainError);
  CHECK(cli({"gen-workload", "--recipe", "mixed", "--size", "2", "--config", (dir.path() / "roster.json").string(),
             "--out", w1.string()}).code == kExitOk);
}
