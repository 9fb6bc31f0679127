#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "coarsekit/tasks.hpp"

using coarsekit::run_task;
using coarsekit::TaskOverrides;
using json = nlohmann::json;

namespace {

json run_json(const json& cfg, const TaskOverrides& o = {}) { return json::parse(run_task(cfg.dump(), o).report); }

}  // namespace

TEST_CASE("reports are byte-identical for identical configs") {
  const std::vector<json> configs = {
      {{"task", "ball"}, {"group", "baumslag_solitar(1,2)"}, {"params", {{"radius", 4}}}},
      {{"task", "quotient"}, {"group", "free_abelian(2)"}, {"subgroup", {"a"}}, {"params", {{"radius", 4}, {"bundle", true}}}},
      {{"task", "ends"}, {"params", {{"window", {{"kind", "tree"}, {"radius", 9}}}, {"schedule", {1, 2, 3}}}}},
      {{"task", "uct-check"}},
  };
  for (const auto& cfg : configs) {
    CAPTURE(cfg.dump());
    const auto a = run_task(cfg.dump());
    const auto b = run_task(cfg.dump());
    CHECK(a.exit_code == 0);
    CHECK(a.report == b.report);
    const auto csv_a = run_task(cfg.dump(), {std::nullopt, std::nullopt, std::nullopt, "csv"});
    const auto csv_b = run_task(cfg.dump(), {std::nullopt, std::nullopt, std::nullopt, "csv"});
    CHECK(csv_a.report == csv_b.report);
  }
}

TEST_CASE("report envelope carries version, seed and a config hash") {
  const json cfg = {{"task", "euler"}, {"params", {{"euler", {{"one_relator", {{"n", 3}, {"m", 2}}}}}}}};
  const auto r = run_json(cfg);
  CHECK(r["version"] == coarsekit::version());
  CHECK(r["schema_version"] == coarsekit::kReportSchemaVersion);
  CHECK(r["seed"] == 1);
  CHECK(r["status"] == "ok");
  CHECK(r["result"]["one_relator"]["chi"] == "-3/2");  // 1 - 3 + 1/2

  TaskOverrides o;
  o.seed = 42;
  const auto r2 = run_json(cfg, o);
  CHECK(r2["seed"] == 42);
  CHECK(r2["config_hash"] != r["config_hash"]);

  // The output section does not enter the hash.
  json with_out = cfg;
  with_out["output"] = {{"path", "/tmp/x.json"}, {"format", "json"}};
  const auto outcome = run_task(with_out.dump());
  CHECK(outcome.out_path == std::optional<std::string>("/tmp/x.json"));
  CHECK(json::parse(outcome.report)["config_hash"] == r["config_hash"]);
}

TEST_CASE("config errors exit with code 2") {
  const std::vector<std::string> bad = {
      "{ \"task\": ",
      "[1, 2]",
      R"x({"group": "free(2)"})x",
      R"x({"task": "sing"})x",
      R"x({"task": "ball", "group": "free(2)", "params": {"radius": -1}})x",
      R"x({"task": "ball", "group": "free(2)", "params": {"radius": 2.5}})x",
      R"x({"task": "ball", "group": "free(2)", "params": {"radius": 99999}})x",
      R"x({"task": "ball", "group": "free(2)", "extra": 1})x",
      R"x({"task": "ball", "group": "free(2)", "output": {"format": "xml"}})x",
      R"x({"task": "ball", "group": "surface(2)"})x",
      R"x({"task": "quotient", "group": "free(2)", "subgroup": ["z"]})x",
      R"x({"task": "homology", "params": {"complex": {"kind": "algebraic", "ranks": [1, 1], "boundaries": []}}})x",
      R"x({"task": "euler", "params": {"euler": {}}})x",
  };
  for (const auto& cfg : bad) {
    CAPTURE(cfg);
    const auto out = run_task(cfg);
    CHECK(out.exit_code == coarsekit::kExitParse);
    CHECK(out.status == "parse_error");
    const auto r = json::parse(out.report);
    CHECK(r["error"]["message"].get<std::string>().size() > 0);
    CHECK(r["result"].is_null());
  }
}

TEST_CASE("refusals and broken preconditions exit with code 3") {
  const json positive = {{"task", "euler"},
                         {"params", {{"euler", {{"classify", {{"chi_G", "1/2"}, {"chi_H", "-1"}}}}}}}};
  auto out = run_task(positive.dump());
  CHECK(out.exit_code == coarsekit::kExitContract);
  auto r = json::parse(out.report);
  CHECK(r["status"] == "refused");
  CHECK(r["error"]["precondition"] == "chi_G_nonpositive");

  const json split = {{"task", "split-report"}, {"group", "free(2)"}, {"subgroup", {"a"}}};
  out = run_task(split.dump());
  CHECK(out.exit_code == coarsekit::kExitContract);
  r = json::parse(out.report);
  CHECK(r["result"]["verdict"] == "refused");
  CHECK(r["result"]["refusal"]["conjugator"] == "b");
  CHECK(r["error"]["precondition"] == "almost_normal");

  // A collar as wide as the window leaves nothing.
  const json collar = {{"task", "homology"},
                       {"params",
                        {{"complex", {{"kind", "rips"}, {"window", {{"kind", "integers"}, {"lo", -3}, {"hi", 3}}}}},
                         {"collar", 10}}}};
  out = run_task(collar.dump());
  CHECK(out.exit_code == coarsekit::kExitContract);
  CHECK(json::parse(out.report)["error"]["kind"] == "degenerate_input");
}

TEST_CASE("budget errors exit with code 4 and flag partial results") {
  const json cfg = {{"task", "ball"}, {"group", "free(2)"}, {"budget", 100}, {"params", {{"radius", 10}}}};
  const auto out = run_task(cfg.dump());
  CHECK(out.exit_code == coarsekit::kExitBudget);
  const auto r = json::parse(out.report);
  CHECK(r["partial"] == true);
  // |B_r(F_2)| = 2*3^r - 1: radius 3 holds 53 elements, radius 4 would need 161.
  CHECK(r["result"]["radius"] == 3);
  CHECK(r["result"]["size"] == 53);
  CHECK(r["error"]["completed"] == 3);

  TaskOverrides o;
  o.budget = 20;
  const json rips = {{"task", "homology"},
                     {"params", {{"complex", {{"kind", "rips"}, {"window", {{"kind", "integers"}, {"lo", 0}, {"hi", 30}}}}}}}};
  CHECK(run_task(rips.dump(), o).exit_code == coarsekit::kExitBudget);
}

TEST_CASE("ball task matches the free group growth formula") {
  for (int r = 0; r <= 5; ++r) {
    const auto res = run_json({{"task", "ball"}, {"group", "free(2)"}, {"params", {{"radius", r}}}})["result"];
    // Spheres of F_2: 1, then 4 * 3^(k-1).
    std::size_t total = 1, sphere = 4;
    for (int k = 1; k <= r; ++k, sphere *= 3) total += sphere;
    CHECK(res["size"] == total);
    CHECK(res["elements"].size() == total);
  }
}

TEST_CASE("quotient task exports a symmetric distance matrix and edge list") {
  const auto res = run_json({{"task", "quotient"},
                             {"group", "free_abelian(1)"},
                             {"subgroup", {"a^2"}},
                             {"params", {{"radius", 4}}}})["result"];
  CHECK(res["finite_index"]["finite"] == true);
  CHECK(res["finite_index"]["index"] == 2);
  const auto& d = res["distance_matrix"];
  REQUIRE(d.size() == 2);
  CHECK(d[0][0] == 0);
  CHECK(d[0][1] == d[1][0]);
  CHECK(d[0][1] == 1);
  CHECK(res["edges_scale_1"] == json::array({json::array({0, 1})}));

  // Z^2 / <a>: the cosets b^k form a line, consecutive ones at distance 1.
  const auto line = run_json({{"task", "quotient"},
                              {"group", "free_abelian(2)"},
                              {"subgroup", {"a"}},
                              {"params", {{"radius", 5}}}})["result"];
  CHECK(line["coset_count"] == 11);
  CHECK(line["edges_scale_1"].size() == 10);
}

TEST_CASE("homology and uct tasks on small complexes") {
  const json moore = {{"kind", "multiplication"}, {"factor", 6}};
  auto res = run_json({{"task", "homology"}, {"params", {{"complex", moore}, {"rings", {"Z", "Q", "Z/2"}}}}})["result"];
  CHECK(res["by_ring"]["Z"]["homology"][0]["torsion"] == json::array({"6"}));
  CHECK(res["by_ring"]["Q"]["homology"][0]["free_rank"] == 0);
  CHECK(res["by_ring"]["Z/2"]["homology"][0]["free_rank"] == 1);
  CHECK(res["by_ring"]["Z/2"]["homology"][1]["free_rank"] == 1);

  res = run_json({{"task", "uct-check"}, {"params", {{"complex", moore}}}})["result"];
  CHECK(res["passed"] == true);

  const json algebraic = {{"kind", "algebraic"}, {"ranks", {2, 1}}, {"boundaries", {{{2}, {-4}}}}};
  res = run_json({{"task", "homology"}, {"params", {{"complex", algebraic}, {"export", true}}}})["result"];
  // d = (2, -4)^T: coker Z^2 / <(2,-4)> = Z + Z/2.
  CHECK(res["by_ring"]["Z"]["homology"][0]["text"] == "Z + Z/2");
  CHECK(res["sparse_text"].get<std::string>().find("1 2 1 2") != std::string::npos);
}

TEST_CASE("kunneth family task counts every scheduled case") {
  const std::size_t random_pairs = 30;
  const auto res = run_json({{"task", "kunneth-check"}, {"seed", 3}, {"params", {{"random_pairs", random_pairs}}}})["result"];
  const auto& sweep = res["sweep"];
  CHECK(sweep["family_size"] == 7619);
  // 24 small complexes paired with all 7619 in both orders, plus random pairs, four rings.
  CHECK(sweep["cases"] == (24 * 7619 * 2 + random_pairs) * 4);
  CHECK(sweep["failures"] == 0);
  CHECK(sweep["seed"] == 3);
  const auto& named = res["named_cases"];
  REQUIRE(named.size() == 2);
  CHECK(named[0]["check"]["passed"] == true);
  CHECK(named[1]["check"]["passed"] == true);
}

TEST_CASE("csv output flattens every leaf") {
  const json cfg = {{"task", "euler"}, {"params", {{"euler", {{"one_relator", {{"n", 2}, {"m", 1}}}}}}}};
  const auto csv = run_task(cfg.dump(), {std::nullopt, std::nullopt, std::nullopt, "csv"}).report;
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "path,value");
  std::size_t rows = 0;
  bool saw_chi = false;
  while (std::getline(in, line)) {
    ++rows;
    saw_chi = saw_chi || line == "/result/one_relator/chi,0";
  }
  CHECK(saw_chi);
  // Count the leaves of the JSON report independently.
  const auto r = run_json(cfg);
  std::function<std::size_t(const json&)> leaves = [&](const json& j) -> std::size_t {
    if ((j.is_object() || j.is_array()) && !j.empty()) {
      std::size_t n = 0;
      for (const auto& x : j) n += leaves(x);
      return n;
    }
    return 1;
  };
  CHECK(rows == leaves(r));
}

TEST_CASE("atomic writes replace the target and leave no temporary file") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "coarsekit_atomic_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path target = dir / "report.json";
  coarsekit::write_atomically(target.string(), "first\n");
  coarsekit::write_atomically(target.string(), "second\n");
  std::ifstream in(target);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(content == "second\n");
  CHECK(std::distance(fs::directory_iterator(dir), fs::directory_iterator{}) == 1);
  fs::remove_all(dir);
}

TEST_CASE("family members are addressable by index") {
  const auto a = run_json({{"task", "homology"}, {"params", {{"complex", {{"kind", "family"}, {"index", 0}}}}}})["result"];
  CHECK(a["ranks"].is_array());
  const auto bad = run_task(json{{"task", "homology"}, {"params", {{"complex", {{"kind", "family"}, {"index", 7619}}}}}}.dump());
  CHECK(bad.exit_code == coarsekit::kExitParse);
}
