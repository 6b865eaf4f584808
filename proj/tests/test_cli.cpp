#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fingap/cli.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

fs::path scratch(const std::string& name) {
  const char* env = std::getenv("FINGAP_TEST_TMP");
  const fs::path root = env ? fs::path(env) : fs::temp_directory_path() / "fingap_cli_test";
  const fs::path dir = root / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "fingap");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = fingap::run_cli(int(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir / name;
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Json load(const fs::path& p) { return Json::parse(slurp(p)); }

std::vector<std::vector<std::string>> csv_rows(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("eqm writes capacity and a provenance header") {
  const auto dir = scratch("eqm");
  const auto cfg = write_config(dir, "c.json", R"({"bands": [[-2, 2]], "grid": 51})");
  const auto r = run({"--config", cfg.string(), "--out", (dir / "o").string(), "--quiet", "eqm"});
  REQUIRE(r.code == 0);
  CHECK(r.out.empty());
  const auto j = load(dir / "o" / "eqm.json");
  CHECK(std::abs(j.at("equilibrium").at("capacity").get<double>() - 1.0) < 1e-8);
  CHECK(j["meta"]["version"] == "0.1.0");
  CHECK(j["meta"]["config_hash"].get<std::string>().size() == 16);
  const auto csv = slurp(dir / "o" / "eqm.csv");
  CHECK(csv.rfind("# fingap 0.1.0 config_hash=" + j["meta"]["config_hash"].get<std::string>(), 0) == 0);
  CHECK(csv_rows(dir / "o" / "eqm.csv")[0] == std::vector<std::string>{"x", "w", "Phi", "G"});

  const auto cfg2 = write_config(dir, "c2.json", R"({"bands": [[-2, -1], [1, 2]]})");
  REQUIRE(run({"--config", cfg2.string(), "--out", (dir / "o2").string(), "eqm"}).code == 0);
  const auto w = load(dir / "o2" / "eqm.json").at("equilibrium").at("harmonic_measures");
  CHECK(std::abs(w[0].get<double>() - 0.5) < 1e-8);
  CHECK(std::abs(w[1].get<double>() - 0.5) < 1e-8);
}

TEST_CASE("bad input exits 2 and writes nothing") {
  const auto dir = scratch("bad");
  const auto out = dir / "o";
  const auto malformed = write_config(dir, "m.json", R"({"bands": [[-2, 2]],)");
  CHECK(run({"--config", malformed.string(), "--out", out.string(), "eqm"}).code == 2);
  CHECK_FALSE(fs::exists(out));

  const auto unknown = write_config(dir, "u.json", R"({"bands": [[-2, 2]], "bogus": 1})");
  CHECK(run({"--config", unknown.string(), "--out", out.string(), "eqm"}).code == 2);
  const auto touching = write_config(dir, "t.json", R"({"bands": [[-2, 0], [0, 2]]})");
  CHECK(run({"--config", touching.string(), "--out", out.string(), "eqm"}).code == 2);
  CHECK_FALSE(fs::exists(out));

  CHECK(run({"--out", out.string(), "eqm"}).code == 2);
  CHECK(run({"nosuchcommand"}).code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("missing files exit 3") {
  const auto dir = scratch("missing");
  CHECK(run({"--config", (dir / "absent.json").string(), "--out", (dir / "o").string(), "eqm"}).code == 3);
  const auto cfg = write_config(dir, "s.json", R"({"experiment": "lieb_thirring", "input": "perturbed.json"})");
  CHECK(run({"--config", cfg.string(), "--out", (dir / "o").string(), "sumrule"}).code == 3);
  CHECK_FALSE(fs::exists(dir / "o" / "sumrule.json"));
  const auto rep = write_config(dir, "r.json", R"({"dir": "nowhere"})");
  CHECK(run({"--config", rep.string(), "--out", (dir / "o").string(), "report"}).code == 3);
}

TEST_CASE("torus on the period-2 set alternates") {
  const auto dir = scratch("torus");
  const auto cfg = write_config(dir, "c.json",
                                R"({"bands": [[-2.23606797749979, -1], [1, 2.23606797749979]],
                                    "dirichlet": [{"gamma": 0, "sheet": -1}], "N": 40})");
  REQUIRE(run({"--config", cfg.string(), "--out", dir.string(), "torus"}).code == 0);
  const auto rows = csv_rows(dir / "torus.csv");
  REQUIRE(rows.size() == 41);
  const double big = (std::sqrt(5.0) + 1) / 2, small = (std::sqrt(5.0) - 1) / 2;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double a = std::stod(rows[i][1]), b = std::stod(rows[i][2]);
    CHECK(std::min(std::abs(a - big), std::abs(a - small)) < 1e-6);
    CHECK(std::abs(b) < 1e-6);
    if (i + 1 < rows.size()) CHECK(std::abs(std::abs(a - std::stod(rows[i + 1][1])) - 1.0) < 1e-6);
  }
  const auto j = load(dir / "torus.json");
  CHECK(j["period"] == 2);
  CHECK(j["verdicts"]["reflectionless"] == "holds");
}

TEST_CASE("determinism: same config and seed give byte-identical CSV") {
  const auto dir = scratch("determinism");
  const auto cfg = write_config(dir, "p.json",
                                R"({"perturbation": {"kind": "random", "target": "both", "amplitude": 0.5,
                                    "rate": 2}, "N": 200})");
  REQUIRE(run({"--config", cfg.string(), "--out", (dir / "a").string(), "--seed", "7", "perturb"}).code == 0);
  REQUIRE(run({"--config", cfg.string(), "--out", (dir / "b").string(), "--seed", "7", "perturb"}).code == 0);
  REQUIRE(run({"--config", cfg.string(), "--out", (dir / "c").string(), "--seed", "8", "perturb"}).code == 0);
  CHECK(slurp(dir / "a" / "perturb.csv") == slurp(dir / "b" / "perturb.csv"));
  CHECK(slurp(dir / "a" / "perturbed.json") == slurp(dir / "b" / "perturbed.json"));
  CHECK(slurp(dir / "a" / "perturb.csv") != slurp(dir / "c" / "perturb.csv"));
  CHECK(load(dir / "a" / "perturbed.json")["meta"]["seed"] == 7);
}

TEST_CASE("perturb then Lieb-Thirring then report") {
  const auto dir = scratch("chain");
  const auto p = write_config(dir, "p.json",
                              R"({"perturbation": {"kind": "single_site", "index": 1, "value": 3, "target": "b"},
                                  "N": 10})");
  REQUIRE(run({"--config", p.string(), "--out", dir.string(), "perturb"}).code == 0);
  const auto s = write_config(dir, "s.json", R"({"experiment": "lieb_thirring", "input": "perturbed.json"})");
  REQUIRE(run({"--config", s.string(), "--out", dir.string(), "sumrule"}).code == 0);
  const auto j = load(dir / "sumrule.json");
  CHECK(std::abs(j["results"]["lhs"].get<double>() - 8.0 / 3.0) < 1e-6);
  CHECK(std::abs(j["results"]["rhs"].get<double>() - 3.0) < 1e-12);

  REQUIRE(run({"--out", dir.string(), "report"}).code == 0);
  const auto rows = csv_rows(dir / "summary.csv");
  REQUIRE(rows.size() >= 2);
  bool found = false;
  for (const auto& r : rows) found = found || (r[0] == "sumrule.json" && r.back() == "holds");
  CHECK(found);
}

TEST_CASE("distance of a torus point to its own torus") {
  const auto dir = scratch("distance");
  const auto cfg = write_config(dir, "d.json",
                                R"({"bands": [[-2, -0.5], [0.5, 2]], "circle": [0.37], "m": [1, 5]})");
  REQUIRE(run({"--config", cfg.string(), "--out", dir.string(), "distance"}).code == 0);
  const auto rows = csv_rows(dir / "distance.csv");
  REQUIRE(rows.size() == 3);
  CHECK(std::stod(rows[1][1]) < 1e-4);
  CHECK(std::stod(rows[2][1]) < 1e-4);
}

TEST_CASE("report over an empty directory") {
  const auto dir = scratch("empty");
  REQUIRE(run({"--out", dir.string(), "--quiet", "report"}).code == 0);
  CHECK(csv_rows(dir / "summary.csv").size() == 1);
  CHECK(load(dir / "summary.json")["rows"].empty());
}

TEST_CASE("sumrule experiments through the CLI") {
  const auto dir = scratch("sumrules");
  const auto z = write_config(dir, "z.json", R"({"experiment": "szego_ratio", "jacobi": {"head_a": [], "head_b": []}})");
  REQUIRE(run({"--config", z.string(), "--out", (dir / "z").string(), "sumrule"}).code == 0);
  CHECK(load(dir / "z" / "sumrule.json")["verdicts"]["cauchy"] == "holds");

  const auto o = write_config(dir, "o.json",
                              R"({"experiment": "oscillatory", "bands": [[-2, 2]], "frequency": 0.3819660112501051,
                                  "decay": 1, "terms": 4096})");
  REQUIRE(run({"--config", o.string(), "--out", (dir / "o").string(), "sumrule"}).code == 0);

  const auto bad = write_config(dir, "b.json", R"({"experiment": "nope"})");
  CHECK(run({"--config", bad.string(), "--out", (dir / "b").string(), "sumrule"}).code == 2);
  const auto low = write_config(dir, "l.json",
                                R"({"experiment": "oscillatory", "bands": [[-2, 2]], "frequency": 0.3, "decay": 0.5})");
  CHECK(run({"--config", low.string(), "--out", (dir / "l").string(), "sumrule"}).code == 2);
}
