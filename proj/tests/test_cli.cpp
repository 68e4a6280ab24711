#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "harmonia/geojson.hpp"
#include "harmonia/table.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace harmonia;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::current_path() / "cli_scratch" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + std::string(HARMONIA_BIN) + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void put(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string rh_panel(double rh) {
  return "area,year,variable,value,source\nA,2015,rh_mean," + format_number(rh) + ",climate\n";
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors exit with 2") {
    CHECK(run("") == 2);
    CHECK(run("no-such-command") == 2);
    CHECK(run("krige --bogus-flag 1") == 2);
    const auto dir = scratch("usage");
    CHECK(run("krige -o " + dir.string()) == 2);  // required inputs absent
    CHECK(run("--help") == 0);
  }

  TEST_CASE("config and input errors") {
    const auto dir = scratch("config");
    put(dir / "bad.json", "{ not json");
    put(dir / "unknown.json", R"({"colour": "blue"})");
    put(dir / "panel.csv", rh_panel(50));
    CHECK(run("-c " + (dir / "bad.json").string() + " validate --panel " + (dir / "panel.csv").string()) == 3);
    CHECK(run("-c " + (dir / "unknown.json").string() + " validate --panel " + (dir / "panel.csv").string()) == 3);
    CHECK(run("-c " + (dir / "absent.json").string() + " validate --panel " + (dir / "panel.csv").string()) == 4);
    CHECK(run("validate --panel " + (dir / "absent.csv").string() + " -o " + (dir / "o").string()) == 4);
  }

  TEST_CASE("strict validation") {
    const auto dir = scratch("strict");
    put(dir / "bad.csv", rh_panel(150));
    put(dir / "good.csv", rh_panel(50));
    const auto out = (dir / "out").string();
    CHECK(run("validate --panel " + (dir / "bad.csv").string() + " -o " + out) == 0);
    const auto v = parse_csv(slurp(dir / "out" / "violations.csv"));
    REQUIRE(v.rows.size() == 1);
    CHECK(v.rows[0][v.column("rule")] == "bounded");
    CHECK(run("validate --strict --panel " + (dir / "bad.csv").string() + " -o " + out) == 6);
    CHECK(run("validate --strict --panel " + (dir / "good.csv").string() + " -o " + out) == 0);
  }

  TEST_CASE("output directory from the environment") {
    const auto dir = scratch("env");
    put(dir / "p.csv", rh_panel(50));
    const auto env_dir = dir / "env_out";
    const auto flag_dir = dir / "flag_out";
    CHECK(run("validate --panel " + (dir / "p.csv").string(), "HARMONIA_OUT=" + env_dir.string()) == 0);
    CHECK(fs::exists(env_dir / "manifest.json"));
    CHECK(run("validate --panel " + (dir / "p.csv").string() + " -o " + flag_dir.string(),
              "HARMONIA_OUT=" + (dir / "ignored").string()) == 0);
    CHECK(fs::exists(flag_dir / "manifest.json"));
    CHECK_FALSE(fs::exists(dir / "ignored"));
  }

  TEST_CASE("krige on a 6x6 field agrees with the dense oracle") {
    const auto dir = scratch("krige");
    std::vector<Sample> samples;
    Table field;
    field.header = {"x", "y", "value"};
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) {
        const double v = std::exp(-0.1 * i) + 0.2 * std::sin(1.3 * j) + 0.05 * i * j;
        samples.push_back({{double(i), double(j)}, v});
        field.add_row({format_number(double(i)), format_number(double(j)), format_number(v)});
      }
    write_csv((dir / "field.csv").string(), field);
    const std::vector<AreaUnit> areas{make_rectangle("A1", 0, 0, 2.5, 2.5), make_rectangle("A2", 2.5, 0, 5, 2.5),
                                      make_rectangle("A3", 0, 2.5, 2.5, 5), make_rectangle("A4", 2.5, 2.5, 5, 5)};
    put(dir / "areas.geojson", to_geojson(areas));
    put(dir / "cfg.json", R"({"tuning": {"families": ["exponential"], "nmax_grid": [36], "initial_nmax": 36}})");
    const auto out = dir / "out";
    REQUIRE(run("-c " + (dir / "cfg.json").string() + " krige --field " + (dir / "field.csv").string() +
                " --areas " + (dir / "areas.geojson").string() + " -o " + out.string()) == 0);

    const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
    const auto& vg = manifest["results"]["fields"][0]["variogram"];
    const VariogramSpec spec{ModelFamily::parse(vg["family"].get<std::string>()), vg["nugget"].get<double>(),
                             vg["partial_sill"].get<double>(), vg["range"].get<double>()};
    const auto pred = read_csv((out / "predictions.csv").string());
    REQUIRE(pred.rows.size() == 4);
    for (std::size_t k = 0; k < 4; ++k) {
      const auto& row = pred.rows[k];
      CHECK(row[pred.column("area_id")] == areas[k].id());
      CHECK(row[pred.column("nmax")] == "36");
      const auto block = discretize_block(areas[k], std::sqrt(areas[k].area()) / 4.0);
      const auto ref = oracle::dense_block_kriging(samples, block, spec);
      CHECK(oracle::rel_close(parse_number(row[pred.column("mean")]), ref.mean, 1e-8));
      CHECK(oracle::rel_close(parse_number(row[pred.column("variance")]), ref.variance, 1e-8));
    }
    CHECK(fs::exists(out / "cv_table.csv"));
  }
}
