#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "bandlab/experiment.hpp"

using namespace bandlab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "bandlab_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

json tiny_identities(const std::string& out) {
  json cfg = default_config("identities");
  cfg["N"] = 16;
  cfg["W"] = 2;
  cfg["trials"] = 2;
  cfg["n_triples"] = 5;
  cfg["out"] = out;
  return cfg;
}

}  // namespace

TEST_CASE("config validation") {
  CHECK_THROWS_AS(default_config("nonsense"), ConfigError);
  CHECK_THROWS_AS(
      effective_config("identities", json::object(), json{{"bogus_key", 1}}),
      ConfigError);
  CHECK_THROWS_AS(
      effective_config("fluctavg", json::object(), json{{"trials", 0}}),
      ConfigError);
  CHECK_THROWS_AS(effective_config("localaw", json::object(),
                                   json{{"eta_ladder", {0.25, 0.5}}}),
                  ConfigError);
  CHECK_THROWS_AS(effective_config("identities", json::object(),
                                   json{{"N", 8192}}),
                  ConfigError);  // budget
  // file config merges under CLI overrides
  const json cfg = effective_config("identities", json{{"N", 32}},
                                    json{{"W", 3}});
  CHECK(cfg.at("N") == 32);
  CHECK(cfg.at("W") == 3);
  CHECK(cfg.at("trials") == 10);
}

TEST_CASE("identities run: outputs, pass, determinism") {
  const auto dir1 = fresh_dir("ident1");
  const auto dir2 = fresh_dir("ident2");
  const auto r1 = run_experiment(tiny_identities(dir1.string()));
  CHECK(r1.pass);
  CHECK(fs::exists(r1.records_path));
  CHECK(fs::exists(r1.manifest_path));
  CHECK(r1.manifest.at("rows") == 2);
  CHECK(r1.manifest.at("trial_seeds").size() == 2);

  const auto r2 = run_experiment(tiny_identities(dir2.string()));
  CHECK(slurp(r1.records_path) == slurp(r2.records_path));  // byte identical

  // worker count does not change the records
  json cfg3 = tiny_identities(fresh_dir("ident3").string());
  cfg3["threads"] = 1;
  const auto r3 = run_experiment(cfg3);
  CHECK(slurp(r1.records_path) == slurp(r3.records_path));
}

TEST_CASE("csv escaping") {
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("q\"q") == "\"q\"\"q\"");
  CHECK(format_double(0.1) == "0.10000000000000001");
}

TEST_CASE("summarize merges disjoint-seed runs") {
  const auto dirA = fresh_dir("sumA");
  const auto dirB = fresh_dir("sumB");
  json cfgA = tiny_identities(dirA.string());
  json cfgB = tiny_identities(dirB.string());
  cfgB["seed"] = 2;
  const auto rA = run_experiment(cfgA);
  const auto rB = run_experiment(cfgB);

  const json merged = summarize({rA.manifest_path, rB.manifest_path});
  CHECK(merged.at("runs") == 2);
  CHECK(merged.at("total_rows") == 4);
  CHECK(merged.at("pass") == true);

  // single-run summarize reproduces the run's check values exactly
  const json solo = summarize({rA.manifest_path});
  CHECK(solo.at("checks")[0].at("value").get<double>() ==
        rA.manifest.at("checks")[0].at("value").get<double>());

  CHECK_THROWS_AS(summarize({}), ConfigError);
  // schema version mismatch is rejected
  json broken = rA.manifest;
  broken["schema_version"] = 999;
  const auto bad = (dirA / "broken.json").string();
  std::ofstream(bad) << broken.dump();
  CHECK_THROWS_AS(summarize({bad}), ConfigError);
  // grids must agree beyond seed/trials/out/threads
  json cfgC = tiny_identities(fresh_dir("sumC").string());
  cfgC["N"] = 32;
  const auto rC = run_experiment(cfgC);
  CHECK_THROWS_AS(summarize({rA.manifest_path, rC.manifest_path}), ConfigError);
}

TEST_CASE("bootstrap regime gate") {
  json cfg = default_config("bootstrap");
  cfg["d"] = 1;  // outside d >= 2
  CHECK_THROWS_AS(run_experiment(cfg), ConfigError);
  json cfg2 = default_config("bootstrap");
  cfg2["W"] = 2;  // N = 24 > W^2 N^0.1
  CHECK_THROWS_AS(run_experiment(cfg2), ConfigError);
}

TEST_CASE("theta experiment at a small size") {
  json cfg = default_config("theta");
  cfg["N"] = 32;
  cfg["W_list"] = {4};
  cfg["eta_list"] = {0.5};
  cfg["out"] = fresh_dir("theta").string();
  const auto r = run_experiment(cfg);
  CHECK(r.pass);
  bool saw_fit = false;
  for (const auto& c : r.manifest.at("checks")) {
    if (c.at("name") == "fitted_C") {
      saw_fit = true;
      CHECK(c.at("value").get<double>() <= 10.0);
    }
  }
  CHECK(saw_fit);
}

TEST_CASE("fluctavg single mean-field point") {
  // W = (N-1)/2 covers the whole torus; both bounds are comparable there
  json cfg = default_config("fluctavg");
  cfg["Ns"] = {65};
  cfg["Ws"] = {32};
  cfg["trials"] = 10;
  cfg["out"] = fresh_dir("fluct_mf").string();
  const auto r = run_experiment(cfg);
  const json row = r.manifest.at("summary").at("grid")[0];
  CHECK(row.at("bound_pass_fraction").get<double>() == 1.0);
  const double eta = row.at("eta").get<double>();
  const double phi2 = 1.0 / (32.0 * eta);
  const double bound_new = phi2 / eta + 1.0;
  const double bound_old = std::sqrt(65.0) * phi2 + 65.0 * phi2 * phi2;
  CHECK(bound_old / bound_new < 10.0);
  CHECK(bound_new / bound_old < 10.0);
}

TEST_CASE("worker count respects BANDLAB_THREADS") {
  json cfg;
  cfg["threads"] = 0;
  setenv("BANDLAB_THREADS", "1", 1);
  CHECK(worker_count(cfg, 100) == 1);
  unsetenv("BANDLAB_THREADS");
  CHECK(worker_count(cfg, 1) == 1);
}
