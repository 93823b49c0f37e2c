#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "jointgibbs/config.hpp"
#include "jointgibbs/error.hpp"
#include "support.hpp"

using namespace jointgibbs;
namespace fs = std::filesystem;
using nlohmann::json;
using testsupport::read_file;

namespace {

std::string cli() {
  const char* p = std::getenv("JOINTGIBBS_CLI");
  REQUIRE_MESSAGE(p, "JOINTGIBBS_CLI must point at the command-line tool");
  return p;
}

struct Result {
  int status;
  std::string out;
};

Result run(const std::string& args, const fs::path& dir) {
  auto log = dir / "cli.log";
  std::string cmd = "'" + cli() + "' " + args + " > '" + log.string() + "' 2>&1";
  int rc = std::system(cmd.c_str());
  return {WIFEXITED(rc) ? WEXITSTATUS(rc) : -1, read_file(log)};
}

fs::path write_toy(const fs::path& dir) {
  auto csv = dir / "toy.csv";
  std::ofstream(csv) << "y,x,c\n1.2,0.5,a\n2.1,NA,b\n0.7,-0.3,a\n3.3,1.9,NA\n1.9,0.8,b\n2.4,1.1,a\n0.2,NA,b\n"
                        "1.5,0.2,a\n2.8,1.5,b\n1.1,0.1,a\n";
  return csv;
}

fs::path write_config(const fs::path& dir, const json& extra) {
  json cfg = {{"data", "toy.csv"}, {"formula", "y ~ x + c"}, {"monitor_params", {{"imps", true}}},
              {"mcmc", {{"n_iter", 200}, {"n_adapt", 50}, {"seed", 42}}}};
  if (extra.is_object()) cfg.update(extra);
  auto p = dir / "cfg.json";
  std::ofstream(p) << cfg.dump(2);
  return p;
}

}  // namespace

TEST_CASE("configuration schema") {
  json ok = {{"data", "d.csv"}, {"formula", "y ~ x"}, {"mcmc", {{"n_iter", 10}}}};
  auto cfg = parse_config(ok, "/tmp");
  CHECK(cfg.data_path == "/tmp/d.csv");
  CHECK(cfg.mcmc.n_iter == 10);
  CHECK(cfg.mcmc.n_chains == 3);
  CHECK(cfg.mcmc.n_adapt == 100);
  json bad = ok;
  bad["nonsense"] = 1;
  CHECK_THROWS_AS(parse_config(bad), ConfigError);
  bad = ok;
  bad["mcmc"]["thin"] = 0;
  CHECK_THROWS_AS(parse_config(bad), ConfigError);
  bad = ok;
  bad.erase("formula");
  CHECK_THROWS_AS(parse_config(bad), ConfigError);
  bad = ok;
  bad["monitor_params"] = {{"bogus", true}};
  CHECK_THROWS_AS(parse_config(bad), ConfigError);
  json multi = {{"data", "d.csv"},
                {"formulas", json::array({"y ~ x", {{"formula", "z ~ x"}, {"family", "binomial"}, {"link", "probit"}}})},
                {"trunc", {{"x", {1e-5, nullptr}}}},
                {"hyperpars", {{"norm", {{"tau_reg_norm", 0.01}}}}}};
  auto m = parse_config(multi);
  REQUIRE(m.analyses.size() == 2);
  CHECK(*m.analyses[1].model == "glm_binomial_probit");
  CHECK(m.options.trunc.at("x").lower == 1e-5);
  CHECK(std::isinf(m.options.trunc.at("x").upper));
  CHECK(m.options.hyper.norm.tau_reg == 0.01);
}

TEST_CASE("fit, summary, diagnose, predict and export") {
  auto dir = testsupport::scratch_dir("cli");
  write_toy(dir);
  auto cfg = write_config(dir, {});
  auto a = dir / "a", b = dir / "b";
  auto r1 = run("fit -c '" + cfg.string() + "' -o '" + a.string() + "' --threads 1", dir);
  REQUIRE_MESSAGE(r1.status == 0, r1.out);
  auto r2 = run("fit -c '" + cfg.string() + "' -o '" + b.string() + "' --threads 3", dir);
  REQUIRE_MESSAGE(r2.status == 0, r2.out);
  for (const char* f : {"chain1.csv", "chain2.csv", "chain3.csv"}) CHECK(read_file(a / f) == read_file(b / f));
  for (const char* f : {"meta.json", "config.json", "manifest.json", "model_graph.txt", "warnings.log"})
    CHECK(fs::exists(a / f));
  auto manifest = json::parse(read_file(a / "manifest.json"));
  CHECK(manifest["seed"] == 42);

  auto s = run("summary -r '" + a.string() + "' --missinfo", dir);
  REQUIRE_MESSAGE(s.status == 0, s.out);
  CHECK(s.out.find("Iterations = 51:250") != std::string::npos);
  CHECK(s.out.find("Sample size per chain = 200") != std::string::npos);
  CHECK(s.out.find("Thinning interval = 1") != std::string::npos);
  CHECK(s.out.find("Number of chains = 3") != std::string::npos);
  CHECK(fs::exists(a / "summary.json"));
  auto sub = run("summary -r '" + a.string() + "' --start 100 --end 200 --exclude-chains 2", dir);
  CHECK(sub.out.find("Iterations = 100:200") != std::string::npos);
  CHECK(sub.out.find("Number of chains = 2") != std::string::npos);

  auto d = run("diagnose -r '" + a.string() + "' --plots trace,density,mcse_ratio,imp_distr", dir);
  REQUIRE_MESSAGE(d.status == 0, d.out);
  for (const char* f : {"diagnostics.csv", "trace.csv", "density.json", "imp_distr.csv"})
    CHECK(fs::exists(a / "diagnostics" / f));

  auto p = run("predict -r '" + a.string() + "' --vars '~ x' --grid-length 7 --type response", dir);
  REQUIRE_MESSAGE(p.status == 0, p.out);
  CHECK(read_csv((a / "predict.csv").string()).n_rows() == 7);

  auto e = run("impute-export -r '" + a.string() + "' --m 10 --seed 2019 --minspace 10", dir);
  REQUIRE_MESSAGE(e.status == 0, e.out);
  auto mi = read_csv((a / "imputed.csv").string());
  CHECK(mi.n_rows() == 11 * 10);
  CHECK(fs::exists(a / "manifest_impute-export.json"));
}

TEST_CASE("n_iter = 0 writes the graph and an empty sample") {
  auto dir = testsupport::scratch_dir("cli_empty");
  write_toy(dir);
  auto cfg = write_config(dir, {{"mcmc", {{"n_iter", 0}}}});
  auto r = run("fit -c '" + cfg.string() + "' -o '" + (dir / "run").string() + "'", dir);
  REQUIRE_MESSAGE(r.status == 0, r.out);
  CHECK(read_file(dir / "run" / "model_graph.txt").find("Covariate model for \"x\"") != std::string::npos);
  auto rd = read_run((dir / "run").string());
  CHECK(rd.samples.n_stored() == 0);
}

TEST_CASE("errors map to exit codes") {
  auto dir = testsupport::scratch_dir("cli_err");
  write_toy(dir);
  auto cfg = write_config(dir, {{"formula", "y ~ x + nosuch"}});
  auto r = run("fit -c '" + cfg.string() + "' -o '" + (dir / "run").string() + "'", dir);
  CHECK(r.status == 2);
  CHECK(r.out.find("nosuch") != std::string::npos);
  CHECK(run("fit", dir).status == 2);
  // a missing file is a configuration problem, a malformed one a data problem
  auto missing = write_config(dir, {{"data", "absent.csv"}});
  CHECK(run("fit -c '" + missing.string() + "' -o '" + (dir / "run").string() + "'", dir).status == 2);
  std::ofstream(dir / "ragged.csv") << "y,x\n1,2\n3\n";
  auto ragged = write_config(dir, {{"data", "ragged.csv"}, {"formula", "y ~ x"}});
  CHECK(run("fit -c '" + ragged.string() + "' -o '" + (dir / "run").string() + "'", dir).status == 3);
}

TEST_CASE("md-pattern") {
  auto dir = testsupport::scratch_dir("cli_md");
  std::ofstream(dir / "m.csv") << "a,b\n1,NA\n2,3\n3,NA\n4,1\n5,2\n";
  auto r = run("md-pattern --data '" + (dir / "m.csv").string() + "'", dir);
  REQUIRE(r.status == 0);
  CHECK(r.out == "a,b,count\n1,1,3\n1,0,2\n0,2,2\n");
}
