#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const fs::path kScratch = fs::temp_directory_path() / "loorisk_test_cli";

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run run(const std::string& args) {
  fs::create_directories(kScratch);
  const auto out = kScratch / "stdout", err = kScratch / "stderr";
  const std::string cmd = std::string("\"") + LOORISK_CLI_PATH + "\" " + args + " >\"" +
                          out.string() + "\" 2>\"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

fs::path write_file(const std::string& name, const std::string& text) {
  fs::create_directories(kScratch);
  const auto p = kScratch / name;
  std::ofstream(p) << text;
  return p;
}

const char* kTinyStudy =
    "[experiment]\nkind = table2\nseed = 11\nreps = 2\n"
    "[design]\nn = 20, 30, 40\np_over_n = 1\nfamily = logistic\n"
    "[model]\nloss = logistic\nreg = ridge\nlambda = 0.5\n";

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run("").code == 2);
  CHECK(run("frobnicate").code == 2);
  CHECK(run("bounds --rho 1 --delta 1").code == 2);
  CHECK(run("simulate table3").code == 2);
  CHECK(run("fit --preset no_such_preset").code == 2);
  const auto bad = write_file("bad.ini", "[experiment]\nkind = table2\nseed = x\n");
  const auto r = run("fit --config " + bad.string());
  CHECK(r.code == 2);
  CHECK(r.err.find("bad.ini:3") != std::string::npos);
}

TEST_CASE("bounds output") {
  const auto r = run("bounds --rho 1 --delta 1 --lambda 0.1 --n 100");
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("n,rho,delta,lambda,c0,c1,nu,C_b,C_v,bound_over_n\n", 0) == 0);
  CHECK(r.out.find(",1600,6511.51839190012") != std::string::npos);
}

TEST_CASE("selftest passes") {
  const auto r = run("selftest");
  CHECK(r.code == 0);
}

TEST_CASE("risk subcommands write CSV to stdout") {
  const auto cfg = write_file("tiny.ini", kTinyStudy);
  for (const char* sub : {"lo", "alo", "cv --folds 4"}) {
    CAPTURE(sub);
    const auto r = run(std::string(sub) + " --config " + cfg.string());
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("index,per_sample,h_diag,flagged\n", 0) == 0);
  }
  const auto f = run("fit --config " + cfg.string());
  REQUIRE(f.code == 0);
  CHECK(f.out.rfind("index,beta_hat\n", 0) == 0);
  const auto a = run("audit --config " + cfg.string());
  CHECK(a.code == 0);
}

TEST_CASE("simulate is byte-reproducible and writes a manifest") {
  const auto cfg = write_file("study.ini", kTinyStudy);
  const auto a = kScratch / "run_a", b = kScratch / "run_b";
  fs::remove_all(a);
  fs::remove_all(b);
  REQUIRE(run("simulate table2 --config " + cfg.string() + " --out " + a.string()).code == 0);
  REQUIRE(run("simulate table2 --config " + cfg.string() + " --threads 2 --out " + b.string())
              .code == 0);
  const auto csv = slurp(a / "results.csv");
  CHECK(!csv.empty());
  CHECK(csv == slurp(b / "results.csv"));
  CHECK(fs::exists(a / "report.json"));
  CHECK(fs::exists(a / "manifest.json"));

  const auto other = run("simulate table2 --config " + cfg.string() + " --seed 12");
  REQUIRE(other.code == 0);
  CHECK(other.out != csv);
  CHECK(run("simulate table1 --config " + cfg.string()).code == 2);
}
