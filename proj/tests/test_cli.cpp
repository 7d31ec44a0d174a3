#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace {

std::string cli_path() {
  const char* p = std::getenv("EQUIKERNEL_BIN");
  REQUIRE(p != nullptr);
  return p;
}

struct RunResult {
  int exit_code;
  std::string out;
  std::string err;
};

RunResult run(const std::string& args) {
  const std::string out_file = "cli_stdout.tmp";
  const std::string err_file = "cli_stderr.tmp";
  const std::string cmd = cli_path() + " " + args + " >" + out_file + " 2>" + err_file;
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WEXITSTATUS(status);
  auto slurp = [](const std::string& path) {
    std::ifstream in(path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
  };
  r.out = slurp(out_file);
  r.err = slurp(err_file);
  std::remove(out_file.c_str());
  std::remove(err_file.c_str());
  return r;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

const char* kWaterXyz =
    "3\nwater\n"
    "O 0.000 0.000 0.117\n"
    "H 0.000 0.757 -0.470\n"
    "H 0.000 -0.757 -0.470\n";

}  // namespace

TEST_CASE("equivariance audit passes and reports per-layer errors") {
  RunResult r = run("check-equivariance --seed 0 --trials 2");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("spherical_harmonics") != std::string::npos);
  CHECK(r.out.find("separable_layer_norm") != std::string::npos);
  CHECK(r.out.find("model_energy_invariance") != std::string::npos);
  CHECK(r.out.find("FAIL") == std::string::npos);
}

TEST_CASE("corrupted clebsch-gordan table is caught and named") {
  RunResult r = run("check-equivariance --seed 0 --trials 1 --corrupt-cg");
  CHECK(r.exit_code == 1);
  CHECK(r.out.find("FAIL") != std::string::npos);
  // the corrupted tensor feeds the Wigner recursion, so the algebra layers fail
  CHECK(r.out.find("FAIL  wigner_d") != std::string::npos);
}

TEST_CASE("zero trials is a usage error") {
  RunResult r = run("check-equivariance --trials 0");
  CHECK(r.exit_code == 2);
}

TEST_CASE("oracle check passes") {
  RunResult r = run("check-oracle --lmax 2 --edges 5 --seed 1");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("PASS") != std::string::npos);
}

TEST_CASE("bench rejects too few reps") {
  RunResult r = run("bench --lmax 2 --reps 1");
  CHECK(r.exit_code == 2);
}

TEST_CASE("bench emits the csv schema and slopes") {
  RunResult r = run("bench --lmax 2 3 --channels 2 --reps 3 --seed 0");
  CHECK(r.exit_code == 0);
  CHECK(r.out.rfind("kernel,L_max,M_max,channels,reps,median_s\n", 0) == 0);
  CHECK(r.out.find("so3_full,2,2,2,3,") != std::string::npos);
  CHECK(r.out.find("escn,3,3,2,3,") != std::string::npos);
  CHECK(r.out.find("# slope so3_full ") != std::string::npos);
  CHECK(r.out.find("# slope escn ") != std::string::npos);
}

TEST_CASE("single-point bench reports slope as not available") {
  RunResult r = run("bench --lmax 2 --channels 2 --reps 3");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("# slope so3_full n/a") != std::string::npos);
}

TEST_CASE("predict emits deterministic json with units") {
  write_file("water.xyz", kWaterXyz);
  RunResult a = run("predict water.xyz --random-seed 7");
  CHECK(a.exit_code == 0);
  nlohmann::json j = nlohmann::json::parse(a.out);
  CHECK(j.contains("energy"));
  CHECK(j["units"]["energy"] == "eV");
  CHECK(j["units"]["forces"] == "eV/Angstrom");
  CHECK(j["forces"].size() == 3);

  RunResult b = run("predict water.xyz --random-seed 7");
  CHECK(a.out == b.out);  // byte-stable for a fixed seed

  RunResult c = run("predict water.xyz --random-seed 8");
  CHECK(a.out != c.out);
  std::remove("water.xyz");
}

TEST_CASE("checkpoint and random seed are mutually exclusive") {
  write_file("water.xyz", kWaterXyz);
  RunResult r = run("predict water.xyz --random-seed 7 --checkpoint foo.eqkw");
  CHECK(r.exit_code == 2);
  std::remove("water.xyz");
}

TEST_CASE("relax writes a trace and a final structure") {
  write_file("water.xyz", kWaterXyz);
  RunResult r = run("relax water.xyz --random-seed 3 --max-steps 4 --trace trace.csv --out final.xyz");
  CHECK(r.exit_code == 0);

  std::ifstream trace("trace.csv");
  REQUIRE(trace.good());
  std::string header;
  std::getline(trace, header);
  CHECK(header.rfind("step,energy_ev,fmax_ev_per_angstrom", 0) == 0);
  int rows = 0;
  for (std::string line; std::getline(trace, line);)
    if (!line.empty()) ++rows;
  CHECK(rows >= 1);
  CHECK(rows <= 4);

  std::ifstream fin("final.xyz");
  REQUIRE(fin.good());
  int n = 0;
  fin >> n;
  CHECK(n == 3);
  std::remove("water.xyz");
  std::remove("trace.csv");
  std::remove("final.xyz");
}

TEST_CASE("relax with an immediately satisfied threshold keeps positions") {
  write_file("water.xyz", kWaterXyz);
  RunResult r = run("relax water.xyz --random-seed 3 --fmax 1e9 --trace t.csv --out f.xyz");
  CHECK(r.exit_code == 0);
  std::ifstream trace("t.csv");
  std::string header, row, extra;
  std::getline(trace, header);
  std::getline(trace, row);
  CHECK_FALSE(static_cast<bool>(std::getline(trace, extra)));  // single step
  std::ifstream fin("f.xyz");
  std::string out((std::istreambuf_iterator<char>(fin)), std::istreambuf_iterator<char>());
  CHECK(out.find("0.757") != std::string::npos);  // unchanged coordinates
  std::remove("water.xyz");
  std::remove("t.csv");
  std::remove("f.xyz");
}

TEST_CASE("missing subcommand is a usage error") {
  RunResult r = run("");
  CHECK(r.exit_code == 2);
}
