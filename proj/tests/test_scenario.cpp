#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "voldisc/scenario.hpp"

using namespace voldisc;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir() {
  static int counter = 0;
  fs::path p = fs::temp_directory_path() / ("voldisc-scenario-" + std::to_string(++counter));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_file(const fs::path& dir, const std::string& name, const std::string& text) {
  fs::path p = dir / name;
  std::ofstream out(p, std::ios::binary);
  out << text;
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// parse the given config text and return the parse_error message
std::string parse_failure(const std::string& text) {
  fs::path dir = fresh_dir();
  fs::path cfg = write_file(dir, "bad.cfg", text);
  try {
    parse_scenario(cfg.string());
  } catch (const parse_error& e) {
    return e.what();
  }
  return "";  // no throw
}

const char* kGeometricScenario = R"(# scalar geometric-memory test scenario
[scenario]
name = unit-geometric
dim = 1
horizon = 260
window = 40

[operators]
b = eye
c = eye
a1 = eye*-0.8

[kernels]
k = delta
a1 = geometric:1,0.5

[forcing]
f = delta
x = 1
lo = 0

[tolerances]
identity = 1e-10
solve = 1e-9

[pipeline]
build-family
verify:existence
summability
solve
verify:multiterm
report
)";

}  // namespace

TEST_CASE("parse errors carry file and line context") {
  std::string m = parse_failure("x = 1\n[scenario]\nname = q\n");
  CHECK(m.find(":1:") != std::string::npos);
  CHECK(m.find("content before the first [section] header") != std::string::npos);

  m = parse_failure("[scenario]\nname = q\n[operators\nb = eye\n");
  CHECK(m.find(":3:") != std::string::npos);
  CHECK(m.find("unterminated section header") != std::string::npos);

  m = parse_failure("[scenario]\nnmae = q\n[pipeline]\nreport\n");
  CHECK(m.find("unknown key") != std::string::npos);

  m = parse_failure("[garbage]\nx = 1\n[pipeline]\nreport\n");
  CHECK(m.find("unknown section [garbage]") != std::string::npos);

  m = parse_failure("[scenario]\nname = q\n");
  CHECK(m.find("[pipeline] section with steps is required") != std::string::npos);

  m = parse_failure("[scenario]\nname = q\n[pipeline]\nfrobnicate\n");
  CHECK(m.find("unknown pipeline step 'frobnicate'") != std::string::npos);

  m = parse_failure(
      "[operators]\nb = eye\nc = eye\na1 = eye\n"
      "[kernels]\nk = delta\na1 = waffle:3\n[pipeline]\nreport\n");
  CHECK(m.find("unknown kernel form 'waffle:3'") != std::string::npos);

  m = parse_failure(
      "[operators]\nb = eye\nc = eye\na1 = eye\n"
      "[kernels]\nk = delta\na1 = geometric:1\n[pipeline]\nreport\n");
  CHECK(m.find("geometric kernel needs scale,ratio") != std::string::npos);
}

TEST_CASE("a maximal-lag kernel vanishing at the origin is rejected up front") {
  std::string m = parse_failure(
      "[operators]\nb = eye\nc = eye\na1 = eye\n"
      "[kernels]\nk = delta\na1 = explicit:0,1\n"
      "[lags]\nv1 = 1\n[pipeline]\nbuild-shifted\n");
  CHECK(m.find("bad.cfg") != std::string::npos);
  CHECK(m.find("must not vanish at 0") != std::string::npos);
  CHECK(m.find("lag attains the maximum") != std::string::npos);
}

TEST_CASE("a full scenario runs end to end and writes regenerable artifacts") {
  fs::path dir = fresh_dir();
  fs::path cfg = write_file(dir, "geo.cfg", kGeometricScenario);

  Scenario sc = parse_scenario(cfg.string());
  CHECK(sc.name == "unit-geometric");
  CHECK(sc.dim == 1);
  CHECK(sc.horizon == 260);
  REQUIRE(sc.has_spec);
  CHECK(sc.spec.n() == 1);
  CHECK(sc.spec.As[0](0, 0) == doctest::Approx(-0.8));

  sc.out_dir = (dir / "out").string();
  RunOutcome out = run_scenario(sc, true);
  CHECK(out.exit_code() == 0);
  CHECK(!out.error);
  CHECK(out.checks_pass);
  REQUIRE(out.steps.size() == 6);
  CHECK(out.steps[1].is_check);  // verify:existence
  CHECK(out.steps[1].pass);
  CHECK(out.steps[3].name == "solve");
  CHECK(out.steps[3].max_residual <= 1e-9);

  for (const char* name :
       {"family.csv", "solution.csv", "steps.csv", "certificates.csv", "report.txt"})
    CHECK(fs::exists(dir / "out" / name));

  // the report is a pure function of the CSV artifacts
  std::string stored = read_file(dir / "out" / "report.txt");
  std::string regenerated = regenerate_report((dir / "out").string(), false);
  CHECK(stored == regenerated);
  CHECK(stored.find("overall: PASS") != std::string::npos);
  CHECK(stored.find("unit-geometric") != std::string::npos);

  // values are written in full precision: reading them back is exact
  ExistenceFamily<double> fam = build_family(sc.spec, sc.horizon, sc.tol_identity);
  std::ifstream csv(dir / "out" / "family.csv");
  std::string line;
  std::getline(csv, line);  // header
  for (long v = 0; v <= 10; ++v) {
    REQUIRE(std::getline(csv, line));
    std::size_t c1 = line.find(',');
    std::size_t c2 = line.find(',', c1 + 1);
    double back = std::strtod(line.substr(c1 + 1, c2 - c1 - 1).c_str(), nullptr);
    CHECK(back == fam.S_seq.at(v)(0, 0));
  }
}

TEST_CASE("failing checks set the exit code without aborting the run") {
  fs::path dir = fresh_dir();
  fs::path cfg = write_file(dir, "geo.cfg", kGeometricScenario);
  Scenario sc = parse_scenario(cfg.string());
  sc.out_dir = (dir / "out").string();
  sc.tol_solve = 1e-300;  // unattainably strict residual check
  RunOutcome out = run_scenario(sc, false);
  CHECK(out.exit_code() == 1);
  CHECK(!out.error);
  CHECK(!out.checks_pass);
  REQUIRE(out.steps.size() == 6);  // the pipeline still completes
  CHECK(!out.steps[3].pass);

  // a step whose preconditions fail stops the run with a distinct code
  Scenario broken = parse_scenario(cfg.string());
  broken.out_dir = (dir / "out2").string();
  broken.pipeline.erase(broken.pipeline.begin());  // solve without build-family
  RunOutcome bad = run_scenario(broken, false);
  CHECK(bad.exit_code() == 2);
  CHECK(bad.error);
  CHECK(bad.steps.back().note.find("needs a problem and a built family") != std::string::npos);
}

TEST_CASE("report regeneration without artifacts is refused") {
  fs::path dir = fresh_dir();
  CHECK_THROWS_AS(regenerate_report((dir / "nosuch").string(), false), parse_error);
}
