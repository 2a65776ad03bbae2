#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "deltaspec/cli.hpp"
#include "reference_values.hpp"

using namespace deltaspec;
using namespace deltaspec::cli;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("deltaspec_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  [[nodiscard]] std::string file(const std::string& name) const { return (path_ / name).string(); }
  [[nodiscard]] std::string write(const std::string& name, const std::string& body) const {
    std::ofstream(file(name)) << body;
    return file(name);
  }

 private:
  fs::path path_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// second field of each data row
std::vector<double> lambdas(const std::string& csv) {
  std::vector<double> out;
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const auto a = line.find(',');
    const auto b = line.find(',', a + 1);
    out.push_back(std::stod(line.substr(a + 1, b - a - 1)));
  }
  return out;
}

const char* kSquareWell5 = R"({
  "domain": "line",
  "measure": {"density": [{"lo": -1, "hi": 1, "value": -1}]},
  "discretization": {"K": 1, "N": 5}
})";

const char* kCantor3 = R"({
  "domain": "line",
  "measure": {"cantor": {"weight": -1}},
  "discretization": {"K": 1, "N": 3}
})";

int run(const std::string& args) {
  const std::string cmd = std::string(DELTASPEC_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(ParseProblem, AcceptsAllPartsAndDefaults) {
  const auto pf = parse_problem(json::parse(R"({
    "domain": "halfline", "boundary_alpha": 0.5,
    "measure": {"atoms": [[1, -2], [2.5, 0.5]]},
    "solver": {"tol": 1e-10, "grid_points": 100}
  })"));
  EXPECT_EQ(pf.domain, Domain::HalfLine);
  EXPECT_EQ(pf.boundary_alpha, 0.5);
  EXPECT_EQ(pf.measure.point.size(), 2u);
  EXPECT_EQ(pf.tol, 1e-10);
  EXPECT_EQ(pf.grid_points, 100);
  EXPECT_FALSE(pf.certify.has_value());
}

TEST(ParseProblem, RejectsInvalidInput) {
  const char* bad[] = {
      R"({"domain": "line", "measure": {"atoms": [[0, -1]]}, "extra": 1})",
      R"({"domain": "plane", "measure": {"atoms": [[0, -1]]}})",
      R"({"domain": "line"})",
      R"({"domain": "line", "measure": {"atoms": [[0]]}})",
      R"({"domain": "line", "measure": {"atoms": [[0, "x"]]}})",
      R"({"domain": "line", "measure": {"density": [{"lo": -1, "hi": 1, "value": -1}]}})",
      R"({"domain": "line", "measure": {"cdf": {"builtin": "gauss", "weight": 1}},
          "discretization": {"K": 1, "N": 2}})",
      R"({"domain": "line", "measure": {"atoms": [[0, -1]]}, "solver": {"tol": -1}})",
      R"({"domain": "line", "measure": {"atoms": [[0, -1]]}, "solver": {"grid_points": 1.5}})",
      R"({"domain": "halfline", "boundary_alpha": 4, "measure": {"atoms": [[1, -1]]}})",
      R"({"domain": "line", "measure": {"density": [{"lo": -1, "hi": 1, "value": -1}]},
          "discretization": {"K": 0, "N": 2}})",
  };
  for (const char* b : bad) {
    EXPECT_THROW((void)parse_problem(json::parse(b)), ValidationError) << b;
  }
  EXPECT_THROW((void)parse_problem(json::parse("1e999")), std::exception);
}

TEST(FormatNumber, FifteenSignificantDigits) {
  EXPECT_EQ(format_number(-0.457002447176188), "-0.457002447176188");
  EXPECT_EQ(format_number(1.0), "1");
  EXPECT_EQ(format_number(2.5e-5), "2.5e-05");
}

TEST(CmdSolve, SquareWellAndCantorRows) {
  TempDir dir;
  std::ostringstream err;
  CommandOptions o;
  o.input = dir.write("sw.json", kSquareWell5);
  o.output = dir.file("sw.csv");
  ASSERT_EQ(cmd_solve(o, err), kOk) << err.str();
  const std::string csv = slurp(o.output);
  EXPECT_EQ(csv.rfind("n,lambda,bracket_lo,bracket_hi,residual,runtime_ms\n", 0), 0u);
  auto l = lambdas(csv);
  ASSERT_EQ(l.size(), 1u);
  EXPECT_NEAR(l[0], -0.457002447176188, 1e-9);

  o.input = dir.write("c.json", kCantor3);
  o.output = dir.file("c.csv");
  ASSERT_EQ(cmd_solve(o, err), kOk) << err.str();
  l = lambdas(slurp(o.output));
  ASSERT_EQ(l.size(), 1u);
  EXPECT_NEAR(l[0], -0.182601523317952, 1e-9);
}

TEST(CmdSolve, MalformedFileExitsTwoWithoutOutput) {
  TempDir dir;
  std::ostringstream err;
  CommandOptions o;
  o.input = dir.write("bad.json", "{ not json");
  o.output = dir.file("out.csv");
  EXPECT_EQ(cmd_solve(o, err), kInvalidInput);
  EXPECT_FALSE(fs::exists(o.output));
  EXPECT_NE(err.str().find("error:"), std::string::npos);
  o.input = dir.file("missing.json");
  EXPECT_EQ(cmd_solve(o, err), kInvalidInput);
}

TEST(CmdSolve, DeterministicWithoutTiming) {
  TempDir dir;
  std::ostringstream err;
  CommandOptions o;
  o.timing = false;
  o.input = dir.write("sw.json", kSquareWell5);
  o.output = dir.file("a.csv");
  ASSERT_EQ(cmd_solve(o, err), kOk);
  o.output = dir.file("b.csv");
  o.threads = 3;
  ASSERT_EQ(cmd_solve(o, err), kOk);
  EXPECT_EQ(slurp(dir.file("a.csv")), slurp(dir.file("b.csv")));
  EXPECT_EQ(slurp(dir.file("a.csv")).find('\r'), std::string::npos);
}

TEST(CmdSolve, HalfLineProblem) {
  TempDir dir;
  std::ostringstream err;
  CommandOptions o;
  o.input = dir.write("h.json", R"({"domain": "halfline", "boundary_alpha": 0.7853981633974483,
                                    "measure": {}})");
  o.output = dir.file("h.csv");
  ASSERT_EQ(cmd_solve(o, err), kOk) << err.str();
  const auto l = lambdas(slurp(o.output));
  ASSERT_EQ(l.size(), 1u);
  EXPECT_NEAR(l[0], -1.0, 1e-12);
}

TEST(CmdDiscretize, Examples) {
  TempDir dir;
  std::ostringstream err;
  CommandOptions o;
  o.input = dir.write("sw.json", R"({"domain": "line",
      "measure": {"density": [{"lo": -1, "hi": 1, "value": -1}]},
      "discretization": {"K": 1, "N": 1}})");
  o.output = dir.file("a.csv");
  ASSERT_EQ(cmd_discretize(o, err), kOk);
  EXPECT_EQ(slurp(o.output), "x,weight\n0,-1\n1,-1\n");

  o.input = dir.write("c.json", R"({"domain": "line", "measure": {"cantor": {"weight": 1, "level": 2}}})");
  ASSERT_EQ(cmd_discretize(o, err), kOk) << err.str();
  EXPECT_EQ(slurp(o.output),
            "x,weight\n0.0555555555555556,0.25\n0.277777777777778,0.25\n"
            "0.722222222222222,0.25\n0.944444444444444,0.25\n");

  o.input = dir.write("e.json", R"({"domain": "line", "measure": {}})");
  ASSERT_EQ(cmd_discretize(o, err), kOk);
  EXPECT_EQ(slurp(o.output), "x,weight\n");
}

TEST(CmdDiscretize, RoundTripThroughAtomsFile) {
  TempDir dir;
  std::ostringstream err;
  CommandOptions o;
  o.timing = false;
  o.input = dir.write("sw.json", R"({"domain": "line",
      "measure": {"density": [{"lo": -1, "hi": 1, "value": -1}], "atoms": [[0.25, -0.3]]},
      "discretization": {"K": 1, "N": 7}})");
  o.output = dir.file("atoms.csv");
  ASSERT_EQ(cmd_discretize(o, err), kOk);
  json atoms = json::array();
  std::istringstream in(slurp(o.output));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const auto c = line.find(',');
    atoms.push_back({std::stod(line.substr(0, c)), std::stod(line.substr(c + 1))});
  }
  const json pf = {{"domain", "line"}, {"measure", {{"atoms", atoms}}}};
  std::ofstream(dir.file("atoms.json")) << pf.dump();

  o.output = dir.file("a.csv");
  ASSERT_EQ(cmd_solve(o, err), kOk);
  o.input = dir.file("atoms.json");
  o.output = dir.file("b.csv");
  ASSERT_EQ(cmd_solve(o, err), kOk);
  const auto a = lambdas(slurp(dir.file("a.csv")));
  const auto b = lambdas(slurp(dir.file("b.csv")));
  ASSERT_EQ(a.size(), b.size());
  ASSERT_FALSE(a.empty());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(CmdCertify, SquareWellN100) {
  TempDir dir;
  std::ostringstream err;
  CommandOptions o;
  o.input = dir.write("t.json", R"({"domain": "line",
      "measure": {"density": [{"lo": -1, "hi": 1, "value": -1}]},
      "discretization": {"K": 1, "N": 1}})");
  o.input2 = dir.write("a.json", R"({"domain": "line",
      "measure": {"density": [{"lo": -1, "hi": 1, "value": -1}]},
      "discretization": {"K": 1, "N": 100}})");
  o.output = dir.file("cert.json");
  ASSERT_EQ(cmd_certify(o, err), kOk) << err.str();
  const json c = json::parse(slurp(o.output));
  for (const char* k : {"M", "c", "s", "delta", "windows", "caveats"}) EXPECT_TRUE(c.contains(k)) << k;
  ASSERT_EQ(c["windows"].size(), 1u);
  const auto& w = c["windows"][0];
  EXPECT_LE(w["lo"].get<double>(), ref::kSquareWellLimit);
  EXPECT_GE(w["hi"].get<double>(), ref::kSquareWellLimit);
}

TEST(CmdCertify, ExitCodes) {
  TempDir dir;
  std::ostringstream err;
  CommandOptions o;
  const std::string well = dir.write("t.json", R"({"domain": "line",
      "measure": {"density": [{"lo": -1, "hi": 1, "value": -1}]},
      "discretization": {"K": 1, "N": 1}})");
  o.input = well;
  o.input2 = dir.write("h.json", R"({"domain": "halfline", "boundary_alpha": 1, "measure": {}})");
  o.output = dir.file("x.json");
  EXPECT_EQ(cmd_certify(o, err), kInvalidInput);
  // coarse approximation: window theorem hypothesis fails
  o.input2 = dir.write("a.json", R"({"domain": "line",
      "measure": {"density": [{"lo": -1, "hi": 1, "value": -1}]},
      "discretization": {"K": 1, "N": 2}})");
  EXPECT_EQ(cmd_certify(o, err), kRejected);
  EXPECT_FALSE(fs::exists(o.output));
  // identical atom files: zero distance
  o.input = dir.write("p.json", R"({"domain": "line", "measure": {"atoms": [[0, -1], [0.5, -0.5]]}})");
  o.input2 = o.input;
  ASSERT_EQ(cmd_certify(o, err), kOk) << err.str();
  const json c = json::parse(slurp(o.output));
  EXPECT_EQ(c["s"].get<double>(), 0.0);
}

TEST(CmdReproduce, RowsAndLimits) {
  std::ostringstream err;
  TempDir dir;
  CommandOptions o;
  o.which = "square-well";
  o.n_list = {1, 2, 3};
  o.output = dir.file("r.csv");
  ASSERT_EQ(cmd_reproduce(o, err), kOk);
  const auto l = lambdas(slurp(o.output));
  ASSERT_EQ(l.size(), 3u);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(l[i], ref::kSquareWell[i].second, 1e-9);

  o.which = "cantor";
  o.n_list = {1, 2};
  ASSERT_EQ(cmd_reproduce(o, err), kOk);
  const auto c = lambdas(slurp(o.output));
  ASSERT_EQ(c.size(), 2u);
  EXPECT_NEAR(c[0], -0.25, 1e-12);
  EXPECT_NEAR(c[1], ref::kCantor[1].second, 1e-9);

  o.which = "square-well";
  o.n_list = {1000000};
  EXPECT_EQ(cmd_reproduce(o, err), kInvalidInput);
  o.which = "triangle";
  o.n_list = {};
  EXPECT_EQ(cmd_reproduce(o, err), kInvalidInput);
  o.which = "cantor";
  o.n_list = {40};
  EXPECT_EQ(cmd_reproduce(o, err), kInvalidInput);
}

TEST(Binary, ExitCodeContract) {
  TempDir dir;
  const std::string good = dir.write("sw.json", kSquareWell5);
  const std::string bad = dir.write("bad.json", R"({"domain": "line", "surprise": true})");
  EXPECT_EQ(run("--version"), 0);
  EXPECT_EQ(run("solve -i " + good + " -o " + dir.file("o.csv")), 0);
  EXPECT_EQ(run("solve -i " + bad + " -o " + dir.file("o2.csv")), 2);
  EXPECT_FALSE(fs::exists(dir.file("o2.csv")));
  EXPECT_EQ(run("solve --bogus-flag"), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("reproduce square-well -n 1000000 -o " + dir.file("r.csv")), 2);
  EXPECT_EQ(run("discretize -i " + good + " -o " + dir.file("d.csv")), 0);
  const std::string coarse = dir.write("c.json", R"({"domain": "line",
      "measure": {"density": [{"lo": -1, "hi": 1, "value": -1}]}, "discretization": {"K": 1, "N": 2}})");
  EXPECT_EQ(run("certify -i " + good + " -a " + coarse + " -o " + dir.file("c.json.out")), 3);
}

TEST(Binary, ByteIdenticalCsvAcrossThreadCounts) {
  TempDir dir;
  const std::string good = dir.write("sw.json", kSquareWell5);
  ASSERT_EQ(run("reproduce square-well -n 1,5,10 --no-timing -o " + dir.file("a.csv")), 0);
  ASSERT_EQ(run("reproduce square-well -n 1,5,10 --no-timing -o " + dir.file("b.csv")), 0);
  ::setenv("DELTASPEC_THREADS", "3", 1);
  ASSERT_EQ(run("reproduce square-well -n 1,5,10 --no-timing -o " + dir.file("c.csv")), 0);
  ::unsetenv("DELTASPEC_THREADS");
  EXPECT_EQ(slurp(dir.file("a.csv")), slurp(dir.file("b.csv")));
  EXPECT_EQ(slurp(dir.file("a.csv")), slurp(dir.file("c.csv")));
}
