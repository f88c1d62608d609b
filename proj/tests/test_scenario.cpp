#include "ferro/cli.hpp"
#include "ferro/errors.hpp"
#include "ferro/output.hpp"
#include "ferro/scenario.hpp"

#include <gtest/gtest.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using namespace ferro;

namespace {

const char* kMinimal = R"(
[grid]
dim = 1
cells = 4

[potential.f]
family = quadratic
H = 1

[potential.g]
family = power_law
c = 0.5
p = 2
)";

const char* kDriven = R"(
[grid]
dim = 1
cells = 6

[material]
elastic = isotropic 1 1
coupling = 0.4
hardening = 0.5

[potential.f]
family = sum

[potential.f.term]
family = quadratic
acts_on = remanent_strain
H = 0.5

[potential.f.term]
family = log_radial
Ps = 2

[potential.g]
family = power_law
c = 0.5
p = 2

[time]
T = 1
level = 4
levels = 2..4

[loads]
shape = sine
sample = 0 0 0
sample = 0.5 3 1
sample = 1 0 0

[output]
checkpoints = 0.5
)";

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("ferro_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name, const std::string& text) const {
    const auto p = (path_ / name).string();
    std::ofstream(p) << text;
    return p;
  }
  std::string path(const std::string& name = "") const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto at = text.find(from);
  EXPECT_NE(at, std::string::npos) << from;
  return text.replace(at, from.size(), to);
}

std::vector<std::string> violations_of(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const ValidationError& e) {
    return e.violations();
  }
  return {};
}

bool mentions(const std::vector<std::string>& v, const std::string& needle) {
  for (const auto& s : v) {
    if (s.find(needle) != std::string::npos) return true;
  }
  return false;
}

int run_cli_in(const TempDir& dir, const std::string& command, const std::string& text,
               std::string* err_text = nullptr, bool override_gate = false,
               const std::string& out = "out") {
  CliOptions opt;
  opt.command = command;
  opt.scenario_path = dir.file("scenario.scn", text);
  opt.out_dir = dir.path(out);
  opt.override_coercivity = override_gate;
  std::ostringstream o, e;
  const int rc = run_cli(opt, o, e);
  if (err_text) *err_text = e.str();
  return rc;
}

}  // namespace

TEST(Parse, MinimalFileFillsDefaults) {
  const Scenario s = parse_scenario(kMinimal);
  EXPECT_EQ(s.dim, 1);
  ASSERT_EQ(s.cells.size(), 1u);
  EXPECT_EQ(s.cells[0], 4);
  ASSERT_EQ(s.lengths.size(), 1u);
  EXPECT_EQ(s.lengths[0], 1.0);
  EXPECT_EQ(s.elastic_kind, "isotropic");
  EXPECT_TRUE(s.coupling.empty());
  EXPECT_TRUE(s.hardening.empty());
  EXPECT_EQ(s.T, 1.0);
  EXPECT_FALSE(s.regularization.has_value());
  EXPECT_TRUE(s.loads.empty());
  EXPECT_TRUE(s.z0.empty());
  EXPECT_EQ(s.seed, 20240531u);
  EXPECT_EQ(s.tol.step, 1e-6);
  EXPECT_EQ(s.tol.energy, 1e-8);
  EXPECT_EQ(s.tol.mvs, 1e-5);

  const Model model(s);
  EXPECT_EQ(model.system().num_cells(), 4);
  EXPECT_DOUBLE_EQ(model.regularization(4), 0.25);
  EXPECT_DOUBLE_EQ(model.regularization(0), 1.0);
  EXPECT_TRUE(model.initial_state().isZero(0.0));
}

TEST(Parse, SyntaxErrorsCarryLineAndColumn) {
  const std::string text = "[grid]\ndim = 1\n  cells 4\n";
  try {
    parse_scenario(text);
    FAIL() << "no ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_EQ(e.column(), 3);
  }
  EXPECT_THROW(parse_scenario("[grid\ndim = 1\n"), ParseError);
}

TEST(Parse, ReportsEveryViolation) {
  std::string text = replace(kMinimal, "[potential.g]\nfamily = power_law\nc = 0.5\np = 2\n", "");
  text += "\n[time]\nT = -1\n";
  const auto v = violations_of(text);
  EXPECT_TRUE(mentions(v, "potential.g required"));
  EXPECT_TRUE(mentions(v, "time.T"));
  EXPECT_GE(v.size(), 2u);
}

TEST(Parse, DuplicateAndUnknownKeys) {
  EXPECT_TRUE(mentions(violations_of(replace(kMinimal, "cells = 4", "cells = 4\ncells = 5")),
                       "cells"));
  EXPECT_TRUE(mentions(violations_of(replace(kMinimal, "cells = 4", "cells = 4\ncolour = 2")),
                       "colour"));
}

TEST(Parse, InitialStateOutsideDomainNamesTheCell) {
  std::string text = replace(kMinimal, "family = quadratic\nH = 1", "family = log_radial\nPs = 1");
  const auto base = violations_of(text + "\n[initial]\nz0 = 0 1.5\n");
  EXPECT_TRUE(mentions(base, "initial.z0 lies outside dom(f) in cell 0"));
  const auto cell = violations_of(text + "\n[initial]\nz0 = 0 0.5\ncell = 2 0 -1\n");
  EXPECT_TRUE(mentions(cell, "initial.cell 2 lies outside dom(f)"));
  EXPECT_TRUE(violations_of(text + "\n[initial]\nz0 = 0 0.5\n").empty());
}

TEST(Parse, NonNestingLevelsAreRejected) {
  const auto v = violations_of(std::string(kMinimal) + "\n[time]\nlevels = 5..3\n");
  EXPECT_TRUE(mentions(v, "m0 <= m1"));
  EXPECT_THROW(parse_level_range("5..3"), ValidationError);
  EXPECT_EQ(parse_level_range("2..6"), (std::pair{2, 6}));
  EXPECT_EQ(parse_level_range("3"), (std::pair{3, 3}));
  EXPECT_THROW(parse_level_range("a..b"), ValidationError);
}

TEST(Parse, LoadsMustCoverTheHorizon) {
  const auto v = violations_of(std::string(kMinimal) +
                               "\n[loads]\nsample = 0 1 0\nsample = 0.5 1 0\n");
  EXPECT_TRUE(mentions(v, "cover [0, T]"));
}

TEST(Serialize, RoundTripIsExact) {
  const Scenario s = parse_scenario(kDriven);
  const std::string once = serialize_scenario(s);
  const Scenario back = parse_scenario(once);
  EXPECT_EQ(serialize_scenario(back), once);
  EXPECT_EQ(back.f.terms.size(), 2u);
  EXPECT_EQ(back.loads.size(), 3u);
  EXPECT_EQ(back.checkpoints, s.checkpoints);
  EXPECT_EQ(back.level_min, 2);
  EXPECT_EQ(back.level_max, 4);

  Scenario odd = parse_scenario(kMinimal);
  odd.T = 0.1 + 0.2;  // not representable in short decimal form
  odd.regularization = 1.0 / 3.0;
  const Scenario odd_back = parse_scenario(serialize_scenario(odd));
  EXPECT_EQ(odd_back.T, odd.T);
  EXPECT_EQ(*odd_back.regularization, *odd.regularization);
}

TEST(Cli, ZeroScenarioProducesZeroOutputs) {
  TempDir dir;
  ASSERT_EQ(run_cli_in(dir, "run", kMinimal), kExitOk);
  const std::string traj = slurp(dir.path("out/trajectory.csv"));
  std::istringstream in(traj);
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  int rows = 0;
  while (std::getline(in, line)) {
    std::istringstream cols(line);
    std::string tok;
    for (int c = 0; std::getline(cols, tok, ','); ++c) {
      if (c >= 4) EXPECT_EQ(std::stod(tok), 0.0) << line;
    }
    ++rows;
  }
  EXPECT_EQ(rows, 17 * 4);
  EXPECT_TRUE(fs::exists(dir.path("out/energy.csv")));
  EXPECT_TRUE(fs::exists(dir.path("out/fields_m4_n000000.vtk")));
  EXPECT_TRUE(fs::exists(dir.path("out/fields_m4_n000016.vtk")));

  ASSERT_EQ(run_cli_in(dir, "converge", std::string(kMinimal) + "\n[time]\nlevels = 1..3\n",
                       nullptr, false, "conv"),
            kExitOk);
  const std::string summary = slurp(dir.path("conv/summary.csv"));
  EXPECT_NE(summary.find("final_level_difference,0\n"), std::string::npos) << summary;
  EXPECT_NE(summary.find("mvs_min_slack,0\n"), std::string::npos) << summary;
}

TEST(Cli, UnreachableStepToleranceIsASolverFailure) {
  TempDir dir;
  std::string err;
  const int rc = run_cli_in(dir, "run", std::string(kDriven) + "\n[tolerances]\nstep = 1e-16\n",
                            &err);
  EXPECT_EQ(rc, kExitSolverFailure);
  EXPECT_NE(err.find("StepSolveFailure"), std::string::npos) << err;
}

TEST(Cli, IndefiniteDielectricIsAValidationFailure) {
  TempDir dir;
  std::string err;
  const int rc = run_cli_in(
      dir, "check", replace(kDriven, "coupling = 0.4", "coupling = 0.4\ndielectric = -1"), &err);
  EXPECT_EQ(rc, kExitValidationFailure);
  EXPECT_FALSE(err.empty());
}

TEST(Cli, MalformedFileIsAValidationFailure) {
  TempDir dir;
  std::string err;
  EXPECT_EQ(run_cli_in(dir, "run", "[grid\n", &err), kExitValidationFailure);
  EXPECT_NE(err.find("line 1"), std::string::npos) << err;
  CliOptions opt;
  opt.command = "run";
  opt.scenario_path = dir.path("missing.scn");
  std::ostringstream o, e;
  EXPECT_EQ(run_cli(opt, o, e), kExitValidationFailure);
}

TEST(Cli, NonCoerciveDirectionalEnergyNeedsOverride) {
  const std::string text = R"(
[grid]
dim = 2
cells = 2 2

[material]
hardening = none

[potential.f]
family = log_directional
Ps = 1
a = 1 0

[potential.g]
family = power_law
c = 0.5
p = 2

[time]
level = 2
)";
  TempDir dir;
  std::string err;
  EXPECT_EQ(run_cli_in(dir, "run", text, &err), kExitValidationFailure);
  EXPECT_NE(err.find("coercivity"), std::string::npos) << err;
  EXPECT_NE(err.find("witness"), std::string::npos) << err;
  EXPECT_FALSE(fs::exists(dir.path("out/trajectory.csv")));
  EXPECT_EQ(run_cli_in(dir, "run", text, &err, true), kExitOk);
  EXPECT_NE(err.find("warning"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir.path("out/trajectory.csv")));
}

TEST(Cli, BallWithoutHardeningIsGated) {
  const std::string text =
      replace(replace(kMinimal, "family = power_law\nc = 0.5\np = 2", "family = ball\nkappa = 1"),
              "cells = 4", "cells = 4\n\n[material]\nhardening = none");
  TempDir dir;
  std::string err;
  EXPECT_EQ(run_cli_in(dir, "run", text, &err), kExitValidationFailure);
  EXPECT_NE(err.find("ball"), std::string::npos) << err;
}

TEST(Cli, OutputsAreByteIdentical) {
  TempDir dir;
  ASSERT_EQ(run_cli_in(dir, "converge", kDriven, nullptr, false, "a"), kExitOk);
  ASSERT_EQ(run_cli_in(dir, "converge", kDriven, nullptr, false, "b"), kExitOk);
  int compared = 0;
  for (const auto& entry : fs::directory_iterator(dir.path("a"))) {
    const auto name = entry.path().filename().string();
    EXPECT_EQ(slurp(entry.path().string()), slurp(dir.path("b/" + name))) << name;
    ++compared;
  }
  EXPECT_GE(compared, 9);
}

TEST(Cli, SnapshotStressMatchesTrajectory) {
  TempDir dir;
  ASSERT_EQ(run_cli_in(dir, "run", kDriven), kExitOk);
  // Checkpoint 0.5 at level 4 is step 8.
  ASSERT_TRUE(fs::exists(dir.path("out/fields_m4_n000008.vtk")));
  for (int n : {0, 8, 16}) {
    char name[64];
    std::snprintf(name, sizeof name, "out/fields_m4_n%06d.vtk", n);
    std::ifstream vtk(dir.path(name));
    std::string line;
    while (std::getline(vtk, line) && line.rfind("sigma ", 0) != 0) {
    }
    ASSERT_FALSE(vtk.eof()) << name;
    std::vector<double> from_vtk;
    for (int c = 0; c < 6; ++c) {
      double v;
      vtk >> v;
      from_vtk.push_back(v);
    }
    std::ifstream csv(dir.path("out/trajectory.csv"));
    std::getline(csv, line);
    std::getline(csv, line);
    int matched = 0;
    while (std::getline(csv, line)) {
      std::vector<std::string> cols;
      std::istringstream ls(line);
      for (std::string tok; std::getline(ls, tok, ',');) cols.push_back(tok);
      if (std::stoi(cols[1]) != n) continue;
      const int cell = std::stoi(cols[3]);
      EXPECT_NEAR(std::stod(cols[6]), from_vtk[static_cast<std::size_t>(cell)], 1e-9)
          << "step " << n << " cell " << cell;
      ++matched;
    }
    EXPECT_EQ(matched, 6);
  }
}

TEST(Cli, CheckReportsCertificates) {
  TempDir dir;
  CliOptions opt;
  opt.command = "check";
  opt.scenario_path = dir.file("s.scn", kDriven);
  std::ostringstream o, e;
  ASSERT_EQ(run_cli(opt, o, e), kExitOk);
  const std::string out = o.str();
  for (const char* key : {"c0: ", "lambda_min_D: ", "hardening: positive-definite",
                          "f: sum", "g: power_law", "regime: hardening-positive"}) {
    EXPECT_NE(out.find(key), std::string::npos) << key;
  }
}
