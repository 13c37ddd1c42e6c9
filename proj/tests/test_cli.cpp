#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "snpp/cli.hpp"
#include "snpp/io.hpp"

using namespace snpp;
using namespace snpp::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("snpp_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

int run(std::vector<std::string> args, std::string* out_text = nullptr) {
  args.insert(args.begin(), "snpp");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int rc = run_main(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str() + err.str();
  return rc;
}

template <class F>
Error catch_error(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "no error thrown";
  return Error(ErrorCode::InvalidArgument, "", "");
}

}  // namespace

TEST(Config, MinimalCellConfigGetsDefaults) {
  const auto c = parse_config(R"({"geometry": {"inclusion": {"radius": 0.25}}})", Command::Cell);
  EXPECT_EQ(c.command, Command::Cell);
  ASSERT_TRUE(c.cell.has_inclusion());
  EXPECT_EQ(c.cell.inclusion->radius, 0.25);
  EXPECT_EQ(c.cell.inclusion->center.x, 0.5);
  EXPECT_EQ(c.cell.target_h, 0.025);
  EXPECT_EQ(c.macro_n, 64);
  EXPECT_EQ(c.T, 0.1);
  EXPECT_EQ(c.dt, 0.0);
  EXPECT_EQ(c.output.directory, "snpp_out");
  EXPECT_TRUE(c.output.csv && c.output.vtk);
}

TEST(Config, StringExponentNamesField) {
  const auto e = catch_error([] {
    parse_config(R"({"geometry": {}, "regime": {"alpha": "two"}})", Command::Micro);
  });
  EXPECT_EQ(e.code(), ErrorCode::ValidationError);
  EXPECT_NE(std::string(e.what()).find("regime.alpha"), std::string::npos) << e.what();
}

TEST(Config, ParseErrorReportsPosition) {
  const auto e = catch_error([] { parse_config("{\n  \"geometry\": {,\n}", Command::Cell); });
  EXPECT_EQ(e.code(), ErrorCode::ParseError);
  EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  EXPECT_NE(std::string(e.what()).find("column"), std::string::npos) << e.what();
}

TEST(Config, EpsListOrderedDescending) {
  const auto c = parse_config(R"({"geometry": {}, "regime": {}, "study": {"eps": ["1/8", 0.5, "1/4"]}})",
                              Command::Converge);
  ASSERT_EQ(c.eps_list.size(), 3u);
  EXPECT_EQ(c.eps_list[0], 0.5);
  EXPECT_EQ(c.eps_list[1], 0.25);
  EXPECT_EQ(c.eps_list[2], 0.125);
  EXPECT_EQ(study_config(c).eps_list, c.eps_list);
}

TEST(Config, Rejections) {
  auto code = [](const std::string& text, std::optional<Command> cmd) {
    return catch_error([&] { parse_config(text, cmd); }).code();
  };
  // missing required block
  EXPECT_EQ(code(R"({"geometry": {}})", Command::Macro), ErrorCode::ValidationError);
  // unknown key
  EXPECT_EQ(code(R"({"geometry": {"radius": 1}})", Command::Cell), ErrorCode::ValidationError);
  // inadmissible exponents
  EXPECT_EQ(code(R"({"geometry": {}, "regime": {"beta": -1}})", Command::Micro), ErrorCode::ValidationError);
  // duplicate eps
  EXPECT_EQ(code(R"({"geometry": {}, "regime": {}, "study": {"eps": [0.5, "1/2"]}})", Command::Converge),
            ErrorCode::ValidationError);
  // command disagreement
  EXPECT_EQ(code(R"({"command": "cell", "geometry": {}})", Command::Micro), ErrorCode::ValidationError);
  // no command anywhere
  EXPECT_EQ(code(R"({"geometry": {}})", std::nullopt), ErrorCode::ValidationError);
  EXPECT_EQ(code(R"({"geometry": {}, "discretization": {"T": -1}})", Command::Cell), ErrorCode::ValidationError);
}

TEST(Config, EchoRoundTrips) {
  const auto a = parse_config(
      R"({"command": "micro", "geometry": {"eps": 0.5}, "regime": {"bc": "dirichlet", "alpha": 2, "beta": 1,
          "gamma": 1, "phi_d": 0.3}, "discretization": {"dt": 0.001}})");
  const auto b = parse_config(echo_config(a));
  EXPECT_EQ(echo_config(a), echo_config(b));
  EXPECT_EQ(b.regime.bc, macro::BcType::Dirichlet);
  EXPECT_EQ(b.regime.phi_d, 0.3);
  EXPECT_EQ(b.eps, 0.5);
}

TEST(Commands, ParseAndPrint) {
  for (auto c : {Command::Cell, Command::Macro, Command::Micro, Command::Converge, Command::Check}) {
    EXPECT_EQ(parse_command(to_string(c)), c);
  }
  EXPECT_FALSE(parse_command("bake").has_value());
}

TEST(Main, UnknownSubcommandIsUsageError) {
  std::string text;
  EXPECT_EQ(run({"bake"}, &text), kUsage);
  EXPECT_NE(text.find("Usage"), std::string::npos) << text;
  EXPECT_EQ(run({}, &text), kUsage);
  EXPECT_EQ(run({"cell"}, &text), kUsage);  // --config missing
}

TEST(Main, CellWritesCoefficientFile) {
  const auto dir = scratch("cell");
  write_file(dir / "cell.json", R"({"geometry": {"inclusion": {"radius": 0.25}, "cell_h": 0.1}})");
  EXPECT_EQ(run({"cell", "--config", (dir / "cell.json").string(), "--output", (dir / "out").string()}), kOk);
  std::ifstream f(dir / "out" / "coefficients.txt");
  ASSERT_TRUE(f);
  int keys = 0;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty() && line[0] != '#' && line.find('=') != std::string::npos) ++keys;
  }
  EXPECT_EQ(keys, 9);
  EXPECT_TRUE(fs::exists(dir / "out" / "manifest.json"));
  EXPECT_TRUE(fs::exists(dir / "out" / "config.json"));
  EXPECT_NE(slurp(dir / "out" / "manifest.json").find("\"version\""), std::string::npos);
}

TEST(Main, MissingConfigFileIsUsageError) {
  EXPECT_EQ(run({"cell", "--config", "/nonexistent/cell.json"}), kUsage);
}

TEST(Main, ValidationErrorIsUsageError) {
  const auto dir = scratch("bad");
  write_file(dir / "m.json", R"({"geometry": {}, "regime": {"alpha": "two"}})");
  std::string text;
  EXPECT_EQ(run({"micro", "--config", (dir / "m.json").string()}, &text), kUsage);
  EXPECT_NE(text.find("regime.alpha"), std::string::npos) << text;
}

TEST(Main, MacroRunThenCheck) {
  const auto dir = scratch("macro");
  write_file(dir / "m.json", R"({"geometry": {"inclusion": {"radius": 0.25}, "cell_h": 0.1},
    "regime": {}, "discretization": {"macro_n": 8, "T": 0.02, "dt": 0.005},
    "output": {"snapshot_stride": 2}})");
  EXPECT_EQ(run({"macro", "--config", (dir / "m.json").string(), "--output", (dir / "out").string()}), kOk);
  EXPECT_TRUE(fs::exists(dir / "out" / "diagnostics.csv"));
  EXPECT_TRUE(fs::exists(dir / "out" / "invariants.txt"));
  EXPECT_TRUE(fs::exists(dir / "out" / "macro_000000.vtk"));
  EXPECT_TRUE(fs::exists(dir / "out" / "macro_000002.vtk"));
  EXPECT_TRUE(fs::exists(dir / "out" / "macro_000004.vtk"));
  EXPECT_FALSE(fs::exists(dir / "out" / "macro_000001.vtk"));

  std::string text;
  EXPECT_EQ(run({"check", (dir / "out" / "diagnostics.csv").string(), "--output", (dir / "chk").string()}, &text),
            kOk);
  EXPECT_NE(text.find("PASS mass_drift"), std::string::npos) << text;

  // a spoiled file fails the check with the acceptance code
  std::string csv = slurp(dir / "out" / "diagnostics.csv");
  std::istringstream in(csv);
  auto d = read_diagnostics_csv(in);
  d.rows.back().mass *= 1.001;
  {
    std::ofstream f(dir / "bad.csv");
    write_diagnostics_csv(f, d);
  }
  EXPECT_EQ(run({"check", (dir / "bad.csv").string(), "--output", (dir / "chk2").string()}), kAcceptance);
}

TEST(Main, MicroRunWritesOutputs) {
  const auto dir = scratch("micro");
  write_file(dir / "m.json", R"({"geometry": {"inclusion": {"radius": 0.25}, "cell_h": 0.1, "eps": 0.5},
    "regime": {}, "discretization": {"T": 0.004, "dt": 0.002}, "output": {"snapshot_stride": 0}})");
  EXPECT_EQ(run({"micro", "--config", (dir / "m.json").string(), "--output", (dir / "out").string()}), kOk);
  EXPECT_TRUE(fs::exists(dir / "out" / "micro_000002.vtk"));
  EXPECT_FALSE(fs::exists(dir / "out" / "micro_000001.vtk"));
  EXPECT_TRUE(fs::exists(dir / "out" / "diagnostics.csv"));
}

TEST(Main, NumericalFailureExitCode) {
  const auto dir = scratch("num");
  write_file(dir / "m.json", R"({"geometry": {"inclusion": {"radius": 0.25}, "cell_h": 0.1},
    "regime": {}, "discretization": {"macro_n": 8, "T": 0.02, "dt": 0.005, "fp_max": 1}})");
  EXPECT_EQ(run({"macro", "--config", (dir / "m.json").string(), "--output", (dir / "out").string()}), kNumerical);
}

TEST(Vtk, LegacyAsciiLayout) {
  const auto m = mesh::generate_rectangle_mesh({}, 2, 1);
  const fem::Vector u = fem::Vector::LinSpaced(m.num_nodes(), 0.0, 1.0);
  io::VtkFields f;
  f.point_scalars = {{"c plus", &u}};
  f.cell_vectors = {{"velocity", std::vector<Vec2>(m.num_triangles(), Vec2{1.0, 0.5})}};
  std::ostringstream os;
  io::write_vtk(os, m, f, "t");
  const std::string s = os.str();
  EXPECT_EQ(s.rfind("# vtk DataFile Version 3.0\nt\nASCII\nDATASET UNSTRUCTURED_GRID\n", 0), 0u);
  EXPECT_NE(s.find("POINTS 6 double"), std::string::npos);
  EXPECT_NE(s.find("CELLS 4 16"), std::string::npos);
  EXPECT_NE(s.find("CELL_TYPES 4\n5\n5\n5\n5\n"), std::string::npos);
  EXPECT_NE(s.find("SCALARS c_plus double 1"), std::string::npos);
  EXPECT_NE(s.find("CELL_DATA 4\nVECTORS velocity double\n1 0.5 0\n"), std::string::npos);
}

TEST(Vtk, SizeMismatchRejected) {
  const auto m = mesh::generate_rectangle_mesh({}, 2, 2);
  const fem::Vector u = fem::Vector::Zero(3);
  io::VtkFields f;
  f.point_scalars = {{"u", &u}};
  std::ostringstream os;
  EXPECT_EQ(catch_error([&] { io::write_vtk(os, m, f, "t"); }).code(), ErrorCode::FieldMeshMismatch);
}

TEST(Vtk, VertexValuesOfP2AndP0) {
  const auto m = mesh::generate_rectangle_mesh({}, 2, 2);
  const auto v0 = fem::VectorField::constant_p0(m, {2.0, -1.0});
  for (const auto& x : io::vertex_values(m, v0)) {
    EXPECT_NEAR(x.x, 2.0, 1e-14);
    EXPECT_NEAR(x.y, -1.0, 1e-14);
  }
  for (const auto& x : io::cell_values(m, v0)) EXPECT_EQ(x.x, 2.0);
}

TEST(Config, ShippedExamplesParse) {
  int n = 0;
  for (const auto& e : fs::directory_iterator(SNPP_EXAMPLE_CONFIG_DIR)) {
    if (e.path().extension() != ".json") continue;
    ++n;
    EXPECT_NO_THROW(parse_config(slurp(e.path()))) << e.path();
  }
  EXPECT_EQ(n, 5);
}
