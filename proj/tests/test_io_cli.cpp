#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "homtype/cli.hpp"
#include "homtype/io.hpp"

using namespace homtype;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "homtype_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST(Io, PointsCsv) {
  std::istringstream in("id,x,y,weight\na,0,0,1\nb,1,0,2.5\nc,0,1,0.5\n");
  const PointSet pts = io::parse_points_csv(in);
  ASSERT_EQ(pts.ids.size(), 3u);
  EXPECT_EQ(pts.ids[1], "b");
  EXPECT_EQ(pts.coords[2], std::vector<double>({0.0, 1.0}));
  EXPECT_EQ(pts.weights, std::vector<double>({1.0, 2.5, 0.5}));

  std::istringstream bad("id,x,weight\na,0,1\nb,1,-2\n");
  try {
    io::parse_points_csv(bad, "pts.csv");
    FAIL() << "negative weight accepted";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("pts.csv:3"), std::string::npos) << e.what();
  }
  std::istringstream ragged("id,x\na,0\nb\n");
  EXPECT_THROW(io::parse_points_csv(ragged), ValidationError);
}

TEST(Io, DistanceMatrixTolerance) {
  std::istringstream ok("2\n0 1\n1.000000001 0\n");
  const Matrix d = io::parse_distance_matrix(ok);
  EXPECT_EQ(d(0, 1), d(1, 0));
  std::istringstream bad("2\n0 1\n1.0000001 0\n");
  EXPECT_THROW(io::parse_distance_matrix(bad), ValidationError);
  std::istringstream short_row("2\n0 1\n1\n");
  EXPECT_THROW(io::parse_distance_matrix(short_row), ValidationError);
}

TEST(Io, CoefficientRoundTrip) {
  const TreePtr tree = build_dyadic(builtin_cloud(20, 2), 0.125);
  const FamilyPtr fam = make_family(tree, Homogeneity::inhomogeneous);
  CoefficientSequence seq(fam);
  for (Eigen::Index i = 0; i < seq.values.size(); ++i) seq.values[i] = std::sin(1.0 + 0.37 * static_cast<double>(i)) / 3.0;
  std::stringstream buf;
  io::write_coefficients_csv(buf, seq);
  const CoefficientSequence back = io::parse_coefficients_csv(buf, fam);
  EXPECT_EQ(back.values, seq.values);

  std::istringstream unknown("level,alpha,value\n3,nope,1\n");
  EXPECT_THROW(io::parse_coefficients_csv(unknown, fam), ValidationError);
  EXPECT_EQ(io::format_double(kInf), "inf");
  EXPECT_EQ(std::stod(io::format_double(0.1)), 0.1);
}

TEST(Cli, ValidationExitsWithTwo) {
  const fs::path dir = scratch("validation");
  io::write_text(dir / "one.csv", "id,x\np,0\n");
  EXPECT_EQ(run({"build", "--points", (dir / "one.csv").string(), "--out", dir.string()}).code, 2);
  EXPECT_EQ(run({"norm", "--s", "0.6", "--out", dir.string()}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);

  io::write_text(dir / "bad.ini", "[dyadic]\ndelta = 0.125\nbogus = 1\n");
  EXPECT_EQ(run({"build", "--config", (dir / "bad.ini").string(), "--out", dir.string()}).code, 2);
}

TEST(Cli, BuildWritesTree) {
  const fs::path dir = scratch("build");
  io::write_text(dir / "cfg.ini", "[space]\nbuiltin = line:16\n");
  const Result r = run({"build", "--config", (dir / "cfg.ini").string(), "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "build" / "tree.json"));
}

TEST(Cli, NormMatchesDetailEnergy) {
  const fs::path dir = scratch("norm");
  const SpacePtr sp = builtin_line(32, 1.0 / 32);
  Vector f(32);
  for (int i = 0; i < 32; ++i) f[i] = std::cos(0.3 * i) + (i % 5 == 0 ? 1.0 : 0.0);
  std::ostringstream csv;
  io::write_vector_csv(csv, *sp, f);
  io::write_text(dir / "f.csv", csv.str());

  const Result r = run({"norm", "--builtin", "line:32", "--kind", "tl", "--s", "0", "--p", "2",
                        "--q", "2", "--function", (dir / "f.csv").string(), "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const double printed = std::stod(r.out);

  const TreePtr tree = build_dyadic(sp, 0.125);
  const AtiKernels K = build_kernels(build_haar(tree));
  const double detail = sp->lp_norm(f - apply_kernel(K.Pk(tree->k_min()), *sp, f), 2.0);
  EXPECT_NEAR(printed, detail, 1e-9 * detail);
  EXPECT_TRUE(fs::exists(dir / "norm" / "coefficients.csv"));
}

TEST(Cli, SelftestIsReproducible) {
  const fs::path a = scratch("selftest_a");
  const fs::path b = scratch("selftest_b");
  const Result ra = run({"selftest", "--seed", "7", "--out", a.string()});
  const Result rb = run({"selftest", "--seed", "7", "--out", b.string()});
  EXPECT_EQ(ra.code, rb.code);
  EXPECT_EQ(ra.out, rb.out);
  const std::string report = slurp(a / "selftest" / "report.json");
  EXPECT_FALSE(report.empty());
  EXPECT_EQ(report, slurp(b / "selftest" / "report.json"));
}
