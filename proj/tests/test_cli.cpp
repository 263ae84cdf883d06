#include <gtest/gtest.h>

#include <sstream>

#include <json.hpp>

#include "oracles.hpp"
#include "regpca/cli.hpp"
#include "regpca/io.hpp"
#include "regpca/shrinkage.hpp"
#include "temp_dir.hpp"

namespace regpca {
namespace {

using testing::TempDir;

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

CliRun run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliRun r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

// Rank-2 signal plus column offsets, written as CSV.
Eigen::MatrixXd write_low_rank(const std::filesystem::path& path, std::uint64_t seed,
                               double noise = 0.0) {
  Eigen::VectorXd sv(2);
  sv << 6.0, 2.5;
  Eigen::MatrixXd m = testing::matrix_with_spectrum(20, 6, sv, seed);
  m += noise * testing::random_matrix(20, 6, seed + 7);
  for (Eigen::Index j = 0; j < m.cols(); ++j) m.col(j).array() += static_cast<double>(j);
  io::write_matrix_csv(path, m);
  return m;
}

TEST(CliDenoise, RpcaEqualsPcaWhenNoiseEstimateIsZero) {
  TempDir dir;
  write_low_rank(dir / "x.csv", 1);
  const auto in = (dir / "x.csv").string();
  ASSERT_EQ(run({"denoise", "-i", in, "-m", "pca", "-S", "2", "-o", (dir / "pca.csv").string()}).code, 0);
  const CliRun r = run({"denoise", "-i", in, "-m", "rpca", "-S", "2", "-o", (dir / "rpca.csv").string(),
                     "--report", (dir / "r.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(io::read_text(dir / "pca.csv"), io::read_text(dir / "rpca.csv"));
  const auto report = nlohmann::json::parse(io::read_text(dir / "r.json"));
  EXPECT_LT(report["sigma2_hat"].get<double>(), 1e-20);
  EXPECT_TRUE(std::filesystem::exists(dir / "rpca.csv.manifest.json"));
}

TEST(CliDenoise, RankZeroGivesColumnMeans) {
  TempDir dir;
  const Eigen::MatrixXd m = write_low_rank(dir / "x.csv", 2, 0.1);
  ASSERT_EQ(run({"denoise", "-i", (dir / "x.csv").string(), "-m", "rpca", "-S", "0", "-o",
                 (dir / "out.csv").string()}).code, 0);
  const auto out = io::read_matrix_csv(dir / "out.csv");
  const io::LabeledMatrix echoed = io::read_matrix_csv(dir / "x.csv");
  const Eigen::RowVectorXd means = echoed.values.colwise().mean();
  for (Eigen::Index i = 0; i < out.values.rows(); ++i)
    EXPECT_LT((out.values.row(i) - means).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(CliDenoise, SureThresholdMatchesLibrary) {
  TempDir dir;
  write_low_rank(dir / "x.csv", 3, 0.3);
  const CliRun r = run({"denoise", "-i", (dir / "x.csv").string(), "-m", "sure", "--sigma2", "0.09",
                     "-o", (dir / "out.csv").string(), "--report", (dir / "r.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = nlohmann::json::parse(io::read_text(dir / "r.json"));
  const DataMatrix x = center_columns(DataMatrix(io::read_matrix_csv(dir / "x.csv").values));
  EXPECT_EQ(report["threshold"].get<double>(), select_sure_threshold(x, 0.09));
}

TEST(CliDenoise, FullRankRestoresInput) {
  TempDir dir;
  write_low_rank(dir / "x.csv", 4, 0.5);
  ASSERT_EQ(run({"denoise", "-i", (dir / "x.csv").string(), "-m", "pca", "-S", "6",
                 "--standardize", "-o", (dir / "out.csv").string()}).code, 0);
  const auto in = io::read_matrix_csv(dir / "x.csv").values;
  const auto out = io::read_matrix_csv(dir / "out.csv").values;
  EXPECT_LT((in - out).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(CliDenoise, ErrorsMapToExitCodes) {
  TempDir dir;
  write_low_rank(dir / "x.csv", 5, 0.1);
  io::write_text(dir / "bad.csv", "1,2\n3\n");
  const auto x = (dir / "x.csv").string();
  const auto o = (dir / "o.csv").string();
  EXPECT_EQ(run({"denoise", "-i", x, "-m", "pca", "-o", o}).code, 2);           // no rank
  EXPECT_EQ(run({"denoise", "-i", x, "-m", "sure", "-o", o}).code, 2);          // no sigma2
  EXPECT_EQ(run({"denoise", "-i", x, "-m", "bogus", "-S", "1", "-o", o}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  const CliRun bad = run({"denoise", "-i", (dir / "bad.csv").string(), "-S", "1", "-o", o});
  EXPECT_EQ(bad.code, 3);
  EXPECT_NE(bad.err.find("line 2"), std::string::npos) << bad.err;
  EXPECT_EQ(run({"denoise", "-i", (dir / "missing.csv").string(), "-S", "1", "-o", o}).code, 3);
  EXPECT_EQ(run({"denoise", "-i", x, "-m", "pca", "-S", "9", "-o", o}).code, 4);  // rank
  EXPECT_EQ(run({"--version"}).code, 0);
}

TEST(CliDenoise, ImageRoundTrip) {
  TempDir dir;
  Eigen::MatrixXd pixels(6, 8);
  for (Eigen::Index i = 0; i < 6; ++i)
    for (Eigen::Index j = 0; j < 8; ++j) pixels(i, j) = static_cast<double>((i * 8 + j) * 4);
  io::write_pgm(dir / "a.pgm", pixels);
  const CliRun r = run({"denoise", "-i", (dir / "a.pgm").string(), "-m", "pca", "-S", "5", "-o",
                     (dir / "b.pgm").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(io::read_pgm(dir / "b.pgm").pixels, pixels);
}

std::vector<std::string> row1_args(const std::string& prefix, const std::string& threads) {
  return {"simulate", "--n", "100", "--p", "20", "--rank", "2", "--snr", "4", "--ratio", "4",
          "--replicates", "20", "--seed", "3", "--threads", threads, "-o", prefix};
}

TEST(CliSimulate, ShapeAndDeterminism) {
  TempDir dir;
  const auto a = (dir / "a").string();
  const auto b = (dir / "b").string();
  ASSERT_EQ(run(row1_args(a, "1")).code, 0);
  ASSERT_EQ(run(row1_args(b, "3")).code, 0);
  const std::string tsv = io::read_text(a + ".tsv");
  EXPECT_EQ(std::count(tsv.begin(), tsv.end(), '\n'), 4);  // header + three methods
  EXPECT_EQ(tsv, io::read_text(b + ".tsv"));
  EXPECT_EQ(io::read_text(a + ".json"), io::read_text(b + ".json"));
  const auto doc = nlohmann::json::parse(io::read_text(a + ".json"));
  EXPECT_EQ(doc["reports"][0]["methods"].size(), 3u);
  EXPECT_EQ(doc["failed_replicates"].get<int>(), 0);
}

TEST(CliSimulate, InfeasibleRatioIsConfigurationError) {
  TempDir dir;
  const CliRun r = run({"simulate", "--p", "100", "--rank", "4", "--ratio", "4", "--replicates", "2",
                     "-o", (dir / "x").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("feasible ratios"), std::string::npos) << r.err;
}

TEST(CliRerun, ReproducesOutputs) {
  TempDir dir;
  const auto a = (dir / "a").string();
  ASSERT_EQ(run(row1_args(a, "2")).code, 0);
  const std::string tsv = io::read_text(a + ".tsv");
  const std::string json = io::read_text(a + ".json");
  std::filesystem::remove(a + ".tsv");
  std::filesystem::remove(a + ".json");
  const CliRun r = run({"rerun", a + ".manifest.json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(io::read_text(a + ".tsv"), tsv);
  EXPECT_EQ(io::read_text(a + ".json"), json);
}

TEST(CliCoords, AxesAndSelfReference) {
  TempDir dir;
  write_low_rank(dir / "x.csv", 6, 0.2);
  const auto x = (dir / "x.csv").string();
  const auto p = (dir / "c").string();
  ASSERT_EQ(run({"coords", "-i", x, "-m", "pca", "-S", "3", "--axes", "1,2", "-o", p}).code, 0);
  const Configuration ind = io::read_configuration_tsv(p + "_individuals.tsv");
  EXPECT_EQ(ind.points.rows(), 20);
  EXPECT_EQ(ind.points.cols(), 2);
  EXPECT_EQ(io::read_configuration_tsv(p + "_variables.tsv").points.cols(), 2);

  const auto q = (dir / "d").string();
  const CliRun r = run({"coords", "-i", x, "-m", "pca", "-S", "3", "--axes", "1,2", "--reference",
                     p + "_individuals.tsv", "-o", q});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = nlohmann::json::parse(io::read_text(q + "_transform.json"));
  EXPECT_NEAR(t["scale"].get<double>(), 1.0, 1e-10);
  EXPECT_LT(t["residual"].get<double>(), 1e-9);
  EXPECT_NEAR(t["rotation"][0][0].get<double>(), 1.0, 1e-10);
  EXPECT_NEAR(t["rotation"][0][1].get<double>(), 0.0, 1e-10);
  EXPECT_NEAR(t["rotation"][1][1].get<double>(), 1.0, 1e-10);

  EXPECT_EQ(run({"coords", "-i", x, "-S", "2", "--axes", "3", "-o", p}).code, 4);
}

}  // namespace
}  // namespace regpca
