#include <gtest/gtest.h>

#include <fstream>

#include "oracles.hpp"
#include "regpca/error.hpp"
#include "regpca/io.hpp"
#include "temp_dir.hpp"

namespace regpca {
namespace {

using testing::TempDir;

ErrorKind parse_kind(const std::string& text, const io::CsvOptions& options = {},
                     std::string* message = nullptr) {
  try {
    io::parse_matrix_csv(text, options);
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.kind();
  }
  ADD_FAILURE() << "expected a parse failure";
  return ErrorKind::usage;
}

TEST(Csv, PlainMatrix) {
  const auto m = io::parse_matrix_csv("1,2\n3,4\n5,6");
  Eigen::MatrixXd expected(3, 2);
  expected << 1, 2, 3, 4, 5, 6;
  EXPECT_EQ(m.values, expected);
  EXPECT_TRUE(m.row_labels.empty());
}

TEST(Csv, HeaderAndRowLabels) {
  const auto m = io::parse_matrix_csv("id,a,\"b, c\"\r\nx,1.5,2\r\n\"y \"\"q\"\"\",3,-4e1\r\n",
                                      {true, true, ','});
  Eigen::MatrixXd expected(2, 2);
  expected << 1.5, 2, 3, -40;
  EXPECT_EQ(m.values, expected);
  EXPECT_EQ(m.column_labels, (std::vector<std::string>{"a", "b, c"}));
  EXPECT_EQ(m.row_labels, (std::vector<std::string>{"x", "y \"q\""}));
}

TEST(Csv, RaggedRowNamesLine) {
  std::string msg;
  EXPECT_EQ(parse_kind("1,2\n3,4,5\n", {}, &msg), ErrorKind::parse);
  EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
}

TEST(Csv, NonNumericCellNamesAddress) {
  std::string msg;
  EXPECT_EQ(parse_kind("1,2\n3,abc\n", {}, &msg), ErrorKind::parse);
  EXPECT_NE(msg.find("abc"), std::string::npos) << msg;
  EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
  EXPECT_NE(msg.find("column 2"), std::string::npos) << msg;
  // "nan" is a number to the parser; the data layer rejects it.
  const auto with_nan = io::parse_matrix_csv("1,nan\n3,4\n");
  EXPECT_THROW(DataMatrix{with_nan.values}, Error);
  EXPECT_EQ(parse_kind(""), ErrorKind::parse);
}

TEST(Csv, FileRoundTrip) {
  TempDir dir;
  Eigen::MatrixXd m = testing::random_matrix(4, 3, 6);
  io::write_matrix_csv(dir / "m.csv", m, {true, true, '\t'}, {"r1", "r2", "r3", "r4"},
                       {"a", "b", "c"});
  const auto back = io::read_matrix_csv(dir / "m.csv", {true, true, '\t'});
  EXPECT_LT((back.values - m).cwiseAbs().maxCoeff(), 1e-11);
  EXPECT_EQ(back.row_labels[3], "r4");
  EXPECT_EQ(back.column_labels[1], "b");
}

TEST(Pgm, PlainTwoByTwo) {
  TempDir dir;
  io::write_text(dir / "a.pgm", "P2\n# comment\n2 2\n255\n0 128\n128 255\n");
  const auto img = io::read_pgm(dir / "a.pgm");
  Eigen::MatrixXd expected(2, 2);
  expected << 0, 128, 128, 255;
  EXPECT_EQ(img.pixels, expected);
  EXPECT_EQ(img.maxval, 255);
}

TEST(Pgm, RoundTripsEightAndSixteenBit) {
  TempDir dir;
  Eigen::MatrixXd pixels(3, 4);
  pixels << 0, 1, 2, 3, 250, 251, 252, 255, 17, 18, 19, 20;
  for (bool binary : {true, false}) {
    io::write_pgm(dir / "x.pgm", pixels, 255, binary);
    EXPECT_EQ(io::read_pgm(dir / "x.pgm").pixels, pixels);
  }
  Eigen::MatrixXd deep = pixels * 200.0;
  io::write_pgm(dir / "d.pgm", deep, 65535, true);
  const auto img = io::read_pgm(dir / "d.pgm");
  EXPECT_EQ(img.pixels, deep);
  EXPECT_EQ(img.maxval, 65535);
}

TEST(Pgm, WriteClampsAndRounds) {
  TempDir dir;
  Eigen::MatrixXd pixels(1, 3);
  pixels << -4.0, 12.6, 300.0;
  io::write_pgm(dir / "c.pgm", pixels);
  Eigen::MatrixXd expected(1, 3);
  expected << 0, 13, 255;
  EXPECT_EQ(io::read_pgm(dir / "c.pgm").pixels, expected);
}

TEST(Pgm, MalformedHeaders) {
  TempDir dir;
  for (const std::string text : {"P3\n2 2\n255\n0 0 0 0\n", "P2\n2\n", "P2\n2 x\n255\n",
                                 "P5\n4 4\n255\n\x01\x02"}) {
    io::write_text(dir / "bad.pgm", text);
    try {
      io::read_pgm(dir / "bad.pgm");
      ADD_FAILURE() << "accepted: " << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::format) << e.what();
    }
  }
}

TEST(PgmStack, FrameOrderFollowsIndex) {
  TempDir dir;
  const Eigen::Index h = 3, w = 4, frames = 50;
  io::ImageStack stack;
  stack.height = h;
  stack.width = w;
  stack.frames.resize(frames, h * w);
  for (Eigen::Index t = 0; t < frames; ++t)
    for (Eigen::Index k = 0; k < h * w; ++k) stack.frames(t, k) = static_cast<double>((t * 5 + k) % 256);
  io::write_pgm_stack(dir.path(), stack);

  const auto back = io::read_pgm_stack(dir.path());
  ASSERT_EQ(back.frames.rows(), frames);
  ASSERT_EQ(back.frames.cols(), h * w);
  EXPECT_EQ(back.frames, stack.frames);
  EXPECT_EQ(back.height, h);

  // Independent indexing check: pixel (i, j) of frame t sits at column i*w + j.
  const auto frame7 = io::read_pgm(dir.path() / back.names[7]);
  for (Eigen::Index i = 0; i < h; ++i)
    for (Eigen::Index j = 0; j < w; ++j) EXPECT_EQ(frame7.pixels(i, j), back.frames(7, i * w + j));

  // Without an index the files are taken in name order.
  std::filesystem::remove(dir.path() / io::kStackIndex);
  EXPECT_EQ(io::read_pgm_stack(dir.path()).frames, stack.frames);
}

TEST(PgmStack, IndexControlsOrder) {
  TempDir dir;
  Eigen::MatrixXd a = Eigen::MatrixXd::Constant(2, 2, 10.0);
  Eigen::MatrixXd b = Eigen::MatrixXd::Constant(2, 2, 20.0);
  io::write_pgm(dir / "a.pgm", a);
  io::write_pgm(dir / "b.pgm", b);
  io::write_text(dir / io::kStackIndex, "b.pgm\na.pgm\n");
  const auto s = io::read_pgm_stack(dir.path());
  EXPECT_EQ(s.frames(0, 0), 20.0);
  EXPECT_EQ(s.frames(1, 0), 10.0);
}

TEST(ConfigurationTsv, RoundTrip) {
  TempDir dir;
  Configuration c;
  c.points = testing::random_matrix(3, 2, 1);
  c.labels = {"alpha", "beta", "gamma"};
  io::write_configuration_tsv(dir / "c.tsv", c);
  const std::string text = io::read_text(dir / "c.tsv");
  EXPECT_EQ(text.substr(0, text.find('\n')), "label\taxis_1\taxis_2");
  const Configuration back = io::read_configuration_tsv(dir / "c.tsv");
  EXPECT_EQ(back.labels, c.labels);
  EXPECT_LT((back.points - c.points).cwiseAbs().maxCoeff(), 1e-11);
}

TEST(Manifest, JsonRoundTripAndChecksum) {
  TempDir dir;
  io::write_text(dir / "abc.txt", "abc");
  EXPECT_EQ(io::sha256_file(dir / "abc.txt"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");

  io::RunManifest m;
  m.command = "denoise";
  m.arguments = {"denoise", "--input", "x.csv"};
  m.parameters["rank"] = 2;
  m.input_checksums = {{"x.csv", "00"}};
  m.tool_version = "t";
  m.started_at = io::utc_timestamp();
  m.finished_at = m.started_at;
  const auto back = io::RunManifest::from_json(m.to_json());
  EXPECT_EQ(back.to_json().dump(), m.to_json().dump());
  EXPECT_FALSE(m.reproducible_json().contains("started_at"));
  EXPECT_FALSE(m.reproducible_json().contains("arguments"));
}

TEST(Format, TwelveSignificantDigits) {
  EXPECT_EQ(io::format_number(0.1), "0.1");
  EXPECT_EQ(io::format_number(1.0 / 3.0), "0.333333333333");
}

}  // namespace
}  // namespace regpca
