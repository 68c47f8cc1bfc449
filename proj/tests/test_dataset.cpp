#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include <plom/dataset.hpp>
#include <plom/errors.hpp>

#include "support/synthetic.hpp"

namespace fs = std::filesystem;
using namespace plom;

namespace {

fs::path scratch_dir() {
  auto dir = fs::temp_directory_path() / "plom_dataset_tests";
  fs::create_directories(dir);
  return dir;
}

fs::path write_text_file(const std::string& name, const std::string& body) {
  auto path = scratch_dir() / name;
  std::ofstream out(path);
  out << body;
  return path;
}

}  // namespace

TEST_CASE("csv round trip preserves every bit in both layouts") {
  RawDataset d;
  d.points = testing::gaussian_cloud(3, 5, 21);
  d.feature_names = {"a", "b", "c"};

  auto rows_path = scratch_dir() / "rt_rows.csv";
  save_dataset_csv(d, rows_path, Layout::kRowsAreSamples);
  RawDataset back = load_dataset(rows_path, Layout::kRowsAreSamples);
  REQUIRE(back.n() == 3);
  REQUIRE(back.N() == 5);
  CHECK(back.points == d.points);
  CHECK(back.feature_names == d.feature_names);

  auto cols_path = scratch_dir() / "rt_cols.csv";
  save_dataset_csv(d, cols_path, Layout::kColumnsAreSamples);
  RawDataset back2 = load_dataset(cols_path, Layout::kColumnsAreSamples);
  CHECK(back2.points == d.points);
  CHECK(back2.feature_names.empty());
}

TEST_CASE("binary round trip preserves every bit") {
  RawDataset d;
  d.points = testing::gaussian_cloud(4, 7, 22);
  auto path = scratch_dir() / "rt.bin";
  save_dataset_binary(d, path);
  // Layout argument is ignored for binary files; the matrix orientation is
  // stored explicitly.
  RawDataset back = load_dataset(path, Layout::kRowsAreSamples);
  CHECK(back.points == d.points);
}

TEST_CASE("header row is detected and kept out of the data") {
  auto path = write_text_file("hdr.csv", "x,y\n1,2\n3,4\n5,6\n");
  RawDataset d = load_dataset(path, Layout::kRowsAreSamples);
  CHECK(d.n() == 2);
  CHECK(d.N() == 3);
  CHECK(d.feature_names == std::vector<std::string>{"x", "y"});
  CHECK(d.points(0, 0) == 1.0);
  CHECK(d.points(1, 2) == 6.0);
}

TEST_CASE("blank lines are skipped, headerless files load clean") {
  auto path = write_text_file("plain.csv", "1,2\n\n3,4\n");
  RawDataset d = load_dataset(path, Layout::kRowsAreSamples);
  CHECK(d.N() == 2);
  CHECK(d.feature_names.empty());
}

TEST_CASE("malformed csv inputs raise data errors naming the line") {
  auto ragged = write_text_file("ragged.csv", "1,2\n3,4,5\n");
  CHECK_THROWS_WITH_AS(load_dataset(ragged, Layout::kRowsAreSamples),
                       doctest::Contains("line 2"), DataError);

  auto word = write_text_file("word.csv", "1,2\n3,oops\n");
  CHECK_THROWS_WITH_AS(load_dataset(word, Layout::kRowsAreSamples),
                       doctest::Contains("non-numeric field at line 2"),
                       DataError);

  auto empty = write_text_file("empty.csv", "\n\n");
  CHECK_THROWS_AS(load_dataset(empty, Layout::kRowsAreSamples), DataError);

  auto inf = write_text_file("inf.csv", "1,2\n3,inf\n");
  CHECK_THROWS_AS(load_dataset(inf, Layout::kRowsAreSamples), DataError);
}

TEST_CASE("identical realizations are rejected with both column indices") {
  auto path = write_text_file("dup.csv", "1,2\n1,2\n3,4\n");
  CHECK_THROWS_WITH_AS(load_dataset(path, Layout::kRowsAreSamples),
                       doctest::Contains("columns 0 and 1"), DataError);
}

TEST_CASE("missing file raises an io error") {
  CHECK_THROWS_AS(load_dataset(scratch_dir() / "nothing.csv",
                               Layout::kRowsAreSamples),
                  IoError);
}

TEST_CASE("min-max scaling maps every feature onto [0, 1] and inverts") {
  RawDataset d;
  d.points = testing::gaussian_cloud(3, 20, 23);
  d.points.row(1).array() *= 50.0;  // wildly different spreads
  d.points.row(2).array() += 7.0;

  ScalingSpec spec = fit_scaling(d, ScalingMode::kMinMax);
  Matrix scaled = apply_scaling(spec, d.points);
  for (Index i = 0; i < 3; ++i) {
    CHECK(scaled.row(i).minCoeff() == doctest::Approx(0.0));
    CHECK(scaled.row(i).maxCoeff() == doctest::Approx(1.0));
  }
  Matrix restored = invert_scaling(spec, scaled);
  CHECK((restored - d.points).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("standardize scaling centers and unit-scales each feature") {
  RawDataset d;
  d.points = testing::gaussian_cloud(2, 40, 24);
  d.points.row(0).array() = d.points.row(0).array() * 3.0 + 10.0;

  ScalingSpec spec = fit_scaling(d, ScalingMode::kStandardize);
  Matrix scaled = apply_scaling(spec, d.points);
  for (Index i = 0; i < 2; ++i) {
    CHECK(std::abs(scaled.row(i).mean()) < 1e-12);
    const double var = (scaled.row(i).array() - scaled.row(i).mean())
                           .square()
                           .sum() /
                       39.0;
    CHECK(var == doctest::Approx(1.0));
  }
  Matrix restored = invert_scaling(spec, scaled);
  CHECK((restored - d.points).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("constant features are flagged and survive the round trip") {
  RawDataset d;
  d.points.resize(2, 4);
  d.points << 1, 2, 3, 4,
              5, 5, 5, 5;
  for (ScalingMode mode : {ScalingMode::kMinMax, ScalingMode::kStandardize}) {
    ScalingSpec spec = fit_scaling(d, mode);
    CHECK(spec.constant == std::vector<std::uint8_t>{0, 1});
    CHECK(spec.scale[1] == 1.0);
    Matrix scaled = apply_scaling(spec, d.points);
    CHECK(scaled.row(1).cwiseAbs().maxCoeff() == 0.0);
    Matrix restored = invert_scaling(spec, scaled);
    CHECK((restored - d.points).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("scaling rejects a feature-count mismatch") {
  RawDataset d;
  d.points = testing::gaussian_cloud(3, 5, 25);
  ScalingSpec spec = fit_scaling(d, ScalingMode::kMinMax);
  Matrix wrong = testing::gaussian_cloud(2, 5, 26);
  CHECK_THROWS_AS(apply_scaling(spec, wrong), DataError);
  CHECK_THROWS_AS(invert_scaling(spec, wrong), DataError);
}

TEST_CASE("scaling mode names round trip and reject junk") {
  CHECK(scaling_mode_from_name("minmax") == ScalingMode::kMinMax);
  CHECK(scaling_mode_from_name("standard") == ScalingMode::kStandardize);
  CHECK(scaling_mode_name(ScalingMode::kMinMax) == std::string("minmax"));
  CHECK(scaling_mode_name(ScalingMode::kStandardize) == std::string("standard"));
  CHECK_THROWS_AS(scaling_mode_from_name("zscore"), ConfigError);
}

TEST_CASE("joint assembly stacks blocks and splits back") {
  Matrix q = testing::gaussian_cloud(2, 6, 27);
  Matrix w = testing::gaussian_cloud(3, 6, 28);
  RawDataset joint = assemble_joint(q, w);
  CHECK(joint.n() == 5);
  CHECK(joint.N() == 6);
  auto [q2, w2] = split_joint(joint, 2);
  CHECK(q2 == q);
  CHECK(w2 == w);

  // Either block may be absent.
  CHECK(assemble_joint(q, Matrix()).points == q);
  CHECK(assemble_joint(Matrix(), w).points == w);

  Matrix w_short = testing::gaussian_cloud(3, 5, 29);
  CHECK_THROWS_AS(assemble_joint(q, w_short), DataError);
  CHECK_THROWS_AS(assemble_joint(Matrix(), Matrix()), DataError);
  CHECK_THROWS_AS(split_joint(joint, 9), DataError);
}

TEST_CASE("learned archive round trips samples and metadata") {
  LearnedArchive archive;
  archive.samples = testing::gaussian_cloud(3, 12, 30);
  archive.meta = {4, 3, 2, 0.75, 1, 1.5, 0.11, 99, 12};

  auto path = scratch_dir() / "learned.bin";
  save_learned(archive, path);
  LearnedArchive back = load_learned(path);
  CHECK(back.samples == archive.samples);
  CHECK(back.meta.N == 4);
  CHECK(back.meta.nu == 3);
  CHECK(back.meta.m == 2);
  CHECK(back.meta.eps_dm == 0.75);
  CHECK(back.meta.kappa == 1);
  CHECK(back.meta.f0 == 1.5);
  CHECK(back.meta.dr == 0.11);
  CHECK(back.meta.seed == 99);
  CHECK(back.meta.n_mc == 12);
}

TEST_CASE("learned archive refuses inconsistent metadata") {
  LearnedArchive archive;
  archive.samples = testing::gaussian_cloud(3, 12, 31);
  archive.meta.n_mc = 11;  // off by one
  CHECK_THROWS_AS(save_learned(archive, scratch_dir() / "bad.bin"), DataError);

  archive.meta.n_mc = 12;
  auto path = scratch_dir() / "tamper.bin";
  save_learned(archive, path);

  // Strip a key from the sidecar; the loader must name it.  "f0" sits in the
  // middle of the sorted dump, so removing its whole line keeps valid JSON.
  std::ifstream in(path.string() + ".meta.json");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  in.close();
  auto pos = text.find("\"f0\"");
  REQUIRE(pos != std::string::npos);
  auto end = text.find('\n', pos);
  text.erase(pos, end - pos + 1);
  std::ofstream out(path.string() + ".meta.json");
  out << text;
  out.close();
  CHECK_THROWS_WITH_AS(load_learned(path), doctest::Contains("f0"),
                       DataError);
}

TEST_CASE("corrupt binary payloads are rejected") {
  auto not_magic = write_text_file("not.bin", "PLOMDATX garbage");
  CHECK_THROWS_AS(load_dataset(not_magic, Layout::kRowsAreSamples), DataError);

  // Truncate a valid file mid-payload.
  RawDataset d;
  d.points = testing::gaussian_cloud(4, 4, 32);
  auto path = scratch_dir() / "trunc.bin";
  save_dataset_binary(d, path);
  fs::resize_file(path, fs::file_size(path) - 16);
  CHECK_THROWS_WITH_AS(load_dataset(path, Layout::kRowsAreSamples),
                       doctest::Contains("truncated"), DataError);
}
