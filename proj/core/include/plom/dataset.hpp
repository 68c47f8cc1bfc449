#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "plom/types.hpp"

namespace plom {

enum class Layout { kRowsAreSamples, kColumnsAreSamples };

// In-memory dataset, always stored with columns as realizations.
struct RawDataset {
  Matrix points;                           // n x N
  std::vector<std::string> feature_names;  // empty when the source had none

  Index n() const { return points.rows(); }
  Index N() const { return points.cols(); }
};

// Loads CSV or binary (sniffed by magic).  Validates that every entry is
// finite and that no two realizations are identical.
RawDataset load_dataset(const std::filesystem::path& path, Layout layout);

void save_dataset_csv(const RawDataset& data, const std::filesystem::path& path,
                      Layout layout);
void save_dataset_binary(const RawDataset& data,
                         const std::filesystem::path& path);

// Joins per-realization blocks x^j = (q^j, w^j).  Either block may be empty.
RawDataset assemble_joint(const Matrix& q, const Matrix& w);
std::pair<Matrix, Matrix> split_joint(const RawDataset& data, Index n_q);

enum class ScalingMode { kMinMax, kStandardize };

// Affine per-feature map x_scaled = (x - shift) / scale.  Features with zero
// spread are flagged constant and get unit scale, so the map stays invertible.
struct ScalingSpec {
  ScalingMode mode = ScalingMode::kMinMax;
  Vector shift;
  Vector scale;
  std::vector<std::uint8_t> constant;
};

ScalingSpec fit_scaling(const RawDataset& data, ScalingMode mode);
Matrix apply_scaling(const ScalingSpec& spec, const Matrix& points);
Matrix invert_scaling(const ScalingSpec& spec, const Matrix& points);

const char* scaling_mode_name(ScalingMode mode);
ScalingMode scaling_mode_from_name(const std::string& name);

struct ArchiveMeta {
  Index N = 0;   // training realizations behind the model
  Index nu = 0;  // reduced dimension of the normalized space
  Index m = 0;   // basis order used by the generator
  double eps_dm = 0.0;
  int kappa = 1;
  double f0 = 0.0;
  double dr = 0.0;
  std::uint64_t seed = 0;
  Index n_mc = 0;  // stored sample columns
};

// Generated realizations mapped back to the physical space, one per column.
struct LearnedArchive {
  Matrix samples;  // n x n_mc
  ArchiveMeta meta;
};

// Binary layout: magic "PLOMDAT1", u64 rows, u64 cols, column-major IEEE f64,
// all little-endian.  Metadata goes to "<path>.meta.json".
void save_learned(const LearnedArchive& archive,
                  const std::filesystem::path& path);
LearnedArchive load_learned(const std::filesystem::path& path);

}  // namespace plom
