#include "plom/dataset.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "plom/errors.hpp"

namespace plom {
namespace {

constexpr char kMagic[8] = {'P', 'L', 'O', 'M', 'D', 'A', 'T', '1'};

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

bool parse_double(std::string_view field, double& out) {
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto res = std::from_chars(begin, end, out);
  return res.ec == std::errc{} && res.ptr == end;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      fields.emplace_back(trim(std::string_view(line).substr(start)));
      break;
    }
    fields.emplace_back(trim(std::string_view(line).substr(start, pos - start)));
    start = pos + 1;
  }
  return fields;
}

void check_finite(const Matrix& m, const char* what) {
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      if (!std::isfinite(m(i, j)))
        throw DataError(std::string(what) + ": non-finite value at row " +
                        std::to_string(i) + ", column " + std::to_string(j));
}

void check_distinct_columns(const Matrix& m) {
  for (Index a = 0; a < m.cols(); ++a)
    for (Index b = a + 1; b < m.cols(); ++b)
      if (m.col(a) == m.col(b))
        throw DataError("duplicate realizations: columns " + std::to_string(a) +
                        " and " + std::to_string(b) + " are identical");
}

RawDataset load_csv(const std::filesystem::path& path, Layout layout) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  std::vector<std::vector<double>> rows;
  std::vector<std::string> header;
  std::string line;
  std::size_t line_no = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    std::vector<double> row(fields.size());
    bool numeric = true;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (!parse_double(fields[i], row[i])) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (first_content) {  // header row
        header.assign(fields.begin(), fields.end());
        first_content = false;
        continue;
      }
      throw DataError(path.string() + ": non-numeric field at line " +
                      std::to_string(line_no));
    }
    first_content = false;
    if (!rows.empty() && row.size() != rows.front().size())
      throw DataError(path.string() + ": line " + std::to_string(line_no) +
                      " has " + std::to_string(row.size()) +
                      " fields, expected " + std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path.string() + ": no numeric rows");

  const Index r = static_cast<Index>(rows.size());
  const Index c = static_cast<Index>(rows.front().size());
  Matrix table(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) table(i, j) = rows[i][j];

  RawDataset data;
  if (layout == Layout::kRowsAreSamples) {
    data.points = table.transpose();
    data.feature_names = std::move(header);
  } else {
    data.points = std::move(table);
  }
  return data;
}

void write_matrix_binary(std::ofstream& out, const Matrix& m) {
  out.write(kMagic, sizeof(kMagic));
  std::uint64_t rows = static_cast<std::uint64_t>(m.rows());
  std::uint64_t cols = static_cast<std::uint64_t>(m.cols());
  out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
  out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
}

Matrix read_matrix_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (in.gcount() != sizeof(magic) || std::memcmp(magic, kMagic, 8) != 0)
    throw DataError(path.string() + ": not a PLOMDAT1 file");
  std::uint64_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
  in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
  if (!in) throw DataError(path.string() + ": truncated header");
  if (rows == 0 || cols == 0)
    throw DataError(path.string() + ": empty matrix");
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double) * m.size()));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(double) * m.size()))
    throw DataError(path.string() + ": truncated payload");
  return m;
}

bool has_binary_magic(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  return in.gcount() == sizeof(magic) && std::memcmp(magic, kMagic, 8) == 0;
}

}  // namespace

RawDataset load_dataset(const std::filesystem::path& path, Layout layout) {
  RawDataset data;
  if (has_binary_magic(path)) {
    data.points = read_matrix_binary(path);
  } else {
    data = load_csv(path, layout);
  }
  check_finite(data.points, path.string().c_str());
  check_distinct_columns(data.points);
  return data;
}

void save_dataset_csv(const RawDataset& data, const std::filesystem::path& path,
                      Layout layout) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const Matrix& p = data.points;
  if (layout == Layout::kRowsAreSamples) {
    if (!data.feature_names.empty()) {
      for (std::size_t i = 0; i < data.feature_names.size(); ++i)
        out << (i ? "," : "") << data.feature_names[i];
      out << '\n';
    }
    for (Index j = 0; j < p.cols(); ++j) {
      for (Index i = 0; i < p.rows(); ++i)
        out << (i ? "," : "") << fmt_double(p(i, j));
      out << '\n';
    }
  } else {
    for (Index i = 0; i < p.rows(); ++i) {
      for (Index j = 0; j < p.cols(); ++j)
        out << (j ? "," : "") << fmt_double(p(i, j));
      out << '\n';
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
}

void save_dataset_binary(const RawDataset& data,
                         const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_matrix_binary(out, data.points);
  if (!out) throw IoError("write failed: " + path.string());
}

RawDataset assemble_joint(const Matrix& q, const Matrix& w) {
  if (q.size() > 0 && w.size() > 0 && q.cols() != w.cols())
    throw DataError("assemble_joint: block realization counts differ (" +
                    std::to_string(q.cols()) + " vs " + std::to_string(w.cols()) +
                    ")");
  RawDataset data;
  if (q.size() == 0) {
    data.points = w;
  } else if (w.size() == 0) {
    data.points = q;
  } else {
    data.points.resize(q.rows() + w.rows(), q.cols());
    data.points.topRows(q.rows()) = q;
    data.points.bottomRows(w.rows()) = w;
  }
  if (data.points.size() == 0) throw DataError("assemble_joint: both blocks empty");
  return data;
}

std::pair<Matrix, Matrix> split_joint(const RawDataset& data, Index n_q) {
  if (n_q < 0 || n_q > data.n())
    throw DataError("split_joint: boundary " + std::to_string(n_q) +
                    " outside [0, " + std::to_string(data.n()) + "]");
  return {data.points.topRows(n_q), data.points.bottomRows(data.n() - n_q)};
}

ScalingSpec fit_scaling(const RawDataset& data, ScalingMode mode) {
  const Matrix& p = data.points;
  if (p.size() == 0) throw DataError("fit_scaling: empty dataset");
  ScalingSpec spec;
  spec.mode = mode;
  spec.shift.resize(p.rows());
  spec.scale.resize(p.rows());
  spec.constant.assign(static_cast<std::size_t>(p.rows()), 0);
  for (Index i = 0; i < p.rows(); ++i) {
    if (mode == ScalingMode::kMinMax) {
      double lo = p.row(i).minCoeff();
      double hi = p.row(i).maxCoeff();
      spec.shift[i] = lo;
      spec.scale[i] = hi - lo;
    } else {
      double mean = p.row(i).mean();
      double sd = 0.0;
      if (p.cols() > 1)
        sd = std::sqrt((p.row(i).array() - mean).square().sum() /
                       static_cast<double>(p.cols() - 1));
      spec.shift[i] = mean;
      spec.scale[i] = sd;
    }
    if (spec.scale[i] == 0.0) {
      spec.constant[static_cast<std::size_t>(i)] = 1;
      spec.scale[i] = 1.0;
    }
  }
  return spec;
}

Matrix apply_scaling(const ScalingSpec& spec, const Matrix& points) {
  if (points.rows() != spec.shift.size())
    throw DataError("apply_scaling: feature count mismatch");
  return (points.colwise() - spec.shift).array().colwise() / spec.scale.array();
}

Matrix invert_scaling(const ScalingSpec& spec, const Matrix& points) {
  if (points.rows() != spec.shift.size())
    throw DataError("invert_scaling: feature count mismatch");
  return (points.array().colwise() * spec.scale.array()).matrix().colwise() +
         spec.shift;
}

const char* scaling_mode_name(ScalingMode mode) {
  return mode == ScalingMode::kMinMax ? "minmax" : "standard";
}

ScalingMode scaling_mode_from_name(const std::string& name) {
  if (name == "minmax") return ScalingMode::kMinMax;
  if (name == "standard") return ScalingMode::kStandardize;
  throw ConfigError("unknown scaling mode '" + name + "'");
}

void save_learned(const LearnedArchive& archive,
                  const std::filesystem::path& path) {
  if (archive.samples.cols() != archive.meta.n_mc)
    throw DataError("save_learned: metadata n_mc " +
                    std::to_string(archive.meta.n_mc) + " != column count " +
                    std::to_string(archive.samples.cols()));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_matrix_binary(out, archive.samples);
  if (!out) throw IoError("write failed: " + path.string());

  nlohmann::json meta{
      {"N", archive.meta.N},       {"nu", archive.meta.nu},
      {"m", archive.meta.m},       {"eps_dm", archive.meta.eps_dm},
      {"kappa", archive.meta.kappa}, {"f0", archive.meta.f0},
      {"dr", archive.meta.dr},     {"seed", archive.meta.seed},
      {"n_mc", archive.meta.n_mc}};
  std::ofstream mout(path.string() + ".meta.json");
  if (!mout) throw IoError("cannot open " + path.string() + ".meta.json");
  mout << meta.dump(2) << '\n';
  if (!mout) throw IoError("write failed: " + path.string() + ".meta.json");
}

LearnedArchive load_learned(const std::filesystem::path& path) {
  LearnedArchive archive;
  archive.samples = read_matrix_binary(path);

  std::filesystem::path meta_path = path.string() + ".meta.json";
  std::ifstream min(meta_path);
  if (!min) throw IoError("cannot open " + meta_path.string());
  nlohmann::json meta;
  try {
    min >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(meta_path.string() + ": invalid JSON: " + e.what());
  }
  for (const char* key :
       {"N", "nu", "m", "eps_dm", "kappa", "f0", "dr", "seed", "n_mc"}) {
    if (!meta.contains(key))
      throw DataError(meta_path.string() + ": missing metadata key '" +
                      std::string(key) + "'");
  }
  archive.meta.N = meta["N"].get<Index>();
  archive.meta.nu = meta["nu"].get<Index>();
  archive.meta.m = meta["m"].get<Index>();
  archive.meta.eps_dm = meta["eps_dm"].get<double>();
  archive.meta.kappa = meta["kappa"].get<int>();
  archive.meta.f0 = meta["f0"].get<double>();
  archive.meta.dr = meta["dr"].get<double>();
  archive.meta.seed = meta["seed"].get<std::uint64_t>();
  archive.meta.n_mc = meta["n_mc"].get<Index>();

  if (archive.meta.n_mc != archive.samples.cols())
    throw DataError(path.string() + ": metadata n_mc " +
                    std::to_string(archive.meta.n_mc) +
                    " does not match stored column count " +
                    std::to_string(archive.samples.cols()));
  check_finite(archive.samples, path.string().c_str());
  return archive;
}

}  // namespace plom
