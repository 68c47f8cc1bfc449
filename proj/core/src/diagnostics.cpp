#include "plom/diagnostics.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>

#include <Eigen/QR>

#include "plom/errors.hpp"
#include "plom/kde.hpp"

namespace plom {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kLogFlush = -700.0;

void check_solved(const DiffusionBasis& basis, Index N) {
  if (basis.psi.rows() != N || basis.psi.cols() != N) {
    throw DataError("basis eigenvectors do not match the ensemble size");
  }
}

}  // namespace

std::vector<double> eps_d_curve(const Matrix& eta, const DiffusionBasis& basis) {
  const Index N = eta.cols();
  check_solved(basis, N);

  // Householder Q shares every leading column span with psi, so column alpha
  // of proj carries exactly the order-alpha contribution.  The residual is
  // summed from the tail: all terms are positive, nothing cancels, and
  // eps_d(N) is an empty sum, zero exactly.
  Eigen::HouseholderQR<Matrix> qr(basis.psi);
  const Matrix q = qr.householderQ() * Matrix::Identity(N, N);
  const Matrix proj = eta * q;

  const double total = eta.squaredNorm();
  if (!(total > 0.0)) throw DataError("ensemble has zero norm");

  std::vector<double> out(static_cast<std::size_t>(N));
  double residual = 0.0;
  for (Index m = N; m >= 1; --m) {
    out[static_cast<std::size_t>(m - 1)] =
        std::sqrt(std::min(1.0, residual / total));
    residual += proj.col(m - 1).squaredNorm();
  }
  return out;
}

double eps_d(const Matrix& eta, const DiffusionBasis& basis, Index m) {
  const Index N = eta.cols();
  if (m < 1 || m > N) throw ConfigError("m out of range");
  return eps_d_curve(eta, basis)[static_cast<std::size_t>(m - 1)];
}

double f_d(Index N, Index nu, double eps_d_value, Index m) {
  const Bandwidths bw = silverman_bandwidths(N, nu);
  return static_cast<double>(m) * bw.s_hat * bw.s_hat /
             static_cast<double>(N - 1) +
         eps_d_value * eps_d_value;
}

double g_bar(Index N, Index nu, double eps_d_value, Index m) {
  const Bandwidths bw = silverman_bandwidths(N, nu);
  const double ratio_sq = bw.ratio() * bw.ratio();
  const double value = 1.0 +
                       ratio_sq * static_cast<double>(m) / static_cast<double>(N) -
                       eps_d_value * eps_d_value;
  if (!(value > 0.0)) {
    throw NumericalError("g_bar(" + std::to_string(m) +
                         ") is not positive; eps_d input is inconsistent");
  }
  return value;
}

DsimPoint d_sim(const LearnedSet& learned, const Matrix& eta) {
  if (learned.eta_samples.empty()) throw DataError("learned set holds no samples");
  const double denom = eta.squaredNorm();
  if (!(denom > 0.0)) throw DataError("ensemble has zero norm");

  const std::size_t n = learned.eta_samples.size();
  std::vector<double> vals(n);
  for (std::size_t l = 0; l < n; ++l) {
    const Matrix& sample = learned.eta_samples[l];
    if (sample.rows() != eta.rows() || sample.cols() != eta.cols()) {
      throw DataError("sample shape does not match the ensemble");
    }
    vals[l] = (sample - eta).squaredNorm() / denom;
  }

  double mean = 0.0;
  for (double v : vals) mean += v;
  mean /= static_cast<double>(n);

  double var = 0.0;
  for (double v : vals) var += (v - mean) * (v - mean);

  DsimPoint point;
  point.value = mean;
  point.std_error =
      n > 1 ? std::sqrt(var / static_cast<double>(n - 1) / static_cast<double>(n))
            : 0.0;
  return point;
}

double d_maxent(Index N, Index m) {
  if (m < 1) throw ConfigError("m must be >= 1");
  if (N < 2) throw ConfigError("N must be >= 2");
  return 1.0 + static_cast<double>(m) / static_cast<double>(N - 1);
}

double d_app_value(Index N, Index nu, double eps_d_value, double eta_sq_norm,
                   Index m) {
  const Bandwidths bw = silverman_bandwidths(N, nu);
  const double log_factor =
      -eps_d_value * eps_d_value * eta_sq_norm / (2.0 * bw.s * bw.s);
  const double factor = log_factor < kLogFlush ? 0.0 : std::exp(log_factor);
  return f_d(N, nu, eps_d_value, m) +
         g_bar(N, nu, eps_d_value, m) * factor;
}

double d_app(const Matrix& eta, const DiffusionBasis& basis, Index m) {
  const double e = eps_d(eta, basis, m);
  return d_app_value(eta.cols(), eta.rows(), e, eta.squaredNorm(), m);
}

double log_gamma_c(Index N, Index nu, Index m) {
  if (m < 1 || m > N) throw ConfigError("m out of range");
  const Bandwidths bw = silverman_bandwidths(N, nu);
  const double sigma_sq = 1.0 - 1.0 / static_cast<double>(N);
  return -0.5 * static_cast<double>(nu) * static_cast<double>(N - m) *
         std::log1p(sigma_sq / (bw.s * bw.s));
}

double entropy_ratio(Index N, Index nu) {
  if (N < 2) throw ConfigError("N must be >= 2");
  if (nu < 1) throw ConfigError("nu must be >= 1");
  const double two_pi_e = 2.0 * std::numbers::pi * std::numbers::e;
  return static_cast<double>(nu) *
         (std::log(two_pi_e) + std::log1p(-1.0 / static_cast<double>(N))) /
         (2.0 * std::log(static_cast<double>(N)));
}

MSelection select_m_by_fd(const ConcentrationCurves& curves) {
  if (curves.f_d.empty() || curves.f_d.size() != curves.m_values.size()) {
    throw DataError("curves have no f_d values");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < curves.f_d.size(); ++i) {
    if (curves.f_d[i] < curves.f_d[best]) best = i;
  }

  MSelection sel;
  sel.m_opt = curves.m_values[best];
  if (best >= 1 && curves.eps_d.size() == curves.f_d.size()) {
    // f_d(m) - eps_d(m)^2 = m s_hat^2/(N-1), so the first point recovers the
    // slope without knowing (N, nu).
    const double slope = (curves.f_d[0] - curves.eps_d[0] * curves.eps_d[0]) /
                         static_cast<double>(curves.m_values[0]);
    const double lo = curves.eps_d[best] * curves.eps_d[best];
    const double hi = curves.eps_d[best - 1] * curves.eps_d[best - 1];
    sel.sandwich_holds = lo < slope && slope < hi;
  }
  return sel;
}

ConcentrationCurves build_curves(const Matrix& eta, const DiffusionBasis& basis,
                                 const std::map<Index, DsimPoint>& sim_points) {
  const Index N = eta.cols();
  const Index nu = eta.rows();
  const std::vector<double> eps = eps_d_curve(eta, basis);
  const double eta_sq = eta.squaredNorm();

  ConcentrationCurves curves;
  curves.m_values.resize(static_cast<std::size_t>(N));
  curves.eps_d = eps;
  curves.f_d.resize(static_cast<std::size_t>(N));
  curves.g_bar.resize(static_cast<std::size_t>(N));
  curves.d_sim.assign(static_cast<std::size_t>(N), kNaN);
  curves.d_sim_stderr.assign(static_cast<std::size_t>(N), kNaN);
  curves.d_maxent.assign(static_cast<std::size_t>(N), kNaN);
  curves.d_app.assign(static_cast<std::size_t>(N), kNaN);

  for (Index m = 1; m <= N; ++m) {
    const std::size_t i = static_cast<std::size_t>(m - 1);
    curves.m_values[i] = m;
    curves.f_d[i] = f_d(N, nu, eps[i], m);
    curves.g_bar[i] = g_bar(N, nu, eps[i], m);
    auto it = sim_points.find(m);
    if (it != sim_points.end()) {
      curves.d_sim[i] = it->second.value;
      curves.d_sim_stderr[i] = it->second.std_error;
    }
  }

  curves.m_opt = select_m_by_fd(curves).m_opt;
  for (Index m = curves.m_opt; m <= N; ++m) {
    const std::size_t i = static_cast<std::size_t>(m - 1);
    curves.d_maxent[i] = d_maxent(N, m);
    curves.d_app[i] = d_app_value(N, nu, eps[i], eta_sq, m);
  }
  return curves;
}

namespace {

std::string fmt_cell(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_cell(std::string_view field, const std::string& path,
                  std::size_t line_no) {
  if (field.empty()) return kNaN;
  double out = 0.0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), out);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
    throw DataError(path + ": bad numeric field at line " +
                    std::to_string(line_no));
  }
  return out;
}

}  // namespace

void save_curves_csv(const ConcentrationCurves& curves,
                     const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "m,eps_d,f_d,g_bar,d_sim,d_sim_stderr,d_maxent,d_app\n";
  for (std::size_t i = 0; i < curves.m_values.size(); ++i) {
    out << curves.m_values[i] << ',' << fmt_cell(curves.eps_d[i]) << ','
        << fmt_cell(curves.f_d[i]) << ',' << fmt_cell(curves.g_bar[i]) << ','
        << fmt_cell(curves.d_sim[i]) << ',' << fmt_cell(curves.d_sim_stderr[i])
        << ',' << fmt_cell(curves.d_maxent[i]) << ','
        << fmt_cell(curves.d_app[i]) << '\n';
  }
  if (!out) throw IoError("write to " + path.string() + " failed");
}

ConcentrationCurves load_curves_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  ConcentrationCurves curves;
  std::string line;
  std::size_t line_no = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!saw_header) {
      // header row, fixed column set
      saw_header = true;
      continue;
    }
    std::vector<std::string_view> fields;
    std::string_view rest = line;
    while (true) {
      std::size_t pos = rest.find(',');
      if (pos == std::string_view::npos) {
        fields.push_back(rest);
        break;
      }
      fields.push_back(rest.substr(0, pos));
      rest.remove_prefix(pos + 1);
    }
    if (fields.size() != 8) {
      throw DataError(path.string() + ": line " + std::to_string(line_no) +
                      " has " + std::to_string(fields.size()) +
                      " fields, expected 8");
    }
    long m_parsed = 0;
    auto res = std::from_chars(fields[0].data(),
                               fields[0].data() + fields[0].size(), m_parsed);
    if (res.ec != std::errc{} || res.ptr != fields[0].data() + fields[0].size()) {
      throw DataError(path.string() + ": bad m field at line " +
                      std::to_string(line_no));
    }
    curves.m_values.push_back(static_cast<Index>(m_parsed));
    curves.eps_d.push_back(parse_cell(fields[1], path.string(), line_no));
    curves.f_d.push_back(parse_cell(fields[2], path.string(), line_no));
    curves.g_bar.push_back(parse_cell(fields[3], path.string(), line_no));
    curves.d_sim.push_back(parse_cell(fields[4], path.string(), line_no));
    curves.d_sim_stderr.push_back(parse_cell(fields[5], path.string(), line_no));
    curves.d_maxent.push_back(parse_cell(fields[6], path.string(), line_no));
    curves.d_app.push_back(parse_cell(fields[7], path.string(), line_no));
  }
  if (curves.m_values.empty()) {
    throw DataError(path.string() + ": no curve rows");
  }

  curves.m_opt = curves.m_values.back();
  for (std::size_t i = 0; i < curves.m_values.size(); ++i) {
    if (!std::isnan(curves.d_maxent[i])) {
      curves.m_opt = curves.m_values[i];
      break;
    }
  }
  return curves;
}

}  // namespace plom
