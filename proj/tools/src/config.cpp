#include "plom_cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <string_view>

#include "plom/errors.hpp"

namespace plom::cli {

bool is_auto(const std::string& value) { return value == "auto"; }

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::string unquote(std::string_view s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                        (s.front() == '\'' && s.back() == '\''))) {
    s = s.substr(1, s.size() - 2);
  }
  return std::string(s);
}

template <typename T>
T parse_number(const std::string& value, const std::string& key,
               std::size_t line_no) {
  T out{};
  auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc{} || res.ptr != value.data() + value.size()) {
    throw ConfigError("config line " + std::to_string(line_no) + ": " + key +
                      " = \"" + value + "\" is not a valid number");
  }
  return out;
}

}  // namespace

void apply_config_file(const std::string& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    const std::size_t eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key = value, got \"" + std::string(view) +
                        "\"");
    }
    std::string key(trim(view.substr(0, eq)));
    std::replace(key.begin(), key.end(), '-', '_');
    const std::string value = unquote(trim(view.substr(eq + 1)));

    if (key == "input") cfg.input = value;
    else if (key == "layout") cfg.layout = value;
    else if (key == "scaling") cfg.scaling = value;
    else if (key == "pca_eps") cfg.pca_eps = parse_number<double>(value, key, line_no);
    else if (key == "kappa") cfg.kappa = parse_number<int>(value, key, line_no);
    else if (key == "eps_dm") cfg.eps_dm = value;
    else if (key == "m") cfg.m = value;
    else if (key == "mhat_threshold") cfg.mhat_threshold = parse_number<double>(value, key, line_no);
    else if (key == "f0") cfg.f0 = parse_number<double>(value, key, line_no);
    else if (key == "dr") cfg.dr = value;
    else if (key == "burn_in") cfg.burn_in = value;
    else if (key == "spacing") cfg.spacing = value;
    else if (key == "chains") cfg.chains = parse_number<int>(value, key, line_no);
    else if (key == "n_mc") cfg.n_mc = parse_number<long long>(value, key, line_no);
    else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(value, key, line_no);
    else if (key == "threads") cfg.threads = parse_number<int>(value, key, line_no);
    else if (key == "out") cfg.out = value;
    else {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": unknown key \"" + key + "\"");
    }
  }
}

double parse_positive(const std::string& value, const char* key) {
  double out = 0.0;
  auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc{} || res.ptr != value.data() + value.size() ||
      !std::isfinite(out) || out <= 0.0) {
    throw ConfigError(std::string(key) + " must be \"auto\" or a positive number, got \"" +
                      value + "\"");
  }
  return out;
}

long long parse_integer(const std::string& value, const char* key) {
  long long out = 0;
  auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc{} || res.ptr != value.data() + value.size()) {
    throw ConfigError(std::string(key) + " must be \"auto\" or an integer, got \"" +
                      value + "\"");
  }
  return out;
}

Index resolve_m(const std::string& value, Index N) {
  if (is_auto(value)) return 0;
  if (value == "N") return N;
  const long long m = parse_integer(value, "m");
  if (m < 1 || m > N) {
    throw ConfigError("m must be in 1.." + std::to_string(N) + ", got " +
                      value);
  }
  return static_cast<Index>(m);
}

}  // namespace plom::cli
