#pragma once

#include <cstdint>
#include <string>

#include "plom/types.hpp"

namespace plom::cli {

// Resolved run settings: built-in defaults, then the optional flat
// "key = value" config file, then command-line flags, highest wins.  Fields
// that can be derived from the data hold "auto" until the pipeline resolves
// them; every effective value ends up in the manifest.
struct RunConfig {
  std::string input;
  std::string layout = "rows";     // rows | columns
  std::string scaling = "minmax";  // minmax | standard
  double pca_eps = 1e-3;
  int kappa = 1;
  std::string eps_dm = "auto";  // auto | positive number
  std::string m = "auto";       // auto | N | integer in 1..N
  double mhat_threshold = 0.1;
  double f0 = 1.5;
  std::string dr = "auto";       // auto | positive number
  std::string burn_in = "auto";  // auto | integer >= 0
  std::string spacing = "auto";  // auto | integer >= 1
  int chains = 8;
  long long n_mc = 1000;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out = "plom-run";
  bool manifest_only = false;
};

bool is_auto(const std::string& value);

// Reads a flat config file ("key = value", '#' comments) into cfg.  Keys are
// the field names above; dashes are accepted in place of underscores.  Called
// before flag parsing so command-line values win.
void apply_config_file(const std::string& path, RunConfig& cfg);

// Strict parses for the "auto | number" fields; the key name goes into the
// config-error message.
double parse_positive(const std::string& value, const char* key);
long long parse_integer(const std::string& value, const char* key);

// auto -> 0 (resolve from the spectrum later); "N" -> the ensemble size;
// otherwise an explicit order validated against 1..N.
Index resolve_m(const std::string& value, Index N);

}  // namespace plom::cli
