#include "plom_cli/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "plom/errors.hpp"
#include "plom/mixture.hpp"
#include "plom/version.hpp"

namespace plom::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class StageTimer {
 public:
  StageTimer(PipelineState& state, std::string name)
      : state_(state),
        name_(std::move(name)),
        start_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    const auto end = std::chrono::steady_clock::now();
    state_.timings_ms[name_] =
        std::chrono::duration<double, std::milli>(end - start_).count();
  }

 private:
  PipelineState& state_;
  std::string name_;
  std::chrono::steady_clock::time_point start_;
};

Layout parse_layout(const std::string& name) {
  if (name == "rows") return Layout::kRowsAreSamples;
  if (name == "columns") return Layout::kColumnsAreSamples;
  throw ConfigError("layout must be rows or columns, got \"" + name + "\"");
}

IsdeConfig isde_from(const RunConfig& c) {
  IsdeConfig icfg;
  icfg.f0 = c.f0;
  icfg.dr = is_auto(c.dr) ? 0.0 : parse_positive(c.dr, "dr");
  if (is_auto(c.burn_in)) {
    icfg.burn_in = -1;
  } else {
    const long long burn = parse_integer(c.burn_in, "burn_in");
    if (burn < 0) throw ConfigError("burn_in must be >= 0");
    icfg.burn_in = static_cast<Index>(burn);
  }
  if (is_auto(c.spacing)) {
    icfg.spacing = -1;
  } else {
    const long long sp = parse_integer(c.spacing, "spacing");
    if (sp < 1) throw ConfigError("spacing must be >= 1");
    icfg.spacing = static_cast<Index>(sp);
  }
  icfg.n_chains = c.chains;
  icfg.n_threads = c.threads;
  icfg.n_mc = static_cast<Index>(c.n_mc);
  icfg.seed = c.seed;
  return icfg;
}

void ensure_out_dir(const std::string& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) {
    throw IoError("cannot create output directory " + out + ": " + ec.message());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write to " + path.string() + " failed");
}

std::string fmt_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json vector_json(const Vector& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

void write_scaling(const RunConfig& config, PipelineState& state) {
  json j;
  j["mode"] = scaling_mode_name(state.scaling.mode);
  j["shift"] = vector_json(state.scaling.shift);
  j["scale"] = vector_json(state.scaling.scale);
  json flags = json::array();
  for (auto f : state.scaling.constant) flags.push_back(f != 0);
  j["constant"] = flags;
  write_text(fs::path(config.out) / "scaling.json", j.dump(2) + "\n");
  state.artifacts["scaling"] = "scaling.json";
}

void write_pca(const RunConfig& config, PipelineState& state) {
  write_text(fs::path(config.out) / "pca.json",
             to_json_string(state.pca) + "\n");
  state.artifacts["pca"] = "pca.json";
}

void write_eta(const RunConfig& config, PipelineState& state) {
  RawDataset eta_set;
  eta_set.points = state.eta.eta;
  save_dataset_binary(eta_set, fs::path(config.out) / "eta.bin");
  state.artifacts["eta"] = "eta.bin";
}

void write_scan(const RunConfig& config, PipelineState& state) {
  std::string text = "eps,mhat,lambda_2,lambda_mhat\n";
  if (!state.scan.rows.empty()) {
    for (const auto& row : state.scan.rows) {
      text += fmt_g17(row.eps) + "," + std::to_string(row.mhat) + "," +
              fmt_g17(row.lambda2) + "," + fmt_g17(row.lambda_mhat) + "\n";
    }
  } else {
    const Vector& lambda = state.basis.lambda;
    const double l2 = lambda.size() > 1 ? lambda[1] : lambda[0];
    text += fmt_g17(state.eps_used) + "," + std::to_string(state.m_hat) + "," +
            fmt_g17(l2) + "," + fmt_g17(lambda[state.m_hat - 1]) + "\n";
  }
  write_text(fs::path(config.out) / "eps_scan.csv", text);
  state.artifacts["eps_scan"] = "eps_scan.csv";
}

void write_spectrum(const RunConfig& config, PipelineState& state) {
  std::string text = "alpha,lambda\n";
  for (Index k = 0; k < state.basis.lambda.size(); ++k) {
    text += std::to_string(k + 1) + "," + fmt_g17(state.basis.lambda[k]) + "\n";
  }
  write_text(fs::path(config.out) / "spectrum.csv", text);
  state.artifacts["spectrum"] = "spectrum.csv";
}

void write_archive(const RunConfig& config, PipelineState& state) {
  const LearnedArchive archive =
      reconstruct_learned(state.learned, state.pca, state.scaling, state.basis);
  save_learned(archive, fs::path(config.out) / "learned.bin");
  state.artifacts["learned"] = "learned.bin";
  state.artifacts["learned_meta"] = "learned.bin.meta.json";
}

void write_curves(const RunConfig& config, PipelineState& state) {
  save_curves_csv(state.curves, fs::path(config.out) / "curves.csv");
  state.artifacts["curves"] = "curves.csv";
}

void write_summary(const RunConfig& config, PipelineState& state) {
  json j;
  j["m_opt"] = state.m_used;
  j["eps_opt"] = state.eps_used;
  j["d_sim_m_opt"] = state.sim_m->value;
  j["d_sim_m_opt_stderr"] = state.sim_m->std_error;
  j["d_sim_N"] = state.sim_full->value;
  j["d_sim_N_stderr"] = state.sim_full->std_error;
  j["d_maxent_m_opt"] =
      d_maxent(state.eta.N(), state.m_used);
  j["m_fd"] = state.fd_selection->m_opt;
  j["fd_sandwich_holds"] = state.fd_selection->sandwich_holds;
  write_text(fs::path(config.out) / "summary.json", j.dump(2) + "\n");
  state.artifacts["summary"] = "summary.json";
}

json config_json(const RunConfig& c) {
  json j;
  j["input"] = c.input;
  j["layout"] = c.layout;
  j["scaling"] = c.scaling;
  j["pca_eps"] = c.pca_eps;
  j["kappa"] = c.kappa;
  j["eps_dm"] = c.eps_dm;
  j["m"] = c.m;
  j["mhat_threshold"] = c.mhat_threshold;
  j["f0"] = c.f0;
  j["dr"] = c.dr;
  j["burn_in"] = c.burn_in;
  j["spacing"] = c.spacing;
  j["chains"] = c.chains;
  j["n_mc"] = c.n_mc;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["out"] = c.out;
  return j;
}

json derived_json(const RunConfig& config, const PipelineState& state) {
  json d;
  if (state.raw.points.size() > 0) {
    d["N"] = state.raw.N();
    d["n"] = state.raw.n();
    d["nu"] = state.eta.nu();
    d["err_pca"] = state.pca.err_pca;
    d["s"] = state.kde->s();
    d["s_hat"] = state.kde->s_hat();
    const IsdeSchedule sched =
        resolve_schedule(isde_from(config), state.kde->s_hat());
    d["dr"] = sched.dr;
    d["burn_in"] = sched.burn_in;
    d["spacing"] = sched.spacing;
  }
  if (state.basis.psi.size() > 0) {
    d["eps_dm"] = state.eps_used;
    d["m_hat"] = state.m_hat;
    d["m"] = state.m_used;
    const Index head = std::min<Index>(8, state.basis.lambda.size());
    d["lambda_head"] = vector_json(state.basis.lambda.head(head));
  }
  if (state.sim_m) {
    d["d_sim_m"] = state.sim_m->value;
    d["d_sim_m_stderr"] = state.sim_m->std_error;
    d["d_sim_N"] = state.sim_full->value;
    d["d_sim_N_stderr"] = state.sim_full->std_error;
    d["m_fd"] = state.fd_selection->m_opt;
    d["fd_sandwich_holds"] = state.fd_selection->sandwich_holds;
  }
  return d;
}

void write_manifest(const RunConfig& config, PipelineState& state,
                    const char* command) {
  json j;
  j["version"] = kVersion;
  j["command"] = command;
  j["config"] = config_json(config);
  j["derived"] = derived_json(config, state);
  j["artifacts"] = state.artifacts;
  j["timings_ms"] = state.timings_ms;
  write_text(fs::path(config.out) / "manifest.json", j.dump(2) + "\n");
}

}  // namespace

void stage_fit(const RunConfig& config, PipelineState& state) {
  StageTimer timer(state, "fit");
  if (config.input.empty()) throw ConfigError("input is required");
  if (!fs::exists(config.input)) {
    throw ConfigError("input file does not exist: " + config.input);
  }
  state.raw = load_dataset(config.input, parse_layout(config.layout));
  state.scaling =
      fit_scaling(state.raw, scaling_mode_from_name(config.scaling));
  RawDataset scaled;
  scaled.points = apply_scaling(state.scaling, state.raw.points);
  scaled.feature_names = state.raw.feature_names;
  state.pca = fit_pca(scaled, config.pca_eps);
  state.eta = normalize(state.pca, scaled);
  state.kde.emplace(state.eta);
  std::cout << "[fit] N=" << state.raw.N() << " n=" << state.raw.n()
            << " nu=" << state.eta.nu() << " err_pca=" << state.pca.err_pca
            << " s=" << state.kde->s() << " s_hat=" << state.kde->s_hat()
            << "\n";
}

void stage_basis(const RunConfig& config, PipelineState& state) {
  StageTimer timer(state, "basis");
  const Matrix& eta = state.eta.eta;
  const Index N = eta.cols();
  if (is_auto(config.eps_dm)) {
    state.scan =
        select_eps_m(eta, default_eps_grid(eta), config.mhat_threshold);
    state.eps_used = state.scan.eps_opt;
  } else {
    state.eps_used = parse_positive(config.eps_dm, "eps_dm");
  }
  const DiffusionKernel kernel = build_kernel(eta, state.eps_used);
  state.basis = solve_basis(kernel, config.kappa);
  state.m_hat = m_hat_from_spectrum(state.basis.lambda, config.mhat_threshold);
  const Index m = resolve_m(config.m, N);
  state.m_used = m == 0 ? state.m_hat : m;
  state.basis = reduce(state.basis, state.m_used);
  std::cout << "[basis] eps_dm=" << state.eps_used
            << (state.scan.rows.empty() ? "" : " (auto)")
            << " m_hat=" << state.m_hat << " m=" << state.m_used << "\n";
}

void stage_sample(const RunConfig& config, PipelineState& state) {
  StageTimer timer(state, "sample");
  state.learned = generate(state.eta.eta, *state.kde, state.basis,
                           isde_from(config));
  const IsdeSchedule& sched = state.learned.schedule;
  std::cout << "[sample] chains=" << config.chains << " dr=" << sched.dr
            << " burn_in=" << sched.burn_in << " spacing=" << sched.spacing
            << " n_mc=" << config.n_mc << "\n";
}

void stage_diagnose(const RunConfig& config, PipelineState& state) {
  StageTimer timer(state, "diagnose");
  const Matrix& eta = state.eta.eta;
  const Index N = eta.cols();
  state.sim_m = d_sim(state.learned, eta);
  if (state.m_used == N) {
    state.sim_full = state.sim_m;
  } else {
    const DiffusionBasis full = reduce(state.basis, N);
    state.learned_full = generate(eta, *state.kde, full, isde_from(config));
    state.sim_full = d_sim(state.learned_full, eta);
  }
  std::map<Index, DsimPoint> points;
  points[state.m_used] = *state.sim_m;
  points[N] = *state.sim_full;
  state.curves = build_curves(eta, state.basis, points);
  state.fd_selection = select_m_by_fd(state.curves);
  std::cout << "[diagnose] d_sim(" << state.m_used
            << ")=" << state.sim_m->value << " +/- " << state.sim_m->std_error
            << " d_sim(" << N << ")=" << state.sim_full->value << " +/- "
            << state.sim_full->std_error << " m_fd=" << state.fd_selection->m_opt
            << "\n";
}

int cmd_fit(const RunConfig& config) {
  ensure_out_dir(config.out);
  PipelineState state;
  stage_fit(config, state);
  if (!config.manifest_only) {
    write_scaling(config, state);
    write_pca(config, state);
    write_eta(config, state);
  }
  write_manifest(config, state, "fit");
  return 0;
}

int cmd_basis(const RunConfig& config) {
  ensure_out_dir(config.out);
  PipelineState state;
  stage_fit(config, state);
  stage_basis(config, state);
  if (!config.manifest_only) {
    write_scan(config, state);
    write_spectrum(config, state);
  }
  write_manifest(config, state, "basis");
  return 0;
}

int cmd_sample(const RunConfig& config) {
  ensure_out_dir(config.out);
  PipelineState state;
  stage_fit(config, state);
  stage_basis(config, state);
  if (!config.manifest_only) {
    stage_sample(config, state);
    write_archive(config, state);
  }
  write_manifest(config, state, "sample");
  return 0;
}

int cmd_diagnose(const RunConfig& config) {
  ensure_out_dir(config.out);
  PipelineState state;
  stage_fit(config, state);
  stage_basis(config, state);
  if (!config.manifest_only) {
    stage_sample(config, state);
    stage_diagnose(config, state);
    write_curves(config, state);
    write_summary(config, state);
  }
  write_manifest(config, state, "diagnose");
  return 0;
}

int cmd_learn(const RunConfig& config) {
  ensure_out_dir(config.out);
  const fs::path marker = fs::path(config.out) / "FAILED";
  std::error_code ec;
  fs::remove(marker, ec);  // stale marker from an earlier run

  PipelineState state;
  const char* stage = "fit";
  try {
    stage_fit(config, state);
    if (!config.manifest_only) {
      write_scaling(config, state);
      write_pca(config, state);
      write_eta(config, state);
    }
    stage = "basis";
    stage_basis(config, state);
    if (!config.manifest_only) {
      write_scan(config, state);
      write_spectrum(config, state);
    }
    if (!config.manifest_only) {
      stage = "sample";
      stage_sample(config, state);
      write_archive(config, state);
      stage = "diagnose";
      stage_diagnose(config, state);
      write_curves(config, state);
      write_summary(config, state);
    }
  } catch (const std::exception& e) {
    try {
      write_text(marker, std::string(stage) + ": " + e.what() + "\n");
    } catch (...) {
      // the marker is best-effort; the original error is what matters
    }
    throw;
  }
  write_manifest(config, state, "learn");
  return 0;
}

int cmd_oracle(const RunConfig& config) {
  PipelineState state;
  stage_fit(config, state);
  stage_basis(config, state);
  const Matrix& eta = state.eta.eta;

  const MixtureModel model = enumerate_mixture(eta, state.basis);
  const MixtureMoments moments = closed_form_moments(model);
  const SumIdentityReport sums = verify_sum_identities(eta);
  const double eps_value = eps_d(eta, state.basis, state.m_used);

  json j;
  j["N"] = model.N;
  j["nu"] = model.nu;
  j["m"] = model.m;
  j["components"] = enumeration_size(model.N);
  j["exact_dsq"] = exact_dsq(model);
  j["exact_hd"] = exact_hd(model);
  j["f_d"] = f_d(model.N, model.nu, eps_value, model.m);
  j["mean_fro"] = moments.mean.norm();
  j["second_moment"] = moments.second_moment;
  j["sum_gaps"] = {sums.eta_gap, sums.m_gap, sums.b_gap};
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace plom::cli
