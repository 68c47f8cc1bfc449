#include <iostream>

#include <CLI11.hpp>

#include "plom/errors.hpp"
#include "plom/version.hpp"
#include "plom_cli/config.hpp"
#include "plom_cli/pipeline.hpp"

namespace {

// The config file is applied before flag parsing, so flags override it.  The
// option here only makes CLI11 accept and document the flag.
void add_run_options(CLI::App* cmd, plom::cli::RunConfig& cfg,
                     std::string& config_path) {
  cmd->add_option("--config", config_path,
                  "flat key = value config file; flags override");
  cmd->add_option("--input", cfg.input, "dataset file, CSV or binary");
  cmd->add_option("--layout", cfg.layout, "rows | columns (realizations)")
      ->check(CLI::IsMember({"rows", "columns"}));
  cmd->add_option("--scaling", cfg.scaling, "minmax | standard")
      ->check(CLI::IsMember({"minmax", "standard"}));
  cmd->add_option("--pca-eps", cfg.pca_eps, "PCA truncation tolerance");
  cmd->add_option("--kappa", cfg.kappa, "basis eigenvalue power, >= 0");
  cmd->add_option("--eps-dm", cfg.eps_dm, "kernel scale, auto | number");
  cmd->add_option("--m", cfg.m, "reduction order, auto | N | integer");
  cmd->add_option("--mhat-threshold", cfg.mhat_threshold,
                  "spectral drop defining m_hat");
  cmd->add_option("--f0", cfg.f0, "dissipation parameter");
  cmd->add_option("--dr", cfg.dr, "integrator step, auto | number");
  cmd->add_option("--burn-in", cfg.burn_in, "discarded steps, auto | integer");
  cmd->add_option("--spacing", cfg.spacing,
                  "steps between retained samples, auto | integer");
  cmd->add_option("--chains", cfg.chains, "independent chains");
  cmd->add_option("--n-mc", cfg.n_mc, "matrix realizations to generate");
  cmd->add_option("--seed", cfg.seed, "random stream seed");
  cmd->add_option("--threads", cfg.threads, "worker threads for the chains");
  cmd->add_option("--out", cfg.out, "output directory");
  cmd->add_flag("--manifest-only", cfg.manifest_only,
                "resolve defaults and write the manifest, skip the run");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"probabilistic learning on manifolds"};
  app.set_version_flag("--version", plom::kVersion);
  app.require_subcommand(0, 1);

  plom::cli::RunConfig cfg;
  CLI::App* fit = app.add_subcommand(
      "fit", "normalize the dataset and fit the density model");
  CLI::App* basis = app.add_subcommand(
      "basis", "build the diffusion-maps basis and pick eps / m");
  CLI::App* sample =
      app.add_subcommand("sample", "generate the learned dataset");
  CLI::App* diagnose = app.add_subcommand(
      "diagnose", "concentration curves and distances for the run");
  CLI::App* learn =
      app.add_subcommand("learn", "full pipeline: fit, basis, sample, diagnose");
  CLI::App* oracle = app.add_subcommand(
      "oracle", "exact enumeration reference for tiny ensembles");
  oracle->group("");  // hidden from help
  std::string config_path;
  for (CLI::App* cmd : {fit, basis, sample, diagnose, learn, oracle}) {
    add_run_options(cmd, cfg, config_path);
  }

  bool wants_help = false;
  for (int i = 1; i < argc; ++i) {
    const std::string_view arg = argv[i];
    if (arg == "--help" || arg == "-h" || arg == "--version") wants_help = true;
    if (arg == "--config" && i + 1 < argc) config_path = argv[i + 1];
    if (arg.rfind("--config=", 0) == 0) config_path = arg.substr(9);
  }
  if (!config_path.empty() && !wants_help) {
    try {
      plom::cli::apply_config_file(config_path, cfg);
    } catch (const plom::Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return e.exit_code();
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (fit->parsed()) return plom::cli::cmd_fit(cfg);
    if (basis->parsed()) return plom::cli::cmd_basis(cfg);
    if (sample->parsed()) return plom::cli::cmd_sample(cfg);
    if (diagnose->parsed()) return plom::cli::cmd_diagnose(cfg);
    if (learn->parsed()) return plom::cli::cmd_learn(cfg);
    if (oracle->parsed()) return plom::cli::cmd_oracle(cfg);
    std::cerr << app.help();
    return 2;
  } catch (const plom::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
