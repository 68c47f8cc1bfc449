#pragma once

#include <map>
#include <optional>
#include <string>

#include "plom/dataset.hpp"
#include "plom/diagnostics.hpp"
#include "plom/diffusion.hpp"
#include "plom/kde.hpp"
#include "plom/pca.hpp"
#include "plom/sampler.hpp"
#include "plom_cli/config.hpp"

namespace plom::cli {

// Everything the stages compute, in pipeline order.  Commands run the prefix
// of stages they need and serialize from here; the manifest reports whatever
// is populated.
struct PipelineState {
  RawDataset raw;
  ScalingSpec scaling;
  PcaModel pca;
  NormalizedMatrix eta;
  std::optional<KdeModel> kde;

  EpsSelection scan;  // rows empty when eps_dm was explicit
  double eps_used = 0.0;
  Index m_hat = 0;
  Index m_used = 0;
  DiffusionBasis basis;  // solved, reduced at m_used

  LearnedSet learned;       // at m_used
  LearnedSet learned_full;  // at N, for the no-reduction reference distance
  std::optional<DsimPoint> sim_m;
  std::optional<DsimPoint> sim_full;
  ConcentrationCurves curves;
  std::optional<MSelection> fd_selection;

  std::map<std::string, double> timings_ms;
  std::map<std::string, std::string> artifacts;  // name -> path under out/
};

void stage_fit(const RunConfig& config, PipelineState& state);
void stage_basis(const RunConfig& config, PipelineState& state);
void stage_sample(const RunConfig& config, PipelineState& state);
void stage_diagnose(const RunConfig& config, PipelineState& state);

// Subcommand bodies; they throw plom::Error, main maps it to the exit code.
int cmd_fit(const RunConfig& config);
int cmd_basis(const RunConfig& config);
int cmd_sample(const RunConfig& config);
int cmd_diagnose(const RunConfig& config);
int cmd_learn(const RunConfig& config);
int cmd_oracle(const RunConfig& config);

}  // namespace plom::cli
