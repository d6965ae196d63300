#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "uwbns/agent.hpp"
#include "uwbns/config.hpp"

namespace uwbns {

// One CSV row of the per-epoch metrics stream.
struct EpochRecord {
  int epoch = 0;
  int c1 = 0;
  int c2 = 0;
  int c3 = 0;
  int c4 = 0;
  int steps = 0;
  int nlos_links = 0;
  double cumulative_reward = 0.0;
  double normalized_reward = 0.0; // cumulative / (10 * steps)
  double mean_location_error = 0.0;
  double final_md = 0.0;
  double epsilon = 0.0; // exploration rate used; 0 for the scripted baselines
  double mean_loss = 0.0;

  static const char* csv_header();
  void write_csv_row(std::ostream& out) const;
};

EpochRecord make_epoch_record(int epoch, const EpisodeMetrics& metrics, double epsilon);

struct EcdfSeries {
  std::vector<double> values; // sorted samples
  std::vector<double> probabilities; // k/n step heights

  // Collapses duplicate values to their final step height (plotting form).
  EcdfSeries deduplicated() const;
};

// Standard empirical CDF of a non-empty sample set.
EcdfSeries compute_ecdf(std::vector<double> samples);

// World construction: explicit beacons or the default layout, plus the link
// matrix drawn from the world seed.
GridWorld build_world(const ExperimentConfig& cfg);
Environment build_environment(const ExperimentConfig& cfg);
std::vector<LayerSpec> build_layer_specs(const NetConfig& net, int n_a);
QNetwork build_network(const ExperimentConfig& cfg);

struct ExperimentResult {
  std::vector<EpochRecord> epochs;
  std::optional<QNetwork> trained; // present for the learning policies
};

// Executes cfg.schedule.n_epoch epochs of the configured policy. Training
// applies to DQLEL and NE-DRL; RNS and NN-NS just roll out. Deterministic
// under the seed tuple. on_epoch, when given, streams each record as it is
// produced.
using EpochCallback = std::function<void(const EpochRecord&)>;
ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const EpochCallback& on_epoch = {});

// Greedy (epsilon = 0) evaluation on a fresh environment built from the same
// seeds: per-epoch records over `epochs`, plus per-step location-error
// samples accumulated across episodes until `error_steps` samples exist.
struct EvaluationResult {
  std::vector<EpochRecord> epochs;
  std::vector<double> step_errors;
};

EvaluationResult evaluate_policy(const ExperimentConfig& cfg, const QNetwork* trained,
                                 int epochs, int error_steps);

struct PolicyComparisonRow {
  std::string policy;
  double mean_final_md = 0.0;
  double mean_nlos_links = 0.0; // per evaluation epoch
  double mean_location_error = 0.0;

  static const char* csv_header();
  void write_csv_row(std::ostream& out) const;
};

// Paired comparison: every config must share the world and walk seeds so all
// policies see one geometry and one user trajectory. Learning policies are
// trained first, then every policy is evaluated greedily over
// cfg.evaluation.epochs episodes.
std::vector<PolicyComparisonRow> compare_policies(const std::vector<ExperimentConfig>& cfgs);

struct TrajectoryRecord {
  int step = 0;
  Point truth;
  Point estimate;
  int action_i = 0;
  int action_j = 0;
  int flag_i = 1;
  int flag_j = 1;
  double location_error_m = 0.0;

  static const char* csv_header();
  void write_csv_row(std::ostream& out) const;
};

// Greedy rollout of a trained checkpoint for n_steps (fewer if a battery
// drains), recording true and estimated positions per step.
std::vector<TrajectoryRecord> trajectory_replay(const ExperimentConfig& cfg,
                                                const QNetwork& checkpoint, int n_steps);

void write_epoch_csv(const std::vector<EpochRecord>& records, std::ostream& out);
void write_comparison_csv(const std::vector<PolicyComparisonRow>& rows, std::ostream& out);
void write_trajectory_csv(const std::vector<TrajectoryRecord>& records, std::ostream& out);

// Config echo, seed tuple, and content hash, for reproducibility audits.
std::string run_manifest(const ExperimentConfig& cfg);

// Effective output directory: the UWBNS_OUTPUT_DIR environment variable
// overrides cfg.output_dir.
std::string resolve_output_dir(const ExperimentConfig& cfg);

} // namespace uwbns
