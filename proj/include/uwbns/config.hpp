#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "uwbns/agent.hpp"
#include "uwbns/channel_geometry.hpp"
#include "uwbns/energy_model.hpp"
#include "uwbns/environment.hpp"

namespace uwbns {

struct WorldConfig {
  int n_x = 5;
  int n_y = 4;
  double cell_size = 1.0;
  double p_nlos = 0.3;
  int n_u = 4; // beacon count for the generated default layout
  double reception_range = 100.0;
  std::vector<Beacon> beacons; // explicit placement; empty = default layout
};

struct NetConfig {
  int conv_filters = 16;
  int kernel_width = 3;
  int dense1 = 32;
  int dense2 = 16;
  bool softmax_head = false;
};

struct ScheduleConfig {
  int n_epoch = 500;
  int horizon = 50;
  double eps_max = 1.0;
  double eps_min = 0.01;
};

struct EvaluationConfig {
  int epochs = 100;          // greedy evaluation epochs for comparisons
  int error_eval_steps = 500; // per-step error samples for the ECDF
};

struct SeedConfig {
  std::uint64_t world = 1;
  std::uint64_t walk = 2;
  std::uint64_t agent = 3;
  std::uint64_t noise = 4;
};

// Everything a run needs; fully addressable from the JSON config file and
// validated before any epoch executes. Unknown keys anywhere are errors.
struct ExperimentConfig {
  WorldConfig world;
  EnergyParams energy;
  MeasurementModel measurement;
  RewardConfig reward;
  AgentConfig agent;
  NetConfig net;
  ScheduleConfig schedule;
  EvaluationConfig evaluation;
  std::optional<double> initial_battery_uj; // default: 1e4 * packet energy
  PolicyKind policy = PolicyKind::Dqlel;
  SeedConfig seeds;
  std::string output_dir = "out";
};

std::string policy_name(PolicyKind kind);
PolicyKind policy_from_name(const std::string& name);

// The desk-scale run profile: 5x4 grid, 4 beacons, reduced-width network,
// 500 epochs of 50 steps, and a 50-step frozen-target refresh.
ExperimentConfig default_experiment_config();

// Corner placement for 4 beacons, corners plus mid top/bottom for 6, and a
// perimeter-even spread otherwise. Beacons sit half a cell outside the grid.
std::vector<Beacon> default_beacon_layout(const WorldConfig& world);

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config_file(const std::string& path);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

// Sanity-checks every sub-config; throws ValidationError with the offending
// field in the message.
void validate(const ExperimentConfig& cfg);

// Switches the network to the full-width stack (128/128/128/64).
void apply_paper_scale(ExperimentConfig& cfg);

// FNV-1a 64-bit over the canonical config serialization; reproducibility
// fingerprint for the run manifest, not a cryptographic digest.
std::string config_content_hash(const ExperimentConfig& cfg);

} // namespace uwbns
