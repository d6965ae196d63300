#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "uwbns/environment.hpp"
#include "uwbns/neuralnet.hpp"

namespace uwbns {

// One stored transition: encoded history, pair index, reward, successor
// history. Rewards are the Eq.-style levels for the energy-aware agent and
// +-1 for the link-condition-only variant.
struct Experience {
  std::vector<double> phi;
  int action = 0;
  double reward = 0.0;
  std::vector<double> phi_next;
  bool done = false;
};

// Bounded FIFO experience pool with uniform sampling.
class ReplayMemory {
public:
  explicit ReplayMemory(std::size_t capacity);

  void push(Experience e);
  std::size_t size() const { return buffer_.size(); }
  std::size_t capacity() const { return capacity_; }
  // Insertion-order access, 0 = oldest surviving entry.
  const Experience& at(std::size_t index) const;
  const Experience& sample(Rng& rng) const;

private:
  std::size_t capacity_;
  std::size_t head_ = 0; // slot of the oldest entry once full
  std::vector<Experience> buffer_;
};

// Linear exploration decay: eps_max at epoch 0 down to exactly eps_min at
// epoch n_epoch and beyond.
struct EpsilonSchedule {
  double eps_max = 1.0;
  double eps_min = 0.01;
  int n_epoch = 500;

  double at(int epoch) const;
};

void validate(const EpsilonSchedule& schedule);

struct AgentConfig {
  double gamma = 0.9;
  double learning_rate = 1e-3;
  std::size_t replay_capacity = 10000;
  int minibatch = 32;
  int history_depth = 1; // beta: state-action pairs fed to the network
  int target_refresh = 1; // steps between frozen-parameter syncs
};

void validate(const AgentConfig& cfg);

// Epsilon-greedy over the Q-vector; greedy ties break to the lowest index.
int select_action(std::span<const double> q_values, double epsilon, Rng& rng);

// Q_T = r (terminal) or r + gamma * max_a' Q_frozen(phi_next, a').
double compute_target(double reward, std::span<const double> phi_next,
                      const QNetwork& frozen, double gamma, bool done);

// One uniform minibatch through the frozen-target squared-error loss and one
// SGD step on the mean gradient. Returns the mean batch loss, or nullopt when
// the memory is smaller than the minibatch (caller skips training).
std::optional<double> train_step(QNetwork& net, const QNetwork& frozen,
                                 const ReplayMemory& memory, const AgentConfig& cfg,
                                 Rng& rng);

// Normalized observation: [x/(n_x-1), y/(n_y-1), move_x, move_y,
// (B_i - mean)/E ...], length 4 + n_u. Battery entries are deviations from
// the fleet mean in packet-energy units, so imbalance is O(1) regardless of
// capacity.
std::vector<double> encode_state(const MdpState& state, const GridWorld& world,
                                 double packet_energy_uj);

// Rolling window of the last beta (state, action) pairs. Slots older than the
// newest carry the state encoding plus the action index scaled to [0,1]; the
// newest slot is the current state alone, so phi ends with s_t. With beta = 1
// the encoding is exactly the current state. Before the first action the
// window is padded with copies of the reset state and action scalar 0.
class HistoryEncoder {
public:
  HistoryEncoder(int beta, int n_u, int n_a);

  int length() const;
  void reset(const std::vector<double>& state_encoding);
  void push(int action_index, const std::vector<double>& next_state_encoding);
  std::vector<double> encoded() const;

private:
  int beta_;
  int state_len_;
  int n_a_;
  std::deque<std::pair<std::vector<double>, int>> window_; // (state, action taken from it)
  std::vector<double> current_;
};

// Per-epoch aggregates used by the metrics CSVs.
struct EpisodeMetrics {
  int steps = 0;
  int c1 = 0;
  int c2 = 0;
  int c3 = 0;
  int c4 = 0;
  int nlos_links = 0; // selected links that were NLoS, both counted per step
  double cumulative_reward = 0.0;
  double mean_location_error = 0.0;
  double final_md = 0.0;
  double mean_loss = 0.0;
};

struct EpochOptions {
  double epsilon = 0.0;
  bool train = false;
  bool ne_drl_reward = false; // +1 both-LoS / -1 otherwise instead of Eq. levels
};

// Deep Q-learner: online and frozen networks, replay memory, and the
// action-selection stream. One trainer per run.
class DqnTrainer {
public:
  DqnTrainer(QNetwork net, AgentConfig cfg, std::uint64_t seed);

  // Resets the environment and runs it to termination, selecting actions
  // epsilon-greedily, optionally storing experiences and training each step.
  // Frozen parameters refresh every cfg.target_refresh steps.
  EpisodeMetrics run_epoch(Environment& env, const EpochOptions& options);

  Action greedy_action(const Environment& env) const;

  QNetwork& online() { return online_; }
  const QNetwork& online() const { return online_; }
  const QNetwork& frozen() const { return frozen_; }
  const ReplayMemory& memory() const { return memory_; }
  const AgentConfig& config() const { return cfg_; }
  std::uint64_t global_step() const { return global_step_; }

private:
  AgentConfig cfg_;
  QNetwork online_;
  QNetwork frozen_;
  ReplayMemory memory_;
  Rng rng_;
  std::uint64_t global_step_ = 0;
};

enum class PolicyKind { Dqlel, NeDrl, Rns, NnNs };

// Uniformly random beacon pair.
Action rns_action(int n_u, Rng& rng);

// The two beacons nearest the user's current cell center; distance ties
// break to the lowest beacon index.
Action nn_ns_action(const GridWorld& world, int cell_x, int cell_y);

// Runs one episode under RNS or NN-NS (no learning). The rewards recorded
// are the environment's Eq. levels.
EpisodeMetrics run_baseline_epoch(Environment& env, PolicyKind kind, Rng& rng);

} // namespace uwbns
