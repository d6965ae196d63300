#include "uwbns/agent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "uwbns/errors.hpp"

namespace uwbns {

ReplayMemory::ReplayMemory(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw ValidationError("replay memory: capacity must be positive");
  buffer_.reserve(capacity_);
}

void ReplayMemory::push(Experience e) {
  if (buffer_.size() < capacity_) {
    buffer_.push_back(std::move(e));
    return;
  }
  buffer_[head_] = std::move(e); // overwrite the oldest
  head_ = (head_ + 1) % capacity_;
}

const Experience& ReplayMemory::at(std::size_t index) const {
  if (index >= buffer_.size()) throw ValidationError("replay memory: index out of range");
  return buffer_[(head_ + index) % buffer_.size()];
}

const Experience& ReplayMemory::sample(Rng& rng) const {
  if (buffer_.empty()) throw ValidationError("replay memory: empty");
  std::uniform_int_distribution<std::size_t> pick(0, buffer_.size() - 1);
  return buffer_[pick(rng)];
}

void validate(const EpsilonSchedule& schedule) {
  if (schedule.n_epoch < 1) throw ValidationError("schedule: n_epoch must be positive");
  if (!(schedule.eps_min >= 0 && schedule.eps_min <= schedule.eps_max &&
        schedule.eps_max <= 1.0))
    throw ValidationError("schedule: need 0 <= eps_min <= eps_max <= 1");
}

double EpsilonSchedule::at(int epoch) const {
  validate(*this);
  if (epoch <= 0) return eps_max;
  if (epoch >= n_epoch) return eps_min;
  return eps_max - (eps_max - eps_min) * (static_cast<double>(epoch) / n_epoch);
}

void validate(const AgentConfig& cfg) {
  if (!(cfg.gamma >= 0.0 && cfg.gamma <= 1.0))
    throw ValidationError("agent: gamma must lie in [0,1]");
  if (cfg.learning_rate <= 0) throw ValidationError("agent: learning rate must be positive");
  if (cfg.replay_capacity == 0)
    throw ValidationError("agent: replay capacity must be positive");
  if (cfg.minibatch < 1) throw ValidationError("agent: minibatch must be positive");
  if (cfg.history_depth < 1) throw ValidationError("agent: history depth must be >= 1");
  if (cfg.target_refresh < 1)
    throw ValidationError("agent: target refresh interval must be >= 1");
}

int select_action(std::span<const double> q_values, double epsilon, Rng& rng) {
  if (q_values.empty()) throw ValidationError("select_action: empty q vector");
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (epsilon > 0.0 && coin(rng) < epsilon) {
    std::uniform_int_distribution<int> pick(0, static_cast<int>(q_values.size()) - 1);
    return pick(rng);
  }
  int best = 0;
  for (int a = 1; a < static_cast<int>(q_values.size()); ++a)
    if (q_values[static_cast<std::size_t>(a)] > q_values[static_cast<std::size_t>(best)])
      best = a;
  return best;
}

double compute_target(double reward, std::span<const double> phi_next,
                      const QNetwork& frozen, double gamma, bool done) {
  if (done || gamma == 0.0) return reward;
  const std::vector<double> q = frozen.forward(phi_next);
  return reward + gamma * *std::max_element(q.begin(), q.end());
}

std::optional<double> train_step(QNetwork& net, const QNetwork& frozen,
                                 const ReplayMemory& memory, const AgentConfig& cfg,
                                 Rng& rng) {
  if (memory.size() < static_cast<std::size_t>(cfg.minibatch)) return std::nullopt;

  Gradients batch = net.zero_gradients();
  double loss_sum = 0.0;
  for (int m = 0; m < cfg.minibatch; ++m) {
    const Experience& e = memory.sample(rng);
    const double target = compute_target(e.reward, e.phi_next, frozen, cfg.gamma, e.done);
    double loss = 0.0;
    const Gradients g = net.backward(e.phi, e.action, target, &loss);
    loss_sum += loss;
    for (std::size_t l = 0; l < batch.weights.size(); ++l) {
      for (std::size_t i = 0; i < batch.weights[l].size(); ++i)
        batch.weights[l][i] += g.weights[l][i];
      for (std::size_t i = 0; i < batch.biases[l].size(); ++i)
        batch.biases[l][i] += g.biases[l][i];
    }
  }
  const double scale = 1.0 / cfg.minibatch;
  for (auto& layer : batch.weights)
    for (double& v : layer) v *= scale;
  for (auto& layer : batch.biases)
    for (double& v : layer) v *= scale;
  net.sgd_step(batch, cfg.learning_rate);
  return loss_sum * scale;
}

std::vector<double> encode_state(const MdpState& state, const GridWorld& world,
                                 double packet_energy_uj) {
  std::vector<double> v;
  v.reserve(4 + state.batteries.size());
  v.push_back(world.n_x > 1 ? static_cast<double>(state.x) / (world.n_x - 1) : 0.0);
  v.push_back(world.n_y > 1 ? static_cast<double>(state.y) / (world.n_y - 1) : 0.0);
  v.push_back(static_cast<double>(state.move_x));
  v.push_back(static_cast<double>(state.move_y));
  const double mean =
      std::accumulate(state.batteries.begin(), state.batteries.end(), 0.0) /
      static_cast<double>(state.batteries.size());
  for (double b : state.batteries) v.push_back((b - mean) / packet_energy_uj);
  return v;
}

HistoryEncoder::HistoryEncoder(int beta, int n_u, int n_a)
    : beta_(beta), state_len_(4 + n_u), n_a_(n_a) {
  if (beta_ < 1) throw ValidationError("history encoder: beta must be >= 1");
  if (n_u < 2 || n_a < 1) throw ValidationError("history encoder: bad action space");
}

int HistoryEncoder::length() const {
  // beta state slots; the beta-1 older slots each carry a scaled action index
  return beta_ * state_len_ + (beta_ - 1);
}

void HistoryEncoder::reset(const std::vector<double>& state_encoding) {
  if (static_cast<int>(state_encoding.size()) != state_len_)
    throw ValidationError("history encoder: state length mismatch");
  window_.clear();
  for (int k = 0; k < beta_ - 1; ++k) window_.emplace_back(state_encoding, 0);
  current_ = state_encoding;
}

void HistoryEncoder::push(int action_index, const std::vector<double>& next_state_encoding) {
  if (static_cast<int>(next_state_encoding.size()) != state_len_)
    throw ValidationError("history encoder: state length mismatch");
  if (beta_ > 1) {
    window_.emplace_back(current_, action_index);
    while (static_cast<int>(window_.size()) > beta_ - 1) window_.pop_front();
  }
  current_ = next_state_encoding;
}

std::vector<double> HistoryEncoder::encoded() const {
  std::vector<double> phi;
  phi.reserve(static_cast<std::size_t>(length()));
  for (const auto& [state, action] : window_) {
    phi.insert(phi.end(), state.begin(), state.end());
    phi.push_back(n_a_ > 1 ? static_cast<double>(action) / (n_a_ - 1) : 0.0);
  }
  phi.insert(phi.end(), current_.begin(), current_.end());
  return phi;
}

DqnTrainer::DqnTrainer(QNetwork net, AgentConfig cfg, std::uint64_t seed)
    : cfg_(cfg), online_(std::move(net)), frozen_(online_), memory_(cfg.replay_capacity),
      rng_(seed) {
  validate(cfg_);
}

EpisodeMetrics DqnTrainer::run_epoch(Environment& env, const EpochOptions& options) {
  const GridWorld& world = env.world();
  const int n_u = world.n_u();
  const int n_a = action_space_size(n_u);
  if (online_.output_length() != n_a)
    throw ValidationError("trainer: network output does not match the action space");

  HistoryEncoder history(cfg_.history_depth, n_u, n_a);
  MdpState state = env.reset_episode();
  history.reset(encode_state(state, world, env.packet_energy_uj()));
  if (online_.input_length() != history.length())
    throw ValidationError("trainer: network input does not match the state encoding");

  EpisodeMetrics metrics;
  double error_sum = 0.0;
  double loss_sum = 0.0;
  int loss_count = 0;

  while (!env.done()) {
    const std::vector<double> phi = history.encoded();
    const std::vector<double> q = online_.forward(phi);
    const int action_index = select_action(q, options.epsilon, rng_);
    const StepOutcome out = env.apply_action(Action::from_index(action_index, n_u));

    const bool both_los = out.flag_i == 1 && out.flag_j == 1;
    const double reward = options.ne_drl_reward ? (both_los ? 1.0 : -1.0) : out.reward;

    history.push(action_index, encode_state(out.next_state, world, env.packet_energy_uj()));

    if (options.train) {
      memory_.push(Experience{phi, action_index, reward, history.encoded(), out.done});
      if (global_step_ % static_cast<std::uint64_t>(cfg_.target_refresh) == 0)
        frozen_ = online_;
      if (const auto loss = train_step(online_, frozen_, memory_, cfg_, rng_)) {
        loss_sum += *loss;
        ++loss_count;
      }
      ++global_step_;
    }

    ++metrics.steps;
    switch (out.connection_class) {
      case ConnectionClass::C1: ++metrics.c1; break;
      case ConnectionClass::C2: ++metrics.c2; break;
      case ConnectionClass::C3: ++metrics.c3; break;
      case ConnectionClass::C4: ++metrics.c4; break;
    }
    metrics.nlos_links += (out.flag_i == 0 ? 1 : 0) + (out.flag_j == 0 ? 1 : 0);
    metrics.cumulative_reward += reward;
    error_sum += out.location_error_m;
    metrics.final_md = out.md_t;
  }

  metrics.mean_location_error = metrics.steps ? error_sum / metrics.steps : 0.0;
  metrics.mean_loss = loss_count ? loss_sum / loss_count : 0.0;
  return metrics;
}

Action DqnTrainer::greedy_action(const Environment& env) const {
  const GridWorld& world = env.world();
  const int n_u = world.n_u();
  HistoryEncoder history(cfg_.history_depth, n_u, action_space_size(n_u));
  history.reset(encode_state(env.state(), world, env.packet_energy_uj()));
  const std::vector<double> q = online_.forward(history.encoded());
  int best = 0;
  for (int a = 1; a < static_cast<int>(q.size()); ++a)
    if (q[static_cast<std::size_t>(a)] > q[static_cast<std::size_t>(best)]) best = a;
  return Action::from_index(best, n_u);
}

Action rns_action(int n_u, Rng& rng) {
  std::uniform_int_distribution<int> pick(0, action_space_size(n_u) - 1);
  return Action::from_index(pick(rng), n_u);
}

Action nn_ns_action(const GridWorld& world, int cell_x, int cell_y) {
  const Point user = world.cell_center(cell_x, cell_y);
  std::vector<int> order(static_cast<std::size_t>(world.n_u()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return distance(world.beacons[static_cast<std::size_t>(a)].position, user) <
           distance(world.beacons[static_cast<std::size_t>(b)].position, user);
  });
  const int i = std::min(order[0], order[1]);
  const int j = std::max(order[0], order[1]);
  return Action{i, j};
}

EpisodeMetrics run_baseline_epoch(Environment& env, PolicyKind kind, Rng& rng) {
  if (kind != PolicyKind::Rns && kind != PolicyKind::NnNs)
    throw ValidationError("baseline epoch: only RNS and NN-NS run without a network");

  env.reset_episode();
  EpisodeMetrics metrics;
  double error_sum = 0.0;
  while (!env.done()) {
    const Action action = kind == PolicyKind::Rns
                              ? rns_action(env.world().n_u(), rng)
                              : nn_ns_action(env.world(), env.state().x, env.state().y);
    const StepOutcome out = env.apply_action(action);
    ++metrics.steps;
    switch (out.connection_class) {
      case ConnectionClass::C1: ++metrics.c1; break;
      case ConnectionClass::C2: ++metrics.c2; break;
      case ConnectionClass::C3: ++metrics.c3; break;
      case ConnectionClass::C4: ++metrics.c4; break;
    }
    metrics.nlos_links += (out.flag_i == 0 ? 1 : 0) + (out.flag_j == 0 ? 1 : 0);
    metrics.cumulative_reward += out.reward;
    error_sum += out.location_error_m;
    metrics.final_md = out.md_t;
  }
  metrics.mean_location_error = metrics.steps ? error_sum / metrics.steps : 0.0;
  return metrics;
}

} // namespace uwbns
