#include "uwbns/environment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "uwbns/errors.hpp"

namespace uwbns {

std::vector<Point> GridWorld::cell_centers() const {
  std::vector<Point> centers;
  centers.reserve(static_cast<std::size_t>(n_l()));
  for (int y = 0; y < n_y; ++y)
    for (int x = 0; x < n_x; ++x)
      centers.push_back(cell_center(x, y));
  return centers;
}

void validate(const GridWorld& world) {
  if (world.n_x < 1 || world.n_y < 1)
    throw ValidationError("world: grid extents must be positive");
  if (world.cell_size <= 0) throw ValidationError("world: cell_size must be positive");
  if (world.beacons.size() < 2) throw ValidationError("world: need at least 2 beacons");
  if (world.link_matrix.size() != world.beacons.size())
    throw ValidationError("world: link matrix must have one row per beacon");
  for (const auto& row : world.link_matrix) {
    if (static_cast<int>(row.size()) != world.n_l())
      throw ValidationError("world: link matrix must have n_x*n_y columns");
    for (int v : row)
      if (v != 0 && v != 1) throw ValidationError("world: link matrix entries must be 0/1");
  }
  for (int idx = 0; idx < world.n_u(); ++idx) {
    const Beacon& b = world.beacons[idx];
    if (b.id != idx) throw ValidationError("world: beacon ids must match their order");
    if (!std::isfinite(b.position.x) || !std::isfinite(b.position.y))
      throw ValidationError("world: beacon positions must be finite");
    if (b.reception_range <= 0)
      throw ValidationError("world: reception range must be positive");
    for (int y = 0; y < world.n_y; ++y)
      for (int x = 0; x < world.n_x; ++x)
        if (distance(b.position, world.cell_center(x, y)) > b.reception_range)
          throw ValidationError("world: beacon " + std::to_string(idx) +
                                " does not cover the whole sub-area");
  }
}

int action_space_size(int n_u) {
  if (n_u < 2) throw ValidationError("action space: need at least 2 beacons");
  return n_u * (n_u - 1) / 2;
}

Action Action::from_index(int index, int n_u) {
  if (index < 0 || index >= action_space_size(n_u))
    throw ValidationError("action: pair index out of range");
  int i = 0;
  int remaining = index;
  while (remaining >= n_u - 1 - i) {
    remaining -= n_u - 1 - i;
    ++i;
  }
  return Action{i, i + 1 + remaining};
}

int Action::index(int n_u) const {
  if (i < 0 || j >= n_u || i >= j)
    throw ValidationError("action: invalid beacon pair");
  // pairs (0,1)..(0,n-1) come first, then (1,2).. and so on
  return i * n_u - i * (i + 1) / 2 + (j - i - 1);
}

void validate(const RewardConfig& cfg) {
  if (!(cfg.md_threshold_eps > 0.0 && cfg.md_threshold_eps < 1.0))
    throw ValidationError("reward: md_threshold_eps must lie in (0,1)");
}

double battery_deviation(const std::vector<double>& batteries) {
  const int n_u = static_cast<int>(batteries.size());
  if (n_u < 2) throw ValidationError("battery deviation: need at least 2 beacons");
  const double mean = std::accumulate(batteries.begin(), batteries.end(), 0.0) / n_u;
  if (mean <= 0) throw ValidationError("battery deviation: fleet fully drained");
  double sum = 0.0;
  for (double b : batteries) {
    const double d = (b - mean) / mean;
    sum += d * d;
  }
  return std::sqrt(sum / (n_u - 1));
}

MdpState random_walk_step(const MdpState& state, const GridWorld& world, Rng& rng) {
  // 8 neighbor directions, (0,0) excluded
  static constexpr int kDirs[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1},
                                      {0, 1},   {1, -1}, {1, 0},  {1, 1}};
  std::uniform_int_distribution<int> pick(0, 7);
  MdpState next = state;
  for (;;) {
    const auto& d = kDirs[pick(rng)];
    const int nx = state.x + d[0];
    const int ny = state.y + d[1];
    if (nx < 0 || nx >= world.n_x || ny < 0 || ny >= world.n_y) continue;
    next.x = nx;
    next.y = ny;
    next.move_x = d[0];
    next.move_y = d[1];
    return next;
  }
}

std::vector<std::vector<int>> generate_link_matrix(int n_u, int n_l, double p_nlos,
                                                   Rng& rng) {
  if (p_nlos < 0.0 || p_nlos > 1.0)
    throw ValidationError("link matrix: p_nlos must lie in [0,1]");
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<std::vector<int>> matrix(static_cast<std::size_t>(n_u),
                                       std::vector<int>(static_cast<std::size_t>(n_l)));
  for (int i = 0; i < n_u; ++i)
    for (int l = 0; l < n_l; ++l)
      matrix[i][l] = uniform(rng) < p_nlos ? 0 : 1;
  return matrix;
}

Environment::Environment(GridWorld world, double packet_energy_uj,
                         double initial_battery_uj, int horizon, RewardConfig reward,
                         MeasurementModel measurement, std::uint64_t walk_seed,
                         std::uint64_t noise_seed)
    : world_(std::move(world)),
      e_total_(packet_energy_uj),
      initial_battery_(initial_battery_uj),
      horizon_(horizon),
      reward_(reward),
      measurement_(measurement),
      walk_rng_(walk_seed),
      noise_rng_(noise_seed) {
  validate(world_);
  validate(reward_);
  validate(measurement_);
  if (e_total_ <= 0) throw ValidationError("environment: packet energy must be positive");
  if (initial_battery_ <= 0)
    throw ValidationError("environment: initial battery must be positive");
  if (horizon_ < 1) throw ValidationError("environment: horizon must be positive");
  counts_.assign(static_cast<std::size_t>(world_.n_u()), 0);
}

double Environment::battery_of(int beacon) const {
  const double consumed = static_cast<double>(counts_[static_cast<std::size_t>(beacon)]) * e_total_;
  return std::max(0.0, initial_battery_ - consumed);
}

void Environment::refresh_state_batteries() {
  state_.batteries.resize(static_cast<std::size_t>(world_.n_u()));
  for (int i = 0; i < world_.n_u(); ++i)
    state_.batteries[static_cast<std::size_t>(i)] = battery_of(i);
}

MdpState Environment::reset_episode() {
  std::uniform_int_distribution<int> cell(0, world_.n_l() - 1);
  const int l = cell(walk_rng_);
  state_.x = l % world_.n_x;
  state_.y = l / world_.n_x;
  state_.move_x = 0;
  state_.move_y = 0;
  std::fill(counts_.begin(), counts_.end(), 0);
  refresh_state_batteries();
  last_estimate_.reset();
  steps_ = 0;
  done_ = false;
  return state_;
}

double Environment::md_threshold() const {
  double mean = 0.0;
  for (int i = 0; i < world_.n_u(); ++i) mean += battery_of(i);
  mean /= world_.n_u();
  if (mean <= 0) return 0.0;
  return reward_.md_threshold_eps * e_total_ / mean;
}

double Environment::total_consumed_uj() const {
  return static_cast<double>(total_receptions()) * e_total_;
}

std::uint64_t Environment::total_receptions() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

StepOutcome Environment::apply_action(const Action& action) {
  if (done_) throw ValidationError("environment: episode finished, reset first");
  const int n_u = world_.n_u();
  if (action.i < 0 || action.j >= n_u || action.i >= action.j)
    throw ValidationError("environment: invalid action pair");

  StepOutcome out;
  // link flags come from the column of the cell occupied BEFORE the walk
  const int col = world_.cell_index(state_.x, state_.y);
  out.flag_i = world_.link_matrix[static_cast<std::size_t>(action.i)][static_cast<std::size_t>(col)];
  out.flag_j = world_.link_matrix[static_cast<std::size_t>(action.j)][static_cast<std::size_t>(col)];

  // both selected beacons spend one reception; a beacon without a full
  // packet's worth of charge clamps at zero and ends the episode
  bool drained = false;
  for (int b : {action.i, action.j}) {
    if (battery_of(b) < e_total_) drained = true;
    counts_[static_cast<std::size_t>(b)] += 1;
  }
  refresh_state_batteries();

  out.md_t = battery_deviation(state_.batteries);
  const bool energy_ok = out.md_t <= md_threshold();
  const bool both_los = out.flag_i == 1 && out.flag_j == 1;
  if (both_los) {
    out.connection_class = energy_ok ? ConnectionClass::C1 : ConnectionClass::C2;
    out.reward = energy_ok ? reward_.reward_c1 : reward_.reward_c2;
  } else {
    out.connection_class = energy_ok ? ConnectionClass::C3 : ConnectionClass::C4;
    out.reward = energy_ok ? reward_.reward_c3 : reward_.reward_c4;
  }

  out.truth = world_.cell_center(state_.x, state_.y);
  const Beacon& b_i = world_.beacons[static_cast<std::size_t>(action.i)];
  const Beacon& b_j = world_.beacons[static_cast<std::size_t>(action.j)];
  const TdoaMeasurement meas =
      measure_tdoa(out.truth, b_i, b_j, out.flag_i, out.flag_j, measurement_, noise_rng_);
  const std::vector<Point> centers = world_.cell_centers();
  out.estimate = localize_pair(meas, b_i, b_j, centers, last_estimate_);
  out.location_error_m = location_error(out.truth, out.estimate);
  last_estimate_ = out.estimate;

  state_ = random_walk_step(state_, world_, walk_rng_);
  refresh_state_batteries();

  ++steps_;
  bool any_low = drained;
  for (int b = 0; b < n_u; ++b)
    if (battery_of(b) < e_total_) any_low = true;
  done_ = any_low || steps_ >= horizon_;

  out.next_state = state_;
  out.done = done_;
  return out;
}

} // namespace uwbns
