#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "uwbns/channel_geometry.hpp"

namespace uwbns {

// Discretized sub-area. Cells are unit squares indexed by integer coordinates
// x in [0, n_x), y in [0, n_y); cell l = y * n_x + x selects column l of the
// link matrix. The user occupies cell centers in world coordinates.
struct GridWorld {
  int n_x = 5;
  int n_y = 4;
  double cell_size = 1.0; // meters
  std::vector<Beacon> beacons;
  // link_matrix[i][l] = 1 when the link between beacon i and cell l is LoS.
  std::vector<std::vector<int>> link_matrix;

  int n_u() const { return static_cast<int>(beacons.size()); }
  int n_l() const { return n_x * n_y; }
  int cell_index(int x, int y) const { return y * n_x + x; }
  Point cell_center(int x, int y) const {
    return {(x + 0.5) * cell_size, (y + 0.5) * cell_size};
  }
  std::vector<Point> cell_centers() const;
};

// Throws ValidationError on inconsistent extents, link-matrix shape, or a
// beacon whose reception range does not cover every cell center.
void validate(const GridWorld& world);

// Agent-observable state: cell coordinates, last move, per-beacon battery (uJ).
struct MdpState {
  int x = 0;
  int y = 0;
  int move_x = 0; // in {-1, 0, 1}
  int move_y = 0;
  std::vector<double> batteries;
};

// A beacon pair, stored with i < j. Pairs enumerate lexicographically:
// (0,1), (0,2), ..., (0,n-1), (1,2), ... and `index` is the position of the
// pair in that enumeration.
struct Action {
  int i = 0;
  int j = 1;

  static Action from_index(int index, int n_u);
  int index(int n_u) const;
};

// Number of unordered beacon pairs, n_u choose 2. n_u >= 2.
int action_space_size(int n_u);

// Connection classes of the four reward cases: (energy-optimized or not) x
// (both links LoS or any NLoS).
enum class ConnectionClass { C1, C2, C3, C4 };

struct RewardConfig {
  double md_threshold_eps = 0.8; // in (0,1); threshold is eps*E on the
                                 // mean-relative deviation scale (see
                                 // Environment::md_threshold)
  double reward_c1 = 10.0;
  double reward_c2 = 5.0;
  double reward_c3 = -5.0;
  double reward_c4 = -10.0;
};

void validate(const RewardConfig& cfg);

struct StepOutcome {
  double reward = 0.0;
  MdpState next_state;
  ConnectionClass connection_class = ConnectionClass::C1;
  double location_error_m = 0.0;
  double md_t = 0.0;
  int flag_i = 1;
  int flag_j = 1;
  Point truth;    // user position when the measurement was taken
  Point estimate; // localization output
  bool done = false;
};

// Mean deviation of remaining battery: sqrt((1/(n_u-1)) * sum((B_i - mean)^2
// / mean^2)). Requires n_u >= 2 and mean battery > 0.
double battery_deviation(const std::vector<double>& batteries);

// One uniformly random in-bounds move among the 8 neighbor directions;
// resamples until the destination satisfies the grid bounds.
MdpState random_walk_step(const MdpState& state, const GridWorld& world, Rng& rng);

// n_u x n_l i.i.d. Bernoulli matrix, entry 0 (NLoS) with probability p_nlos.
// Entries are drawn row-major (beacon-major), so a fixed seed fixes C.
std::vector<std::vector<int>> generate_link_matrix(int n_u, int n_l, double p_nlos,
                                                   Rng& rng);

// The MDP: owns the user position, beacon batteries (backed by integer
// reception counts so decrement totals stay exact), the walk and noise
// streams, and the episode lifecycle.
class Environment {
public:
  Environment(GridWorld world, double packet_energy_uj, double initial_battery_uj,
              int horizon, RewardConfig reward, MeasurementModel measurement,
              std::uint64_t walk_seed, std::uint64_t noise_seed);

  // User to a uniformly random cell, last move zeroed, batteries refilled.
  MdpState reset_episode();

  // Applies the beacon-pair action at the current cell: reads link flags,
  // decrements both selected batteries by E, computes MD_t and the reward
  // class, measures and localizes, then advances the random walk.
  StepOutcome apply_action(const Action& action);

  const MdpState& state() const { return state_; }
  const GridWorld& world() const { return world_; }
  double packet_energy_uj() const { return e_total_; }
  double initial_battery_uj() const { return initial_battery_; }
  int horizon() const { return horizon_; }
  int steps_taken() const { return steps_; }
  bool done() const { return done_; }

  // Energy-balance threshold on the MD_t scale: eps * E / mean battery.
  // Equivalently MD_t <= threshold iff the RMS battery deviation, measured
  // in packet-energy units, is at most eps.
  double md_threshold() const;

  // E * (total receptions); exact because receptions are counted.
  double total_consumed_uj() const;
  std::uint64_t total_receptions() const;
  const std::vector<std::uint64_t>& reception_counts() const { return counts_; }

private:
  double battery_of(int beacon) const;
  void refresh_state_batteries();

  GridWorld world_;
  double e_total_;
  double initial_battery_;
  int horizon_;
  RewardConfig reward_;
  MeasurementModel measurement_;
  Rng walk_rng_;
  Rng noise_rng_;

  MdpState state_;
  std::vector<std::uint64_t> counts_;
  std::optional<Point> last_estimate_;
  int steps_ = 0;
  bool done_ = true; // requires reset_episode before stepping
};

} // namespace uwbns
