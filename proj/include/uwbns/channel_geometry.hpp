#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace uwbns {

using Rng = std::mt19937_64;

inline constexpr double kPropagationSpeed = 3e8; // m/s

struct Point {
  double x = 0.0;
  double y = 0.0;
};

double distance(const Point& a, const Point& b);

// A fixed UWB receiver node.
struct Beacon {
  int id = 0;           // index in [0, n_u)
  Point position;       // meters
  double reception_range = 100.0; // meters
};

// Measurement-level noise model: Gaussian ToA noise on LoS links, plus an
// exponential positive excess delay on NLoS links. Optional Nakagami-m power
// fading scales the per-link Gaussian std by 1/sqrt(gain).
struct MeasurementModel {
  double los_noise_std = 1e-9;   // s
  double nlos_bias_mean = 10e-9; // s
  double nakagami_m = 1.0;       // shape, >= 0.5
  bool fading_enabled = false;
};

void validate(const MeasurementModel& model);

struct TdoaMeasurement {
  int pair_i = 0;
  int pair_j = 0;
  double t_ij = 0.0; // s
  int flag_i = 1;    // 1 = LoS, 0 = NLoS
  int flag_j = 1;
};

// Noiseless arrival-time difference (||user-b_i|| - ||user-b_j||) / c.
double true_tdoa(const Point& user, const Beacon& b_i, const Beacon& b_j);

// One draw from Gamma(m, 1/m); unit mean, variance 1/m. m >= 0.5.
double sample_channel_gain(double m, Rng& rng);

// Noisy TDoA for the (b_i, b_j) pair given per-link LoS flags. Per link, in
// order i then j: optional fading gain draw, Gaussian noise draw, and for
// NLoS an exponential excess-delay draw.
TdoaMeasurement measure_tdoa(const Point& user, const Beacon& b_i, const Beacon& b_j,
                             int flag_i, int flag_j, const MeasurementModel& model,
                             Rng& rng);

// Grid-residual localization: the cell center minimizing
// |t_ij - true_tdoa(center)|. Exact residual ties break by Euclidean distance
// to prev_estimate (grid centroid when absent), then by lowest cell index.
Point localize_pair(const TdoaMeasurement& meas, const Beacon& b_i, const Beacon& b_j,
                    std::span<const Point> cell_centers,
                    const std::optional<Point>& prev_estimate);

// Euclidean distance between the true and estimated positions, meters.
double location_error(const Point& truth, const Point& estimate);

} // namespace uwbns
