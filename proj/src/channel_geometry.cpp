#include "uwbns/channel_geometry.hpp"

#include <cmath>
#include <limits>

#include "uwbns/errors.hpp"

namespace uwbns {

double distance(const Point& a, const Point& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

void validate(const MeasurementModel& model) {
  if (model.los_noise_std < 0)
    throw ValidationError("measurement model: los_noise_std must be non-negative");
  if (model.nlos_bias_mean < 0)
    throw ValidationError("measurement model: nlos_bias_mean must be non-negative");
  if (model.nakagami_m < 0.5)
    throw ValidationError("measurement model: nakagami_m must be >= 0.5");
}

double true_tdoa(const Point& user, const Beacon& b_i, const Beacon& b_j) {
  return (distance(user, b_i.position) - distance(user, b_j.position)) / kPropagationSpeed;
}

double sample_channel_gain(double m, Rng& rng) {
  if (m < 0.5) throw ValidationError("channel gain: nakagami_m must be >= 0.5");
  std::gamma_distribution<double> gamma(m, 1.0 / m);
  return gamma(rng);
}

namespace {

// Per-link arrival-time error. Draw order is fixed so that seeded streams
// are reproducible: fading gain, Gaussian noise, NLoS excess delay.
double link_error(int los_flag, const MeasurementModel& model, Rng& rng) {
  double sigma = model.los_noise_std;
  if (model.fading_enabled) {
    const double gain = sample_channel_gain(model.nakagami_m, rng);
    if (gain > 0) sigma /= std::sqrt(gain);
  }
  double eta = 0.0;
  if (sigma > 0) {
    std::normal_distribution<double> noise(0.0, sigma);
    eta = noise(rng);
  }
  if (los_flag == 0 && model.nlos_bias_mean > 0) {
    std::exponential_distribution<double> excess(1.0 / model.nlos_bias_mean);
    eta += excess(rng);
  }
  return eta;
}

} // namespace

TdoaMeasurement measure_tdoa(const Point& user, const Beacon& b_i, const Beacon& b_j,
                             int flag_i, int flag_j, const MeasurementModel& model,
                             Rng& rng) {
  if (b_i.id == b_j.id) throw ValidationError("measure_tdoa: beacons must be distinct");
  validate(model);
  const double eta_i = link_error(flag_i, model, rng);
  const double eta_j = link_error(flag_j, model, rng);
  TdoaMeasurement meas;
  meas.pair_i = b_i.id;
  meas.pair_j = b_j.id;
  meas.t_ij = true_tdoa(user, b_i, b_j) + (eta_i - eta_j);
  meas.flag_i = flag_i;
  meas.flag_j = flag_j;
  return meas;
}

Point localize_pair(const TdoaMeasurement& meas, const Beacon& b_i, const Beacon& b_j,
                    std::span<const Point> cell_centers,
                    const std::optional<Point>& prev_estimate) {
  if (cell_centers.empty()) throw ValidationError("localize_pair: empty grid");

  Point ref;
  if (prev_estimate) {
    ref = *prev_estimate;
  } else {
    for (const Point& c : cell_centers) {
      ref.x += c.x;
      ref.y += c.y;
    }
    ref.x /= static_cast<double>(cell_centers.size());
    ref.y /= static_cast<double>(cell_centers.size());
  }

  std::size_t best = 0;
  double best_residual = std::numeric_limits<double>::infinity();
  double best_ref_dist = std::numeric_limits<double>::infinity();
  for (std::size_t idx = 0; idx < cell_centers.size(); ++idx) {
    const double residual = std::abs(meas.t_ij - true_tdoa(cell_centers[idx], b_i, b_j));
    const double ref_dist = distance(cell_centers[idx], ref);
    if (residual < best_residual ||
        (residual == best_residual && ref_dist < best_ref_dist)) {
      best = idx;
      best_residual = residual;
      best_ref_dist = ref_dist;
    }
  }
  return cell_centers[best];
}

double location_error(const Point& truth, const Point& estimate) {
  return distance(truth, estimate);
}

} // namespace uwbns
