#include "uwbns/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <ostream>

#include "uwbns/errors.hpp"

namespace uwbns {

namespace {

// fixed shortest-roundtrip-ish formatting keeps CSV bytes reproducible
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

constexpr double kRewardNormalizer = 10.0;

} // namespace

const char* EpochRecord::csv_header() {
  return "epoch,c1,c2,c3,c4,steps,nlos_links,cumulative_reward,normalized_reward,"
         "mean_location_error,final_md,epsilon,mean_loss";
}

void EpochRecord::write_csv_row(std::ostream& out) const {
  out << epoch << ',' << c1 << ',' << c2 << ',' << c3 << ',' << c4 << ',' << steps << ','
      << nlos_links << ',' << fmt(cumulative_reward) << ',' << fmt(normalized_reward)
      << ',' << fmt(mean_location_error) << ',' << fmt(final_md) << ',' << fmt(epsilon)
      << ',' << fmt(mean_loss) << '\n';
}

EpochRecord make_epoch_record(int epoch, const EpisodeMetrics& m, double epsilon) {
  EpochRecord r;
  r.epoch = epoch;
  r.c1 = m.c1;
  r.c2 = m.c2;
  r.c3 = m.c3;
  r.c4 = m.c4;
  r.steps = m.steps;
  r.nlos_links = m.nlos_links;
  r.cumulative_reward = m.cumulative_reward;
  r.normalized_reward = m.steps ? m.cumulative_reward / (kRewardNormalizer * m.steps) : 0.0;
  r.mean_location_error = m.mean_location_error;
  r.final_md = m.final_md;
  r.epsilon = epsilon;
  r.mean_loss = m.mean_loss;
  return r;
}

EcdfSeries compute_ecdf(std::vector<double> samples) {
  if (samples.empty()) throw ValidationError("ecdf: empty sample set");
  std::sort(samples.begin(), samples.end());
  EcdfSeries series;
  const double n = static_cast<double>(samples.size());
  series.values = std::move(samples);
  series.probabilities.reserve(series.values.size());
  for (std::size_t k = 1; k <= series.values.size(); ++k)
    series.probabilities.push_back(static_cast<double>(k) / n);
  return series;
}

EcdfSeries EcdfSeries::deduplicated() const {
  EcdfSeries out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    // keep the last (highest) step of each distinct value
    if (i + 1 < values.size() && values[i + 1] == values[i]) continue;
    out.values.push_back(values[i]);
    out.probabilities.push_back(probabilities[i]);
  }
  return out;
}

GridWorld build_world(const ExperimentConfig& cfg) {
  GridWorld world;
  world.n_x = cfg.world.n_x;
  world.n_y = cfg.world.n_y;
  world.cell_size = cfg.world.cell_size;
  world.beacons =
      cfg.world.beacons.empty() ? default_beacon_layout(cfg.world) : cfg.world.beacons;
  Rng world_rng(cfg.seeds.world);
  world.link_matrix = generate_link_matrix(static_cast<int>(world.beacons.size()),
                                           world.n_l(), cfg.world.p_nlos, world_rng);
  validate(world);
  return world;
}

Environment build_environment(const ExperimentConfig& cfg) {
  const EnergyBreakdown energy = packet_energy(cfg.energy);
  const double initial =
      cfg.initial_battery_uj ? *cfg.initial_battery_uj : 1e4 * energy.e_total;
  return Environment(build_world(cfg), energy.e_total, initial, cfg.schedule.horizon,
                     cfg.reward, cfg.measurement, cfg.seeds.walk, cfg.seeds.noise);
}

std::vector<LayerSpec> build_layer_specs(const NetConfig& net, int n_a) {
  return {
      LayerSpec{LayerKind::Conv1d, net.conv_filters, net.kernel_width, 1, 0, Activation::Relu},
      LayerSpec{LayerKind::Conv1d, net.conv_filters, net.kernel_width, 1, 0, Activation::Relu},
      LayerSpec{LayerKind::Dense, net.dense1, 1, 1, 0, Activation::Relu},
      LayerSpec{LayerKind::Dense, net.dense2, 1, 1, 0, Activation::Relu},
      LayerSpec{LayerKind::Dense, n_a, 1, 1, 0, Activation::Linear},
  };
}

QNetwork build_network(const ExperimentConfig& cfg) {
  const int n_u = cfg.world.beacons.empty() ? cfg.world.n_u
                                            : static_cast<int>(cfg.world.beacons.size());
  const int n_a = action_space_size(n_u);
  const HistoryEncoder encoder(cfg.agent.history_depth, n_u, n_a);
  return QNetwork(encoder.length(), build_layer_specs(cfg.net, n_a), cfg.net.softmax_head,
                  cfg.seeds.agent);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const EpochCallback& on_epoch) {
  validate(cfg);
  Environment env = build_environment(cfg);
  const EpsilonSchedule schedule{cfg.schedule.eps_max, cfg.schedule.eps_min,
                                 cfg.schedule.n_epoch};
  ExperimentResult result;

  auto emit = [&](EpochRecord record) {
    if (on_epoch) on_epoch(record);
    result.epochs.push_back(std::move(record));
  };

  if (cfg.policy == PolicyKind::Dqlel || cfg.policy == PolicyKind::NeDrl) {
    DqnTrainer trainer(build_network(cfg), cfg.agent, cfg.seeds.agent);
    for (int epoch = 0; epoch < cfg.schedule.n_epoch; ++epoch) {
      const double eps = schedule.at(epoch);
      const EpisodeMetrics m = trainer.run_epoch(
          env, EpochOptions{eps, true, cfg.policy == PolicyKind::NeDrl});
      emit(make_epoch_record(epoch, m, eps));
    }
    result.trained = trainer.online();
  } else {
    Rng rng(cfg.seeds.agent);
    for (int epoch = 0; epoch < cfg.schedule.n_epoch; ++epoch) {
      const EpisodeMetrics m = run_baseline_epoch(env, cfg.policy, rng);
      emit(make_epoch_record(epoch, m, 0.0));
    }
  }
  return result;
}

EvaluationResult evaluate_policy(const ExperimentConfig& cfg, const QNetwork* trained,
                                 int epochs, int error_steps) {
  Environment env = build_environment(cfg);
  EvaluationResult result;
  Rng rng(cfg.seeds.agent);

  const bool learned = cfg.policy == PolicyKind::Dqlel || cfg.policy == PolicyKind::NeDrl;
  std::optional<DqnTrainer> trainer;
  if (learned) {
    if (!trained)
      throw ValidationError("evaluation: policy '" + policy_name(cfg.policy) +
                            "' needs a trained network");
    trainer.emplace(*trained, cfg.agent, cfg.seeds.agent);
  }

  auto run_one = [&](int epoch) {
    EpisodeMetrics m;
    if (learned) {
      m = trainer->run_epoch(env, EpochOptions{0.0, false, cfg.policy == PolicyKind::NeDrl});
    } else {
      m = run_baseline_epoch(env, cfg.policy, rng);
    }
    return make_epoch_record(epoch, m, 0.0);
  };

  for (int epoch = 0; epoch < epochs; ++epoch)
    result.epochs.push_back(run_one(epoch));

  // fresh paired rollouts for the per-step error samples
  Environment err_env = build_environment(cfg);
  while (static_cast<int>(result.step_errors.size()) < error_steps) {
    if (learned) {
      err_env.reset_episode();
      while (!err_env.done() &&
             static_cast<int>(result.step_errors.size()) < error_steps) {
        const StepOutcome out = err_env.apply_action(trainer->greedy_action(err_env));
        result.step_errors.push_back(out.location_error_m);
      }
    } else {
      err_env.reset_episode();
      while (!err_env.done() &&
             static_cast<int>(result.step_errors.size()) < error_steps) {
        const Action a = cfg.policy == PolicyKind::Rns
                             ? rns_action(err_env.world().n_u(), rng)
                             : nn_ns_action(err_env.world(), err_env.state().x,
                                            err_env.state().y);
        const StepOutcome out = err_env.apply_action(a);
        result.step_errors.push_back(out.location_error_m);
      }
    }
  }
  return result;
}

const char* PolicyComparisonRow::csv_header() {
  return "policy,mean_final_md,mean_nlos_links,mean_location_error";
}

void PolicyComparisonRow::write_csv_row(std::ostream& out) const {
  out << policy << ',' << fmt(mean_final_md) << ',' << fmt(mean_nlos_links) << ','
      << fmt(mean_location_error) << '\n';
}

std::vector<PolicyComparisonRow> compare_policies(const std::vector<ExperimentConfig>& cfgs) {
  if (cfgs.empty()) throw ValidationError("compare: no configs given");
  for (const ExperimentConfig& cfg : cfgs) {
    if (cfg.seeds.world != cfgs.front().seeds.world)
      throw ValidationError("compare: all configs must share the world seed");
    if (cfg.seeds.walk != cfgs.front().seeds.walk)
      throw ValidationError("compare: all configs must share the walk seed");
  }

  std::vector<PolicyComparisonRow> rows;
  for (const ExperimentConfig& cfg : cfgs) {
    const QNetwork* net = nullptr;
    std::optional<QNetwork> trained;
    if (cfg.policy == PolicyKind::Dqlel || cfg.policy == PolicyKind::NeDrl) {
      ExperimentResult training = run_experiment(cfg);
      trained = std::move(training.trained);
      net = &*trained;
    }
    const EvaluationResult eval =
        evaluate_policy(cfg, net, cfg.evaluation.epochs, cfg.evaluation.error_eval_steps);

    PolicyComparisonRow row;
    row.policy = policy_name(cfg.policy);
    double md_sum = 0.0;
    double nlos_sum = 0.0;
    for (const EpochRecord& r : eval.epochs) {
      md_sum += r.final_md;
      nlos_sum += r.nlos_links;
    }
    row.mean_final_md = md_sum / static_cast<double>(eval.epochs.size());
    row.mean_nlos_links = nlos_sum / static_cast<double>(eval.epochs.size());
    double err_sum = 0.0;
    for (double e : eval.step_errors) err_sum += e;
    row.mean_location_error =
        eval.step_errors.empty() ? 0.0 : err_sum / static_cast<double>(eval.step_errors.size());
    rows.push_back(std::move(row));
  }
  return rows;
}

const char* TrajectoryRecord::csv_header() {
  return "step,true_x,true_y,est_x,est_y,action_i,action_j,flag_i,flag_j,location_error";
}

void TrajectoryRecord::write_csv_row(std::ostream& out) const {
  out << step << ',' << fmt(truth.x) << ',' << fmt(truth.y) << ',' << fmt(estimate.x)
      << ',' << fmt(estimate.y) << ',' << action_i << ',' << action_j << ',' << flag_i
      << ',' << flag_j << ',' << fmt(location_error_m) << '\n';
}

std::vector<TrajectoryRecord> trajectory_replay(const ExperimentConfig& cfg,
                                                const QNetwork& checkpoint, int n_steps) {
  if (n_steps < 0) throw ValidationError("trajectory: n_steps must be non-negative");
  std::vector<TrajectoryRecord> records;
  if (n_steps == 0) return records;

  ExperimentConfig replay_cfg = cfg;
  replay_cfg.schedule.horizon = n_steps;
  Environment env = build_environment(replay_cfg);
  DqnTrainer trainer(checkpoint, replay_cfg.agent, replay_cfg.seeds.agent);

  env.reset_episode();
  int step = 0;
  while (!env.done() && step < n_steps) {
    const Action action = trainer.greedy_action(env);
    const StepOutcome out = env.apply_action(action);
    TrajectoryRecord rec;
    rec.step = step++;
    rec.truth = out.truth;
    rec.estimate = out.estimate;
    rec.action_i = action.i;
    rec.action_j = action.j;
    rec.flag_i = out.flag_i;
    rec.flag_j = out.flag_j;
    rec.location_error_m = out.location_error_m;
    records.push_back(rec);
  }
  return records;
}

void write_epoch_csv(const std::vector<EpochRecord>& records, std::ostream& out) {
  out << EpochRecord::csv_header() << '\n';
  for (const EpochRecord& r : records) r.write_csv_row(out);
}

void write_comparison_csv(const std::vector<PolicyComparisonRow>& rows, std::ostream& out) {
  out << PolicyComparisonRow::csv_header() << '\n';
  for (const PolicyComparisonRow& r : rows) r.write_csv_row(out);
}

void write_trajectory_csv(const std::vector<TrajectoryRecord>& records, std::ostream& out) {
  out << TrajectoryRecord::csv_header() << '\n';
  for (const TrajectoryRecord& r : records) r.write_csv_row(out);
}

std::string run_manifest(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["format"] = "uwbns-run";
  j["version"] = 1;
  j["config"] = config_to_json(cfg);
  j["content_hash"] = config_content_hash(cfg);
  return j.dump(2);
}

std::string resolve_output_dir(const ExperimentConfig& cfg) {
  if (const char* override_dir = std::getenv("UWBNS_OUTPUT_DIR"))
    if (*override_dir) return override_dir;
  return cfg.output_dir;
}

} // namespace uwbns
