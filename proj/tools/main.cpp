// uwbns command-line driver: training, evaluation, policy comparison, and
// inspection utilities for the UWB beacon-pair selection simulator.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "uwbns/config.hpp"
#include "uwbns/errors.hpp"
#include "uwbns/experiment.hpp"

namespace {

using namespace uwbns;

ExperimentConfig load_or_default(const std::string& config_path) {
  return config_path.empty() ? default_experiment_config() : load_config_file(config_path);
}

std::filesystem::path prepare_output_dir(const ExperimentConfig& cfg) {
  const std::filesystem::path dir = resolve_output_dir(cfg);
  std::filesystem::create_directories(dir);
  return dir;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << content;
}

int cmd_train(const std::string& config_path, bool paper_scale) {
  ExperimentConfig cfg = load_or_default(config_path);
  if (paper_scale) apply_paper_scale(cfg);
  validate(cfg);
  const auto dir = prepare_output_dir(cfg);
  write_file(dir / "manifest.json", run_manifest(cfg) + "\n");

  std::ofstream csv(dir / "metrics.csv", std::ios::binary);
  if (!csv) throw std::runtime_error("cannot open metrics.csv for writing");
  csv << EpochRecord::csv_header() << '\n';
  const ExperimentResult result = run_experiment(cfg, [&](const EpochRecord& r) {
    r.write_csv_row(csv);
    csv.flush();
  });

  if (result.trained) {
    result.trained->save_checkpoint((dir / "checkpoint.json").string());
    std::cout << "checkpoint: " << (dir / "checkpoint.json").string() << '\n';
  }
  std::cout << "metrics: " << (dir / "metrics.csv").string() << " ("
            << result.epochs.size() << " epochs)\n";
  return 0;
}

int cmd_evaluate(const std::string& config_path, const std::string& checkpoint_path,
                 int epochs_override) {
  ExperimentConfig cfg = load_or_default(config_path);
  validate(cfg);
  const int epochs = epochs_override > 0 ? epochs_override : cfg.evaluation.epochs;

  std::optional<QNetwork> net;
  const QNetwork* net_ptr = nullptr;
  if (cfg.policy == PolicyKind::Dqlel || cfg.policy == PolicyKind::NeDrl) {
    if (checkpoint_path.empty())
      throw ValidationError("evaluate: policy '" + policy_name(cfg.policy) +
                            "' requires --checkpoint");
    net = QNetwork::load_checkpoint(checkpoint_path);
    net_ptr = &*net;
  }

  const EvaluationResult eval =
      evaluate_policy(cfg, net_ptr, epochs, cfg.evaluation.error_eval_steps);
  const auto dir = prepare_output_dir(cfg);
  write_file(dir / "manifest.json", run_manifest(cfg) + "\n");
  {
    std::ofstream out(dir / "evaluation.csv", std::ios::binary);
    write_epoch_csv(eval.epochs, out);
  }
  {
    const EcdfSeries ecdf = compute_ecdf(eval.step_errors);
    std::ofstream out(dir / "eval_ecdf.csv", std::ios::binary);
    out << "location_error,probability\n";
    char buf[64];
    for (std::size_t i = 0; i < ecdf.values.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.10g,%.10g\n", ecdf.values[i],
                    ecdf.probabilities[i]);
      out << buf;
    }
  }
  std::cout << "evaluation: " << (dir / "evaluation.csv").string() << " (" << epochs
            << " epochs)\n";
  std::cout << "ecdf: " << (dir / "eval_ecdf.csv").string() << '\n';
  return 0;
}

int cmd_compare(const std::string& config_path, const std::string& policies_csv) {
  const ExperimentConfig base = load_or_default(config_path);
  validate(base);

  std::vector<ExperimentConfig> cfgs;
  std::stringstream names(policies_csv);
  std::string name;
  while (std::getline(names, name, ',')) {
    if (name.empty()) continue;
    ExperimentConfig cfg = base;
    cfg.policy = policy_from_name(name);
    cfgs.push_back(std::move(cfg));
  }
  if (cfgs.empty()) throw ValidationError("compare: no policies selected");

  const std::vector<PolicyComparisonRow> rows = compare_policies(cfgs);
  const auto dir = prepare_output_dir(base);
  write_file(dir / "manifest.json", run_manifest(base) + "\n");
  {
    std::ofstream out(dir / "comparison.csv", std::ios::binary);
    write_comparison_csv(rows, out);
  }
  write_comparison_csv(rows, std::cout);
  std::cout << "comparison: " << (dir / "comparison.csv").string() << '\n';
  return 0;
}

int cmd_trajectory(const std::string& config_path, const std::string& checkpoint_path,
                   int steps) {
  ExperimentConfig cfg = load_or_default(config_path);
  validate(cfg);
  const QNetwork net = QNetwork::load_checkpoint(checkpoint_path);
  const std::vector<TrajectoryRecord> records = trajectory_replay(cfg, net, steps);
  const auto dir = prepare_output_dir(cfg);
  {
    std::ofstream out(dir / "trajectory.csv", std::ios::binary);
    write_trajectory_csv(records, out);
  }
  std::cout << "trajectory: " << (dir / "trajectory.csv").string() << " ("
            << records.size() << " steps)\n";
  return 0;
}

int cmd_env_dump(const std::string& config_path) {
  const ExperimentConfig cfg = load_or_default(config_path);
  validate(cfg);
  const GridWorld world = build_world(cfg);

  nlohmann::json j;
  j["n_x"] = world.n_x;
  j["n_y"] = world.n_y;
  j["cell_size"] = world.cell_size;
  j["beacons"] = nlohmann::json::array();
  for (const Beacon& b : world.beacons)
    j["beacons"].push_back({{"id", b.id},
                            {"x", b.position.x},
                            {"y", b.position.y},
                            {"range", b.reception_range}});
  j["link_matrix"] = world.link_matrix;
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_show_energy(const std::string& config_path) {
  const ExperimentConfig cfg = load_or_default(config_path);
  const EnergyParams& p = cfg.energy;
  const EnergyBreakdown e = packet_energy(p);

  std::printf("%-42s %12s %s\n", "parameter", "value", "unit");
  std::printf("%-42s %12.4f %s\n", "P_COR  correlator branch", p.p_cor, "mW");
  std::printf("%-42s %12.4f %s\n", "P_ADC  analog-digital converter", p.p_adc, "mW");
  std::printf("%-42s %12.4f %s\n", "P_LNA  low-noise amplifier", p.p_lna, "mW");
  std::printf("%-42s %12.4f %s\n", "P_VGA  variable-gain amplifier", p.p_vga, "mW");
  std::printf("%-42s %12.4f %s\n", "P_GEN  pulse generator", p.p_gen, "mW");
  std::printf("%-42s %12.4f %s\n", "P_SYN  synchronizer", p.p_syn, "mW");
  std::printf("%-42s %12.4f %s\n", "P_EST  channel estimator", p.p_est, "mW");
  std::printf("%-42s %12.4f %s\n", "E_p    energy per pulse", p.e_p, "pJ");
  std::printf("%-42s %12.0f %s\n", "L_SP   preamble length", p.l_sp, "symbols");
  std::printf("%-42s %12.0f %s\n", "L_PHR  header length", p.l_phr, "bits");
  std::printf("%-42s %12.0f %s\n", "L_L    payload length", p.l_l, "bits");
  std::printf("%-42s %12d %s\n", "N_p    coding parameter", p.n_p, "-");
  std::printf("%-42s %12.4f %s\n", "R_base base data rate", p.r_base, "Mbps");
  std::printf("%-42s %12.4f %s\n", "R_b    bit rate", p.r_b, "Mbps");
  std::printf("%-42s %12d %s\n", "M      RAKE fingers", p.m_fingers, "-");
  std::printf("%-42s %12d %s\n", "rho_c  combining flag", p.rho_c, "-");
  std::printf("%-42s %12d %s\n", "rho_r  demodulation flag", p.rho_r, "-");
  std::printf("%-42s %12.4f %s\n", "rho_t  pulse coefficient", p.rho_t, "-");
  std::printf("%-42s %12.3e %s\n", "T_tr   transient duration", p.t_tr, "s");
  std::printf("%-42s %12.3e %s\n", "T_IPS  inter-packet space", p.t_ips, "s");
  std::printf("\n");
  std::printf("%-42s %12s %s\n", "derived", "value", "unit");
  std::printf("%-42s %12.4f %s\n", "P_d    detection power", e.p_d, "mW");
  std::printf("%-42s %12.4f %s\n", "P_n    remaining-components power", e.p_n, "mW");
  std::printf("%-42s %12.4f %s\n", "P_r    receiver power", e.p_r, "mW");
  std::printf("%-42s %12.6e %s\n", "T_O    SP+PHR duration", e.t_o, "s");
  std::printf("%-42s %12.6e %s\n", "T_onL  payload duration", e.t_onl, "s");
  std::printf("%-42s %12.6e %s\n", "T_on   packet duration", e.t_on, "s");
  std::printf("%-42s %12.6f %s\n", "E_O    SP+PHR energy", e.e_o, "uJ");
  std::printf("%-42s %12.6f %s\n", "E_L    payload energy", e.e_l, "uJ");
  std::printf("%-42s %12.6f %s\n", "E_RX   packet reception energy", e.e_rx, "uJ");
  std::printf("%-42s %12.6f %s\n", "E_IPS  inter-packet-space energy", e.e_ips, "uJ");
  std::printf("%-42s %12.6f %s\n", "E_tr   transient energy", e.e_tr, "uJ");
  std::printf("%-42s %12.6f %s\n", "E_ACK  acknowledgement energy", e.e_ack, "uJ");
  std::printf("%-42s %12.6f %s\n", "E      total per reception session", e.e_total, "uJ");
  return 0;
}

Point parse_point(const std::string& text, const char* what) {
  const auto comma = text.find(',');
  if (comma == std::string::npos)
    throw ValidationError(std::string(what) + ": expected 'x,y'");
  try {
    return Point{std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1))};
  } catch (const std::exception&) {
    throw ValidationError(std::string(what) + ": expected numeric 'x,y'");
  }
}

int cmd_localize(const std::string& bi, const std::string& bj, double tdoa,
                 const std::string& grid, double cell_size, const std::string& prev) {
  const Point pi = parse_point(bi, "--bi");
  const Point pj = parse_point(bj, "--bj");
  const Point extents = parse_point(grid, "--grid");

  GridWorld world;
  world.n_x = static_cast<int>(extents.x);
  world.n_y = static_cast<int>(extents.y);
  world.cell_size = cell_size;
  if (world.n_x < 1 || world.n_y < 1)
    throw ValidationError("--grid: extents must be positive integers");

  const Beacon beacon_i{0, pi, 1e9};
  const Beacon beacon_j{1, pj, 1e9};
  TdoaMeasurement meas;
  meas.pair_i = 0;
  meas.pair_j = 1;
  meas.t_ij = tdoa;

  std::optional<Point> prev_estimate;
  if (!prev.empty()) prev_estimate = parse_point(prev, "--prev");

  const std::vector<Point> centers = world.cell_centers();
  const Point estimate = localize_pair(meas, beacon_i, beacon_j, centers, prev_estimate);

  nlohmann::json j;
  j["x"] = estimate.x;
  j["y"] = estimate.y;
  std::cout << j.dump() << '\n';
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-aware UWB beacon-pair selection simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string checkpoint_path;
  std::string policies = "dqlel,ne-drl,rns,nn-ns";
  std::string bi, bj, grid = "5,4", prev;
  double tdoa = 0.0;
  double cell_size = 1.0;
  int steps = 50;
  int eval_epochs = 0;
  bool paper_scale = false;

  auto* train = app.add_subcommand("train", "Train the configured policy and stream per-epoch metrics");
  train->add_option("--config", config_path, "JSON experiment config");
  train->add_flag("--paper-scale", paper_scale, "Use the full-width 128-filter network");

  auto* evaluate = app.add_subcommand("evaluate", "Greedy evaluation of a policy / checkpoint");
  evaluate->add_option("--config", config_path, "JSON experiment config");
  evaluate->add_option("--checkpoint", checkpoint_path, "Trained network checkpoint");
  evaluate->add_option("--epochs", eval_epochs, "Evaluation epochs (default from config)");

  auto* compare = app.add_subcommand("compare", "Paired-seed comparison across policies");
  compare->add_option("--config", config_path, "JSON experiment config");
  compare->add_option("--policies", policies, "Comma-separated policy list");

  auto* trajectory = app.add_subcommand("trajectory", "Greedy rollout of a checkpoint");
  trajectory->add_option("--config", config_path, "JSON experiment config");
  trajectory->add_option("--checkpoint", checkpoint_path, "Trained network checkpoint")
      ->required();
  trajectory->add_option("--steps", steps, "Number of steps to replay");

  auto* env_dump = app.add_subcommand("env-dump", "Print the world and link matrix as JSON");
  env_dump->add_option("--config", config_path, "JSON experiment config");

  auto* show_energy = app.add_subcommand("show-energy", "Print the energy model as a table");
  show_energy->add_option("--config", config_path, "JSON experiment config");

  auto* localize = app.add_subcommand("localize", "Localize one TDoA measurement on a grid");
  localize->add_option("--bi", bi, "First beacon position 'x,y' (m)")->required();
  localize->add_option("--bj", bj, "Second beacon position 'x,y' (m)")->required();
  localize->add_option("--tdoa", tdoa, "Measured TDoA (s)")->required();
  localize->add_option("--grid", grid, "Grid extents 'n_x,n_y'");
  localize->add_option("--cell-size", cell_size, "Cell size (m)");
  localize->add_option("--prev", prev, "Previous estimate 'x,y' for tie-breaking");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*train) return cmd_train(config_path, paper_scale);
    if (*evaluate) return cmd_evaluate(config_path, checkpoint_path, eval_epochs);
    if (*compare) return cmd_compare(config_path, policies);
    if (*trajectory) return cmd_trajectory(config_path, checkpoint_path, steps);
    if (*env_dump) return cmd_env_dump(config_path);
    if (*show_energy) return cmd_show_energy(config_path);
    if (*localize) return cmd_localize(bi, bj, tdoa, grid, cell_size, prev);
  } catch (const uwbns::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
