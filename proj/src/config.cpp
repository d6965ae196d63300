#include "uwbns/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <set>

#include "uwbns/errors.hpp"

namespace uwbns {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& section,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object())
    throw ValidationError("config: section '" + section + "' must be an object");
  const std::set<std::string> known(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!known.count(key))
      throw ValidationError("config: unknown key '" + section + "." + key + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& target) {
  if (obj.contains(key)) target = obj.at(key).get<T>();
}

WorldConfig parse_world(const json& j) {
  WorldConfig w;
  check_keys(j, "world",
             {"n_x", "n_y", "cell_size", "p_nlos", "n_u", "reception_range", "beacons"});
  read(j, "n_x", w.n_x);
  read(j, "n_y", w.n_y);
  read(j, "cell_size", w.cell_size);
  read(j, "p_nlos", w.p_nlos);
  read(j, "reception_range", w.reception_range);
  if (j.contains("n_u") && j.contains("beacons"))
    throw ValidationError("config: world.n_u and world.beacons are mutually exclusive");
  read(j, "n_u", w.n_u);
  if (j.contains("beacons")) {
    int id = 0;
    for (const auto& b : j.at("beacons")) {
      check_keys(b, "world.beacons[]", {"x", "y", "range"});
      Beacon beacon;
      beacon.id = id++;
      beacon.position.x = b.at("x").get<double>();
      beacon.position.y = b.at("y").get<double>();
      beacon.reception_range = w.reception_range;
      read(b, "range", beacon.reception_range);
      w.beacons.push_back(beacon);
    }
    w.n_u = static_cast<int>(w.beacons.size());
  }
  return w;
}

EnergyParams parse_energy(const json& j) {
  EnergyParams e;
  check_keys(j, "energy",
             {"p_cor", "p_adc", "p_lna", "p_vga", "p_gen", "p_syn", "p_est", "e_p",
              "l_sp", "l_phr", "l_l", "n_p", "r_base", "r_b", "m_fingers", "rho_c",
              "rho_r", "rho_t", "t_tr", "t_ips"});
  read(j, "p_cor", e.p_cor);
  read(j, "p_adc", e.p_adc);
  read(j, "p_lna", e.p_lna);
  read(j, "p_vga", e.p_vga);
  read(j, "p_gen", e.p_gen);
  read(j, "p_syn", e.p_syn);
  read(j, "p_est", e.p_est);
  read(j, "e_p", e.e_p);
  read(j, "l_sp", e.l_sp);
  read(j, "l_phr", e.l_phr);
  read(j, "l_l", e.l_l);
  read(j, "n_p", e.n_p);
  read(j, "r_base", e.r_base);
  read(j, "r_b", e.r_b);
  read(j, "m_fingers", e.m_fingers);
  read(j, "rho_c", e.rho_c);
  read(j, "rho_r", e.rho_r);
  read(j, "rho_t", e.rho_t);
  read(j, "t_tr", e.t_tr);
  read(j, "t_ips", e.t_ips);
  return e;
}

MeasurementModel parse_measurement(const json& j) {
  MeasurementModel m;
  check_keys(j, "measurement",
             {"los_noise_std", "nlos_bias_mean", "nakagami_m", "fading_enabled"});
  read(j, "los_noise_std", m.los_noise_std);
  read(j, "nlos_bias_mean", m.nlos_bias_mean);
  read(j, "nakagami_m", m.nakagami_m);
  read(j, "fading_enabled", m.fading_enabled);
  return m;
}

RewardConfig parse_reward(const json& j) {
  RewardConfig r;
  check_keys(j, "reward", {"md_threshold_eps", "r_c1", "r_c2", "r_c3", "r_c4"});
  read(j, "md_threshold_eps", r.md_threshold_eps);
  read(j, "r_c1", r.reward_c1);
  read(j, "r_c2", r.reward_c2);
  read(j, "r_c3", r.reward_c3);
  read(j, "r_c4", r.reward_c4);
  return r;
}

AgentConfig parse_agent(const json& j) {
  AgentConfig a;
  a.target_refresh = 50; // run-profile default; the literal single-step rule
                         // stays available through this key
  check_keys(j, "agent",
             {"gamma", "learning_rate", "replay_capacity", "minibatch", "history_depth",
              "target_refresh"});
  read(j, "gamma", a.gamma);
  read(j, "learning_rate", a.learning_rate);
  read(j, "replay_capacity", a.replay_capacity);
  read(j, "minibatch", a.minibatch);
  read(j, "history_depth", a.history_depth);
  read(j, "target_refresh", a.target_refresh);
  return a;
}

NetConfig parse_net(const json& j) {
  NetConfig n;
  check_keys(j, "net", {"conv_filters", "kernel_width", "dense1", "dense2", "softmax_head"});
  read(j, "conv_filters", n.conv_filters);
  read(j, "kernel_width", n.kernel_width);
  read(j, "dense1", n.dense1);
  read(j, "dense2", n.dense2);
  read(j, "softmax_head", n.softmax_head);
  return n;
}

ScheduleConfig parse_schedule(const json& j) {
  ScheduleConfig s;
  check_keys(j, "schedule", {"n_epoch", "horizon", "eps_max", "eps_min"});
  read(j, "n_epoch", s.n_epoch);
  read(j, "horizon", s.horizon);
  read(j, "eps_max", s.eps_max);
  read(j, "eps_min", s.eps_min);
  return s;
}

EvaluationConfig parse_evaluation(const json& j) {
  EvaluationConfig e;
  check_keys(j, "evaluation", {"epochs", "error_eval_steps"});
  read(j, "epochs", e.epochs);
  read(j, "error_eval_steps", e.error_eval_steps);
  return e;
}

SeedConfig parse_seeds(const json& j) {
  SeedConfig s;
  check_keys(j, "seeds", {"world", "walk", "agent", "noise"});
  read(j, "world", s.world);
  read(j, "walk", s.walk);
  read(j, "agent", s.agent);
  read(j, "noise", s.noise);
  return s;
}

} // namespace

std::string policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::Dqlel: return "dqlel";
    case PolicyKind::NeDrl: return "ne-drl";
    case PolicyKind::Rns: return "rns";
    case PolicyKind::NnNs: return "nn-ns";
  }
  return "dqlel";
}

PolicyKind policy_from_name(const std::string& name) {
  if (name == "dqlel") return PolicyKind::Dqlel;
  if (name == "ne-drl") return PolicyKind::NeDrl;
  if (name == "rns") return PolicyKind::Rns;
  if (name == "nn-ns") return PolicyKind::NnNs;
  throw ValidationError("config: unknown policy '" + name +
                        "' (expected dqlel, ne-drl, rns, or nn-ns)");
}

std::vector<Beacon> default_beacon_layout(const WorldConfig& world) {
  const double margin = world.cell_size / 2.0;
  const double x0 = -margin;
  const double x1 = world.n_x * world.cell_size + margin;
  const double xm = (x0 + x1) / 2.0;
  const double y0 = -margin;
  const double y1 = world.n_y * world.cell_size + margin;

  std::vector<Point> points;
  if (world.n_u == 4) {
    points = {{x0, y0}, {x1, y0}, {x0, y1}, {x1, y1}};
  } else if (world.n_u == 6) {
    points = {{x0, y0}, {xm, y0}, {x1, y0}, {x0, y1}, {xm, y1}, {x1, y1}};
  } else {
    // evenly spaced along the boundary rectangle, starting at (x0, y0)
    const double w = x1 - x0;
    const double h = y1 - y0;
    const double perimeter = 2.0 * (w + h);
    for (int k = 0; k < world.n_u; ++k) {
      double s = perimeter * k / world.n_u;
      Point p;
      if (s < w) {
        p = {x0 + s, y0};
      } else if (s < w + h) {
        p = {x1, y0 + (s - w)};
      } else if (s < 2 * w + h) {
        p = {x1 - (s - w - h), y1};
      } else {
        p = {x0, y1 - (s - 2 * w - h)};
      }
      points.push_back(p);
    }
  }

  std::vector<Beacon> beacons;
  for (int id = 0; id < static_cast<int>(points.size()); ++id)
    beacons.push_back(
        Beacon{id, points[static_cast<std::size_t>(id)], world.reception_range});
  return beacons;
}

ExperimentConfig default_experiment_config() {
  return parse_config(nlohmann::json::object());
}

ExperimentConfig parse_config(const nlohmann::json& j) {
  check_keys(j, "<root>",
             {"world", "energy", "measurement", "reward", "agent", "net", "schedule",
              "evaluation", "initial_battery_uj", "policy", "seeds", "output_dir"});
  ExperimentConfig cfg;
  if (j.contains("world")) cfg.world = parse_world(j.at("world"));
  if (j.contains("energy")) cfg.energy = parse_energy(j.at("energy"));
  if (j.contains("measurement")) cfg.measurement = parse_measurement(j.at("measurement"));
  if (j.contains("reward")) cfg.reward = parse_reward(j.at("reward"));
  cfg.agent = parse_agent(j.contains("agent") ? j.at("agent") : nlohmann::json::object());
  if (j.contains("net")) cfg.net = parse_net(j.at("net"));
  if (j.contains("schedule")) cfg.schedule = parse_schedule(j.at("schedule"));
  if (j.contains("evaluation")) cfg.evaluation = parse_evaluation(j.at("evaluation"));
  if (j.contains("initial_battery_uj"))
    cfg.initial_battery_uj = j.at("initial_battery_uj").get<double>();
  if (j.contains("policy")) cfg.policy = policy_from_name(j.at("policy").get<std::string>());
  if (j.contains("seeds")) cfg.seeds = parse_seeds(j.at("seeds"));
  if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config: bad JSON in '" + path + "': " + e.what());
  }
  return parse_config(j);
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["world"] = {{"n_x", cfg.world.n_x},
                {"n_y", cfg.world.n_y},
                {"cell_size", cfg.world.cell_size},
                {"p_nlos", cfg.world.p_nlos},
                {"reception_range", cfg.world.reception_range}};
  if (cfg.world.beacons.empty()) {
    j["world"]["n_u"] = cfg.world.n_u;
  } else {
    auto beacons = nlohmann::json::array();
    for (const Beacon& b : cfg.world.beacons)
      beacons.push_back(
          {{"x", b.position.x}, {"y", b.position.y}, {"range", b.reception_range}});
    j["world"]["beacons"] = beacons;
  }
  j["energy"] = {{"p_cor", cfg.energy.p_cor},   {"p_adc", cfg.energy.p_adc},
                 {"p_lna", cfg.energy.p_lna},   {"p_vga", cfg.energy.p_vga},
                 {"p_gen", cfg.energy.p_gen},   {"p_syn", cfg.energy.p_syn},
                 {"p_est", cfg.energy.p_est},   {"e_p", cfg.energy.e_p},
                 {"l_sp", cfg.energy.l_sp},     {"l_phr", cfg.energy.l_phr},
                 {"l_l", cfg.energy.l_l},       {"n_p", cfg.energy.n_p},
                 {"r_base", cfg.energy.r_base}, {"r_b", cfg.energy.r_b},
                 {"m_fingers", cfg.energy.m_fingers}, {"rho_c", cfg.energy.rho_c},
                 {"rho_r", cfg.energy.rho_r},   {"rho_t", cfg.energy.rho_t},
                 {"t_tr", cfg.energy.t_tr},     {"t_ips", cfg.energy.t_ips}};
  j["measurement"] = {{"los_noise_std", cfg.measurement.los_noise_std},
                      {"nlos_bias_mean", cfg.measurement.nlos_bias_mean},
                      {"nakagami_m", cfg.measurement.nakagami_m},
                      {"fading_enabled", cfg.measurement.fading_enabled}};
  j["reward"] = {{"md_threshold_eps", cfg.reward.md_threshold_eps},
                 {"r_c1", cfg.reward.reward_c1},
                 {"r_c2", cfg.reward.reward_c2},
                 {"r_c3", cfg.reward.reward_c3},
                 {"r_c4", cfg.reward.reward_c4}};
  j["agent"] = {{"gamma", cfg.agent.gamma},
                {"learning_rate", cfg.agent.learning_rate},
                {"replay_capacity", cfg.agent.replay_capacity},
                {"minibatch", cfg.agent.minibatch},
                {"history_depth", cfg.agent.history_depth},
                {"target_refresh", cfg.agent.target_refresh}};
  j["net"] = {{"conv_filters", cfg.net.conv_filters},
              {"kernel_width", cfg.net.kernel_width},
              {"dense1", cfg.net.dense1},
              {"dense2", cfg.net.dense2},
              {"softmax_head", cfg.net.softmax_head}};
  j["schedule"] = {{"n_epoch", cfg.schedule.n_epoch},
                   {"horizon", cfg.schedule.horizon},
                   {"eps_max", cfg.schedule.eps_max},
                   {"eps_min", cfg.schedule.eps_min}};
  j["evaluation"] = {{"epochs", cfg.evaluation.epochs},
                     {"error_eval_steps", cfg.evaluation.error_eval_steps}};
  if (cfg.initial_battery_uj) j["initial_battery_uj"] = *cfg.initial_battery_uj;
  j["policy"] = policy_name(cfg.policy);
  j["seeds"] = {{"world", cfg.seeds.world},
                {"walk", cfg.seeds.walk},
                {"agent", cfg.seeds.agent},
                {"noise", cfg.seeds.noise}};
  j["output_dir"] = cfg.output_dir;
  return j;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.world.n_x < 1 || cfg.world.n_y < 1)
    throw ValidationError("config: world extents must be positive");
  if (cfg.world.cell_size <= 0)
    throw ValidationError("config: world.cell_size must be positive");
  if (cfg.world.p_nlos < 0 || cfg.world.p_nlos > 1)
    throw ValidationError("config: world.p_nlos must lie in [0,1]");
  if (cfg.world.n_u < 2) throw ValidationError("config: need at least 2 beacons");
  validate(cfg.energy);
  if (cfg.energy.r_base <= 0 || cfg.energy.r_b <= 0)
    throw ValidationError("config: energy rates must be positive");
  validate(cfg.measurement);
  validate(cfg.reward);
  validate(cfg.agent);
  if (cfg.net.conv_filters < 1 || cfg.net.dense1 < 1 || cfg.net.dense2 < 1 ||
      cfg.net.kernel_width < 1)
    throw ValidationError("config: net sizes must be positive");
  if (cfg.schedule.n_epoch < 1 || cfg.schedule.horizon < 1)
    throw ValidationError("config: schedule sizes must be positive");
  validate(EpsilonSchedule{cfg.schedule.eps_max, cfg.schedule.eps_min,
                           cfg.schedule.n_epoch});
  if (cfg.evaluation.epochs < 1 || cfg.evaluation.error_eval_steps < 0)
    throw ValidationError("config: evaluation sizes out of range");
  if (cfg.initial_battery_uj && *cfg.initial_battery_uj <= 0)
    throw ValidationError("config: initial_battery_uj must be positive");
}

void apply_paper_scale(ExperimentConfig& cfg) {
  cfg.net.conv_filters = 128;
  cfg.net.dense1 = 128;
  cfg.net.dense2 = 64;
}

std::string config_content_hash(const ExperimentConfig& cfg) {
  // nlohmann::json keeps object keys sorted, so dump() is canonical
  const std::string text = config_to_json(cfg).dump();
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                static_cast<unsigned long long>(hash));
  return buf;
}

} // namespace uwbns
