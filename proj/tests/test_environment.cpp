#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "uwbns/environment.hpp"
#include "uwbns/errors.hpp"

using namespace uwbns;

namespace {

GridWorld small_world(int n_u = 4, int n_x = 5, int n_y = 4) {
  GridWorld world;
  world.n_x = n_x;
  world.n_y = n_y;
  std::vector<Point> corners = {{-0.5, -0.5},
                                {n_x + 0.5, -0.5},
                                {-0.5, n_y + 0.5},
                                {n_x + 0.5, n_y + 0.5},
                                {n_x / 2.0, -0.5},
                                {n_x / 2.0, n_y + 0.5}};
  for (int id = 0; id < n_u; ++id)
    world.beacons.push_back(Beacon{id, corners[static_cast<std::size_t>(id)], 100.0});
  world.link_matrix.assign(static_cast<std::size_t>(n_u),
                           std::vector<int>(static_cast<std::size_t>(n_x * n_y), 1));
  return world;
}

Environment make_env(GridWorld world, double e_total = 10.0,
                     double initial_battery = 1e5, int horizon = 50,
                     double threshold_eps = 0.8, std::uint64_t walk_seed = 7,
                     std::uint64_t noise_seed = 8) {
  MeasurementModel meas;
  meas.los_noise_std = 0.0;
  meas.nlos_bias_mean = 0.0;
  RewardConfig reward;
  reward.md_threshold_eps = threshold_eps;
  return Environment(std::move(world), e_total, initial_battery, horizon, reward, meas,
                     walk_seed, noise_seed);
}

// Eq.-style reward recomputation used to cross-check every StepOutcome.
double oracle_reward(double md, double threshold, int flag_i, int flag_j,
                     const RewardConfig& cfg) {
  const bool ok = md <= threshold;
  if (flag_i == 1 && flag_j == 1) return ok ? cfg.reward_c1 : cfg.reward_c2;
  return ok ? cfg.reward_c3 : cfg.reward_c4;
}

} // namespace

TEST_CASE("pair count matches n choose 2") {
  CHECK(action_space_size(4) == 6);
  CHECK(action_space_size(6) == 15);
  CHECK(action_space_size(2) == 1);
  CHECK_THROWS_AS(action_space_size(1), ValidationError);
}

TEST_CASE("pair indexing round-trips lexicographically") {
  for (int n_u : {2, 3, 4, 6, 9}) {
    int expect = 0;
    for (int i = 0; i < n_u; ++i) {
      for (int j = i + 1; j < n_u; ++j) {
        const Action a{i, j};
        CHECK(a.index(n_u) == expect);
        const Action back = Action::from_index(expect, n_u);
        CHECK(back.i == i);
        CHECK(back.j == j);
        ++expect;
      }
    }
    CHECK(expect == action_space_size(n_u));
  }
  CHECK_THROWS_AS(Action::from_index(6, 4), ValidationError);
  CHECK_THROWS_AS((Action{2, 2}).index(4), ValidationError);
}

TEST_CASE("random walk: corner cells only take the legal directions") {
  const GridWorld world = small_world();
  Rng rng(31);
  MdpState corner;
  corner.x = 0;
  corner.y = 0;
  std::set<std::pair<int, int>> seen;
  for (int k = 0; k < 10'000; ++k) {
    const MdpState next = random_walk_step(corner, world, rng);
    CHECK(next.x >= 0);
    CHECK(next.y >= 0);
    seen.insert({next.move_x, next.move_y});
  }
  // enumeration: only (1,0), (0,1), (1,1) stay in bounds from (0,0)
  const std::set<std::pair<int, int>> legal = {{1, 0}, {0, 1}, {1, 1}};
  CHECK(seen == legal);
}

TEST_CASE("random walk: interior cells hit all 8 directions uniformly") {
  const GridWorld world = small_world();
  Rng rng(32);
  MdpState inner;
  inner.x = 2;
  inner.y = 2;
  std::map<std::pair<int, int>, int> counts;
  const int n = 100'000;
  for (int k = 0; k < n; ++k) {
    const MdpState next = random_walk_step(inner, world, rng);
    counts[{next.move_x, next.move_y}]++;
  }
  CHECK(counts.size() == 8);
  for (const auto& [dir, count] : counts) {
    (void)dir;
    CHECK(std::abs(count / static_cast<double>(n) - 0.125) < 0.02);
  }
}

TEST_CASE("random walk: bounds hold over a million steps") {
  const GridWorld world = small_world();
  Rng rng(33);
  MdpState s;
  s.x = 0;
  s.y = 0;
  for (int k = 0; k < 1'000'000; ++k) {
    s = random_walk_step(s, world, rng);
    if (s.x < 0 || s.x >= world.n_x || s.y < 0 || s.y >= world.n_y) {
      REQUIRE(false);
    }
  }
  CHECK(true);
}

TEST_CASE("battery deviation formula") {
  CHECK(battery_deviation({1.0, 1.0, 1.0, 1.0}) == 0.0);
  CHECK(battery_deviation({2.0, 0.0}) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(battery_deviation({1.0}), ValidationError);
  CHECK_THROWS_AS(battery_deviation({0.0, 0.0}), ValidationError);

  Rng rng(34);
  std::uniform_real_distribution<double> level(1.0, 100.0);
  std::uniform_real_distribution<double> scale(0.1, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> b(5);
    for (double& v : b) v = level(rng);
    const double md = battery_deviation(b);
    const double k = scale(rng);
    std::vector<double> scaled = b;
    for (double& v : scaled) v *= k;
    CHECK(battery_deviation(scaled) == doctest::Approx(md).epsilon(1e-9));
  }
}

TEST_CASE("decrementing the two fullest never worsens the deviation vs the two emptiest") {
  Rng rng(35);
  std::uniform_real_distribution<double> level(50.0, 100.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> b(4 + trial % 3);
    for (double& v : b) v = level(rng);
    const double dec = 5.0;

    std::vector<std::size_t> order(b.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto x, auto y) { return b[x] > b[y]; });

    std::vector<double> fullest = b;
    fullest[order.front()] -= dec;
    fullest[order[1]] -= dec;
    std::vector<double> emptiest = b;
    emptiest[order.back()] -= dec;
    emptiest[order[order.size() - 2]] -= dec;

    CHECK(battery_deviation(fullest) <= battery_deviation(emptiest) + 1e-12);
  }
}

TEST_CASE("link matrix generation") {
  Rng rng(36);
  const auto all_los = generate_link_matrix(4, 20, 0.0, rng);
  for (const auto& row : all_los)
    for (int v : row) CHECK(v == 1);

  const auto all_nlos = generate_link_matrix(4, 20, 1.0, rng);
  for (const auto& row : all_nlos)
    for (int v : row) CHECK(v == 0);

  // empirical fraction over repeated seeded regenerations
  int zeros = 0;
  int total = 0;
  for (int draw = 0; draw < 1000; ++draw) {
    Rng seeded(1000 + draw);
    const auto m = generate_link_matrix(6, 20, 0.3, seeded);
    for (const auto& row : m)
      for (int v : row) {
        zeros += v == 0 ? 1 : 0;
        ++total;
      }
  }
  CHECK(std::abs(zeros / static_cast<double>(total) - 0.3) < 0.01);

  Rng again_a(77), again_b(77);
  CHECK(generate_link_matrix(4, 20, 0.5, again_a) ==
        generate_link_matrix(4, 20, 0.5, again_b));

  CHECK_THROWS_AS(generate_link_matrix(4, 20, 1.5, rng), ValidationError);
}

TEST_CASE("reset gives balanced batteries at a valid cell, deterministically") {
  for (int trial = 0; trial < 100; ++trial) {
    Environment env = make_env(small_world(), 10.0, 1e5, 50, 0.8, 100 + trial);
    const MdpState s = env.reset_episode();
    CHECK(s.x >= 0);
    CHECK(s.x < 5);
    CHECK(s.y >= 0);
    CHECK(s.y < 4);
    CHECK(s.move_x == 0);
    CHECK(s.move_y == 0);
    CHECK(battery_deviation(s.batteries) == 0.0);

    Environment twin = make_env(small_world(), 10.0, 1e5, 50, 0.8, 100 + trial);
    const MdpState t = twin.reset_episode();
    CHECK(t.x == s.x);
    CHECK(t.y == s.y);
  }
}

TEST_CASE("reward classes follow the four cases") {
  // all-LoS world, generous threshold: first step is balanced -> C1
  GridWorld world = small_world();
  Environment env = make_env(world, 10.0, 1e5, 50, 0.8);
  env.reset_episode();
  StepOutcome out = env.apply_action(Action{0, 1});
  CHECK(out.connection_class == ConnectionClass::C1);
  CHECK(out.reward == 10.0);

  // hammer one pair until the deviation crosses the threshold -> C2
  bool saw_c2 = false;
  for (int k = 0; k < 10 && !env.done(); ++k) {
    out = env.apply_action(Action{0, 1});
    if (out.connection_class == ConnectionClass::C2) {
      saw_c2 = true;
      CHECK(out.reward == 5.0);
      break;
    }
  }
  CHECK(saw_c2);

  // an NLoS link on the pair -> C3/C4 depending on balance
  GridWorld dark = small_world();
  for (auto& row : dark.link_matrix) std::fill(row.begin(), row.end(), 0);
  Environment dark_env = make_env(dark, 10.0, 1e5, 50, 0.8);
  dark_env.reset_episode();
  out = dark_env.apply_action(Action{0, 1});
  CHECK(out.connection_class == ConnectionClass::C3);
  CHECK(out.reward == -5.0);
  bool saw_c4 = false;
  for (int k = 0; k < 10 && !dark_env.done(); ++k) {
    out = dark_env.apply_action(Action{0, 1});
    if (out.connection_class == ConnectionClass::C4) {
      saw_c4 = true;
      CHECK(out.reward == -10.0);
      break;
    }
  }
  CHECK(saw_c4);
}

TEST_CASE("one NLoS link suffices for the NLoS classes regardless of order") {
  GridWorld world = small_world();
  // beacon 1 is NLoS everywhere, others LoS
  std::fill(world.link_matrix[1].begin(), world.link_matrix[1].end(), 0);
  Environment env = make_env(world, 10.0, 1e5, 50, 0.8);
  env.reset_episode();
  const StepOutcome a = env.apply_action(Action{0, 1});
  CHECK((a.connection_class == ConnectionClass::C3 ||
         a.connection_class == ConnectionClass::C4));
  const StepOutcome b = env.apply_action(Action{1, 2});
  CHECK((b.connection_class == ConnectionClass::C3 ||
         b.connection_class == ConnectionClass::C4));
}

TEST_CASE("every outcome reproduces the reward recomputed from md and flags") {
  GridWorld world = small_world();
  Rng world_rng(40);
  world.link_matrix = generate_link_matrix(4, 20, 0.4, world_rng);
  RewardConfig reward_cfg;
  reward_cfg.md_threshold_eps = 0.8;
  Environment env = make_env(world, 10.0, 1e5, 50, reward_cfg.md_threshold_eps);

  Rng rng(41);
  std::uniform_int_distribution<int> pick(0, action_space_size(4) - 1);
  for (int epoch = 0; epoch < 20; ++epoch) {
    env.reset_episode();
    while (!env.done()) {
      const StepOutcome out = env.apply_action(Action::from_index(pick(rng), 4));
      // threshold from the post-decrement batteries (walk does not touch them)
      const double mean =
          std::accumulate(out.next_state.batteries.begin(),
                          out.next_state.batteries.end(), 0.0) /
          out.next_state.batteries.size();
      const double threshold = reward_cfg.md_threshold_eps * 10.0 / mean;
      CHECK(out.reward ==
            oracle_reward(out.md_t, threshold, out.flag_i, out.flag_j, reward_cfg));
      // exactly one class per step, consistent with the reward
      const int cls = static_cast<int>(out.connection_class);
      CHECK(cls >= 0);
      CHECK(cls <= 3);
    }
  }
}

TEST_CASE("flags are read from the pre-walk cell") {
  // light exactly one cell for beacon 0; stepping from that cell must use it
  GridWorld world = small_world();
  for (auto& row : world.link_matrix) std::fill(row.begin(), row.end(), 0);
  Environment probe = make_env(world, 10.0, 1e5, 50, 0.8, 50);
  const MdpState start = probe.reset_episode();
  const int start_cell = world.cell_index(start.x, start.y);

  GridWorld lit = small_world();
  for (auto& row : lit.link_matrix) std::fill(row.begin(), row.end(), 0);
  lit.link_matrix[0][static_cast<std::size_t>(start_cell)] = 1;
  lit.link_matrix[1][static_cast<std::size_t>(start_cell)] = 1;
  Environment env = make_env(lit, 10.0, 1e5, 50, 0.8, 50);
  env.reset_episode();
  const StepOutcome out = env.apply_action(Action{0, 1});
  CHECK(out.flag_i == 1);
  CHECK(out.flag_j == 1);
}

TEST_CASE("energy conservation: consumed total is exactly two receptions per step") {
  Environment env = make_env(small_world(), 201.5274, 201.5274e4);
  Rng rng(42);
  std::uniform_int_distribution<int> pick(0, 5);
  env.reset_episode();
  int steps = 0;
  while (!env.done()) {
    env.apply_action(Action::from_index(pick(rng), 4));
    ++steps;
  }
  CHECK(env.total_receptions() == 2 * static_cast<std::uint64_t>(steps));
  // bit-exact: both sides are the same integer times E
  CHECK(env.total_consumed_uj() == 2.0 * steps * 201.5274);
}

TEST_CASE("battery drain clamps at zero and terminates") {
  // capacity for exactly 2 receptions per beacon
  Environment env = make_env(small_world(), 10.0, 20.0, 1000);
  env.reset_episode();
  env.apply_action(Action{0, 1});
  CHECK_FALSE(env.done()); // batteries at exactly one packet left
  const StepOutcome out = env.apply_action(Action{0, 1});
  CHECK(out.done); // 0 left on beacons 0 and 1
  CHECK(out.next_state.batteries[0] == 0.0);
  CHECK(out.next_state.batteries[1] == 0.0);

  // selecting an already-empty beacon still consumes the step and stays at 0
  Environment drained = make_env(small_world(), 10.0, 10.0, 1000);
  drained.reset_episode();
  const StepOutcome first = drained.apply_action(Action{0, 1});
  CHECK(first.done);
  CHECK(first.next_state.batteries[0] == 0.0);
}

TEST_CASE("horizon terminates an abundant-battery episode") {
  Environment env = make_env(small_world(), 10.0, 1e6, 37);
  env.reset_episode();
  int steps = 0;
  while (!env.done()) {
    env.apply_action(Action{steps % 2 == 0 ? 0 : 2, steps % 2 == 0 ? 1 : 3});
    ++steps;
  }
  CHECK(steps == 37);
}

TEST_CASE("world validation rejects malformed inputs") {
  GridWorld short_range = small_world();
  short_range.beacons[0].reception_range = 1.0;
  CHECK_THROWS_AS(validate(short_range), ValidationError);

  GridWorld bad_matrix = small_world();
  bad_matrix.link_matrix.pop_back();
  CHECK_THROWS_AS(validate(bad_matrix), ValidationError);

  GridWorld bad_entry = small_world();
  bad_entry.link_matrix[0][0] = 2;
  CHECK_THROWS_AS(validate(bad_entry), ValidationError);
}
