#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "uwbns/energy_model.hpp"
#include "uwbns/errors.hpp"

using namespace uwbns;

namespace {

// Independent arithmetic oracle: literal formulas over the published
// constants, kept separate from the implementation on purpose.
struct OracleResult {
  double p_d, p_n, p_r;
  double t_o, t_onl;
  double e_o, e_l, e_rx, e_ips, e_tr, e_ack, e_total;
};

OracleResult oracle(const EnergyParams& p) {
  OracleResult o{};
  o.p_d = p.m_fingers * p.p_cor + p.rho_c * p.p_adc + p.p_lna + p.p_vga;
  o.p_n = p.rho_r * (p.p_gen + p.p_syn + p.p_est);
  o.p_r = o.p_d + o.p_n;
  const double r_c = 1.0 / p.n_p;
  o.t_o = (p.l_sp + p.l_phr / r_c) / (p.r_base * 1e6);
  o.t_onl = p.l_l / (p.r_b * 1e6 * r_c);
  o.e_o = o.p_r * o.t_o * 1e3;
  o.e_l = (p.rho_t * o.p_d + p.rho_r * (p.p_gen + p.p_syn)) * o.t_onl * 1e3;
  o.e_rx = o.e_o + o.e_l;
  o.e_ips = p.rho_r * p.p_syn * p.t_ips * 1e3;
  o.e_tr = p.rho_r * p.p_syn * p.t_tr * 1e3;
  o.e_ack = (p.l_sp + p.l_phr / r_c) * p.e_p * 1e-6 + p.p_syn * o.t_o * 1e3;
  o.e_total = 2 * o.e_tr + o.e_rx + 2 * o.e_ips + o.e_ack;
  return o;
}

EnergyParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> power(0.0, 50.0);
  std::uniform_real_distribution<double> len(1.0, 4096.0);
  std::uniform_real_distribution<double> rate(0.1, 20.0);
  std::uniform_real_distribution<double> dur(0.0, 1e-5);
  std::uniform_int_distribution<int> odd(0, 7);
  std::uniform_int_distribution<int> flag(0, 1);
  EnergyParams p;
  p.p_cor = power(rng);
  p.p_adc = power(rng);
  p.p_lna = power(rng);
  p.p_vga = power(rng);
  p.p_gen = power(rng);
  p.p_syn = power(rng);
  p.p_est = power(rng);
  p.e_p = power(rng);
  p.l_sp = len(rng);
  p.l_phr = len(rng);
  p.l_l = len(rng);
  p.n_p = 2 * odd(rng) + 1;
  p.r_base = rate(rng);
  p.r_b = rate(rng);
  p.m_fingers = 1 + flag(rng);
  p.rho_c = flag(rng);
  p.rho_r = flag(rng);
  p.rho_t = power(rng) / 25.0;
  p.t_tr = dur(rng);
  p.t_ips = dur(rng);
  return p;
}

} // namespace

TEST_CASE("receiver power on the published defaults") {
  const EnergyParams p; // defaults carry the published table values
  const ReceiverPower pw = receiver_power(p);
  CHECK(pw.p_d == doctest::Approx(43.68).epsilon(1e-12));
  CHECK(pw.p_n == doctest::Approx(43.48).epsilon(1e-12));
  CHECK(pw.p_r == doctest::Approx(87.16).epsilon(1e-12));
}

TEST_CASE("receiver power, noncoherent hard-decision variant") {
  EnergyParams p;
  p.rho_c = 0;
  p.rho_r = 0;
  const ReceiverPower pw = receiver_power(p);
  CHECK(pw.p_n == 0.0);
  CHECK(pw.p_d == doctest::Approx(41.48).epsilon(1e-12));
}

TEST_CASE("receiver power, all-zero powers") {
  EnergyParams p;
  p.p_cor = p.p_adc = p.p_lna = p.p_vga = p.p_gen = p.p_syn = p.p_est = 0.0;
  CHECK(receiver_power(p).p_r == 0.0);
}

TEST_CASE("packet energy on the published defaults") {
  const EnergyParams p;
  const EnergyBreakdown e = packet_energy(p);
  // frozen oracle values: 1040 symbols at 1 Mbps, 87.16 mW
  CHECK(e.t_o == doctest::Approx(1.04e-3).epsilon(1e-12));
  CHECK(e.e_o == doctest::Approx(90.6464).epsilon(1e-12));
  // 1040 * 4.5 pJ + 30.6 mW * 1.04 ms
  CHECK(e.e_ack == doctest::Approx(31.82868).epsilon(1e-12));
  CHECK(e.e_total == doctest::Approx(201.5274).epsilon(1e-12));

  const OracleResult o = oracle(p);
  CHECK(e.e_total == doctest::Approx(o.e_total).epsilon(1e-12));
}

TEST_CASE("empty payload with noncoherent receiver consumes nothing on the payload") {
  EnergyParams p;
  p.l_l = 0.0;
  p.rho_t = 0.0;
  p.rho_r = 0;
  CHECK(packet_energy(p).e_l == 0.0);
}

TEST_CASE("validation rejects bad parameters") {
  EnergyParams p;
  p.p_lna = -1.0;
  CHECK_THROWS_AS(receiver_power(p), ValidationError);

  EnergyParams even;
  even.n_p = 2;
  CHECK_THROWS_AS(receiver_power(even), ValidationError);

  EnergyParams zero_rate;
  zero_rate.r_b = 0.0;
  CHECK_THROWS_AS(packet_energy(zero_rate), ValidationError);
}

TEST_CASE("breakdown matches the oracle on random parameters") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const EnergyParams p = random_params(rng);
    const EnergyBreakdown e = packet_energy(p);
    const OracleResult o = oracle(p);
    CHECK(e.p_r == doctest::Approx(o.p_r).epsilon(1e-12));
    CHECK(e.e_o == doctest::Approx(o.e_o).epsilon(1e-12));
    CHECK(e.e_l == doctest::Approx(o.e_l).epsilon(1e-12));
    CHECK(e.e_ack == doctest::Approx(o.e_ack).epsilon(1e-12));
    CHECK(e.e_total == doctest::Approx(o.e_total).epsilon(1e-12));
  }
}

TEST_CASE("total decomposition holds exactly") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 500; ++trial) {
    const EnergyBreakdown e = packet_energy(random_params(rng));
    CHECK(e.p_r == e.p_d + e.p_n);
    CHECK(e.e_rx == e.e_o + e.e_l);
    CHECK(e.e_total == 2.0 * e.e_tr + e.e_rx + 2.0 * e.e_ips + e.e_ack);
  }
}

TEST_CASE("raising any single power never lowers the total energy") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> bump(0.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    EnergyParams p = random_params(rng);
    const double base = packet_energy(p).e_total;
    EnergyParams q = p;
    switch (trial % 7) {
      case 0: q.p_cor += bump(rng); break;
      case 1: q.p_adc += bump(rng); break;
      case 2: q.p_lna += bump(rng); break;
      case 3: q.p_vga += bump(rng); break;
      case 4: q.p_gen += bump(rng); break;
      case 5: q.p_syn += bump(rng); break;
      case 6: q.p_est += bump(rng); break;
    }
    CHECK(packet_energy(q).e_total >= base);
  }
}

TEST_CASE("overhead energy is linear in the preamble length") {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 100; ++trial) {
    EnergyParams p = random_params(rng);
    p.l_phr = 0.0; // isolate the l_sp term
    EnergyParams doubled = p;
    doubled.l_sp *= 2.0;
    CHECK(packet_energy(doubled).e_o ==
          doctest::Approx(2.0 * packet_energy(p).e_o).epsilon(1e-12));
  }
}

TEST_CASE("published-unit round trips stay below 1e-12 relative") {
  // Mbps -> bit/s, pJ -> uJ, and mW*s -> uJ conversions, forward and back
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> mag(1e-3, 1e4);
  for (int trial = 0; trial < 1000; ++trial) {
    const double v = mag(rng);
    const double mbps = (v * 1e6) / 1e6;
    const double pj = (v * 1e-6) / 1e-6;
    const double mws = (v * 1e3) / 1e3;
    CHECK(std::abs(mbps - v) / v < 1e-12);
    CHECK(std::abs(pj - v) / v < 1e-12);
    CHECK(std::abs(mws - v) / v < 1e-12);
  }
}
