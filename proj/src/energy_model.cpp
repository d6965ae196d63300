#include "uwbns/energy_model.hpp"

#include <cmath>
#include <string>

#include "uwbns/errors.hpp"

namespace uwbns {

namespace {

constexpr double kMbps = 1e6;     // Mbps -> bit/s
constexpr double kMwsToUj = 1e3;  // mW * s -> uJ
constexpr double kPjToUj = 1e-6;  // pJ -> uJ

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError("energy params: " + msg);
}

} // namespace

void validate(const EnergyParams& p) {
  require(p.p_cor >= 0 && p.p_adc >= 0 && p.p_lna >= 0 && p.p_vga >= 0 &&
              p.p_gen >= 0 && p.p_syn >= 0 && p.p_est >= 0,
          "powers must be non-negative");
  require(p.e_p >= 0, "e_p must be non-negative");
  require(p.l_sp >= 0 && p.l_phr >= 0 && p.l_l >= 0, "lengths must be non-negative");
  require(p.n_p > 0 && p.n_p % 2 == 1, "n_p must be an odd positive integer");
  require(p.r_base >= 0 && p.r_b >= 0, "rates must be non-negative");
  require(p.m_fingers >= 0, "m_fingers must be non-negative");
  require(p.rho_c == 0 || p.rho_c == 1, "rho_c must be 0 or 1");
  require(p.rho_r == 0 || p.rho_r == 1, "rho_r must be 0 or 1");
  require(p.rho_t >= 0, "rho_t must be non-negative");
  require(p.t_tr >= 0 && p.t_ips >= 0, "durations must be non-negative");
}

ReceiverPower receiver_power(const EnergyParams& p) {
  validate(p);
  ReceiverPower out;
  out.p_d = p.m_fingers * p.p_cor + p.rho_c * p.p_adc + p.p_lna + p.p_vga;
  out.p_n = p.rho_r * (p.p_gen + p.p_syn + p.p_est);
  out.p_r = out.p_d + out.p_n;
  return out;
}

EnergyBreakdown packet_energy(const EnergyParams& p) {
  validate(p);
  if (p.r_base <= 0 || p.r_b <= 0)
    throw ValidationError("energy params: r_base and r_b must be positive");

  const ReceiverPower pw = receiver_power(p);
  // coding rate r_c = 1/n_p, so l_phr/r_c = l_phr*n_p
  const double overhead_symbols = p.l_sp + p.l_phr * p.n_p;

  EnergyBreakdown out;
  out.p_d = pw.p_d;
  out.p_n = pw.p_n;
  out.p_r = pw.p_r;

  out.t_o = overhead_symbols / (p.r_base * kMbps);
  out.t_onl = p.l_l * p.n_p / (p.r_b * kMbps);
  out.t_on = out.t_o + out.t_onl;

  out.e_o = pw.p_r * out.t_o * kMwsToUj;
  out.e_l = (p.rho_t * pw.p_d + p.rho_r * (p.p_gen + p.p_syn)) * out.t_onl * kMwsToUj;
  out.e_rx = out.e_o + out.e_l;

  out.e_ips = p.rho_r * p.p_syn * p.t_ips * kMwsToUj;
  out.e_tr = p.rho_r * p.p_syn * p.t_tr * kMwsToUj;

  const double t_ack = out.t_o; // beacon listens for the ACK as long as SP+PHR
  out.e_ack = overhead_symbols * p.e_p * kPjToUj + p.p_syn * t_ack * kMwsToUj;

  out.e_total = 2.0 * out.e_tr + out.e_rx + 2.0 * out.e_ips + out.e_ack;
  return out;
}

} // namespace uwbns
