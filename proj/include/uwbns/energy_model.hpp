#pragma once

#include <cstdint>

namespace uwbns {

// Receiver-side physical-layer parameters of an IR-UWB beacon.
// Powers are in mW, e_p in pJ/pulse, rates in Mbps, durations in seconds,
// lengths in symbols (l_sp) or bits (l_phr, l_l).
struct EnergyParams {
  double p_cor = 10.08;
  double p_adc = 2.2;
  double p_lna = 9.4;
  double p_vga = 22.0;
  double p_gen = 2.8;
  double p_syn = 30.6;
  double p_est = 10.08;
  double e_p = 4.5;      // pJ per pulse
  double l_sp = 1024.0;  // synchronization preamble, symbols
  double l_phr = 16.0;   // PHY header, bits
  double l_l = 1024.0;   // payload, bits
  int n_p = 1;           // coding parameter, odd; coding rate r_c = 1/n_p
  double r_base = 1.0;   // Mbps
  double r_b = 1.0;      // Mbps
  int m_fingers = 1;     // RAKE fingers
  int rho_c = 1;         // 1 = soft-decision combining, 0 = hard-decision
  int rho_r = 1;         // 1 = coherent demodulation, 0 = noncoherent
  double rho_t = 1.0;    // pulse coefficient, >= 0
  double t_tr = 1e-6;    // sleep->active transient, s
  double t_ips = 1e-6;   // inter-packet space, s
};

// Per-reception energy decomposition. Powers in mW, energies in uJ,
// durations in s. e_total is the battery decrement applied per packet
// reception session.
struct EnergyBreakdown {
  double p_d = 0.0;   // detection-chain power, mW
  double p_n = 0.0;   // remaining-components power, mW
  double p_r = 0.0;   // p_d + p_n
  double t_o = 0.0;   // SP + PHR duration, s
  double t_onl = 0.0; // payload duration, s
  double t_on = 0.0;  // t_o + t_onl
  double e_o = 0.0;   // SP + PHR energy, uJ
  double e_l = 0.0;   // payload energy, uJ
  double e_rx = 0.0;  // e_o + e_l
  double e_ips = 0.0; // inter-packet-space energy, uJ
  double e_tr = 0.0;  // transient energy (one transition), uJ
  double e_ack = 0.0; // acknowledgement energy, uJ
  double e_total = 0.0;
};

// Throws ValidationError when any invariant fails (negative magnitudes,
// even n_p, rho flags outside {0,1}).
void validate(const EnergyParams& params);

struct ReceiverPower {
  double p_d;
  double p_n;
  double p_r;
};

// Detection / non-detection / total receiver power, mW.
ReceiverPower receiver_power(const EnergyParams& params);

// Full per-reception energy accounting; requires r_base > 0 and r_b > 0.
EnergyBreakdown packet_energy(const EnergyParams& params);

} // namespace uwbns
