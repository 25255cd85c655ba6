#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>

#include "qdyne/rng.hpp"
#include "qdyne/signals.hpp"

namespace qdyne {

// XY8-style dynamical decoupling block: n_pulses pi pulses, inter-pulse
// spacing tau.  Pulses are zero-width.  The toggling function over the
// interaction window [t_start, t_start + n*tau) is (-1)^j on segment j of
// length tau, i.e. sign flips at t_start + j*tau, j = 1..n-1, and the
// closing pi/2 happens at the window end.
struct PulseSequence {
  int n_pulses = 8;
  double tau_s = 0.0;

  PulseSequence() = default;
  PulseSequence(int n, double tau);
  double interaction_time_s() const { return n_pulses * tau_s; }
  double resonance_frequency_hz() const { return 1.0 / (2.0 * tau_s); }
};

struct SensorParams {
  double t2_s = 0.0;
  double decay_exponent_beta = 1.0;
  double contrast = 0.0;               // in (0,1]
  double mean_photons_bright = 0.0;    // photons per readout
  double readout_dead_time_s = 0.0;    // readout + re-initialisation

  void validate() const;
};

struct ReadoutAxis {
  double final_pulse_phase_rad = 0.0;
};

// exp(-(T_s/t2)^beta)
double coherence_envelope(const SensorParams& params, double interaction_time_s);

// frequency response of the toggling window: integral over [0, T_s) of
// f(u) * exp(i*2*pi*nu*u) du.  Closed form per tau segment; the phase
// picked up from a tone k*sin(2*pi*nu*t + Phi) starting at t0 is
// k * Im(exp(i*(2*pi*nu*t0 + Phi)) * R(nu)).
std::complex<double> tone_window_response(const PulseSequence& seq, double nu_hz);

// net phase from the field over one interaction window.
// phase_offset_rad is added to every tone's phase (sweep/oracle convenience);
// nonzero offsets are rejected for sampled traces.
double accumulated_phase(const FieldSource& source, const PulseSequence& seq,
                         double t_start_s, double phase_offset_rad = 0.0);

// peak phase at tau = 1/(2*nu): 2*k*T_s/pi
double resonance_phase_amplitude(double k_rad_per_s, const PulseSequence& seq);

// |phase amplitude for a unit tone at nu, maximized over its phase| / (2*T_s/pi)
double filter_weight(double nu_hz, const PulseSequence& seq);

// p = 1/2 + (coherence/2) * sin(phi + axis phase), clamped to [0,1]
double bright_probability(double phi_rad, const ReadoutAxis& axis, double coherence);

// Poisson draw with mean  mean_photons_bright * (p + (1-p)*(1-contrast))
std::uint32_t sample_photons(double p_bright, const SensorParams& params, Rng& rng);

// csv export "nu_hz,weight" over a uniform frequency grid
void save_filter_csv(const std::filesystem::path& path, const PulseSequence& seq,
                     double nu_lo_hz, double nu_hi_hz, std::size_t n_points);

}  // namespace qdyne
