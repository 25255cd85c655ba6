#include "qdyne/sensor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "qdyne/errors.hpp"
#include "qdyne/io.hpp"

namespace qdyne {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// exact integral of the piecewise-linear trace over [a, b]
double integrate_linear_trace(const SampledTrace& tr, double a, double b) {
  double sum = 0.0;
  double t = a;
  double v_t = 0.0;
  // evaluate via the same interpolation rule as FieldSource::evaluate
  auto value_at = [&tr](double x) {
    const double rel = (x - tr.t0_s) / tr.dt_s;
    const auto n = tr.values.size();
    auto j = static_cast<std::size_t>(std::max(0.0, rel));
    if (j >= n - 1) return tr.values[n - 1];
    const double frac = rel - static_cast<double>(j);
    return tr.values[j] + frac * (tr.values[j + 1] - tr.values[j]);
  };
  v_t = value_at(t);
  while (t < b) {
    // next trace knot strictly after t, capped at b
    const double rel = (t - tr.t0_s) / tr.dt_s;
    auto j = static_cast<std::size_t>(std::max(0.0, rel));
    double knot = tr.t0_s + tr.dt_s * static_cast<double>(j + 1);
    if (knot <= t) knot = tr.t0_s + tr.dt_s * static_cast<double>(j + 2);
    const double next = std::min(knot, b);
    const double v_next = value_at(next);
    sum += 0.5 * (v_t + v_next) * (next - t);
    t = next;
    v_t = v_next;
  }
  return sum;
}

}  // namespace

PulseSequence::PulseSequence(int n, double tau) : n_pulses(n), tau_s(tau) {
  if (n <= 0 || n % 8 != 0)
    throw ConfigError("pulse count must be a positive multiple of 8");
  if (!(tau > 0.0) || !std::isfinite(tau))
    throw ConfigError("pulse spacing tau must be finite and > 0");
}

void SensorParams::validate() const {
  if (!(t2_s > 0.0) || !std::isfinite(t2_s)) throw ConfigError("t2 must be > 0");
  if (!(decay_exponent_beta > 0.0) || !std::isfinite(decay_exponent_beta))
    throw ConfigError("decay exponent beta must be > 0");
  if (!(contrast > 0.0) || contrast > 1.0)
    throw ConfigError("contrast must be in (0,1]");
  if (!(mean_photons_bright > 0.0) || !std::isfinite(mean_photons_bright))
    throw ConfigError("mean_photons_bright must be > 0");
  if (readout_dead_time_s < 0.0 || !std::isfinite(readout_dead_time_s))
    throw ConfigError("readout dead time must be >= 0");
}

double coherence_envelope(const SensorParams& params, double interaction_time_s) {
  params.validate();
  if (!(interaction_time_s >= 0.0))
    throw std::domain_error("interaction time must be >= 0");
  return std::exp(-std::pow(interaction_time_s / params.t2_s, params.decay_exponent_beta));
}

std::complex<double> tone_window_response(const PulseSequence& seq, double nu_hz) {
  if (!(nu_hz >= 0.0) || !std::isfinite(nu_hz))
    throw std::domain_error("tone frequency must be finite and >= 0");
  const double omega = kTwoPi * nu_hz;
  const double tau = seq.tau_s;
  const int n = seq.n_pulses;
  if (omega * tau < 1e-7) {
    // series limit: integral of f(u)*u is -n*tau^2/2 for even pulse counts
    return {0.0, -omega * tau * tau * static_cast<double>(n) / 2.0};
  }
  std::complex<double> sum(0.0, 0.0);
  std::complex<double> e_prev(1.0, 0.0);
  double sign = 1.0;
  for (int j = 1; j <= n; ++j) {
    const std::complex<double> e_next = std::polar(1.0, omega * tau * j);
    sum += sign * (e_next - e_prev);
    e_prev = e_next;
    sign = -sign;
  }
  return sum / std::complex<double>(0.0, omega);
}

double accumulated_phase(const FieldSource& source, const PulseSequence& seq,
                         double t_start_s, double phase_offset_rad) {
  if (!(t_start_s >= 0.0) || !std::isfinite(t_start_s))
    throw std::domain_error("t_start must be finite and >= 0");
  if (source.is_tones()) {
    double phi = 0.0;
    for (const Tone& tone : source.tone_list()) {
      const std::complex<double> r = tone_window_response(seq, tone.frequency_hz);
      const double theta =
          kTwoPi * tone.frequency_hz * t_start_s + tone.phase_rad + phase_offset_rad;
      phi += tone.amplitude_rad_per_s * std::imag(std::polar(1.0, theta) * r);
    }
    return phi;
  }
  if (phase_offset_rad != 0.0)
    throw std::invalid_argument("phase offset is only meaningful for tone sources");
  const SampledTrace& tr = source.trace_data();
  const double t_end = t_start_s + seq.interaction_time_s();
  if (t_start_s < tr.t0_s || t_end > tr.t_end_s() * (1.0 + 1e-12))
    throw std::out_of_range("trace does not cover the interaction window");
  double phi = 0.0;
  double sign = 1.0;
  for (int j = 0; j < seq.n_pulses; ++j) {
    const double a = t_start_s + seq.tau_s * j;
    const double b = std::min(a + seq.tau_s, tr.t_end_s());
    phi += sign * integrate_linear_trace(tr, a, b);
    sign = -sign;
  }
  return phi;
}

double resonance_phase_amplitude(double k_rad_per_s, const PulseSequence& seq) {
  if (!(k_rad_per_s >= 0.0) || !std::isfinite(k_rad_per_s))
    throw std::domain_error("coupling amplitude must be finite and >= 0");
  return 2.0 * k_rad_per_s * seq.interaction_time_s() / std::numbers::pi;
}

double filter_weight(double nu_hz, const PulseSequence& seq) {
  if (nu_hz == 0.0) return 0.0;
  const FieldSource unit = FieldSource::tone(Tone(1.0, nu_hz, 0.0));
  const double in_phase = accumulated_phase(unit, seq, 0.0, 0.0);
  const double quadrature = accumulated_phase(unit, seq, 0.0, std::numbers::pi / 2.0);
  return std::hypot(in_phase, quadrature) / resonance_phase_amplitude(1.0, seq);
}

double bright_probability(double phi_rad, const ReadoutAxis& axis, double coherence) {
  if (!(coherence >= 0.0) || coherence > 1.0)
    throw std::domain_error("coherence must be in [0,1]");
  const double p =
      0.5 + 0.5 * coherence * std::sin(phi_rad + axis.final_pulse_phase_rad);
  return std::clamp(p, 0.0, 1.0);
}

std::uint32_t sample_photons(double p_bright, const SensorParams& params, Rng& rng) {
  params.validate();
  if (!(p_bright >= 0.0) || p_bright > 1.0)
    throw std::domain_error("p_bright must be in [0,1]");
  const double mean = params.mean_photons_bright *
                      (p_bright + (1.0 - p_bright) * (1.0 - params.contrast));
  return rng.poisson(mean);
}

void save_filter_csv(const std::filesystem::path& path, const PulseSequence& seq,
                     double nu_lo_hz, double nu_hi_hz, std::size_t n_points) {
  if (!(nu_lo_hz >= 0.0) || !(nu_hi_hz > nu_lo_hz) || n_points < 2)
    throw ConfigError("bad filter export grid");
  std::string out = "nu_hz,weight\n";
  out.reserve(out.size() + n_points * 32);
  const double step = (nu_hi_hz - nu_lo_hz) / static_cast<double>(n_points - 1);
  for (std::size_t i = 0; i < n_points; ++i) {
    const double nu = nu_lo_hz + step * static_cast<double>(i);
    io::append_double(out, nu);
    out.push_back(',');
    io::append_double(out, filter_weight(nu, seq));
    out.push_back('\n');
  }
  io::write_text_file(path, out);
}

}  // namespace qdyne
