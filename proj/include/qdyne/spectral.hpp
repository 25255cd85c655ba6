#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "qdyne/acquisition.hpp"

namespace qdyne {

// alias of nu under the sampling comb f_s = 1/T_L:
// r = nu mod f_s; delta = min(r, f_s - r); sign = +1 if r <= f_s/2 else -1.
// nu - sign*delta is the nearest integer multiple of f_s.
struct AliasResult {
  double delta_hz = 0.0;
  int sign = +1;
};

AliasResult alias_offset(double nu_hz, double t_l_s);

enum class Window { rectangular, hann };

// One-sided power spectrum on the uniform grid k/(L*dt), k = 0..L/2, where L
// is the (possibly zero-padded) transform length.  power[k] = c_k*|X_k|^2/L
// with c_k = 2 for interior bins, 1 at DC and Nyquist, so that the sum equals
// the windowed time-domain energy (checked to 1e-9 on every transform).
struct Spectrum {
  std::vector<double> power;
  double bin_width_hz = 0.0;
  Window window = Window::rectangular;
  std::uint64_t n_records = 0;
  std::size_t n_segments = 1;  // >1 for averaged (Welch) spectra
  double sample_period_s = 0.0;

  std::size_t size() const { return power.size(); }
  double freq(std::size_t k) const { return bin_width_hz * static_cast<double>(k); }
  double nyquist_hz() const { return freq(size() - 1); }
};

// periodogram of the mean-subtracted photon-count series of a trace
Spectrum periodogram(const AcquisitionTrace& trace, Window window = Window::rectangular,
                     std::size_t zero_pad_factor = 1);

// same transform for an arbitrary uniformly sampled series
Spectrum periodogram_series(std::span<const double> samples, double sample_period_s,
                            Window window = Window::rectangular,
                            std::size_t zero_pad_factor = 1);

// Welch-style average of per-segment periodograms (non-overlapping segments,
// each mean-subtracted; no padding).  Trades resolution for variance, which is
// what makes broad stochastic lines visible above the shot floor.
Spectrum averaged_periodogram(std::span<const double> samples, double sample_period_s,
                              std::size_t segment_len, Window window = Window::rectangular);

struct PeakFit {
  double center_hz = 0.0;
  double fwhm_hz = 0.0;
  double amplitude = 0.0;   // Lorentzian height above the floor, power units
  double floor_level = 0.0;
  double ci_center_hz = 0.0;  // 95% half-widths
  double ci_fwhm_hz = 0.0;
  double ci_amplitude = 0.0;
  double ci_floor = 0.0;
  bool converged = false;
  double residual_norm = 0.0;
  int iterations = 0;
};

struct FitOptions {
  // power-bin statistics: chi^2 with 2 dof, std proportional to the level.
  // "relative" reweights by the model in a second pass; "constant" fits
  // unweighted (used when the caller supplies externally known errors).
  enum class NoiseModel { constant, relative };
  NoiseModel noise = NoiseModel::relative;
  // reject bands whose maximum is consistent with a flat noise floor
  bool require_significance = true;
  int max_iterations = 200;
  // starting width for the solver; 0 = estimate from the half-power
  // crossings around the maximum bin.  Callers fitting a broad low-contrast
  // line (peak comparable to the floor noise) should pass the expected line
  // scale here, because the crossing estimate collapses on noise spikes.
  double init_fwhm_hz = 0.0;
};

// Lorentzian-plus-constant least squares on the power bins in [f_lo, f_hi].
// Initialization from the max bin and its half-power crossings.
PeakFit fit_peak(const Spectrum& spec, double f_lo_hz, double f_hi_hz,
                 const FitOptions& options = {});

// Half-power width of a resolved line, measured directly on the power bins:
// apex = highest bin near the fitted center, width = distance between the
// linearly interpolated crossings of floor + (apex - floor)/2 on either side.
// Unlike the Lorentzian width parameter this does not depend on how well the
// model matches the wings (a window-limited tone is sinc^2, not Lorentzian),
// so it is the estimator the scaling harness reports.
double half_power_width(const Spectrum& spec, const PeakFit& peak);

// the same crossing measurement on an arbitrary sampled curve; apex_index
// points at the extremum, dip = true measures a downward line
double half_maximum_width(std::span<const double> xs, std::span<const double> ys,
                          std::size_t apex_index, double baseline, bool dip = false);

struct SnrResult {
  double value = 0.0;
  bool infinite = false;  // zero off-peak noise (noiseless synthetic input)
};

// sqrt(fitted peak power / std of off-peak power residuals); off-peak means
// the spectrum minus +-5 FWHM around the fitted center.  The sqrt puts the
// ratio on an amplitude scale, which is what grows as sqrt(T).
SnrResult snr(const Spectrum& spec, const PeakFit& peak);

// analytic precision closed forms
struct PrecisionModel {
  double k_rad_per_s = 0.0;
  double t2_s = 0.0;
  double t_memory_s = 0.0;
  double t_clock_s = 0.0;  // stability horizon

  void validate() const;
  bool weak_signal() const { return k_rad_per_s * t2_s < 0.1; }
};

double predict_precision_dd(const PrecisionModel& model, double total_time_s);
double predict_precision_memory(const PrecisionModel& model, double total_time_s);
double predict_precision_qdyne(const PrecisionModel& model, double total_time_s);

// single real tone in white noise, frequency bound:
// std >= sqrt(12 / ((2*pi)^2 * (A/sigma)^2 * dt^2 * N*(N^2-1)))
double crb_tone_frequency(double amplitude_over_noise, double sample_period_s,
                          std::uint64_t n_samples);

void save_spectrum_csv(const std::filesystem::path& path, const Spectrum& spec);
Spectrum load_spectrum_csv(const std::filesystem::path& path);

}  // namespace qdyne
