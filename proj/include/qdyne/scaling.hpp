#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "qdyne/acquisition.hpp"
#include "qdyne/spectral.hpp"

namespace qdyne {

// how harness trials are analyzed
struct AnalysisOptions {
  Window window = Window::rectangular;
  std::size_t zero_pad_factor = 4;
  // fit band half-width around the expected alias; 0 = automatic
  // (a few Fourier widths, widened for short runs)
  double band_halfwidth_hz = 0.0;
  // the harness studies deterministic window-limited lines in a known band:
  // unweighted fitting tracks the line core, and the band placement already
  // vouches for the peak, so the flat-floor significance gate stays off
  FitOptions fit = {.noise = FitOptions::NoiseModel::constant,
                    .require_significance = false,
                    .max_iterations = 200};
};

struct ScalingRow {
  double total_time_s = 0.0;
  double fwhm_hz = 0.0;       // mean measured half-power width over converged trials
  double snr = 0.0;           // mean over converged trials
  double precision_hz = 0.0;  // cross-trial std of fitted centers
  std::size_t trials = 0;
  std::size_t excluded = 0;  // non-converged / out-of-band fits
  bool valid = false;        // >20% exclusions invalidates the row
};

struct SlopeFit {
  double slope = 0.0;
  double stderr_slope = 0.0;
  std::size_t n_points = 0;
};

struct ScalingResult {
  std::vector<ScalingRow> rows;
  SlopeFit fwhm_slope;
  SlopeFit snr_slope;
  SlopeFit precision_slope;
};

// log10-log10 least squares over (x, y); used for the scaling columns
SlopeFit loglog_slope(std::span<const double> xs, std::span<const double> ys);

// Qdyne arm: base config rerun at each grid time, trials seeds per point.
// base.source must be a single tone (the fit band is placed at its alias).
ScalingResult scaling_harness_qdyne(const QdyneConfig& base,
                                    std::span<const double> time_grid_s,
                                    std::size_t trials, const AnalysisOptions& analysis,
                                    unsigned n_threads = 1);

// swept-XY8 arm: total time converted to repetitions via the cycle period
// (interaction + dead time), split evenly across the tau grid; the dip is
// fitted on the 1/(2 tau) frequency axis.
struct SweepHarnessConfig {
  Tone tone{0.0, 1.0, 0.0};
  int n_pulses = 8;
  SensorParams sensor;
  std::vector<double> tau_grid_s;
  std::uint64_t seed = 0;
};

ScalingResult scaling_harness_sweep(const SweepHarnessConfig& base,
                                    std::span<const double> time_grid_s,
                                    std::size_t trials, unsigned n_threads = 1);

void save_scaling_csv(const std::filesystem::path& path, const ScalingResult& result);

}  // namespace qdyne
