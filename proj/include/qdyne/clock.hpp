#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "qdyne/rng.hpp"

namespace qdyne {

// Local-oscillator model for the measurement time base.  Period i is
//   P_i = nominal_period * (1 + f_i) + w_i
// with f a random walk in fractional frequency (step sigma
// frequency_random_walk_sigma per tick) and w white jitter
// (sigma white_jitter_sigma seconds).  stability_horizon_s is metadata
// consumed by the analytic precision formulas, not by the noise model.
struct ClockModel {
  double nominal_period_s = 0.0;
  double white_jitter_sigma_s = 0.0;
  double frequency_random_walk_sigma = 0.0;
  double stability_horizon_s = 0.0;

  void validate() const;
  bool is_perfect() const {
    return white_jitter_sigma_s == 0.0 && frequency_random_walk_sigma == 0.0;
  }
};

// strictly increasing tick times T_1..T_n (T_0 = 0 is implicit)
std::vector<double> tick_times(const ClockModel& model, std::size_t n_ticks, Rng& rng);

struct AllanPoint {
  double tau_s = 0.0;
  double adev = 0.0;
};

struct AllanResult {
  std::vector<AllanPoint> points;
  std::vector<double> skipped_taus;  // requested taus with too few samples
};

// overlapping Allan deviation of fractional frequency, from tick times.
// taus must be (near) integer multiples of the mean period; others are skipped.
AllanResult allan_deviation(std::span<const double> ticks,
                            std::span<const double> taus_s);

// single-column csv export, header "tick_s"
void save_ticks_csv(const std::filesystem::path& path, std::span<const double> ticks);

}  // namespace qdyne
