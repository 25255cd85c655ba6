#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "qdyne/acquisition.hpp"
#include "qdyne/rng.hpp"
#include "qdyne/signals.hpp"
#include "qdyne/spectral.hpp"

namespace qdyne {

// physical dipolar constant mu0/(4*pi) * gamma_e * gamma_p * hbar, in
// rad * nm^3 / s (electron-proton coupling at 1 nm)
inline constexpr double kDipolarKappaPhysical = 4.97e5;

// Diffusing, statistically polarized spin bath in a box on the sample
// surface.  The box spans [-x/2,x/2] x [-y/2,y/2] laterally and [0, z] in
// height; the sensor sits nv_depth_nm below the surface at the lateral
// center, so the distance from sensor to a spin at (x,y,z) is
// |(x, y, z + d)|.  Coupling of spin i: kappa*(3cos^2(theta_i)-1)/r_i^3.
struct BathConfig {
  double box_x_nm = 6.0;
  double box_y_nm = 6.0;
  double box_z_nm = 6.0;
  double nv_depth_nm = 5.0;
  double density_per_nm3 = 2.0;
  std::optional<std::uint32_t> explicit_spin_count;  // overrides density
  double diffusion_m2_per_s = 1e-15;
  double t1p_s = 3.2e-4;  // telegraph flip relaxation; 0 or inf = frozen
  double larmor_hz = 1.01e6;
  double timestep_s = 2e-5;
  double duration_s = 0.0;
  std::uint64_t seed = 0;
  double kappa_rad_nm3_per_s = kDipolarKappaPhysical;
  std::uint32_t max_spins = 200000;

  void validate() const;
  std::uint32_t spin_count() const;
};

// Two-quadrature stochastic envelope of the bath field: the field seen by
// the sensor is env_x(t)*sin(2*pi*larmor*t) + env_y(t)*cos(2*pi*larmor*t).
struct BathTrace {
  double dt_s = 0.0;
  double larmor_hz = 0.0;
  double t0_s = 0.0;
  std::vector<double> env_x;
  std::vector<double> env_y;

  std::size_t size() const { return env_x.size(); }
  // rms of the envelope magnitude over the trace
  double rms_rad_per_s() const;
};

// incremental simulator so long runs can stream without storing the
// whole envelope history
class BathSim {
 public:
  explicit BathSim(const BathConfig& cfg);

  void advance();  // one timestep
  double time_s() const { return time_; }
  std::pair<double, double> envelope() const { return {env_x_, env_y_}; }
  double sum_sq_couplings() const { return sum_sq_; }
  std::uint32_t spin_count() const { return static_cast<std::uint32_t>(px_.size()); }

 private:
  void recompute_envelope();

  BathConfig cfg_;
  Rng rng_;
  std::vector<double> px_, py_, pz_;      // positions, nm
  std::vector<double> cos_a_, sin_a_;     // fixed per-spin carrier phases
  std::vector<signed char> sigma_;        // telegraph polarizations
  double step_sigma_nm_ = 0.0;
  double flip_probability_ = 0.0;
  double time_ = 0.0;
  double env_x_ = 0.0, env_y_ = 0.0, sum_sq_ = 0.0;
};

// envelope sampled every timestep over cfg.duration_s (t=0 included)
BathTrace simulate_bath(const BathConfig& cfg);

// Ensemble rms of the envelope at t=0 over seeded realizations.  Given the
// positions, the average over polarizations and carrier phases is exactly
// sum_i c_i^2, so only position randomness is Monte-Carlo.
double bath_rms(const BathConfig& cfg, std::size_t n_realizations);

// 1/e crossing of the normalized complex-envelope autocorrelation.
// A frozen bath never crosses and raises a numerical error.
double correlation_time(const BathTrace& trace);

// sample the carrier-composed field on a fine uniform grid, envelopes
// linearly interpolated; output is loadable as a FieldSource trace
SampledTrace compose_field_trace(const BathTrace& trace, double fine_dt_s);

// end-to-end stochastic-NMR detection: stream the bath through repeated
// measurement windows, Welch-average the count periodogram, fit the line
// at the alias of the Larmor frequency
struct NmrRunConfig {
  BathConfig bath;             // duration_s ignored (derived from total time)
  PulseSequence seq;
  SensorParams sensor;
  ReadoutAxis axis;
  double total_time_s = 0.0;
  // Welch trade-off: the line is a few percent of the shot floor per bin, so
  // resolution is spent on averaging (bin width ~1/20 of the line still
  // resolves it while halving the per-bin noise)
  std::size_t segment_records = 1024;
  double fine_dt_s = 5e-8;
  double fit_band_halfwidth_hz = 4000.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct NmrRunResult {
  Spectrum spectrum;
  PeakFit peak;
  double alias_hz = 0.0;
  std::uint64_t n_records = 0;
};

NmrRunResult run_nmr_qdyne(const NmrRunConfig& cfg);

}  // namespace qdyne
