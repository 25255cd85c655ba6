#include "qdyne/nanonmr.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "qdyne/errors.hpp"

namespace qdyne {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// reflect x into [lo, hi]
double reflect(double x, double lo, double hi) {
  while (x < lo || x > hi) {
    if (x < lo) x = 2.0 * lo - x;
    if (x > hi) x = 2.0 * hi - x;
  }
  return x;
}

bool frozen_t1p(double t1p) { return t1p == 0.0 || std::isinf(t1p); }

}  // namespace

void BathConfig::validate() const {
  if (!(box_x_nm > 0.0) || !(box_y_nm > 0.0) || !(box_z_nm > 0.0))
    throw ConfigError("bath box dimensions must be > 0");
  if (!(nv_depth_nm > 0.0)) throw ConfigError("sensor depth must be > 0");
  if (density_per_nm3 < 0.0 || !std::isfinite(density_per_nm3))
    throw ConfigError("spin density must be >= 0");
  if (diffusion_m2_per_s < 0.0 || !std::isfinite(diffusion_m2_per_s))
    throw ConfigError("diffusion coefficient must be >= 0");
  if (t1p_s < 0.0) throw ConfigError("t1p must be >= 0 (0 or inf = frozen)");
  if (!(larmor_hz > 0.0) || !std::isfinite(larmor_hz))
    throw ConfigError("larmor frequency must be > 0");
  if (!(timestep_s > 0.0) || !std::isfinite(timestep_s))
    throw ConfigError("bath timestep must be > 0");
  if (!frozen_t1p(t1p_s) && !(timestep_s < t1p_s / 10.0))
    throw ConfigError("bath timestep must be < t1p/10");
  if (!(kappa_rad_nm3_per_s > 0.0)) throw ConfigError("dipolar kappa must be > 0");
  if (duration_s < 0.0 || !std::isfinite(duration_s))
    throw ConfigError("bath duration must be >= 0");
  const std::uint64_t n = spin_count();
  if (n > max_spins)
    throw CapacityError("bath would hold " + std::to_string(n) + " spins, over the " +
                        std::to_string(max_spins) +
                        " budget; shrink the box or lower the density");
}

std::uint32_t BathConfig::spin_count() const {
  if (explicit_spin_count) return *explicit_spin_count;
  const double volume = box_x_nm * box_y_nm * box_z_nm;
  const double n = std::round(density_per_nm3 * volume);
  return n < 0.0 ? 0u : static_cast<std::uint32_t>(n);
}

double BathTrace::rms_rad_per_s() const {
  if (env_x.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < env_x.size(); ++i)
    sum += env_x[i] * env_x[i] + env_y[i] * env_y[i];
  return std::sqrt(sum / static_cast<double>(env_x.size()));
}

BathSim::BathSim(const BathConfig& cfg) : cfg_(cfg), rng_(Rng::stream(cfg.seed, 7)) {
  cfg_.validate();
  const std::uint32_t n = cfg_.spin_count();
  px_.resize(n);
  py_.resize(n);
  pz_.resize(n);
  cos_a_.resize(n);
  sin_a_.resize(n);
  sigma_.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    px_[i] = (rng_.uniform() - 0.5) * cfg_.box_x_nm;
    py_[i] = (rng_.uniform() - 0.5) * cfg_.box_y_nm;
    pz_[i] = rng_.uniform() * cfg_.box_z_nm;
    const double alpha = kTwoPi * rng_.uniform();
    cos_a_[i] = std::cos(alpha);
    sin_a_[i] = std::sin(alpha);
    sigma_[i] = rng_.uniform() < 0.5 ? static_cast<signed char>(-1)
                                     : static_cast<signed char>(1);
  }
  // per-axis displacement sigma in nm per step
  step_sigma_nm_ = std::sqrt(2.0 * cfg_.diffusion_m2_per_s * cfg_.timestep_s) * 1e9;
  flip_probability_ = frozen_t1p(cfg_.t1p_s)
                          ? 0.0
                          : 0.5 * (1.0 - std::exp(-2.0 * cfg_.timestep_s / cfg_.t1p_s));
  recompute_envelope();
}

void BathSim::recompute_envelope() {
  const double d = cfg_.nv_depth_nm;
  const double kappa = cfg_.kappa_rad_nm3_per_s;
  double ex = 0.0, ey = 0.0, ss = 0.0;
  for (std::size_t i = 0; i < px_.size(); ++i) {
    const double z = pz_[i] + d;
    const double r2 = px_[i] * px_[i] + py_[i] * py_[i] + z * z;
    const double r = std::sqrt(r2);
    const double cos2 = (z * z) / r2;
    const double c = kappa * (3.0 * cos2 - 1.0) / (r2 * r);
    const double signed_c = c * static_cast<double>(sigma_[i]);
    ex += signed_c * cos_a_[i];
    ey += signed_c * sin_a_[i];
    ss += c * c;
  }
  env_x_ = ex;
  env_y_ = ey;
  sum_sq_ = ss;
}

void BathSim::advance() {
  const double hx = cfg_.box_x_nm / 2.0;
  const double hy = cfg_.box_y_nm / 2.0;
  for (std::size_t i = 0; i < px_.size(); ++i) {
    if (step_sigma_nm_ > 0.0) {
      px_[i] = reflect(px_[i] + step_sigma_nm_ * rng_.gaussian(), -hx, hx);
      py_[i] = reflect(py_[i] + step_sigma_nm_ * rng_.gaussian(), -hy, hy);
      pz_[i] = reflect(pz_[i] + step_sigma_nm_ * rng_.gaussian(), 0.0, cfg_.box_z_nm);
    }
    if (flip_probability_ > 0.0 && rng_.uniform() < flip_probability_)
      sigma_[i] = static_cast<signed char>(-sigma_[i]);
  }
  time_ += cfg_.timestep_s;
  recompute_envelope();
}

BathTrace simulate_bath(const BathConfig& cfg) {
  cfg.validate();
  if (!(cfg.duration_s > 0.0)) throw ConfigError("bath duration must be > 0");
  const auto n_steps = static_cast<std::size_t>(std::floor(cfg.duration_s / cfg.timestep_s));
  BathSim sim(cfg);
  BathTrace trace;
  trace.dt_s = cfg.timestep_s;
  trace.larmor_hz = cfg.larmor_hz;
  trace.env_x.reserve(n_steps + 1);
  trace.env_y.reserve(n_steps + 1);
  auto [ex, ey] = sim.envelope();
  trace.env_x.push_back(ex);
  trace.env_y.push_back(ey);
  for (std::size_t s = 0; s < n_steps; ++s) {
    sim.advance();
    std::tie(ex, ey) = sim.envelope();
    trace.env_x.push_back(ex);
    trace.env_y.push_back(ey);
  }
  return trace;
}

double bath_rms(const BathConfig& cfg, std::size_t n_realizations) {
  cfg.validate();
  if (n_realizations < 10) throw ConfigError("bath rms needs >= 10 realizations");
  double sum = 0.0;
  for (std::size_t r = 0; r < n_realizations; ++r) {
    BathConfig c = cfg;
    c.seed = Rng::stream(cfg.seed, 1000 + r).next_u64();
    BathSim sim(c);
    sum += sim.sum_sq_couplings();
  }
  return std::sqrt(sum / static_cast<double>(n_realizations));
}

double correlation_time(const BathTrace& trace) {
  const std::size_t n = trace.size();
  if (n < 64) throw ConfigError("trace too short for a correlation estimate");
  double norm = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    norm += trace.env_x[i] * trace.env_x[i] + trace.env_y[i] * trace.env_y[i];
  norm /= static_cast<double>(n);
  if (!(norm > 0.0)) throw NumericalError("zero envelope; correlation undefined");

  const double target = std::exp(-1.0);
  double prev = 1.0;
  const std::size_t max_lag = n / 2;
  for (std::size_t lag = 1; lag <= max_lag; ++lag) {
    double acc = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i)
      acc += trace.env_x[i] * trace.env_x[i + lag] +
             trace.env_y[i] * trace.env_y[i + lag];
    const double c = acc / static_cast<double>(n - lag) / norm;
    if (c <= target) {
      // linear interpolation between the straddling lags
      const double frac = (prev - target) / std::max(prev - c, 1e-300);
      return (static_cast<double>(lag - 1) + frac) * trace.dt_s;
    }
    prev = c;
  }
  throw NumericalError("envelope autocorrelation never reached 1/e; bath looks frozen");
}

SampledTrace compose_field_trace(const BathTrace& trace, double fine_dt_s) {
  if (trace.size() < 2) throw ConfigError("bath trace too short to compose");
  if (!(fine_dt_s > 0.0)) throw ConfigError("fine sample period must be > 0");
  if (fine_dt_s > 0.1 / trace.larmor_hz)
    throw ConfigError("fine sample period too coarse for the carrier");
  const double span = trace.dt_s * static_cast<double>(trace.size() - 1);
  const auto n_fine = static_cast<std::size_t>(std::floor(span / fine_dt_s)) + 1;
  SampledTrace out;
  out.t0_s = trace.t0_s;
  out.dt_s = fine_dt_s;
  out.values.resize(n_fine);
  const double omega = kTwoPi * trace.larmor_hz;
  for (std::size_t i = 0; i < n_fine; ++i) {
    const double rel = fine_dt_s * static_cast<double>(i);
    const double pos = rel / trace.dt_s;
    auto j = static_cast<std::size_t>(pos);
    if (j >= trace.size() - 1) j = trace.size() - 2;
    const double frac = pos - static_cast<double>(j);
    const double x = trace.env_x[j] + frac * (trace.env_x[j + 1] - trace.env_x[j]);
    const double y = trace.env_y[j] + frac * (trace.env_y[j + 1] - trace.env_y[j]);
    const double t_abs = trace.t0_s + rel;
    out.values[i] = x * std::sin(omega * t_abs) + y * std::cos(omega * t_abs);
  }
  return out;
}

void NmrRunConfig::validate() const {
  bath.validate();
  sensor.validate();
  if (!(total_time_s > 0.0)) throw ConfigError("total time must be > 0");
  if (segment_records < 64) throw ConfigError("segment length must be >= 64 records");
  if (!(fine_dt_s > 0.0) || fine_dt_s > 0.1 / bath.larmor_hz)
    throw ConfigError("fine sample period too coarse for the carrier");
  if (!(fit_band_halfwidth_hz > 0.0)) throw ConfigError("fit band half-width must be > 0");
}

NmrRunResult run_nmr_qdyne(const NmrRunConfig& cfg) {
  cfg.validate();
  const double t_l = cfg.seq.interaction_time_s() + cfg.sensor.readout_dead_time_s;
  const auto n_total = static_cast<std::uint64_t>(std::floor(cfg.total_time_s / t_l));
  const std::uint64_t n_segments = n_total / cfg.segment_records;
  if (n_segments < 8)
    throw ConfigError("total time too short: need at least 8 averaging segments");
  const std::uint64_t n_records = n_segments * cfg.segment_records;

  // perfect-clock acquisition config reused per segment; the source is
  // replaced by the streamed bath chunk covering that segment
  QdyneConfig acq;
  acq.seq = cfg.seq;
  acq.sensor = cfg.sensor;
  acq.axis = cfg.axis;
  acq.clock.nominal_period_s = t_l;
  acq.total_time_s = cfg.total_time_s;
  acq.seed = cfg.seed;

  BathConfig bath = cfg.bath;
  bath.seed = Rng::stream(cfg.seed, 11).next_u64();
  BathSim sim(bath);
  Rng photon_rng = Rng::stream(cfg.seed, 2);

  const double env_dt = bath.timestep_s;
  std::vector<double> counts;
  counts.reserve(n_records);
  // rolling envelope samples: sample k is at time k*env_dt
  std::vector<double> ex, ey;
  std::size_t base_index = 0;  // env sample index of ex[0]
  auto [e0x, e0y] = sim.envelope();
  ex.push_back(e0x);
  ey.push_back(e0y);

  for (std::uint64_t s = 0; s < n_segments; ++s) {
    const std::uint64_t first = s * cfg.segment_records;
    const double t_first = t_l * static_cast<double>(first + 1);
    const double t_last_end =
        t_l * static_cast<double>(first + cfg.segment_records) + cfg.seq.interaction_time_s();
    const auto need_lo =
        static_cast<std::size_t>(std::floor(t_first / env_dt));
    const auto need_hi = static_cast<std::size_t>(std::ceil(t_last_end / env_dt)) + 1;

    // drop samples before the chunk, keeping one for interpolation
    if (need_lo > base_index + 1) {
      const std::size_t drop = need_lo - 1 - base_index;
      ex.erase(ex.begin(), ex.begin() + static_cast<std::ptrdiff_t>(drop));
      ey.erase(ey.begin(), ey.begin() + static_cast<std::ptrdiff_t>(drop));
      base_index = need_lo - 1;
    }
    // extend simulation to cover the chunk
    while (base_index + ex.size() <= need_hi) {
      sim.advance();
      auto [vx, vy] = sim.envelope();
      ex.push_back(vx);
      ey.push_back(vy);
    }

    BathTrace chunk;
    chunk.dt_s = env_dt;
    chunk.larmor_hz = bath.larmor_hz;
    chunk.t0_s = env_dt * static_cast<double>(base_index);
    chunk.env_x = ex;
    chunk.env_y = ey;
    const SampledTrace fine = compose_field_trace(chunk, cfg.fine_dt_s);

    QdyneConfig seg_cfg = acq;
    seg_cfg.source = FieldSource::trace(fine);
    const AcquisitionTrace seg =
        run_qdyne_segment(seg_cfg, first, cfg.segment_records, photon_rng);
    for (const TraceRecord& rec : seg.records)
      counts.push_back(static_cast<double>(rec.photons));
  }

  NmrRunResult result;
  result.n_records = n_records;
  result.spectrum = averaged_periodogram(counts, t_l, cfg.segment_records);
  const AliasResult alias = alias_offset(bath.larmor_hz, t_l);
  result.alias_hz = alias.delta_hz;
  FitOptions options;
  options.require_significance = false;  // broad line over an averaged floor
  options.init_fwhm_hz = 0.5 * cfg.fit_band_halfwidth_hz;
  const double lo = std::max(result.spectrum.bin_width_hz,
                             alias.delta_hz - cfg.fit_band_halfwidth_hz);
  const double hi = std::min(result.spectrum.nyquist_hz(),
                             alias.delta_hz + cfg.fit_band_halfwidth_hz);
  result.peak = fit_peak(result.spectrum, lo, hi, options);
  return result;
}

}  // namespace qdyne
