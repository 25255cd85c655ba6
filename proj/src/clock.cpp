#include "qdyne/clock.hpp"

#include <cmath>
#include <string>

#include "qdyne/errors.hpp"
#include "qdyne/io.hpp"

namespace qdyne {

void ClockModel::validate() const {
  if (!(nominal_period_s > 0.0) || !std::isfinite(nominal_period_s))
    throw ConfigError("clock nominal period must be finite and > 0");
  if (white_jitter_sigma_s < 0.0 || !std::isfinite(white_jitter_sigma_s))
    throw ConfigError("clock white jitter sigma must be >= 0");
  if (frequency_random_walk_sigma < 0.0 || !std::isfinite(frequency_random_walk_sigma))
    throw ConfigError("clock frequency random walk sigma must be >= 0");
  if (stability_horizon_s < 0.0 || !std::isfinite(stability_horizon_s))
    throw ConfigError("clock stability horizon must be >= 0");
}

std::vector<double> tick_times(const ClockModel& model, std::size_t n_ticks, Rng& rng) {
  model.validate();
  if (n_ticks < 1) throw ConfigError("need at least one tick");
  std::vector<double> ticks(n_ticks);
  if (model.is_perfect()) {
    // exact grid, no cumulative rounding and no rng consumption
    for (std::size_t i = 0; i < n_ticks; ++i)
      ticks[i] = model.nominal_period_s * static_cast<double>(i + 1);
    return ticks;
  }
  double frac_freq = 0.0;
  double t = 0.0;
  for (std::size_t i = 0; i < n_ticks; ++i) {
    frac_freq += model.frequency_random_walk_sigma * rng.gaussian();
    const double period = model.nominal_period_s * (1.0 + frac_freq) +
                          model.white_jitter_sigma_s * rng.gaussian();
    if (!(period > 0.0))
      throw ConfigError("sampled clock period <= 0 at tick " + std::to_string(i + 1) +
                        "; jitter sigmas are pathological for this nominal period");
    t += period;
    ticks[i] = t;
  }
  return ticks;
}

AllanResult allan_deviation(std::span<const double> ticks,
                            std::span<const double> taus_s) {
  const std::size_t n = ticks.size();
  if (n < 3) throw ConfigError("allan deviation needs at least 3 ticks");
  for (std::size_t i = 1; i < n; ++i)
    if (!(ticks[i] > ticks[i - 1]))
      throw ConfigError("tick series must be strictly increasing");
  const double tau0 = ticks.back() / static_cast<double>(n);
  // phase error relative to the mean-rate grid; x[0] = 0 at t = 0
  std::vector<double> x(n + 1);
  x[0] = 0.0;
  for (std::size_t i = 1; i <= n; ++i)
    x[i] = ticks[i - 1] - tau0 * static_cast<double>(i);

  AllanResult result;
  for (double tau : taus_s) {
    const double m_real = tau / tau0;
    const auto m = static_cast<std::size_t>(std::llround(m_real));
    const bool integer_multiple = m >= 1 && std::abs(m_real - static_cast<double>(m)) <= 1e-6 * m_real;
    if (!integer_multiple || x.size() < 2 * m + 2) {
      result.skipped_taus.push_back(tau);
      continue;
    }
    const std::size_t terms = x.size() - 2 * m;
    double sum = 0.0;
    for (std::size_t i = 0; i < terms; ++i) {
      const double d = x[i + 2 * m] - 2.0 * x[i + m] + x[i];
      sum += d * d;
    }
    const double t_avg = tau0 * static_cast<double>(m);
    const double avar = sum / (2.0 * static_cast<double>(terms) * t_avg * t_avg);
    result.points.push_back({t_avg, std::sqrt(avar)});
  }
  return result;
}

void save_ticks_csv(const std::filesystem::path& path, std::span<const double> ticks) {
  std::string out = "tick_s\n";
  out.reserve(out.size() + ticks.size() * 24);
  for (double t : ticks) {
    io::append_double(out, t);
    out.push_back('\n');
  }
  io::write_text_file(path, out);
}

}  // namespace qdyne
