#include "qdyne/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>

#include "qdyne/errors.hpp"
#include "qdyne/io.hpp"
#include "qdyne/lm.hpp"

namespace qdyne {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::mutex g_fftw_planner_mutex;  // FFTW planning is not thread-safe

// smallest 5-smooth (2^a 3^b 5^c) length >= target; FFTW is fast there
std::size_t next_fast_size(std::size_t target) {
  std::size_t best = std::numeric_limits<std::size_t>::max();
  for (std::size_t f5 = 1; f5 < best; f5 *= 5) {
    for (std::size_t f35 = f5; f35 < best; f35 *= 3) {
      std::size_t f = f35;
      while (f < target) f *= 2;
      best = std::min(best, f);
      if (f35 >= target) break;
    }
    if (f5 >= target) break;
  }
  return best;
}

// one-sided power of the windowed, mean-subtracted series; self-checks
// Parseval on every call
Spectrum transform(std::span<const double> samples, double dt, Window window,
                   std::size_t pad) {
  const std::size_t n = samples.size();
  if (n < 16) throw ConfigError("periodogram needs at least 16 samples");
  if (pad < 1) throw ConfigError("zero pad factor must be >= 1");
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw ConfigError("sample period must be finite and > 0");

  const std::size_t len = pad == 1 ? n : next_fast_size(n * pad);

  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= static_cast<double>(n);

  auto* in = static_cast<double*>(fftw_malloc(sizeof(double) * len));
  auto* out = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (len / 2 + 1)));
  if (!in || !out) {
    fftw_free(in);
    fftw_free(out);
    throw NumericalError("fft buffer allocation failed");
  }

  double energy = 0.0;
  if (window == Window::rectangular) {
    for (std::size_t i = 0; i < n; ++i) {
      const double v = samples[i] - mean;
      in[i] = v;
      energy += v * v;
    }
  } else {
    const double scale = kTwoPi / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
      const double w = 0.5 * (1.0 - std::cos(scale * static_cast<double>(i)));
      const double v = (samples[i] - mean) * w;
      in[i] = v;
      energy += v * v;
    }
  }
  std::fill(in + n, in + len, 0.0);

  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(g_fftw_planner_mutex);
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(len), in, out, FFTW_ESTIMATE);
  }
  if (!plan) {
    fftw_free(in);
    fftw_free(out);
    throw NumericalError("fft planning failed");
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(g_fftw_planner_mutex);
    fftw_destroy_plan(plan);
  }

  Spectrum spec;
  spec.window = window;
  spec.n_records = n;
  spec.sample_period_s = dt;
  spec.bin_width_hz = 1.0 / (static_cast<double>(len) * dt);
  const std::size_t n_bins = len / 2 + 1;
  spec.power.resize(n_bins);
  const double norm = 1.0 / static_cast<double>(len);
  double total = 0.0;
  for (std::size_t k = 0; k < n_bins; ++k) {
    const double re = out[k][0];
    const double im = out[k][1];
    double p = (re * re + im * im) * norm;
    const bool interior = k != 0 && !(len % 2 == 0 && k == len / 2);
    if (interior) p *= 2.0;
    spec.power[k] = p;
    total += p;
  }
  fftw_free(in);
  fftw_free(out);

  if (std::abs(total - energy) > 1e-9 * std::max(energy, 1e-30))
    throw NumericalError("parseval check failed on periodogram");
  return spec;
}

}  // namespace

AliasResult alias_offset(double nu_hz, double t_l_s) {
  if (!(nu_hz > 0.0) || !std::isfinite(nu_hz))
    throw ConfigError("alias: frequency must be finite and > 0");
  if (!(t_l_s > 0.0) || !std::isfinite(t_l_s))
    throw ConfigError("alias: period must be finite and > 0");
  const double fs = 1.0 / t_l_s;
  double r = std::fmod(nu_hz, fs);
  if (r < 0.0) r += fs;
  AliasResult result;
  if (r <= fs / 2.0) {
    result.delta_hz = r;
    result.sign = +1;
  } else {
    result.delta_hz = fs - r;
    result.sign = -1;
  }
  return result;
}

Spectrum periodogram(const AcquisitionTrace& trace, Window window,
                     std::size_t zero_pad_factor) {
  trace.validate();  // dense indices, monotone times
  std::vector<double> counts(trace.records.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    counts[i] = static_cast<double>(trace.records[i].photons);
  return transform(counts, trace.t_l_s, window, zero_pad_factor);
}

Spectrum periodogram_series(std::span<const double> samples, double sample_period_s,
                            Window window, std::size_t zero_pad_factor) {
  return transform(samples, sample_period_s, window, zero_pad_factor);
}

Spectrum averaged_periodogram(std::span<const double> samples, double sample_period_s,
                              std::size_t segment_len, Window window) {
  if (segment_len < 16) throw ConfigError("segment length must be >= 16");
  const std::size_t n_segments = samples.size() / segment_len;
  if (n_segments < 1) throw ConfigError("series shorter than one segment");
  Spectrum avg;
  for (std::size_t s = 0; s < n_segments; ++s) {
    Spectrum one = transform(samples.subspan(s * segment_len, segment_len),
                             sample_period_s, window, 1);
    if (s == 0) {
      avg = std::move(one);
    } else {
      for (std::size_t k = 0; k < avg.power.size(); ++k) avg.power[k] += one.power[k];
    }
  }
  const double inv = 1.0 / static_cast<double>(n_segments);
  for (double& p : avg.power) p *= inv;
  avg.n_segments = n_segments;
  avg.n_records = static_cast<std::uint64_t>(n_segments) * segment_len;
  return avg;
}

PeakFit fit_peak(const Spectrum& spec, double f_lo_hz, double f_hi_hz,
                 const FitOptions& options) {
  if (spec.size() < 8) throw ConfigError("spectrum too small to fit");
  if (!(f_lo_hz >= 0.0) || !(f_hi_hz > f_lo_hz) || f_hi_hz > spec.nyquist_hz() * (1.0 + 1e-12))
    throw ConfigError("fit band outside spectrum");
  const auto k_lo = static_cast<std::size_t>(std::ceil(f_lo_hz / spec.bin_width_hz - 1e-9));
  const auto k_hi = std::min(spec.size() - 1,
      static_cast<std::size_t>(std::floor(f_hi_hz / spec.bin_width_hz + 1e-9)));
  if (k_hi < k_lo + 7) throw ConfigError("fit band must contain at least 8 bins");
  const std::size_t n = k_hi - k_lo + 1;

  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = spec.freq(k_lo + i);
    ys[i] = spec.power[k_lo + i];
  }

  // peak candidate must be an interior maximum of the band
  std::size_t arg = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (ys[i] > ys[arg]) arg = i;
  if (arg == 0 || arg == n - 1)
    throw NoPeakError("no interior maximum in fit band");

  std::vector<double> sorted = ys;
  std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
  const double median = sorted[n / 2];

  if (options.require_significance) {
    // exponential-floor scale estimate: median = scale * ln 2
    const double scale = median / std::numbers::ln2;
    const double threshold =
        median + (std::log(static_cast<double>(n)) + 5.0) * scale;
    if (!(ys[arg] > threshold))
      throw NoPeakError("band maximum is consistent with a flat noise floor");
  }

  // initialization: max bin, median floor, half-power crossings
  LorentzParams init;
  init.floor_level = median;
  init.amplitude = ys[arg] - median;
  init.center = xs[arg];
  if (options.init_fwhm_hz > 0.0) {
    init.fwhm = options.init_fwhm_hz;
  } else {
    const double half = median + 0.5 * init.amplitude;
    std::size_t left = arg;
    while (left > 0 && ys[left] > half) --left;
    std::size_t right = arg;
    while (right < n - 1 && ys[right] > half) ++right;
    init.fwhm = std::max(xs[right] - xs[left], 2.0 * spec.bin_width_hz);
  }

  LorentzFitResult fit = fit_lorentzian(xs, ys, {}, init, options.max_iterations);
  if (options.noise == FitOptions::NoiseModel::relative && fit.converged) {
    // second pass with 1/model^2 weights, the right statistics for power bins
    std::vector<double> weights(n);
    const double floor_scale =
        std::max(1e-3 * (std::abs(fit.params.amplitude) + std::abs(fit.params.floor_level)),
                 1e-300);
    for (std::size_t i = 0; i < n; ++i) {
      const double m = std::max(lorentz_eval(fit.params, xs[i]), floor_scale);
      weights[i] = 1.0 / (m * m);
    }
    LorentzFitResult pass2 =
        fit_lorentzian(xs, ys, weights, fit.params, options.max_iterations);
    if (pass2.converged) fit = pass2;
  }

  PeakFit peak;
  peak.center_hz = fit.params.center;
  peak.fwhm_hz = std::abs(fit.params.fwhm);
  peak.amplitude = fit.params.amplitude;
  peak.floor_level = fit.params.floor_level;
  peak.ci_center_hz = 1.96 * fit.stderrs[1];
  peak.ci_fwhm_hz = 1.96 * fit.stderrs[2];
  peak.ci_amplitude = 1.96 * fit.stderrs[0];
  peak.ci_floor = 1.96 * fit.stderrs[3];
  // a credible line is resolved (wider than a bin and a half) yet narrower
  // than the band; outside that the 4-parameter model is degenerate
  peak.converged = fit.converged && std::isfinite(peak.center_hz) &&
                   peak.center_hz >= f_lo_hz && peak.center_hz <= f_hi_hz &&
                   peak.fwhm_hz >= 1.5 * spec.bin_width_hz &&
                   peak.fwhm_hz <= f_hi_hz - f_lo_hz;
  peak.residual_norm = std::sqrt(fit.weighted_ssr / static_cast<double>(fit.n_points));
  peak.iterations = fit.iterations;
  return peak;
}

double half_maximum_width(std::span<const double> xs, std::span<const double> ys,
                          std::size_t apex_index, double baseline, bool dip) {
  const std::size_t n = ys.size();
  if (n < 4 || xs.size() != n) throw ConfigError("need >= 4 matching samples");
  if (apex_index >= n) throw ConfigError("apex index out of range");
  const double sign = dip ? -1.0 : 1.0;
  const double apex = sign * (ys[apex_index] - baseline);
  if (!(apex > 0.0)) throw NoPeakError("apex does not rise above the baseline");
  const double level = 0.5 * apex;

  const auto height = [&](std::size_t i) { return sign * (ys[i] - baseline); };
  // walk outward to the first bins at or below half maximum, interpolate
  std::size_t left = apex_index;
  while (left > 0 && height(left) > level) --left;
  if (height(left) > level) throw NoPeakError("left half-maximum crossing not resolved");
  std::size_t right = apex_index;
  while (right < n - 1 && height(right) > level) ++right;
  if (height(right) > level)
    throw NoPeakError("right half-maximum crossing not resolved");

  const double tl = (level - height(left)) / (height(left + 1) - height(left));
  const double x_left = xs[left] + tl * (xs[left + 1] - xs[left]);
  const double tr = (level - height(right - 1)) / (height(right) - height(right - 1));
  const double x_right = xs[right - 1] + tr * (xs[right] - xs[right - 1]);
  return x_right - x_left;
}

double half_power_width(const Spectrum& spec, const PeakFit& peak) {
  const std::size_t n = spec.size();
  if (n < 8) throw ConfigError("spectrum too small");
  if (!peak.converged) throw ConfigError("half-power width needs a converged fit");
  const double bin = spec.bin_width_hz;
  // apex: highest bin in a small window around the fitted center
  const double halfspan = std::max(2.0 * peak.fwhm_hz, 4.0 * bin);
  const auto k_lo = static_cast<std::size_t>(
      std::max(1.0, std::ceil((peak.center_hz - halfspan) / bin)));
  const auto k_hi = std::min(
      n - 2, static_cast<std::size_t>(std::floor((peak.center_hz + halfspan) / bin)));
  if (k_lo >= k_hi) throw NoPeakError("fitted center too close to the spectrum edge");
  std::size_t apex = k_lo;
  for (std::size_t k = k_lo + 1; k <= k_hi; ++k)
    if (spec.power[k] > spec.power[apex]) apex = k;

  const double level = peak.floor_level + 0.5 * (spec.power[apex] - peak.floor_level);
  if (!(spec.power[apex] > peak.floor_level))
    throw NoPeakError("apex does not rise above the fitted floor");
  std::size_t left = apex;
  while (left > 0 && spec.power[left] > level) --left;
  if (spec.power[left] > level)
    throw NoPeakError("left half-power crossing not resolved");
  std::size_t right = apex;
  while (right < n - 1 && spec.power[right] > level) ++right;
  if (spec.power[right] > level)
    throw NoPeakError("right half-power crossing not resolved");

  const double tl =
      (level - spec.power[left]) / (spec.power[left + 1] - spec.power[left]);
  const double f_left = spec.freq(left) + tl * bin;
  const double tr =
      (level - spec.power[right - 1]) / (spec.power[right] - spec.power[right - 1]);
  const double f_right = spec.freq(right - 1) + tr * bin;
  return f_right - f_left;
}

SnrResult snr(const Spectrum& spec, const PeakFit& peak) {
  if (!peak.converged) throw ConfigError("snr needs a converged peak fit");
  LorentzParams model;
  model.amplitude = peak.amplitude;
  model.center = peak.center_hz;
  model.fwhm = peak.fwhm_hz;
  model.floor_level = peak.floor_level;

  // off-peak residuals: everything outside +-5 FWHM, DC bin excluded
  double sum = 0.0, sum_sq = 0.0;
  std::size_t count = 0;
  const double lo = peak.center_hz - 5.0 * peak.fwhm_hz;
  const double hi = peak.center_hz + 5.0 * peak.fwhm_hz;
  for (std::size_t k = 1; k < spec.size(); ++k) {
    const double f = spec.freq(k);
    if (f >= lo && f <= hi) continue;
    const double r = spec.power[k] - lorentz_eval(model, f);
    sum += r;
    sum_sq += r * r;
    ++count;
  }
  if (count < 16) throw ConfigError("fewer than 16 off-peak bins for snr");
  const double mean = sum / static_cast<double>(count);
  const double var =
      (sum_sq - static_cast<double>(count) * mean * mean) / static_cast<double>(count - 1);
  const double sd = std::sqrt(std::max(var, 0.0));

  SnrResult result;
  if (peak.amplitude <= 0.0) {
    result.value = 0.0;
    return result;
  }
  if (sd <= 0.0) {
    result.value = std::numeric_limits<double>::infinity();
    result.infinite = true;
    return result;
  }
  result.value = std::sqrt(peak.amplitude / sd);
  return result;
}

void PrecisionModel::validate() const {
  if (!(k_rad_per_s > 0.0) || !(t2_s > 0.0) || !(t_memory_s > 0.0) || !(t_clock_s > 0.0))
    throw ConfigError("precision model parameters must all be > 0");
}

double predict_precision_dd(const PrecisionModel& model, double total_time_s) {
  model.validate();
  if (!(total_time_s > 0.0)) throw ConfigError("total time must be > 0");
  return 1.0 / (model.k_rad_per_s * model.t2_s * std::sqrt(total_time_s * model.t2_s));
}

double predict_precision_memory(const PrecisionModel& model, double total_time_s) {
  model.validate();
  if (!(total_time_s > 0.0)) throw ConfigError("total time must be > 0");
  return 1.0 / (model.k_rad_per_s * model.t2_s * std::sqrt(total_time_s * model.t_memory_s));
}

double predict_precision_qdyne(const PrecisionModel& model, double total_time_s) {
  model.validate();
  if (!(total_time_s > 0.0)) throw ConfigError("total time must be > 0");
  const double horizon = std::min(total_time_s, model.t_clock_s);
  return 1.0 / (model.k_rad_per_s * horizon * std::sqrt(total_time_s * model.t2_s));
}

double crb_tone_frequency(double amplitude_over_noise, double sample_period_s,
                          std::uint64_t n_samples) {
  if (!(amplitude_over_noise > 0.0) || !(sample_period_s > 0.0))
    throw ConfigError("crb inputs must be > 0");
  if (n_samples < 3) throw ConfigError("crb needs at least 3 samples");
  const double n = static_cast<double>(n_samples);
  const double denom = kTwoPi * kTwoPi * amplitude_over_noise * amplitude_over_noise *
                       sample_period_s * sample_period_s * n * (n * n - 1.0);
  return std::sqrt(12.0 / denom);
}

void save_spectrum_csv(const std::filesystem::path& path, const Spectrum& spec) {
  std::string out = "freq_hz,power\n";
  out.reserve(out.size() + spec.size() * 32);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    io::append_double(out, spec.freq(k));
    out.push_back(',');
    io::append_double(out, spec.power[k]);
    out.push_back('\n');
  }
  io::write_text_file(path, out);
}

Spectrum load_spectrum_csv(const std::filesystem::path& path) {
  const std::string content = io::read_text_file(path);
  Spectrum spec;
  std::vector<double> freqs;
  std::size_t pos = 0, line_no = 0;
  while (pos < content.size()) {
    std::size_t eol = content.find('\n', pos);
    if (eol == std::string::npos) eol = content.size();
    std::string_view line(content.data() + pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "freq_hz,power")
        throw ConfigError(path.string() + ": expected header 'freq_hz,power'");
      continue;
    }
    const auto fields = io::split_csv_line(line);
    const std::string ctx = path.string() + ":" + std::to_string(line_no);
    if (fields.size() != 2) throw ConfigError(ctx + ": expected 2 columns");
    freqs.push_back(io::parse_double(fields[0], ctx));
    spec.power.push_back(io::parse_double(fields[1], ctx));
  }
  if (freqs.size() < 2) throw ConfigError(path.string() + ": spectrum needs >= 2 rows");
  spec.bin_width_hz = freqs[1] - freqs[0];
  if (!(spec.bin_width_hz > 0.0))
    throw ConfigError(path.string() + ": frequency column must increase");
  return spec;
}

}  // namespace qdyne
