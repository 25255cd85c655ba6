#include "qdyne/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qdyne/errors.hpp"
#include "qdyne/io.hpp"
#include "qdyne/lm.hpp"
#include "qdyne/threads.hpp"

namespace qdyne {

namespace {

struct TrialOutcome {
  double center = 0.0;
  double fwhm = 0.0;
  double snr = 0.0;
  bool ok = false;
};

std::uint64_t derived_seed(std::uint64_t base, std::size_t grid_index, std::size_t trial) {
  Rng mixer = Rng::stream(base, grid_index * 1000003ull + trial + 1);
  return mixer.next_u64();
}

ScalingRow reduce_row(double total_time, std::span<const TrialOutcome> outcomes) {
  ScalingRow row;
  row.total_time_s = total_time;
  row.trials = outcomes.size();
  double fwhm_sum = 0.0, snr_sum = 0.0;
  std::vector<double> centers;
  for (const TrialOutcome& o : outcomes) {
    if (!o.ok) {
      ++row.excluded;
      continue;
    }
    fwhm_sum += o.fwhm;
    snr_sum += o.snr;
    centers.push_back(o.center);
  }
  const std::size_t used = centers.size();
  if (used >= 2) {
    row.fwhm_hz = fwhm_sum / static_cast<double>(used);
    row.snr = snr_sum / static_cast<double>(used);
    double mean = 0.0;
    for (double c : centers) mean += c;
    mean /= static_cast<double>(used);
    double ss = 0.0;
    for (double c : centers) ss += (c - mean) * (c - mean);
    row.precision_hz = std::sqrt(ss / static_cast<double>(used - 1));
  }
  row.valid = used >= 2 &&
              5 * row.excluded <= row.trials;  // > 20% exclusions invalidates
  return row;
}

void fit_slopes(ScalingResult& result) {
  std::vector<double> ts, fwhms, snrs, precisions;
  for (const ScalingRow& row : result.rows) {
    if (!row.valid) continue;
    ts.push_back(row.total_time_s);
    fwhms.push_back(row.fwhm_hz);
    snrs.push_back(row.snr);
    precisions.push_back(row.precision_hz);
  }
  result.fwhm_slope = loglog_slope(ts, fwhms);
  result.snr_slope = loglog_slope(ts, snrs);
  result.precision_slope = loglog_slope(ts, precisions);
}

}  // namespace

SlopeFit loglog_slope(std::span<const double> xs, std::span<const double> ys) {
  SlopeFit fit;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] > 0.0 && ys[i] > 0.0) {
      lx.push_back(std::log10(xs[i]));
      ly.push_back(std::log10(ys[i]));
    }
  }
  const std::size_t n = lx.size();
  fit.n_points = n;
  if (n < 2) {
    fit.slope = std::numeric_limits<double>::quiet_NaN();
    fit.stderr_slope = std::numeric_limits<double>::infinity();
    return fit;
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx <= 0.0) {
    fit.slope = std::numeric_limits<double>::quiet_NaN();
    fit.stderr_slope = std::numeric_limits<double>::infinity();
    return fit;
  }
  fit.slope = sxy / sxx;
  const double intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ly[i] - (intercept + fit.slope * lx[i]);
    ssr += r * r;
  }
  fit.stderr_slope = n > 2 ? std::sqrt(ssr / static_cast<double>(n - 2) / sxx)
                           : std::numeric_limits<double>::infinity();
  return fit;
}

ScalingResult scaling_harness_qdyne(const QdyneConfig& base,
                                    std::span<const double> time_grid_s,
                                    std::size_t trials, const AnalysisOptions& analysis,
                                    unsigned n_threads) {
  if (time_grid_s.size() < 2) throw ConfigError("scaling grid needs >= 2 times");
  if (trials < 2) throw ConfigError("scaling harness needs >= 2 trials");
  if (!base.source.is_tones() || base.source.tone_list().size() != 1)
    throw ConfigError("scaling harness needs a single-tone source");
  const Tone tone = base.source.tone_list().front();
  const AliasResult alias = alias_offset(tone.frequency_hz, base.t_l_s());

  const std::size_t n_cells = time_grid_s.size() * trials;
  std::vector<TrialOutcome> outcomes(n_cells);

  parallel_for(n_cells, n_threads, [&](std::size_t cell) {
    const std::size_t g = cell / trials;
    const std::size_t t = cell % trials;
    QdyneConfig cfg = base;
    cfg.total_time_s = time_grid_s[g];
    cfg.seed = derived_seed(base.seed, g, t);
    const AcquisitionTrace trace = run_qdyne(cfg);
    const Spectrum spec = periodogram(trace, analysis.window, analysis.zero_pad_factor);
    double half = analysis.band_halfwidth_hz;
    if (half <= 0.0)
      half = std::max(8.0 * 0.886 / cfg.total_time_s, 40.0 * spec.bin_width_hz);
    const double lo = std::max(spec.bin_width_hz, alias.delta_hz - half);
    const double hi = std::min(spec.nyquist_hz(), alias.delta_hz + half);
    TrialOutcome outcome;
    try {
      const PeakFit peak = fit_peak(spec, lo, hi, analysis.fit);
      if (peak.converged) {
        outcome.center = peak.center_hz;
        // resolution column: measured width, robust to line-shape mismatch
        outcome.fwhm = half_power_width(spec, peak);
        const SnrResult s = snr(spec, peak);
        outcome.snr = s.infinite ? std::numeric_limits<double>::infinity() : s.value;
        outcome.ok = true;
      }
    } catch (const NoPeakError&) {
      // excluded below
    }
    outcomes[cell] = outcome;
  });

  ScalingResult result;
  for (std::size_t g = 0; g < time_grid_s.size(); ++g)
    result.rows.push_back(reduce_row(
        time_grid_s[g], std::span(outcomes).subspan(g * trials, trials)));
  fit_slopes(result);
  return result;
}

ScalingResult scaling_harness_sweep(const SweepHarnessConfig& base,
                                    std::span<const double> time_grid_s,
                                    std::size_t trials, unsigned n_threads) {
  if (time_grid_s.size() < 2) throw ConfigError("scaling grid needs >= 2 times");
  if (trials < 2) throw ConfigError("scaling harness needs >= 2 trials");
  if (base.tau_grid_s.size() < 8) throw ConfigError("sweep harness needs >= 8 tau points");
  base.sensor.validate();

  const std::size_t n_cells = time_grid_s.size() * trials;
  std::vector<TrialOutcome> outcomes(n_cells);

  parallel_for(n_cells, n_threads, [&](std::size_t cell) {
    const std::size_t g = cell / trials;
    const std::size_t t = cell % trials;
    SweepConfig cfg;
    cfg.source = FieldSource::tone(base.tone);
    cfg.n_pulses = base.n_pulses;
    cfg.tau_grid_s = base.tau_grid_s;
    cfg.sensor = base.sensor;
    cfg.random_phase = true;
    cfg.seed = derived_seed(base.seed, g, t);
    // fair time budget: one repetition costs interaction + dead time
    const double median_tau = base.tau_grid_s[base.tau_grid_s.size() / 2];
    const double cycle =
        median_tau * base.n_pulses + base.sensor.readout_dead_time_s;
    const auto total_reps = static_cast<std::size_t>(time_grid_s[g] / cycle);
    cfg.repetitions = std::max<std::size_t>(2, total_reps / base.tau_grid_s.size());
    const std::vector<SweepPoint> points = run_sweep(cfg);

    // dip fit on the 1/(2 tau) axis, weighted by the per-point stderr
    const std::size_t n = points.size();
    std::vector<double> xs(n), ys(n), ws(n);
    for (std::size_t i = 0; i < n; ++i) {
      const SweepPoint& pt = points[n - 1 - i];  // ascending frequency
      xs[i] = 1.0 / (2.0 * pt.tau_s);
      ys[i] = pt.mean_photons;
      const double se = std::max(pt.stderr_photons, 1e-12);
      ws[i] = 1.0 / (se * se);
    }
    std::vector<double> sorted = ys;
    std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
    const double median = sorted[n / 2];
    std::size_t arg = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (ys[i] < ys[arg]) arg = i;

    LorentzParams init;
    init.floor_level = median;
    init.amplitude = ys[arg] - median;  // negative: a dip
    init.center = xs[arg];
    const double half_level = median + 0.5 * init.amplitude;
    std::size_t left = arg, right = arg;
    while (left > 0 && ys[left] < half_level) --left;
    while (right < n - 1 && ys[right] < half_level) ++right;
    init.fwhm = std::max(xs[right] - xs[left],
                         2.0 * (xs.back() - xs.front()) / static_cast<double>(n));

    TrialOutcome outcome;
    const LorentzFitResult fit = fit_lorentzian(xs, ys, ws, init, 200);
    if (fit.converged && fit.params.amplitude < 0.0 &&
        fit.params.center > xs.front() && fit.params.center < xs.back()) {
      try {
        outcome.center = fit.params.center;
        // resolution column: half-depth width measured on the dip itself
        outcome.fwhm =
            half_maximum_width(xs, ys, arg, fit.params.floor_level, true);
        // depth over the typical point noise, amplitude scale
        double mean_se = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean_se += 1.0 / std::sqrt(ws[i]);
        mean_se /= static_cast<double>(n);
        outcome.snr = -fit.params.amplitude / std::max(mean_se, 1e-300);
        outcome.ok = true;
      } catch (const NoPeakError&) {
        outcome.ok = false;
      }
    }
    outcomes[cell] = outcome;
  });

  ScalingResult result;
  for (std::size_t g = 0; g < time_grid_s.size(); ++g)
    result.rows.push_back(reduce_row(
        time_grid_s[g], std::span(outcomes).subspan(g * trials, trials)));
  fit_slopes(result);
  return result;
}

void save_scaling_csv(const std::filesystem::path& path, const ScalingResult& result) {
  std::string out = "total_time_s,fwhm_hz,snr,precision_hz,trials,excluded,valid\n";
  for (const ScalingRow& row : result.rows) {
    io::append_double(out, row.total_time_s);
    out.push_back(',');
    io::append_double(out, row.fwhm_hz);
    out.push_back(',');
    io::append_double(out, row.snr);
    out.push_back(',');
    io::append_double(out, row.precision_hz);
    out.push_back(',');
    out += std::to_string(row.trials);
    out.push_back(',');
    out += std::to_string(row.excluded);
    out.push_back(',');
    out += row.valid ? "1" : "0";
    out.push_back('\n');
  }
  io::write_text_file(path, out);
}

}  // namespace qdyne
