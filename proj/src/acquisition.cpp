#include "qdyne/acquisition.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include <nlohmann/json.hpp>

#include "qdyne/errors.hpp"
#include "qdyne/io.hpp"
#include "qdyne/spectral.hpp"

namespace qdyne {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::uint64_t kClockStream = 1;
constexpr std::uint64_t kPhotonStream = 2;
constexpr std::size_t kRecordBytes = 8 + 8 + 4;
}  // namespace

void QdyneConfig::validate() const {
  sensor.validate();
  clock.validate();
  const double t_l = t_l_s();
  const double mismatch = std::abs(t_l - clock.nominal_period_s);
  if (mismatch > 1e-12 * t_l)
    throw ConfigError("clock nominal period must equal interaction time + dead time");
  if (!(total_time_s > 0.0) || !std::isfinite(total_time_s))
    throw ConfigError("total time must be finite and > 0");
  if (n_records() < 16) throw ConfigError("total time too short: fewer than 16 records");
  if (source.is_tones()) {
    for (const Tone& t : source.tone_list())
      if (!(t.frequency_hz > 0.0)) throw ConfigError("tone frequency must be > 0");
  }
}

std::uint64_t QdyneConfig::n_records() const {
  return static_cast<std::uint64_t>(std::floor(total_time_s / t_l_s()));
}

void AcquisitionTrace::validate() const {
  if (!(t_l_s > 0.0)) throw TraceFormatError("trace period must be > 0");
  double prev = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].index != i)
      throw TraceFormatError("record " + std::to_string(i) + ": index " +
                             std::to_string(records[i].index) +
                             " breaks the dense 0..N-1 numbering");
    if (!(records[i].t_start_s > prev))
      throw TraceFormatError("record " + std::to_string(i) +
                             ": start time does not increase");
    prev = records[i].t_start_s;
  }
}

namespace {

// per-tone precomputation: each record costs one sine per tone
struct ToneTerm {
  double amp;
  double omega;
  double phase0;
};

std::vector<ToneTerm> make_tone_terms(const QdyneConfig& cfg) {
  std::vector<ToneTerm> terms;
  if (!cfg.source.is_tones()) return terms;
  for (const Tone& t : cfg.source.tone_list()) {
    const std::complex<double> r = tone_window_response(cfg.seq, t.frequency_hz);
    terms.push_back({t.amplitude_rad_per_s * std::abs(r), kTwoPi * t.frequency_hz,
                     t.phase_rad + std::arg(r)});
  }
  return terms;
}

void fill_records(const QdyneConfig& cfg, const std::vector<ToneTerm>& terms,
                  const std::vector<double>& ticks, std::uint64_t first_index,
                  Rng& photon_rng, std::vector<TraceRecord>& out) {
  const double coherence = coherence_envelope(cfg.sensor, cfg.seq.interaction_time_s());
  for (std::size_t i = 0; i < ticks.size(); ++i) {
    const double t_start = ticks[i];
    double phi = 0.0;
    if (cfg.source.is_tones()) {
      for (const ToneTerm& term : terms)
        phi += term.amp * std::sin(term.omega * t_start + term.phase0);
    } else {
      phi = accumulated_phase(cfg.source, cfg.seq, t_start);
    }
    const double p = bright_probability(phi, cfg.axis, coherence);
    out[i] = {first_index + i, t_start, sample_photons(p, cfg.sensor, photon_rng)};
  }
}

}  // namespace

AcquisitionTrace run_qdyne(const QdyneConfig& cfg) {
  cfg.validate();
  const std::uint64_t n = cfg.n_records();
  Rng clock_rng = Rng::stream(cfg.seed, kClockStream);
  Rng photon_rng = Rng::stream(cfg.seed, kPhotonStream);
  const std::vector<double> ticks = tick_times(cfg.clock, n, clock_rng);

  AcquisitionTrace trace;
  trace.t_l_s = cfg.t_l_s();
  trace.seed = cfg.seed;
  trace.records.resize(n);
  fill_records(cfg, make_tone_terms(cfg), ticks, 0, photon_rng, trace.records);
  return trace;
}

AcquisitionTrace run_qdyne_segment(const QdyneConfig& cfg, std::uint64_t first_index,
                                   std::uint64_t count, Rng& photon_rng) {
  cfg.validate();
  if (!cfg.clock.is_perfect())
    throw ConfigError("segmented runs require a perfect clock");
  if (count == 0 || first_index + count > cfg.n_records())
    throw ConfigError("segment range exceeds the configured run");
  std::vector<double> ticks(count);
  for (std::uint64_t i = 0; i < count; ++i)
    ticks[i] = cfg.clock.nominal_period_s * static_cast<double>(first_index + i + 1);

  AcquisitionTrace trace;
  trace.t_l_s = cfg.t_l_s();
  trace.seed = cfg.seed;
  trace.records.resize(count);
  fill_records(cfg, make_tone_terms(cfg), ticks, first_index, photon_rng, trace.records);
  return trace;
}

std::vector<double> expected_phase_series(const QdyneConfig& cfg) {
  cfg.validate();
  if (!cfg.source.is_tones() || cfg.source.tone_list().size() != 1)
    throw ConfigError("expected_phase_series needs a single-tone source");
  if (!cfg.clock.is_perfect())
    throw ConfigError("expected_phase_series assumes a perfect clock");
  const Tone& tone = cfg.source.tone_list().front();
  const double t_l = cfg.t_l_s();
  const AliasResult alias = alias_offset(tone.frequency_hz, t_l);
  const double amp = resonance_phase_amplitude(tone.amplitude_rad_per_s, cfg.seq);
  const std::uint64_t n = cfg.n_records();
  std::vector<double> series(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const double t_start = t_l * static_cast<double>(i + 1);
    series[i] =
        amp * std::cos(kTwoPi * alias.sign * alias.delta_hz * t_start + tone.phase_rad);
  }
  return series;
}

void SweepConfig::validate() const {
  sensor.validate();
  if (n_pulses <= 0 || n_pulses % 8 != 0)
    throw ConfigError("sweep pulse count must be a positive multiple of 8");
  if (tau_grid_s.size() < 2) throw ConfigError("sweep needs at least 2 tau points");
  for (std::size_t i = 0; i < tau_grid_s.size(); ++i) {
    if (!(tau_grid_s[i] > 0.0)) throw ConfigError("sweep tau values must be > 0");
    if (i > 0 && !(tau_grid_s[i] > tau_grid_s[i - 1]))
      throw ConfigError("sweep tau grid must be strictly increasing");
  }
  if (repetitions < 1) throw ConfigError("sweep repetitions must be >= 1");
  if (!source.is_tones()) throw ConfigError("sweep supports tone sources only");
}

std::vector<SweepPoint> run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  const ReadoutAxis population{std::numbers::pi / 2.0};  // response ~ cos(phi)
  Rng rng = Rng::stream(cfg.seed, kPhotonStream);
  std::vector<SweepPoint> points;
  points.reserve(cfg.tau_grid_s.size());
  const double r = static_cast<double>(cfg.repetitions);
  for (double tau : cfg.tau_grid_s) {
    const PulseSequence seq(cfg.n_pulses, tau);
    const double coherence = coherence_envelope(cfg.sensor, seq.interaction_time_s());
    // per-tone amplitude/phase of the accumulated phase as a function of the
    // repetition's random signal phase offset
    struct ToneTerm {
      double amp;
      double phase0;
    };
    std::vector<ToneTerm> terms;
    for (const Tone& t : cfg.source.tone_list()) {
      const std::complex<double> resp = tone_window_response(seq, t.frequency_hz);
      terms.push_back({t.amplitude_rad_per_s * std::abs(resp),
                       t.phase_rad + std::arg(resp)});
    }
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
      const double offset = cfg.random_phase ? kTwoPi * rng.uniform() : 0.0;
      double phi = 0.0;
      for (const ToneTerm& term : terms) phi += term.amp * std::sin(term.phase0 + offset);
      const double p = bright_probability(phi, population, coherence);
      const double count = sample_photons(p, cfg.sensor, rng);
      sum += count;
      sum_sq += count * count;
    }
    const double mean = sum / r;
    double stderr_mean = 0.0;
    if (cfg.repetitions > 1) {
      const double var = (sum_sq - r * mean * mean) / (r - 1.0);
      stderr_mean = std::sqrt(std::max(0.0, var) / r);
    }
    points.push_back({tau, mean, stderr_mean});
  }
  return points;
}

void save_trace(const std::filesystem::path& bin_path,
                const std::filesystem::path& sidecar_path, const AcquisitionTrace& trace) {
  trace.validate();
  std::string blob;
  blob.reserve(trace.records.size() * kRecordBytes);
  for (const TraceRecord& rec : trace.records) {
    io::put_u64(blob, rec.index);
    io::put_f64(blob, rec.t_start_s);
    io::put_u32(blob, rec.photons);
  }
  io::write_text_file(bin_path, blob);

  nlohmann::json sidecar;
  sidecar["schema"] = "qdyne-trace/1";
  sidecar["n_records"] = trace.records.size();
  sidecar["t_l_s"] = trace.t_l_s;
  sidecar["seed"] = trace.seed;
  nlohmann::json config = nlohmann::json::parse(trace.config_json, nullptr, false);
  sidecar["config"] = config.is_discarded() ? nlohmann::json::object() : std::move(config);
  io::write_text_file(sidecar_path, sidecar.dump(2) + "\n");
}

AcquisitionTrace load_trace(const std::filesystem::path& bin_path,
                            const std::filesystem::path& sidecar_path) {
  const std::string blob = io::read_text_file(bin_path);
  if (blob.size() % kRecordBytes != 0)
    throw TraceFormatError(bin_path.string() + ": size is not a whole number of records");
  const std::string sidecar_text = io::read_text_file(sidecar_path);
  nlohmann::json sidecar = nlohmann::json::parse(sidecar_text, nullptr, false);
  if (sidecar.is_discarded() || !sidecar.is_object())
    throw TraceFormatError(sidecar_path.string() + ": sidecar is not valid JSON");
  if (sidecar.value("schema", "") != "qdyne-trace/1")
    throw TraceFormatError(sidecar_path.string() + ": unknown sidecar schema");

  AcquisitionTrace trace;
  const std::size_t n = blob.size() / kRecordBytes;
  if (sidecar.value("n_records", std::uint64_t{0}) != n)
    throw TraceFormatError(bin_path.string() + ": record count disagrees with sidecar");
  trace.t_l_s = sidecar.value("t_l_s", 0.0);
  trace.seed = sidecar.value("seed", std::uint64_t{0});
  trace.config_json = sidecar.contains("config") ? sidecar["config"].dump() : "{}";
  trace.records.resize(n);
  const char* p = blob.data();
  for (std::size_t i = 0; i < n; ++i, p += kRecordBytes) {
    trace.records[i].index = io::get_u64(p);
    trace.records[i].t_start_s = io::get_f64(p + 8);
    trace.records[i].photons = io::get_u32(p + 16);
  }
  try {
    trace.validate();
  } catch (const TraceFormatError& e) {
    throw TraceFormatError(bin_path.string() + ": " + e.what());
  }
  return trace;
}

void save_trace_records_csv(const std::filesystem::path& path,
                            const AcquisitionTrace& trace) {
  std::string out = "n,t_start_s,photons\n";
  out.reserve(out.size() + trace.records.size() * 32);
  for (const TraceRecord& rec : trace.records) {
    out += std::to_string(rec.index);
    out.push_back(',');
    io::append_double(out, rec.t_start_s);
    out.push_back(',');
    out += std::to_string(rec.photons);
    out.push_back('\n');
  }
  io::write_text_file(path, out);
}

void save_sweep_csv(const std::filesystem::path& path,
                    const std::vector<SweepPoint>& points) {
  std::string out = "tau_s,mean,stderr\n";
  for (const SweepPoint& pt : points) {
    io::append_double(out, pt.tau_s);
    out.push_back(',');
    io::append_double(out, pt.mean_photons);
    out.push_back(',');
    io::append_double(out, pt.stderr_photons);
    out.push_back('\n');
  }
  io::write_text_file(path, out);
}

}  // namespace qdyne
