// qdyne: simulate heterodyne sensing experiments from JSON configs and
// re-analyze stored traces.  Every run is fully determined by (config, seed);
// the manifest echoes all effective values so defaults are never implicit.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "qdyne/acquisition.hpp"
#include "qdyne/clock.hpp"
#include "qdyne/errors.hpp"
#include "qdyne/io.hpp"
#include "qdyne/nanonmr.hpp"
#include "qdyne/rng.hpp"
#include "qdyne/scaling.hpp"
#include "qdyne/sensor.hpp"
#include "qdyne/signals.hpp"
#include "qdyne/spectral.hpp"
#include "qdyne/threads.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qdyne;

namespace {

constexpr const char* kAppVersion = "0.1.0";

// config problems found before any science runs; exit code 2
struct SchemaError : std::runtime_error {
  explicit SchemaError(const std::string& msg) : std::runtime_error(msg) {}
};

[[noreturn]] void fail_field(const std::string& path, const std::string& what) {
  throw SchemaError(path + ": " + what);
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) fail_field(path + "." + it.key(), "unknown field");
  }
}

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return nullptr;
  return &*it;
}

json get_object(const json& obj, const std::string& path, const char* key) {
  const json* v = find(obj, key);
  if (!v) return json::object();
  if (!v->is_object()) fail_field(path.empty() ? key : path + "." + key, "expected an object");
  return *v;
}

double get_number(const json& obj, const std::string& path, const char* key, double def) {
  const json* v = find(obj, key);
  if (!v) return def;
  if (!v->is_number()) fail_field(path + "." + key, "expected a number");
  return v->get<double>();
}

double require_number(const json& obj, const std::string& path, const char* key) {
  const json* v = find(obj, key);
  if (!v) fail_field(path + "." + key, "required number is missing");
  if (!v->is_number()) fail_field(path + "." + key, "expected a number");
  return v->get<double>();
}

std::int64_t get_integer(const json& obj, const std::string& path, const char* key,
                         std::int64_t def) {
  const json* v = find(obj, key);
  if (!v) return def;
  if (!v->is_number_integer() && !v->is_number_unsigned())
    fail_field(path + "." + key, "expected an integer");
  return v->get<std::int64_t>();
}

std::uint64_t get_uint(const json& obj, const std::string& path, const char* key,
                       std::uint64_t def) {
  const json* v = find(obj, key);
  if (!v) return def;
  const bool ok = v->is_number_unsigned() ||
                  (v->is_number_integer() && v->get<std::int64_t>() >= 0);
  if (!ok) fail_field(path + "." + key, "expected a nonnegative integer");
  return v->get<std::uint64_t>();
}

bool get_bool(const json& obj, const std::string& path, const char* key, bool def) {
  const json* v = find(obj, key);
  if (!v) return def;
  if (!v->is_boolean()) fail_field(path + "." + key, "expected true or false");
  return v->get<bool>();
}

std::string get_string(const json& obj, const std::string& path, const char* key,
                       const std::string& def) {
  const json* v = find(obj, key);
  if (!v) return def;
  if (!v->is_string()) fail_field(path + "." + key, "expected a string");
  return v->get<std::string>();
}

std::vector<double> require_number_array(const json& obj, const std::string& path,
                                         const char* key) {
  const json* v = find(obj, key);
  if (!v) fail_field(path + "." + key, "required array is missing");
  if (!v->is_array() || v->empty()) fail_field(path + "." + key, "expected a nonempty array");
  std::vector<double> out;
  out.reserve(v->size());
  for (const json& e : *v) {
    if (!e.is_number()) fail_field(path + "." + key, "expected numbers only");
    out.push_back(e.get<double>());
  }
  return out;
}

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// ---- block parsers; each echoes the effective values into `eff` ----

PulseSequence parse_sequence(const json& root, json& eff) {
  const json obj = get_object(root, "", "sequence");
  check_keys(obj, "sequence", {"n_pulses", "tau_s"});
  const int n = static_cast<int>(get_integer(obj, "sequence", "n_pulses", 8));
  const double tau = get_number(obj, "sequence", "tau_s", 5e-7);
  PulseSequence seq(n, tau);
  eff["sequence"] = {{"n_pulses", seq.n_pulses}, {"tau_s", seq.tau_s}};
  return seq;
}

SensorParams parse_sensor(const json& root, json& eff) {
  const json obj = get_object(root, "", "sensor");
  check_keys(obj, "sensor",
             {"t2_s", "decay_exponent_beta", "contrast", "mean_photons_bright",
              "readout_dead_time_s"});
  SensorParams s;
  s.t2_s = get_number(obj, "sensor", "t2_s", 1e-3);
  s.decay_exponent_beta = get_number(obj, "sensor", "decay_exponent_beta", 1.0);
  s.contrast = get_number(obj, "sensor", "contrast", 0.3);
  s.mean_photons_bright = get_number(obj, "sensor", "mean_photons_bright", 0.05);
  s.readout_dead_time_s = get_number(obj, "sensor", "readout_dead_time_s", 5e-6);
  s.validate();
  eff["sensor"] = {{"t2_s", s.t2_s},
                   {"decay_exponent_beta", s.decay_exponent_beta},
                   {"contrast", s.contrast},
                   {"mean_photons_bright", s.mean_photons_bright},
                   {"readout_dead_time_s", s.readout_dead_time_s}};
  return s;
}

ReadoutAxis parse_axis(const json& root, json& eff) {
  const json obj = get_object(root, "", "axis");
  check_keys(obj, "axis", {"final_pulse_phase_rad"});
  ReadoutAxis axis;
  axis.final_pulse_phase_rad = get_number(obj, "axis", "final_pulse_phase_rad", 0.0);
  eff["axis"] = {{"final_pulse_phase_rad", axis.final_pulse_phase_rad}};
  return axis;
}

ClockModel parse_clock(const json& root, json& eff, double t_l_s) {
  const json obj = get_object(root, "", "clock");
  check_keys(obj, "clock",
             {"nominal_period_s", "white_jitter_sigma_s", "frequency_random_walk_sigma",
              "stability_horizon_s"});
  ClockModel clock;
  clock.nominal_period_s = get_number(obj, "clock", "nominal_period_s", t_l_s);
  clock.white_jitter_sigma_s = get_number(obj, "clock", "white_jitter_sigma_s", 0.0);
  clock.frequency_random_walk_sigma =
      get_number(obj, "clock", "frequency_random_walk_sigma", 0.0);
  clock.stability_horizon_s = get_number(obj, "clock", "stability_horizon_s", 0.0);
  clock.validate();
  eff["clock"] = {{"nominal_period_s", clock.nominal_period_s},
                  {"white_jitter_sigma_s", clock.white_jitter_sigma_s},
                  {"frequency_random_walk_sigma", clock.frequency_random_walk_sigma},
                  {"stability_horizon_s", clock.stability_horizon_s}};
  return clock;
}

Tone parse_tone_object(const json& obj, const std::string& path) {
  check_keys(obj, path, {"amplitude_rad_per_s", "frequency_hz", "phase_rad"});
  const double amp = require_number(obj, path, "amplitude_rad_per_s");
  const double freq = require_number(obj, path, "frequency_hz");
  const double phase = get_number(obj, path, "phase_rad", 0.0);
  return Tone(amp, freq, phase);
}

json tone_to_json(const Tone& t) {
  return {{"amplitude_rad_per_s", t.amplitude_rad_per_s},
          {"frequency_hz", t.frequency_hz},
          {"phase_rad", t.phase_rad}};
}

Tone parse_tone(const json& root, json& eff) {
  const json* v = find(root, "tone");
  if (!v) fail_field("tone", "required object is missing");
  if (!v->is_object()) fail_field("tone", "expected an object");
  const Tone t = parse_tone_object(*v, "tone");
  eff["tone"] = tone_to_json(t);
  return t;
}

std::vector<Tone> parse_tones(const json& root, json& eff) {
  const json* v = find(root, "tones");
  if (!v) fail_field("tones", "required array is missing");
  if (!v->is_array() || v->empty()) fail_field("tones", "expected a nonempty array");
  std::vector<Tone> tones;
  json echo = json::array();
  for (std::size_t i = 0; i < v->size(); ++i) {
    const json& e = (*v)[i];
    const std::string path = "tones[" + std::to_string(i) + "]";
    if (!e.is_object()) fail_field(path, "expected an object");
    tones.push_back(parse_tone_object(e, path));
    echo.push_back(tone_to_json(tones.back()));
  }
  eff["tones"] = std::move(echo);
  return tones;
}

struct AnalysisSpec {
  Window window = Window::rectangular;
  std::size_t zero_pad_factor = 4;
  std::optional<double> expected_hz;
  double band_halfwidth_hz = 0.0;  // 0 = automatic
  FitOptions fit;
};

// single-shot fits here target coherent window-limited lines: unweighted
// least squares tracks the line core (model-weighted passes let the sinc^2
// wings drag the width), and the flat-floor significance gate stays on
// because each run fits exactly one band
FitOptions cli_fit_defaults() {
  FitOptions fit;
  fit.noise = FitOptions::NoiseModel::constant;
  return fit;
}

AnalysisSpec parse_analysis(const json& root, json& eff, const FitOptions& fit_defaults) {
  const json obj = get_object(root, "", "analysis");
  check_keys(obj, "analysis",
             {"window", "zero_pad_factor", "expected_frequency_hz", "band_halfwidth_hz",
              "fit"});
  AnalysisSpec a;
  const std::string wname = get_string(obj, "analysis", "window", "rectangular");
  if (wname == "rectangular") {
    a.window = Window::rectangular;
  } else if (wname == "hann") {
    a.window = Window::hann;
  } else {
    fail_field("analysis.window", "expected \"rectangular\" or \"hann\"");
  }
  a.zero_pad_factor = get_uint(obj, "analysis", "zero_pad_factor", 4);
  if (a.zero_pad_factor == 0) fail_field("analysis.zero_pad_factor", "must be >= 1");
  if (find(obj, "expected_frequency_hz"))
    a.expected_hz = require_number(obj, "analysis", "expected_frequency_hz");
  a.band_halfwidth_hz = get_number(obj, "analysis", "band_halfwidth_hz", 0.0);
  if (a.band_halfwidth_hz < 0.0) fail_field("analysis.band_halfwidth_hz", "must be >= 0");

  const json fobj = get_object(obj, "analysis", "fit");
  check_keys(fobj, "analysis.fit",
             {"noise", "require_significance", "max_iterations", "init_fwhm_hz"});
  a.fit = fit_defaults;
  const std::string default_noise =
      fit_defaults.noise == FitOptions::NoiseModel::constant ? "constant" : "relative";
  const std::string nname = get_string(fobj, "analysis.fit", "noise", default_noise);
  if (nname == "constant") {
    a.fit.noise = FitOptions::NoiseModel::constant;
  } else if (nname == "relative") {
    a.fit.noise = FitOptions::NoiseModel::relative;
  } else {
    fail_field("analysis.fit.noise", "expected \"constant\" or \"relative\"");
  }
  a.fit.require_significance = get_bool(fobj, "analysis.fit", "require_significance",
                                        fit_defaults.require_significance);
  a.fit.max_iterations = static_cast<int>(
      get_integer(fobj, "analysis.fit", "max_iterations", fit_defaults.max_iterations));
  if (a.fit.max_iterations < 1) fail_field("analysis.fit.max_iterations", "must be >= 1");
  a.fit.init_fwhm_hz =
      get_number(fobj, "analysis.fit", "init_fwhm_hz", fit_defaults.init_fwhm_hz);

  json fe = {{"noise", nname},
             {"require_significance", a.fit.require_significance},
             {"max_iterations", a.fit.max_iterations},
             {"init_fwhm_hz", a.fit.init_fwhm_hz}};
  eff["analysis"] = {{"window", wname},
                     {"zero_pad_factor", a.zero_pad_factor},
                     {"band_halfwidth_hz", a.band_halfwidth_hz},
                     {"fit", std::move(fe)}};
  if (a.expected_hz) eff["analysis"]["expected_frequency_hz"] = *a.expected_hz;
  return a;
}

BathConfig parse_bath(const json& root, json& eff) {
  const json obj = get_object(root, "", "bath");
  check_keys(obj, "bath",
             {"box_x_nm", "box_y_nm", "box_z_nm", "nv_depth_nm", "density_per_nm3",
              "explicit_spin_count", "diffusion_m2_per_s", "t1p_s", "larmor_hz",
              "timestep_s", "kappa_rad_nm3_per_s", "max_spins"});
  BathConfig b;
  b.box_x_nm = get_number(obj, "bath", "box_x_nm", b.box_x_nm);
  b.box_y_nm = get_number(obj, "bath", "box_y_nm", b.box_y_nm);
  b.box_z_nm = get_number(obj, "bath", "box_z_nm", b.box_z_nm);
  b.nv_depth_nm = get_number(obj, "bath", "nv_depth_nm", b.nv_depth_nm);
  b.density_per_nm3 = get_number(obj, "bath", "density_per_nm3", b.density_per_nm3);
  if (find(obj, "explicit_spin_count"))
    b.explicit_spin_count =
        static_cast<std::uint32_t>(get_uint(obj, "bath", "explicit_spin_count", 0));
  b.diffusion_m2_per_s = get_number(obj, "bath", "diffusion_m2_per_s", b.diffusion_m2_per_s);
  b.t1p_s = get_number(obj, "bath", "t1p_s", b.t1p_s);
  b.larmor_hz = get_number(obj, "bath", "larmor_hz", b.larmor_hz);
  b.timestep_s = get_number(obj, "bath", "timestep_s", b.timestep_s);
  b.kappa_rad_nm3_per_s = get_number(obj, "bath", "kappa_rad_nm3_per_s", b.kappa_rad_nm3_per_s);
  b.max_spins = static_cast<std::uint32_t>(get_uint(obj, "bath", "max_spins", b.max_spins));
  eff["bath"] = {{"box_x_nm", b.box_x_nm},
                 {"box_y_nm", b.box_y_nm},
                 {"box_z_nm", b.box_z_nm},
                 {"nv_depth_nm", b.nv_depth_nm},
                 {"density_per_nm3", b.density_per_nm3},
                 {"diffusion_m2_per_s", b.diffusion_m2_per_s},
                 {"t1p_s", b.t1p_s},
                 {"larmor_hz", b.larmor_hz},
                 {"timestep_s", b.timestep_s},
                 {"kappa_rad_nm3_per_s", b.kappa_rad_nm3_per_s},
                 {"max_spins", b.max_spins}};
  if (b.explicit_spin_count) eff["bath"]["explicit_spin_count"] = *b.explicit_spin_count;
  return b;
}

std::vector<double> parse_tau_grid(const json& root, json& eff) {
  std::vector<double> grid;
  if (find(root, "tau_grid_s")) {
    grid = require_number_array(root, "", "tau_grid_s");
  } else {
    const double lo = require_number(root, "", "tau_lo_s");
    const double hi = require_number(root, "", "tau_hi_s");
    const auto n = get_uint(root, "", "n_tau", 41);
    if (!(lo > 0.0 && hi > lo)) fail_field("tau_lo_s/tau_hi_s", "need 0 < tau_lo_s < tau_hi_s");
    if (n < 2) fail_field("n_tau", "must be >= 2");
    grid.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  eff["tau_grid_s"] = grid;
  return grid;
}

// ---- artifact writers ----

struct RunContext {
  fs::path out_dir;
  std::string format = "csv";  // data tables; fits and manifests are always JSON
  unsigned threads = 1;
  json effective = json::object();
  std::vector<std::string> artifacts;
};

void write_json_file(RunContext& ctx, const std::string& name, const json& j) {
  io::write_text_file(ctx.out_dir / name, j.dump(2) + "\n");
  ctx.artifacts.push_back(name);
}

json spectrum_to_json(const Spectrum& spec) {
  json j;
  j["bin_width_hz"] = spec.bin_width_hz;
  j["window"] = spec.window == Window::hann ? "hann" : "rectangular";
  j["n_records"] = spec.n_records;
  j["n_segments"] = spec.n_segments;
  j["sample_period_s"] = spec.sample_period_s;
  j["power"] = spec.power;
  return j;
}

void write_spectrum_artifact(RunContext& ctx, const Spectrum& spec) {
  if (ctx.format == "json") {
    write_json_file(ctx, "spectrum.json", spectrum_to_json(spec));
  } else {
    save_spectrum_csv(ctx.out_dir / "spectrum.csv", spec);
    ctx.artifacts.push_back("spectrum.csv");
  }
}

double auto_band_halfwidth(const Spectrum& spec, double total_time_s) {
  const double fourier = 0.886 / total_time_s;
  return std::max(8.0 * fourier, 40.0 * spec.bin_width_hz);
}

json fit_to_json(const Spectrum& spec, const PeakFit& pk) {
  json j;
  j["no_peak"] = false;
  j["center_hz"] = pk.center_hz;
  j["fwhm_lorentz_hz"] = pk.fwhm_hz;
  j["amplitude"] = pk.amplitude;
  j["floor_level"] = pk.floor_level;
  j["ci_center_hz"] = pk.ci_center_hz;
  j["ci_fwhm_hz"] = pk.ci_fwhm_hz;
  j["ci_amplitude"] = pk.ci_amplitude;
  j["ci_floor"] = pk.ci_floor;
  j["converged"] = pk.converged;
  j["iterations"] = pk.iterations;
  j["residual_norm"] = pk.residual_norm;
  try {
    j["half_power_width_hz"] = half_power_width(spec, pk);
  } catch (const NoPeakError&) {
    j["half_power_width_hz"] = nullptr;
  }
  const SnrResult s = snr(spec, pk);
  j["snr"] = s.value;
  j["snr_infinite"] = s.infinite;
  return j;
}

// fit inside [lo, hi] and serialize; an insignificant band is a result, not a
// failure, so it lands in the artifact as no_peak and the exit stays 0
json fit_band_to_json(const Spectrum& spec, double lo_hz, double hi_hz,
                      const FitOptions& fit) {
  json j;
  try {
    const PeakFit pk = fit_peak(spec, lo_hz, hi_hz, fit);
    j = fit_to_json(spec, pk);
  } catch (const NoPeakError& e) {
    j["no_peak"] = true;
    j["message"] = e.what();
  }
  j["band_hz"] = {lo_hz, hi_hz};
  return j;
}

void write_manifest(RunContext& ctx, const std::string& kind, std::uint64_t seed,
                    std::string_view raw_config, double wall_seconds) {
  json m;
  m["schema"] = "qdyne-manifest/1";
  m["kind"] = kind;
  m["seed"] = seed;
  m["config_fnv1a64"] = hex16(io::fnv1a64(raw_config));
  m["effective_config"] = ctx.effective;
  m["artifacts"] = ctx.artifacts;
  m["versions"] = {{"app", kAppVersion},
                   {"trace_format", "qdyne-trace/1"},
                   {"compiler", __VERSION__}};
  // wall time is informational; determinism applies to the data artifacts
  m["wall_time_s"] = wall_seconds;
  io::write_text_file(ctx.out_dir / "manifest.json", m.dump(2) + "\n");
}

// ---- experiment kinds ----

int run_qdyne_kind(const json& cfg, RunContext& ctx, std::uint64_t seed, bool dry_run) {
  check_keys(cfg, "config",
             {"kind", "seed", "out_dir", "tone", "sequence", "sensor", "axis", "clock",
              "total_time_s", "analysis", "export_records_csv"});
  QdyneConfig qc;
  qc.seq = parse_sequence(cfg, ctx.effective);
  qc.sensor = parse_sensor(cfg, ctx.effective);
  qc.axis = parse_axis(cfg, ctx.effective);
  const Tone tone = parse_tone(cfg, ctx.effective);
  qc.source = FieldSource::tone(tone);
  qc.clock = parse_clock(cfg, ctx.effective, qc.t_l_s());
  qc.total_time_s = require_number(cfg, "config", "total_time_s");
  qc.seed = seed;
  qc.validate();
  ctx.effective["total_time_s"] = qc.total_time_s;
  const AnalysisSpec a = parse_analysis(cfg, ctx.effective, cli_fit_defaults());
  const bool export_csv = get_bool(cfg, "config", "export_records_csv", false);
  ctx.effective["export_records_csv"] = export_csv;

  const AliasResult alias = alias_offset(tone.frequency_hz, qc.t_l_s());
  std::printf("qdyne: N=%llu records, T_L=%.6g s, alias=%.6g Hz (sign %+d)\n",
              static_cast<unsigned long long>(qc.n_records()), qc.t_l_s(), alias.delta_hz,
              alias.sign);
  if (dry_run) return 0;

  AcquisitionTrace trace = run_qdyne(qc);
  trace.config_json = ctx.effective.dump();
  save_trace(ctx.out_dir / "trace.bin", ctx.out_dir / "trace_meta.json", trace);
  ctx.artifacts.push_back("trace.bin");
  ctx.artifacts.push_back("trace_meta.json");
  if (export_csv) {
    save_trace_records_csv(ctx.out_dir / "trace_records.csv", trace);
    ctx.artifacts.push_back("trace_records.csv");
  }

  const Spectrum spec = periodogram(trace, a.window, a.zero_pad_factor);
  write_spectrum_artifact(ctx, spec);

  const double expected = a.expected_hz.value_or(alias.delta_hz);
  const double half = a.band_halfwidth_hz > 0.0 ? a.band_halfwidth_hz
                                                : auto_band_halfwidth(spec, qc.total_time_s);
  const double lo = std::max(spec.bin_width_hz, expected - half);
  const double hi = std::min(spec.nyquist_hz(), expected + half);
  json pj = fit_band_to_json(spec, lo, hi, a.fit);
  pj["alias_hz"] = alias.delta_hz;
  pj["alias_sign"] = alias.sign;
  pj["expected_hz"] = expected;
  write_json_file(ctx, "peak.json", pj);

  if (pj["no_peak"].get<bool>()) {
    std::printf("peak: none found in [%.6g, %.6g] Hz\n", lo, hi);
  } else {
    std::printf("peak: center=%.6g Hz fwhm=%.6g Hz snr=%.6g\n",
                pj["center_hz"].get<double>(), pj["fwhm_lorentz_hz"].get<double>(),
                pj["snr"].get<double>());
  }
  return 0;
}

int run_sweep_kind(const json& cfg, RunContext& ctx, std::uint64_t seed, bool dry_run) {
  check_keys(cfg, "config",
             {"kind", "seed", "out_dir", "tone", "n_pulses", "sensor", "tau_grid_s",
              "tau_lo_s", "tau_hi_s", "n_tau", "repetitions", "random_phase"});
  SweepConfig sc;
  const Tone tone = parse_tone(cfg, ctx.effective);
  sc.source = FieldSource::tone(tone);
  sc.n_pulses = static_cast<int>(get_integer(cfg, "config", "n_pulses", 8));
  sc.sensor = parse_sensor(cfg, ctx.effective);
  sc.tau_grid_s = parse_tau_grid(cfg, ctx.effective);
  sc.repetitions = get_uint(cfg, "config", "repetitions", 1000);
  sc.random_phase = get_bool(cfg, "config", "random_phase", true);
  sc.seed = seed;
  sc.validate();
  ctx.effective["n_pulses"] = sc.n_pulses;
  ctx.effective["repetitions"] = sc.repetitions;
  ctx.effective["random_phase"] = sc.random_phase;

  std::printf("sweep: %zu tau points x %zu repetitions\n", sc.tau_grid_s.size(),
              sc.repetitions);
  if (dry_run) return 0;

  const std::vector<SweepPoint> points = run_sweep(sc);
  if (ctx.format == "json") {
    json rows = json::array();
    for (const SweepPoint& p : points)
      rows.push_back({{"tau_s", p.tau_s},
                      {"mean", p.mean_photons},
                      {"stderr", p.stderr_photons}});
    write_json_file(ctx, "sweep.json", rows);
  } else {
    save_sweep_csv(ctx.out_dir / "sweep.csv", points);
    ctx.artifacts.push_back("sweep.csv");
  }

  const auto dip = std::min_element(points.begin(), points.end(),
                                    [](const SweepPoint& x, const SweepPoint& y) {
                                      return x.mean_photons < y.mean_photons;
                                    });
  json summary;
  summary["dip_tau_s"] = dip->tau_s;
  summary["dip_frequency_hz"] = 1.0 / (2.0 * dip->tau_s);
  summary["dip_mean"] = dip->mean_photons;
  write_json_file(ctx, "summary.json", summary);
  std::printf("dip: tau=%.6g s -> %.6g Hz\n", dip->tau_s, 1.0 / (2.0 * dip->tau_s));
  return 0;
}

json slope_to_json(const SlopeFit& s) {
  return {{"slope", s.slope}, {"stderr", s.stderr_slope}, {"n_points", s.n_points}};
}

int run_scaling_kind(const json& cfg, RunContext& ctx, std::uint64_t seed, bool dry_run) {
  check_keys(cfg, "config",
             {"kind", "seed", "out_dir", "arm", "time_grid_s", "trials", "tone", "sequence",
              "sensor", "axis", "clock", "analysis", "n_pulses", "tau_grid_s", "tau_lo_s",
              "tau_hi_s", "n_tau"});
  const std::string arm = get_string(cfg, "config", "arm", "qdyne");
  const std::vector<double> grid = require_number_array(cfg, "config", "time_grid_s");
  const auto trials = get_uint(cfg, "config", "trials", 20);
  if (trials < 2) fail_field("trials", "must be >= 2");
  ctx.effective["arm"] = arm;
  ctx.effective["time_grid_s"] = grid;
  ctx.effective["trials"] = trials;

  ScalingResult result;
  if (arm == "qdyne") {
    QdyneConfig base;
    base.seq = parse_sequence(cfg, ctx.effective);
    base.sensor = parse_sensor(cfg, ctx.effective);
    base.axis = parse_axis(cfg, ctx.effective);
    base.source = FieldSource::tone(parse_tone(cfg, ctx.effective));
    base.clock = parse_clock(cfg, ctx.effective, base.t_l_s());
    base.seed = seed;
    AnalysisOptions analysis;
    const AnalysisSpec a = parse_analysis(cfg, ctx.effective, analysis.fit);
    analysis.window = a.window;
    analysis.zero_pad_factor = a.zero_pad_factor;
    analysis.band_halfwidth_hz = a.band_halfwidth_hz;
    analysis.fit = a.fit;
    std::printf("scaling/qdyne: %zu times x %zu trials, %u threads\n", grid.size(),
                static_cast<std::size_t>(trials), ctx.threads);
    if (dry_run) return 0;
    result = scaling_harness_qdyne(base, grid, trials, analysis, ctx.threads);
  } else if (arm == "sweep") {
    SweepHarnessConfig base;
    base.tone = parse_tone(cfg, ctx.effective);
    base.n_pulses = static_cast<int>(get_integer(cfg, "config", "n_pulses", 8));
    base.sensor = parse_sensor(cfg, ctx.effective);
    base.tau_grid_s = parse_tau_grid(cfg, ctx.effective);
    base.seed = seed;
    ctx.effective["n_pulses"] = base.n_pulses;
    std::printf("scaling/sweep: %zu times x %zu trials, %u threads\n", grid.size(),
                static_cast<std::size_t>(trials), ctx.threads);
    if (dry_run) return 0;
    result = scaling_harness_sweep(base, grid, trials, ctx.threads);
  } else {
    fail_field("arm", "expected \"qdyne\" or \"sweep\"");
  }

  if (ctx.format == "json") {
    json rows = json::array();
    for (const ScalingRow& r : result.rows)
      rows.push_back({{"total_time_s", r.total_time_s},
                      {"fwhm_hz", r.fwhm_hz},
                      {"snr", r.snr},
                      {"precision_hz", r.precision_hz},
                      {"trials", r.trials},
                      {"excluded", r.excluded},
                      {"valid", r.valid}});
    write_json_file(ctx, "scaling.json", rows);
  } else {
    save_scaling_csv(ctx.out_dir / "scaling.csv", result);
    ctx.artifacts.push_back("scaling.csv");
  }
  json summary;
  summary["fwhm_slope"] = slope_to_json(result.fwhm_slope);
  summary["snr_slope"] = slope_to_json(result.snr_slope);
  summary["precision_slope"] = slope_to_json(result.precision_slope);
  write_json_file(ctx, "summary.json", summary);
  std::printf("slopes: fwhm=%.3f snr=%.3f precision=%.3f\n", result.fwhm_slope.slope,
              result.snr_slope.slope, result.precision_slope.slope);
  return 0;
}

int run_bandwidth_kind(const json& cfg, RunContext& ctx, std::uint64_t seed, bool dry_run) {
  check_keys(cfg, "config",
             {"kind", "seed", "out_dir", "tone_amplitude_rad_per_s", "base_frequency_hz",
              "detuning_span_hz", "n_points", "total_time_s", "fit_band_halfwidth_hz",
              "min_relative_weight", "sequence", "sensor", "axis", "clock", "analysis"});
  QdyneConfig base;
  base.seq = parse_sequence(cfg, ctx.effective);
  base.sensor = parse_sensor(cfg, ctx.effective);
  base.axis = parse_axis(cfg, ctx.effective);
  base.clock = parse_clock(cfg, ctx.effective, base.t_l_s());
  base.total_time_s = require_number(cfg, "config", "total_time_s");
  const double amp = require_number(cfg, "config", "tone_amplitude_rad_per_s");
  const double base_freq = require_number(cfg, "config", "base_frequency_hz");
  const double span = get_number(cfg, "config", "detuning_span_hz", 3e5);
  const auto n_points = get_uint(cfg, "config", "n_points", 49);
  const double fit_half = get_number(cfg, "config", "fit_band_halfwidth_hz", 100.0);
  const double min_weight = get_number(cfg, "config", "min_relative_weight", 0.05);
  if (n_points < 3) fail_field("n_points", "must be >= 3");
  if (!(span > 0.0)) fail_field("detuning_span_hz", "must be > 0");
  const AnalysisSpec a = parse_analysis(cfg, ctx.effective, cli_fit_defaults());
  ctx.effective["tone_amplitude_rad_per_s"] = amp;
  ctx.effective["base_frequency_hz"] = base_freq;
  ctx.effective["detuning_span_hz"] = span;
  ctx.effective["n_points"] = n_points;
  ctx.effective["total_time_s"] = base.total_time_s;
  ctx.effective["fit_band_halfwidth_hz"] = fit_half;
  ctx.effective["min_relative_weight"] = min_weight;

  std::printf("bandwidth: %zu detunings over +-%.6g Hz around %.6g Hz\n",
              static_cast<std::size_t>(n_points), span, base_freq);
  if (dry_run) return 0;

  struct Row {
    double detuning = 0.0;
    double freq = 0.0;
    double alias = 0.0;
    double amplitude = 0.0;  // fitted peak power, 0 when excluded
    double weight = 0.0;     // filter response, amplitude units
    bool fitted = false;
  };
  std::vector<Row> rows(n_points);
  const double t_l = base.t_l_s();
  parallel_for(n_points, ctx.threads, [&](std::size_t i) {
    Row& row = rows[i];
    row.detuning = -span + 2.0 * span * static_cast<double>(i) /
                              static_cast<double>(n_points - 1);
    row.freq = base_freq + row.detuning;
    row.weight = filter_weight(row.freq, base.seq);
    const AliasResult alias = alias_offset(row.freq, t_l);
    row.alias = alias.delta_hz;
    QdyneConfig qc = base;
    qc.source = FieldSource::tone(Tone(amp, row.freq, 0.0));
    qc.seed = Rng::stream(seed, 500 + i).next_u64();
    const AcquisitionTrace trace = run_qdyne(qc);
    const Spectrum spec = periodogram(trace, a.window, a.zero_pad_factor);
    const double lo = std::max(spec.bin_width_hz, alias.delta_hz - fit_half);
    const double hi = std::min(spec.nyquist_hz(), alias.delta_hz + fit_half);
    try {
      const PeakFit pk = fit_peak(spec, lo, hi, a.fit);
      row.amplitude = pk.amplitude;
      row.fitted = pk.converged;
    } catch (const NoPeakError&) {
      row.fitted = false;
    }
  });

  // normalize measured power and predicted |weight|^2 by the strongest
  // predicted point, then compare where the filter still passes signal
  std::size_t ref = 0;
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].weight > rows[ref].weight) ref = i;
  if (!rows[ref].fitted)
    throw NumericalError("bandwidth reference point (max filter weight) had no peak");
  const double amp_ref = rows[ref].amplitude;
  const double w_ref = rows[ref].weight * rows[ref].weight;

  double sum_sq_dev = 0.0;
  std::size_t n_used = 0;
  std::string csv =
      "detuning_hz,frequency_hz,alias_hz,amplitude,amplitude_rel,predicted_rel,included\n";
  json jrows = json::array();
  for (const Row& row : rows) {
    const double predicted = row.weight * row.weight / w_ref;
    const double measured = row.fitted ? row.amplitude / amp_ref : 0.0;
    const bool included = predicted >= min_weight;
    if (included) {
      const double dev = measured / predicted - 1.0;
      sum_sq_dev += dev * dev;
      ++n_used;
    }
    io::append_double(csv, row.detuning);
    csv.push_back(',');
    io::append_double(csv, row.freq);
    csv.push_back(',');
    io::append_double(csv, row.alias);
    csv.push_back(',');
    io::append_double(csv, row.amplitude);
    csv.push_back(',');
    io::append_double(csv, measured);
    csv.push_back(',');
    io::append_double(csv, predicted);
    csv.push_back(',');
    csv += included ? '1' : '0';
    csv.push_back('\n');
    jrows.push_back({{"detuning_hz", row.detuning},
                     {"frequency_hz", row.freq},
                     {"alias_hz", row.alias},
                     {"amplitude", row.amplitude},
                     {"amplitude_rel", measured},
                     {"predicted_rel", predicted},
                     {"included", included}});
  }
  if (ctx.format == "json") {
    write_json_file(ctx, "bandwidth.json", jrows);
  } else {
    io::write_text_file(ctx.out_dir / "bandwidth.csv", csv);
    ctx.artifacts.push_back("bandwidth.csv");
  }
  const double rms = n_used ? std::sqrt(sum_sq_dev / static_cast<double>(n_used)) : 0.0;
  json summary;
  summary["rms_relative_deviation"] = rms;
  summary["points_compared"] = n_used;
  write_json_file(ctx, "summary.json", summary);
  std::printf("filter tracking: rms relative deviation %.4f over %zu points\n", rms, n_used);
  return 0;
}

int run_multitone_kind(const json& cfg, RunContext& ctx, std::uint64_t seed, bool dry_run) {
  check_keys(cfg, "config",
             {"kind", "seed", "out_dir", "tones", "sequence", "sensor", "axis", "clock",
              "total_time_s", "analysis", "band_halfwidth_hz"});
  QdyneConfig qc;
  qc.seq = parse_sequence(cfg, ctx.effective);
  qc.sensor = parse_sensor(cfg, ctx.effective);
  qc.axis = parse_axis(cfg, ctx.effective);
  const std::vector<Tone> tones = parse_tones(cfg, ctx.effective);
  qc.source = FieldSource::tones(tones);
  qc.clock = parse_clock(cfg, ctx.effective, qc.t_l_s());
  qc.total_time_s = require_number(cfg, "config", "total_time_s");
  qc.seed = seed;
  qc.validate();
  const AnalysisSpec a = parse_analysis(cfg, ctx.effective, cli_fit_defaults());
  ctx.effective["total_time_s"] = qc.total_time_s;

  std::printf("multitone: %zu tones, N=%llu records\n", tones.size(),
              static_cast<unsigned long long>(qc.n_records()));
  if (dry_run) return 0;

  const AcquisitionTrace trace = run_qdyne(qc);
  const Spectrum spec = periodogram(trace, a.window, a.zero_pad_factor);
  write_spectrum_artifact(ctx, spec);

  const double default_half = 10.0 * spec.bin_width_hz;
  const double half = get_number(cfg, "config", "band_halfwidth_hz", default_half);
  ctx.effective["band_halfwidth_hz"] = half;
  json peaks = json::array();
  for (const Tone& tone : tones) {
    const AliasResult alias = alias_offset(tone.frequency_hz, qc.t_l_s());
    const double lo = std::max(spec.bin_width_hz, alias.delta_hz - half);
    const double hi = std::min(spec.nyquist_hz(), alias.delta_hz + half);
    json pj = fit_band_to_json(spec, lo, hi, a.fit);
    pj["tone_frequency_hz"] = tone.frequency_hz;
    pj["alias_hz"] = alias.delta_hz;
    pj["alias_sign"] = alias.sign;
    peaks.push_back(std::move(pj));
    if (!peaks.back()["no_peak"].get<bool>()) {
      std::printf("tone %.6g Hz -> peak %.6g Hz (fwhm %.6g Hz)\n", tone.frequency_hz,
                  peaks.back()["center_hz"].get<double>(),
                  peaks.back()["fwhm_lorentz_hz"].get<double>());
    } else {
      std::printf("tone %.6g Hz -> no peak\n", tone.frequency_hz);
    }
  }
  write_json_file(ctx, "peaks.json", json{{"peaks", std::move(peaks)}});
  return 0;
}

int run_nmr_kind(const json& cfg, RunContext& ctx, std::uint64_t seed, bool dry_run) {
  check_keys(cfg, "config",
             {"kind", "seed", "out_dir", "bath", "sequence", "sensor", "axis",
              "total_time_s", "segment_records", "fine_dt_s", "fit_band_halfwidth_hz"});
  NmrRunConfig nc;
  nc.bath = parse_bath(cfg, ctx.effective);
  nc.seq = parse_sequence(cfg, ctx.effective);
  nc.sensor = parse_sensor(cfg, ctx.effective);
  nc.axis = parse_axis(cfg, ctx.effective);
  nc.total_time_s = require_number(cfg, "config", "total_time_s");
  nc.segment_records = get_uint(cfg, "config", "segment_records", nc.segment_records);
  nc.fine_dt_s = get_number(cfg, "config", "fine_dt_s", nc.fine_dt_s);
  nc.fit_band_halfwidth_hz =
      get_number(cfg, "config", "fit_band_halfwidth_hz", nc.fit_band_halfwidth_hz);
  nc.seed = seed;
  nc.validate();
  ctx.effective["total_time_s"] = nc.total_time_s;
  ctx.effective["segment_records"] = nc.segment_records;
  ctx.effective["fine_dt_s"] = nc.fine_dt_s;
  ctx.effective["fit_band_halfwidth_hz"] = nc.fit_band_halfwidth_hz;

  std::printf("nmr: %u spins, larmor %.6g Hz\n", nc.bath.spin_count(), nc.bath.larmor_hz);
  if (dry_run) return 0;

  const NmrRunResult result = run_nmr_qdyne(nc);
  write_spectrum_artifact(ctx, result.spectrum);
  json pj = fit_to_json(result.spectrum, result.peak);
  pj["band_hz"] = {std::max(result.spectrum.bin_width_hz,
                            result.alias_hz - nc.fit_band_halfwidth_hz),
                   std::min(result.spectrum.nyquist_hz(),
                            result.alias_hz + nc.fit_band_halfwidth_hz)};
  pj["alias_hz"] = result.alias_hz;
  write_json_file(ctx, "peak.json", pj);
  json summary;
  summary["alias_hz"] = result.alias_hz;
  summary["n_records"] = result.n_records;
  summary["n_segments"] = result.spectrum.n_segments;
  summary["spin_count"] = nc.bath.spin_count();
  write_json_file(ctx, "summary.json", summary);
  std::printf("line: center=%.6g Hz fwhm=%.6g Hz (alias %.6g Hz)\n",
              result.peak.center_hz, result.peak.fwhm_hz, result.alias_hz);
  return 0;
}

int dispatch_run(const json& cfg, RunContext& ctx, std::uint64_t seed, bool dry_run) {
  const std::string kind = get_string(cfg, "config", "kind", "");
  if (kind.empty()) fail_field("kind", "required string is missing");
  ctx.effective["kind"] = kind;
  ctx.effective["seed"] = seed;
  if (kind == "qdyne") return run_qdyne_kind(cfg, ctx, seed, dry_run);
  if (kind == "sweep") return run_sweep_kind(cfg, ctx, seed, dry_run);
  if (kind == "scaling") return run_scaling_kind(cfg, ctx, seed, dry_run);
  if (kind == "bandwidth") return run_bandwidth_kind(cfg, ctx, seed, dry_run);
  if (kind == "multitone") return run_multitone_kind(cfg, ctx, seed, dry_run);
  if (kind == "nmr") return run_nmr_kind(cfg, ctx, seed, dry_run);
  fail_field("kind", "expected one of qdyne, sweep, scaling, bandwidth, multitone, nmr");
}

// re-run the spectral stage on a stored trace; no simulation
int run_analyze(const fs::path& trace_path, const json& cfg, RunContext& ctx,
                std::optional<std::uint64_t> seed_flag) {
  check_keys(cfg, "config",
             {"kind", "seed", "out_dir", "analysis", "sidecar_path", "first_records"});
  const std::string kind = get_string(cfg, "config", "kind", "analyze");
  if (kind != "analyze") fail_field("kind", "expected \"analyze\"");
  ctx.effective["kind"] = kind;
  const AnalysisSpec a = parse_analysis(cfg, ctx.effective, cli_fit_defaults());

  fs::path sidecar;
  if (find(cfg, "sidecar_path")) {
    sidecar = get_string(cfg, "config", "sidecar_path", "");
  } else {
    sidecar = trace_path;
    sidecar.replace_filename(trace_path.stem().string() + "_meta.json");
  }
  AcquisitionTrace trace = load_trace(trace_path, sidecar);
  const std::uint64_t full_n = trace.records.size();

  const std::uint64_t keep = get_uint(cfg, "config", "first_records", full_n);
  if (keep < 16) fail_field("first_records", "must be >= 16");
  if (keep < full_n) trace.records.resize(keep);
  ctx.effective["first_records"] = std::min(keep, full_n);
  ctx.effective["seed"] = trace.seed;

  const Spectrum spec = periodogram(trace, a.window, a.zero_pad_factor);
  write_spectrum_artifact(ctx, spec);

  // band placement: explicit target, else the alias of the tone recorded in
  // the sidecar, else the whole one-sided axis
  std::optional<double> expected = a.expected_hz;
  std::optional<AliasResult> alias;
  if (!expected) {
    const json meta = json::parse(trace.config_json, nullptr, false);
    if (meta.is_object() && meta.contains("tone") && meta["tone"].is_object() &&
        meta["tone"].contains("frequency_hz") && meta["tone"]["frequency_hz"].is_number()) {
      alias = alias_offset(meta["tone"]["frequency_hz"].get<double>(), trace.t_l_s);
      expected = alias->delta_hz;
    }
  }
  double lo = spec.bin_width_hz;
  double hi = spec.nyquist_hz();
  if (expected) {
    const double total_time = static_cast<double>(trace.records.size()) * trace.t_l_s;
    const double half = a.band_halfwidth_hz > 0.0 ? a.band_halfwidth_hz
                                                  : auto_band_halfwidth(spec, total_time);
    lo = std::max(lo, *expected - half);
    hi = std::min(hi, *expected + half);
  }
  json pj = fit_band_to_json(spec, lo, hi, a.fit);
  if (alias) {
    pj["alias_hz"] = alias->delta_hz;
    pj["alias_sign"] = alias->sign;
  }
  if (expected) pj["expected_hz"] = *expected;
  write_json_file(ctx, "peak.json", pj);

  if (pj["no_peak"].get<bool>()) {
    std::printf("no peak in [%.6g, %.6g] Hz\n", lo, hi);
  } else {
    std::printf("peak: center=%.6g Hz fwhm=%.6g Hz snr=%.6g\n",
                pj["center_hz"].get<double>(), pj["fwhm_lorentz_hz"].get<double>(),
                pj["snr"].get<double>());
  }
  (void)seed_flag;  // analysis is deterministic; the trace's own seed is echoed
  return 0;
}

json parse_config_text(const std::string& text) {
  json cfg = json::parse(text, nullptr, false);
  if (cfg.is_discarded()) throw SchemaError("config: not valid JSON");
  if (!cfg.is_object()) throw SchemaError("config: top level must be an object");
  return cfg;
}

int guarded_main(int argc, char** argv) {
  CLI::App app{"heterodyne-sensing simulator: clocked acquisition + spectral analysis"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  std::optional<std::uint64_t> seed_flag;
  app.add_option("--seed", seed_flag, "override the config seed");
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  app.add_option("--threads", threads, "worker pool size for harness kinds");
  std::string out_dir_flag;
  app.add_option("--out-dir", out_dir_flag, "artifact directory (default: config out_dir or .)");
  std::string format = "csv";
  app.add_option("--format", format, "data table format")
      ->check(CLI::IsMember({"csv", "json"}));

  auto* run_cmd = app.add_subcommand("run", "simulate an experiment from a JSON config");
  std::string run_config_path;
  run_cmd->add_option("config", run_config_path, "experiment config file")->required();

  auto* analyze_cmd = app.add_subcommand("analyze", "re-analyze a stored trace");
  std::string analyze_trace_path, analyze_config_path;
  analyze_cmd->add_option("trace", analyze_trace_path, "binary trace file")->required();
  analyze_cmd->add_option("config", analyze_config_path, "analysis config file")->required();

  auto* validate_cmd = app.add_subcommand("validate", "check a config without running it");
  std::string validate_config_path;
  validate_cmd->add_option("config", validate_config_path, "experiment config file")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const auto t0 = std::chrono::steady_clock::now();
  const auto elapsed = [&t0] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  if (validate_cmd->parsed()) {
    const std::string text = io::read_text_file(validate_config_path);
    const json cfg = parse_config_text(text);
    RunContext ctx;
    ctx.threads = threads;
    const std::uint64_t seed = seed_flag.value_or(get_uint(cfg, "config", "seed", 0));
    if (cfg.value("kind", "") == "analyze") {
      check_keys(cfg, "config",
                 {"kind", "seed", "out_dir", "analysis", "sidecar_path", "first_records"});
      parse_analysis(cfg, ctx.effective, cli_fit_defaults());
    } else {
      dispatch_run(cfg, ctx, seed, /*dry_run=*/true);
    }
    std::printf("ok\n");
    return 0;
  }

  RunContext ctx;
  ctx.format = format;
  ctx.threads = threads;

  const std::string config_path =
      run_cmd->parsed() ? run_config_path : analyze_config_path;
  const std::string text = io::read_text_file(config_path);
  const json cfg = parse_config_text(text);

  std::string dir = out_dir_flag;
  if (dir.empty()) dir = get_string(cfg, "config", "out_dir", ".");
  ctx.out_dir = dir;
  std::error_code ec;
  fs::create_directories(ctx.out_dir, ec);
  if (ec) throw IoError(dir + ": cannot create output directory: " + ec.message());

  int rc = 0;
  std::uint64_t manifest_seed = 0;
  std::string kind;
  if (run_cmd->parsed()) {
    manifest_seed = seed_flag.value_or(get_uint(cfg, "config", "seed", 0));
    kind = get_string(cfg, "config", "kind", "");
    rc = dispatch_run(cfg, ctx, manifest_seed, /*dry_run=*/false);
  } else {
    kind = "analyze";
    rc = run_analyze(analyze_trace_path, cfg, ctx, seed_flag);
    manifest_seed = ctx.effective.value("seed", std::uint64_t{0});
  }
  write_manifest(ctx, kind, manifest_seed, text, elapsed());
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return guarded_main(argc, argv);
  } catch (const SchemaError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const json::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const TraceFormatError& e) {
    std::fprintf(stderr, "corrupt trace: %s\n", e.what());
    return 5;
  } catch (const IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 4;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 4;
  } catch (const CapacityError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  } catch (const NoPeakError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
