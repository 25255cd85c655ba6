#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "qdyne/clock.hpp"
#include "qdyne/rng.hpp"
#include "qdyne/sensor.hpp"
#include "qdyne/signals.hpp"

namespace qdyne {

// Full Qdyne run description.  The cycle period T_L = interaction time +
// readout dead time must equal the clock's nominal period: the clock ticks
// ARE the measurement starts.
struct QdyneConfig {
  FieldSource source = FieldSource::tone(Tone(0.0, 1.0, 0.0));
  PulseSequence seq;
  SensorParams sensor;
  ReadoutAxis axis;          // default phase 0: response ~ sin(phi)
  ClockModel clock;
  double total_time_s = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
  double t_l_s() const { return seq.interaction_time_s() + sensor.readout_dead_time_s; }
  std::uint64_t n_records() const;
};

struct TraceRecord {
  std::uint64_t index = 0;
  double t_start_s = 0.0;
  std::uint32_t photons = 0;
};

struct AcquisitionTrace {
  std::vector<TraceRecord> records;
  double t_l_s = 0.0;
  std::uint64_t seed = 0;
  std::string config_json = "{}";  // opaque snapshot, carried into the sidecar

  void validate() const;
};

// Measurement n starts at clock tick T_n; the signal phase is never reset, so
// the record sequence carries the beat between signal and clock comb.
AcquisitionTrace run_qdyne(const QdyneConfig& cfg);

// Records [first_index, first_index+count) of the run described by cfg,
// photon noise drawn from the supplied stream.  Perfect-clock only (noisy
// clock state is cumulative across the whole run).  Feeding the same stream
// through consecutive segments reproduces one long run record-for-record.
AcquisitionTrace run_qdyne_segment(const QdyneConfig& cfg, std::uint64_t first_index,
                                   std::uint64_t count, Rng& photon_rng);

// closed-form oracle for the per-record phase of a single tone under a
// perfect clock: entry n = (2kT_s/pi) * cos(2*pi*sign*delta*T_{n+1} + Phi)
// with (delta, sign) the alias of the tone under the comb 1/T_L
std::vector<double> expected_phase_series(const QdyneConfig& cfg);

// swept-XY8 spectroscopy: average fluorescence vs interpulse delay,
// population readout (axis phase pi/2, response ~ cos(phi))
struct SweepConfig {
  FieldSource source = FieldSource::tone(Tone(0.0, 1.0, 0.0));
  int n_pulses = 8;
  std::vector<double> tau_grid_s;
  std::size_t repetitions = 1;
  bool random_phase = true;  // fresh uniform signal phase each repetition
  SensorParams sensor;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SweepPoint {
  double tau_s = 0.0;
  double mean_photons = 0.0;
  double stderr_photons = 0.0;
};

std::vector<SweepPoint> run_sweep(const SweepConfig& cfg);

// persistence: raw little-endian records (u64 index, f64 t_start_s, u32
// photons) plus a JSON sidecar; CSV export for plotting
void save_trace(const std::filesystem::path& bin_path,
                const std::filesystem::path& sidecar_path, const AcquisitionTrace& trace);
AcquisitionTrace load_trace(const std::filesystem::path& bin_path,
                            const std::filesystem::path& sidecar_path);
void save_trace_records_csv(const std::filesystem::path& path, const AcquisitionTrace& trace);
void save_sweep_csv(const std::filesystem::path& path, const std::vector<SweepPoint>& points);

}  // namespace qdyne
