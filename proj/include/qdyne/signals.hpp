#pragma once

#include <filesystem>
#include <vector>

namespace qdyne {

// one coherent AC component of the sensed field, k(t) = amplitude * sin(2*pi*f*t + phase)
struct Tone {
  double amplitude_rad_per_s = 0.0;  // coupling amplitude k
  double frequency_hz = 0.0;
  double phase_rad = 0.0;  // stored normalized to [0, 2*pi)

  Tone() = default;
  Tone(double amplitude, double frequency, double phase);
};

// uniformly sampled field trace, linearly interpolated between samples
struct SampledTrace {
  double t0_s = 0.0;
  double dt_s = 0.0;
  std::vector<double> values;  // rad/s

  double t_end_s() const;
  void validate() const;
};

// a field is either a sum of tones or a sampled trace
class FieldSource {
 public:
  static FieldSource tone(const Tone& t);
  static FieldSource tones(std::vector<Tone> list);
  static FieldSource trace(SampledTrace tr);

  bool is_tones() const { return is_tones_; }
  const std::vector<Tone>& tone_list() const;
  const SampledTrace& trace_data() const;

  // instantaneous field in rad/s; traces throw outside their span
  double evaluate(double t_s) const;

 private:
  FieldSource() = default;
  bool is_tones_ = true;
  std::vector<Tone> tones_;
  SampledTrace trace_;
};

// conversion from magnetic field amplitude to coupling amplitude.
// default scale is half the electron gyromagnetic ratio: the sensed two-level
// splitting moves at gamma_e*B but the relevant rotating-frame coupling to a
// transverse AC field is gamma_e*B/2.
struct FieldUnitConversion {
  double rad_per_s_per_tesla = 8.8042981511e10;
};

double field_to_k(double b_tesla, const FieldUnitConversion& conv = {});

// csv round-trip: one header line "time_s,k_rad_per_s", then rows
void save_trace_csv(const std::filesystem::path& path, const SampledTrace& tr);
SampledTrace load_trace_csv(const std::filesystem::path& path);

}  // namespace qdyne
