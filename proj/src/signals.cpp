#include "qdyne/signals.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "qdyne/errors.hpp"
#include "qdyne/io.hpp"

namespace qdyne {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

Tone::Tone(double amplitude, double frequency, double phase)
    : amplitude_rad_per_s(amplitude), frequency_hz(frequency) {
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude))
    throw ConfigError("tone amplitude must be finite and >= 0");
  if (!(frequency > 0.0) || !std::isfinite(frequency))
    throw ConfigError("tone frequency must be finite and > 0");
  if (!std::isfinite(phase)) throw ConfigError("tone phase must be finite");
  phase_rad = std::fmod(phase, kTwoPi);
  if (phase_rad < 0.0) phase_rad += kTwoPi;
}

double SampledTrace::t_end_s() const {
  if (values.empty()) return t0_s;
  return t0_s + dt_s * static_cast<double>(values.size() - 1);
}

void SampledTrace::validate() const {
  if (values.size() < 2) throw ConfigError("sampled trace needs at least 2 points");
  if (!(dt_s > 0.0) || !std::isfinite(dt_s))
    throw ConfigError("sampled trace dt must be finite and > 0");
  if (!std::isfinite(t0_s) || t0_s < 0.0)
    throw ConfigError("sampled trace t0 must be finite and >= 0");
  for (double v : values)
    if (!std::isfinite(v)) throw ConfigError("sampled trace contains non-finite value");
}

FieldSource FieldSource::tone(const Tone& t) { return tones({t}); }

FieldSource FieldSource::tones(std::vector<Tone> list) {
  if (list.empty()) throw ConfigError("tone list is empty");
  FieldSource src;
  src.is_tones_ = true;
  src.tones_ = std::move(list);
  return src;
}

FieldSource FieldSource::trace(SampledTrace tr) {
  tr.validate();
  FieldSource src;
  src.is_tones_ = false;
  src.trace_ = std::move(tr);
  return src;
}

const std::vector<Tone>& FieldSource::tone_list() const {
  if (!is_tones_) throw std::logic_error("field source is a trace, not tones");
  return tones_;
}

const SampledTrace& FieldSource::trace_data() const {
  if (is_tones_) throw std::logic_error("field source is tones, not a trace");
  return trace_;
}

double FieldSource::evaluate(double t_s) const {
  if (!(t_s >= 0.0))
    throw std::domain_error("field evaluated at negative time");
  if (is_tones_) {
    double k = 0.0;
    for (const Tone& t : tones_)
      k += t.amplitude_rad_per_s * std::sin(kTwoPi * t.frequency_hz * t_s + t.phase_rad);
    return k;
  }
  const SampledTrace& tr = trace_;
  const double rel = (t_s - tr.t0_s) / tr.dt_s;
  if (rel < 0.0 || t_s > tr.t_end_s())
    throw std::out_of_range("field evaluated outside trace span [" +
                            io::format_double(tr.t0_s) + ", " +
                            io::format_double(tr.t_end_s()) + "] s");
  const auto n = tr.values.size();
  auto j = static_cast<std::size_t>(rel);
  if (j >= n - 1) return tr.values[n - 1];  // t == t_end up to rounding
  const double frac = rel - static_cast<double>(j);
  return tr.values[j] + frac * (tr.values[j + 1] - tr.values[j]);
}

double field_to_k(double b_tesla, const FieldUnitConversion& conv) {
  if (!(conv.rad_per_s_per_tesla > 0.0) || !std::isfinite(conv.rad_per_s_per_tesla))
    throw ConfigError("field conversion scale must be finite and > 0");
  if (!(b_tesla >= 0.0) || !std::isfinite(b_tesla))
    throw std::domain_error("field amplitude must be finite and >= 0");
  return b_tesla * conv.rad_per_s_per_tesla;
}

void save_trace_csv(const std::filesystem::path& path, const SampledTrace& tr) {
  tr.validate();
  std::string out = "time_s,k_rad_per_s\n";
  out.reserve(out.size() + tr.values.size() * 32);
  for (std::size_t i = 0; i < tr.values.size(); ++i) {
    io::append_double(out, tr.t0_s + tr.dt_s * static_cast<double>(i));
    out.push_back(',');
    io::append_double(out, tr.values[i]);
    out.push_back('\n');
  }
  io::write_text_file(path, out);
}

SampledTrace load_trace_csv(const std::filesystem::path& path) {
  const std::string content = io::read_text_file(path);
  SampledTrace tr;
  std::vector<double> times;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < content.size()) {
    std::size_t eol = content.find('\n', pos);
    if (eol == std::string::npos) eol = content.size();
    std::string_view line(content.data() + pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    if (line_no == 1) {
      if (line != "time_s,k_rad_per_s")
        throw ConfigError(path.string() + ": expected header 'time_s,k_rad_per_s'");
      continue;
    }
    const auto fields = io::split_csv_line(line);
    const std::string ctx = path.string() + ":" + std::to_string(line_no);
    if (fields.size() != 2) throw ConfigError(ctx + ": expected 2 columns");
    times.push_back(io::parse_double(fields[0], ctx));
    tr.values.push_back(io::parse_double(fields[1], ctx));
  }
  if (times.size() < 2) throw ConfigError(path.string() + ": trace needs at least 2 rows");
  tr.t0_s = times.front();
  tr.dt_s = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
  if (!(tr.dt_s > 0.0)) throw ConfigError(path.string() + ": time column must increase");
  // require a uniform grid; interpolation assumes it
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double expected = tr.t0_s + tr.dt_s * static_cast<double>(i);
    if (std::abs(times[i] - expected) > 1e-9 * std::max(1.0, std::abs(expected)))
      throw ConfigError(path.string() + ": time grid is not uniform at row " +
                        std::to_string(i + 1));
  }
  tr.validate();
  return tr;
}

}  // namespace qdyne
