#include "topseg/signal.hpp"

#include "iir.hpp"
#include "topseg/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace topseg {

namespace {

long long integral_rate(double rate, const char* what) {
  const long long r = std::llround(rate);
  if (r <= 0 || std::abs(rate - static_cast<double>(r)) > 1e-6) {
    throw ConfigError(std::string(what) + " must be a positive integer rate in Hz");
  }
  return r;
}

// Symmetric edge extension: odd reflection about the end sample for up to
// n - 1 samples, then the last reflected value held constant.
std::vector<double> pad_signal(const std::vector<double>& x, std::size_t pad) {
  const std::size_t n = x.size();
  const std::size_t reflect = std::min(pad, n - 1);
  std::vector<double> out(n + 2 * pad);
  for (std::size_t m = 1; m <= pad; ++m) {
    const std::size_t r = std::min(m, reflect);
    out[pad - m] = r == 0 ? x.front() : 2.0 * x.front() - x[r];
    out[pad + n - 1 + m] = r == 0 ? x.back() : 2.0 * x.back() - x[n - 1 - r];
  }
  std::copy(x.begin(), x.end(), out.begin() + static_cast<std::ptrdiff_t>(pad));
  return out;
}

}  // namespace

void PreprocessConfig::validate() const {
  if (!(band_low > 0.0 && band_low < band_high && band_high < target_rate_fine / 2.0)) {
    throw ConfigError("preprocess: require 0 < band_low < band_high < target_rate_fine / 2");
  }
  if (filter_order < 1 || filter_order > 12) {
    throw ConfigError("preprocess: filter_order must be in [1, 12]");
  }
  if (!(target_rate_global > 0.0 && target_rate_global < target_rate_fine)) {
    throw ConfigError("preprocess: require 0 < target_rate_global < target_rate_fine");
  }
  if (!(chunk_seconds > 0.0)) throw ConfigError("preprocess: chunk_seconds must be positive");
}

Recording bandpass_zero_phase(const Recording& rec, const PreprocessConfig& cfg) {
  if (!(rec.sample_rate > 2.0 * cfg.band_high)) {
    throw ConfigError("bandpass: sample rate " + std::to_string(rec.sample_rate) +
                      " Hz must exceed twice the upper band edge");
  }
  if (!(cfg.band_low > 0.0 && cfg.band_low < cfg.band_high)) {
    throw ConfigError("bandpass: require 0 < band_low < band_high");
  }
  if (rec.samples.empty()) throw EmptyRecordingError("bandpass: empty recording " + rec.id);

  const detail::SosFilter filter = detail::butterworth_bandpass(
      cfg.filter_order, cfg.band_low, cfg.band_high, rec.sample_rate);

  // Pad until the impulse response has decayed below 1e-14; the factor 2
  // covers the polynomial growth from clustered poles.
  const double decay = std::log(1e-14) / std::log(filter.max_pole_radius);
  const auto pad = static_cast<std::size_t>(2.0 * std::ceil(decay));

  std::vector<double> y = pad_signal(rec.samples, pad);
  detail::sos_filter_inplace(filter, y);
  std::reverse(y.begin(), y.end());
  detail::sos_filter_inplace(filter, y);
  std::reverse(y.begin(), y.end());

  Recording out = rec;
  std::copy(y.begin() + static_cast<std::ptrdiff_t>(pad),
            y.begin() + static_cast<std::ptrdiff_t>(pad + rec.samples.size()),
            out.samples.begin());
  return out;
}

Recording decimate_polyphase(const Recording& rec, double target_rate) {
  if (!(target_rate > 0.0) || target_rate >= rec.sample_rate) {
    throw ConfigError("decimate: target rate must be positive and below the input rate");
  }
  const long long in_rate = integral_rate(rec.sample_rate, "input sample rate");
  const long long out_rate = integral_rate(target_rate, "target rate");
  const long long g = std::gcd(in_rate, out_rate);
  const long long up = out_rate / g;
  const long long down = in_rate / g;

  // Design at the upsampled rate: cutoff 0.45 * target, transition band
  // spanning 0.40..0.50 of the target rate.
  const double up_rate = static_cast<double>(in_rate * up);
  const std::vector<double> h =
      detail::kaiser_lowpass(0.45 * target_rate / up_rate, 0.10 * target_rate / up_rate, 70.0);
  const long long taps = static_cast<long long>(h.size());
  const long long center = (taps - 1) / 2;

  const long long n_in = static_cast<long long>(rec.samples.size());
  const long long n_out = (n_in * up + down - 1) / down;
  const double gain = static_cast<double>(up);

  Recording out;
  out.id = rec.id;
  out.label_path = rec.label_path;
  out.sample_rate = static_cast<double>(out_rate);
  out.samples.assign(static_cast<std::size_t>(n_out), 0.0);
  for (long long m = 0; m < n_out; ++m) {
    // y[m] = up * sum_n h[n] x_up[m*down + center - n]; x_up is nonzero only
    // at multiples of `up`.
    const long long j0 = m * down + center;
    double acc = 0.0;
    for (long long n = j0 % up; n < taps; n += up) {
      const long long j = j0 - n;
      if (j < 0) break;
      const long long src = j / up;
      if (src < n_in) acc += h[static_cast<std::size_t>(n)] * rec.samples[static_cast<std::size_t>(src)];
    }
    out.samples[static_cast<std::size_t>(m)] = gain * acc;
  }
  return out;
}

Recording zscore(const Recording& rec) {
  const std::size_t n = rec.samples.size();
  if (n < 2) throw ConstantSignalError("zscore: need at least two samples (" + rec.id + ")");
  const double mean = std::accumulate(rec.samples.begin(), rec.samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : rec.samples) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / n);
  if (!(sd > 0.0) || sd < 1e-12 * (std::abs(mean) + 1e-300)) {
    throw ConstantSignalError("zscore: zero variance in " + rec.id);
  }
  Recording out = rec;
  for (double& v : out.samples) v = (v - mean) / sd;
  return out;
}

std::vector<Recording> chunk_or_loop(const Recording& rec, double chunk_seconds, ChunkMode mode) {
  if (rec.samples.empty()) throw EmptyRecordingError("chunk: empty recording " + rec.id);
  if (!(chunk_seconds > 0.0) || !(rec.sample_rate > 0.0)) {
    throw ConfigError("chunk: chunk_seconds and sample rate must be positive");
  }
  const auto chunk = static_cast<std::size_t>(std::llround(chunk_seconds * rec.sample_rate));
  if (chunk == 0) throw ConfigError("chunk: chunk shorter than one sample");

  auto make = [&](std::size_t index, std::size_t begin, std::size_t available) {
    Recording c;
    c.id = rec.id + "#" + std::to_string(index);
    c.sample_rate = rec.sample_rate;
    c.label_path = rec.label_path;
    c.samples.resize(chunk);
    for (std::size_t i = 0; i < chunk; ++i) c.samples[i] = rec.samples[begin + i % available];
    return c;
  };

  const std::size_t n = rec.samples.size();
  std::vector<Recording> out;
  const std::size_t full = n / chunk;
  for (std::size_t k = 0; k < full; ++k) out.push_back(make(k, k * chunk, chunk));
  const std::size_t rest = n - full * chunk;
  if (rest > 0 && (full == 0 || mode == ChunkMode::kInference)) {
    out.push_back(make(full, full * chunk, rest));
  }
  return out;
}

Recording preprocess(const Recording& rec, const PreprocessConfig& cfg) {
  cfg.validate();
  Recording r = bandpass_zero_phase(rec, cfg);
  if (std::abs(r.sample_rate - cfg.target_rate_fine) > 1e-9) {
    r = decimate_polyphase(r, cfg.target_rate_fine);
  }
  return zscore(r);
}

}  // namespace topseg
