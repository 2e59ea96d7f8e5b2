#include "iir.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace topseg::detail {

using cplx = std::complex<double>;

SosFilter butterworth_bandpass(int order, double low_hz, double high_hz, double rate_hz) {
  const double pi = std::numbers::pi;
  const double fs2 = 2.0 * rate_hz;
  const double w_lo = fs2 * std::tan(pi * low_hz / rate_hz);
  const double w_hi = fs2 * std::tan(pi * high_hz / rate_hz);
  const double bw = w_hi - w_lo;
  const double w0_sq = w_lo * w_hi;

  // Analog prototype poles on the left half of the unit circle. Only the
  // upper-half-plane member of each conjugate pair is needed after the
  // band-pass transform, since every transformed pole pair is handled as
  // one biquad.
  std::vector<cplx> analog;
  for (int k = 0; k < order; ++k) {
    const double m = -order + 1 + 2 * k;
    const cplx p = -std::exp(cplx(0.0, pi * m / (2.0 * order)));
    const cplx scaled = p * (bw / 2.0);
    const cplx root = std::sqrt(scaled * scaled - w0_sq);
    analog.push_back(scaled + root);
    analog.push_back(scaled - root);
  }

  // Bilinear transform. Analog zeros: `order` at s=0 (-> z=1) and `order`
  // at infinity (-> z=-1).
  std::vector<cplx> poles;
  cplx gain_den(1.0, 0.0);
  for (const cplx& p : analog) {
    poles.push_back((fs2 + p) / (fs2 - p));
    gain_den *= (fs2 - p);
  }
  // k_analog = bw^order; zeros at 0 contribute fs2^order to the numerator.
  const double k_digital =
      (std::pow(bw, order) * std::pow(fs2, order) / gain_den).real();

  // Pair poles with positive imaginary part with their conjugates.
  std::vector<cplx> upper;
  for (const cplx& p : poles) {
    if (p.imag() > 0.0) upper.push_back(p);
  }
  std::sort(upper.begin(), upper.end(),
            [](const cplx& a, const cplx& b) { return std::abs(a) < std::abs(b); });

  SosFilter f;
  const double section_gain = std::pow(std::abs(k_digital), 1.0 / order);
  const double sign = k_digital < 0 ? -1.0 : 1.0;
  for (std::size_t s = 0; s < upper.size(); ++s) {
    const cplx& p = upper[s];
    const double g = section_gain * (s == 0 ? sign : 1.0);
    // numerator (1 - z^-1)(1 + z^-1) = 1 - z^-2
    f.sections.push_back({g, 0.0, -g, -2.0 * p.real(), std::norm(p)});
    f.max_pole_radius = std::max(f.max_pole_radius, std::abs(p));
  }
  return f;
}

void sos_filter_inplace(const SosFilter& filter, std::span<double> x) {
  for (const Biquad& s : filter.sections) {
    double z1 = 0.0;
    double z2 = 0.0;
    for (double& v : x) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
}

std::vector<double> kaiser_lowpass(double cutoff, double transition, double atten_db) {
  const double pi = std::numbers::pi;
  double beta = 0.0;
  if (atten_db > 50.0) {
    beta = 0.1102 * (atten_db - 8.7);
  } else if (atten_db >= 21.0) {
    beta = 0.5842 * std::pow(atten_db - 21.0, 0.4) + 0.07886 * (atten_db - 21.0);
  }
  int taps = static_cast<int>(std::ceil((atten_db - 7.95) / (2.285 * 2.0 * pi * transition))) + 1;
  if (taps % 2 == 0) ++taps;
  const double center = (taps - 1) / 2.0;
  const double i0_beta = std::cyl_bessel_i(0.0, beta);

  std::vector<double> h(static_cast<std::size_t>(taps));
  double sum = 0.0;
  for (int n = 0; n < taps; ++n) {
    const double t = n - center;
    const double arg = 2.0 * cutoff * t;
    const double sinc = t == 0.0 ? 1.0 : std::sin(pi * arg) / (pi * arg);
    const double r = t / center;
    const double w = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0_beta;
    h[static_cast<std::size_t>(n)] = 2.0 * cutoff * sinc * w;
    sum += h[static_cast<std::size_t>(n)];
  }
  for (double& v : h) v /= sum;
  return h;
}

}  // namespace topseg::detail
