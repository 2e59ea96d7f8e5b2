#pragma once

#include <span>
#include <vector>

namespace topseg::detail {

// One biquad, a0 normalized to 1.
struct Biquad {
  double b0, b1, b2;
  double a1, a2;
};

struct SosFilter {
  std::vector<Biquad> sections;
  double max_pole_radius{0.0};
};

// Digital Butterworth band-pass from an order-`order` analog prototype
// (bilinear transform with pre-warping). Yields `order` biquads.
SosFilter butterworth_bandpass(int order, double low_hz, double high_hz, double rate_hz);

// Runs the cascade in place, starting from zero state.
void sos_filter_inplace(const SosFilter& filter, std::span<double> x);

// Kaiser-windowed sinc low-pass: cutoff and transition width in cycles/sample.
std::vector<double> kaiser_lowpass(double cutoff, double transition, double atten_db);

}  // namespace topseg::detail
