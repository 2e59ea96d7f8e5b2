#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

namespace topseg::test {

namespace fs = std::filesystem;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = fs::temp_directory_path() /
            ("topseg_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void put_u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>(v >> 8));
}

inline void put_u32(std::string& s, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) s.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

// Hand-assembled RIFF/WAVE file. `payload` holds the interleaved sample
// bytes exactly as they should appear in the data chunk.
inline void write_raw_wav(const fs::path& path, std::uint16_t format, std::uint16_t channels,
                          std::uint32_t rate, std::uint16_t bits, const std::string& payload) {
  std::string body;
  body += "WAVE";
  body += "fmt ";
  put_u32(body, 16);
  put_u16(body, format);
  put_u16(body, channels);
  put_u32(body, rate);
  put_u32(body, rate * channels * (bits / 8));
  put_u16(body, static_cast<std::uint16_t>(channels * (bits / 8)));
  put_u16(body, bits);
  body += "data";
  put_u32(body, static_cast<std::uint32_t>(payload.size()));
  body += payload;
  std::string file = "RIFF";
  put_u32(file, static_cast<std::uint32_t>(body.size()));
  file += body;
  std::ofstream out(path, std::ios::binary);
  out.write(file.data(), static_cast<std::streamsize>(file.size()));
}

inline std::string pcm16(const std::vector<std::int16_t>& samples) {
  std::string s;
  for (std::int16_t v : samples) put_u16(s, static_cast<std::uint16_t>(v));
  return s;
}

inline std::vector<double> sine(double freq, double rate, std::size_t n, double amplitude = 1.0,
                                double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = amplitude * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) / rate + phase);
  }
  return x;
}

// Amplitude of the `freq` component by direct correlation with sin and cos.
inline double tone_amplitude(const std::vector<double>& x, double freq, double rate, std::size_t begin,
                             std::size_t end) {
  double c = 0.0;
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    const double w = 2.0 * std::numbers::pi * freq * static_cast<double>(i) / rate;
    c += x[i] * std::cos(w);
    s += x[i] * std::sin(w);
  }
  const double n = static_cast<double>(end - begin);
  return 2.0 * std::sqrt(c * c + s * s) / n;
}

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double lo = -1.0,
                                         double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

}  // namespace topseg::test
