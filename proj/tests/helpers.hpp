#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "osckit/series.hpp"

namespace osckit::test {

inline UniformSeries make_series(const std::string& name, Real t0, Real fs,
                                 Index n, const std::function<Real(Real)>& f) {
  UniformSeries s;
  s.name = name;
  s.t0 = t0;
  s.dt = 1.0 / fs;
  s.values.resize(n);
  for (Index i = 0; i < n; ++i) s.values[i] = f(t0 + i / fs);
  return s;
}

inline UniformSeries sine_series(const std::string& name, Real freq_hz, Real amp,
                                 Real fs, Real duration_s, Real phase_rad = 0.0) {
  const Index n = static_cast<Index>(std::round(duration_s * fs)) + 1;
  return make_series(name, 0.0, fs, n, [=](Real t) {
    return amp * std::sin(kTwoPi * freq_hz * t + phase_rad);
  });
}

/// Balanced three-phase point-on-wave set: fundamental plus an optional
/// positive-sequence interharmonic on voltage and current.
struct PowSpec {
  Real fs = 15000.0;
  Real duration_s = 2.0;
  Real f0 = 60.0;
  Real v1 = 1.0;       // fundamental voltage peak
  Real i1 = 1.0;       // fundamental current peak
  Real i1_phase = 0.0; // current lag (rad) relative to voltage
  Real f_x = 0.0;      // interharmonic frequency (0 = none)
  Real vx = 0.0, vx_phase = 0.0;
  Real ix = 0.0, ix_phase = 0.0;
};

inline PowRecord make_pow(const PowSpec& sp) {
  const Index n = static_cast<Index>(std::round(sp.duration_s * sp.fs)) + 1;
  ChannelSet cs;
  const Real shift[3] = {0.0, -2.0 * kPi / 3.0, 2.0 * kPi / 3.0};
  const char* vnames[3] = {"va", "vb", "vc"};
  const char* inames[3] = {"ia", "ib", "ic"};
  for (int ph = 0; ph < 3; ++ph) {
    cs.add(make_series(vnames[ph], 0.0, sp.fs, n, [&, ph](Real t) {
      Real v = sp.v1 * std::cos(kTwoPi * sp.f0 * t + shift[ph]);
      if (sp.f_x > 0.0)
        v += sp.vx * std::cos(kTwoPi * sp.f_x * t + sp.vx_phase + shift[ph]);
      return v;
    }));
  }
  for (int ph = 0; ph < 3; ++ph) {
    cs.add(make_series(inames[ph], 0.0, sp.fs, n, [&, ph](Real t) {
      Real i = sp.i1 * std::cos(kTwoPi * sp.f0 * t + sp.i1_phase + shift[ph]);
      if (sp.f_x > 0.0)
        i += sp.ix * std::cos(kTwoPi * sp.f_x * t + sp.ix_phase + shift[ph]);
      return i;
    }));
  }
  return PowRecord::from(std::move(cs), sp.f0);
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 rng{std::random_device{}()};
    path_ = std::filesystem::temp_directory_path() /
            ("osckit_" + tag + "_" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace osckit::test
