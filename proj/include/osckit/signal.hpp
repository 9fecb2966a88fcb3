#pragma once

#include <array>
#include <utility>

#include "osckit/series.hpp"

namespace osckit {

enum class DetrendMode { Mean, Linear };

/// One second-order filter section (direct form II transposed).
struct Biquad {
  Real b0 = 1, b1 = 0, b2 = 0;  // numerator
  Real a1 = 0, a2 = 0;          // denominator (a0 == 1)
};

/// Cascade of two biquads realizing a 4th-order Butterworth band-pass.
struct BandpassFilter {
  std::array<Biquad, 2> sections;
  Real f_lo = 0, f_hi = 0, fs = 0;

  /// Complex frequency response at f (one pass).
  Complex response(Real f) const;
};

/// Designs the 4th-order Butterworth band-pass (order-2 prototype, bilinear
/// transform with prewarping, gain pinned to 1 at the geometric band center).
BandpassFilter design_bandpass(Real f_lo, Real f_hi, Real fs);

/// Removes the mean or the least-squares line from x.
Vec detrended(const Vec& x, DetrendMode mode);

/// Zero-phase (forward-backward) run of the cascade over x with odd-symmetric
/// edge extension. Effective magnitude response is |H|^2, phase is zero.
Vec filtfilt(const BandpassFilter& filter, const Vec& x);

/// Band-limits x to [f_lo, f_hi] with zero phase shift. The zero-phase
/// contract matters: dissipating-energy verdicts ride on the P-theta phase.
Vec bandpassed(const Vec& x, Real f_lo, Real f_hi, Real fs);

/// Windowed-sinc resampling (Kaiser window) to the new rate. Downsampling
/// applies the built-in anti-alias low-pass at 0.45*fs_new.
Vec resampled(const Vec& x, Real fs_old, Real fs_new);

UniformSeries detrend(const UniformSeries& s, DetrendMode mode);
UniformSeries bandpass(const UniformSeries& s, Real f_lo, Real f_hi);
UniformSeries resample(const UniformSeries& s, Real fs_new);

/// Three-phase instantaneous active and reactive power of a PoW record.
/// p = va*ia + vb*ib + vc*ic,  q = ((vb-vc)*ia + (vc-va)*ib + (va-vb)*ic)/sqrt(3).
std::pair<UniformSeries, UniformSeries> instantaneous_pq(const PowRecord& pow);

}  // namespace osckit
