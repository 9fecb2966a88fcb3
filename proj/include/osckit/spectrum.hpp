#pragma once

#include "osckit/series.hpp"

namespace osckit {

/// Hann-windowed magnitude spectrogram. Cells hold 10*log10(A^2/2) where A is
/// the single-sided amplitude estimate, i.e. dB relative to 1 unit^2; cells
/// without energy sit at floor_db.
struct Spectrogram {
  Vec times;          // slice centers, seconds
  Vec frequencies;    // [0, fs/2], Hz
  Mat magnitude_db;   // times x frequencies
  Real floor_db = -200.0;
  Real fs = 0.0;
};

Spectrogram stft(const UniformSeries& s, Real window_s, Real hop_s);

struct BandPeak {
  Real f_peak = 0.0;
  Real mag_db = 0.0;
  bool significant = false;  // >= 10 dB above the band median
};

/// Peak of the time-averaged band power, refined by parabolic interpolation
/// across the three bins around the maximum.
BandPeak band_peak(const Spectrogram& spec, Real f_lo, Real f_hi);

}  // namespace osckit
