#include "osckit/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace osckit {

Spectrogram stft(const UniformSeries& s, Real window_s, Real hop_s) {
  s.validate();
  if (window_s <= 0.0 || hop_s <= 0.0)
    throw InputError("stft: window and hop must be > 0");
  if (hop_s > window_s + 1e-12) throw InputError("stft: hop must be <= window");

  const Real fs = s.fs();
  const Index w = static_cast<Index>(std::round(window_s * fs));
  const Index hop = std::max<Index>(1, static_cast<Index>(std::round(hop_s * fs)));
  if (w < 4) throw InputError("stft: window too short");
  if (s.size() < w) throw InputError("stft: series shorter than one window");

  Vec hann(w);
  for (Index i = 0; i < w; ++i)
    hann[i] = 0.5 - 0.5 * std::cos(kTwoPi * static_cast<Real>(i) / static_cast<Real>(w));
  const Real wsum = hann.sum();

  const Index nbin = w / 2 + 1;
  const Index nslice = (s.size() - w) / hop + 1;

  Spectrogram out;
  out.fs = fs;
  out.times.resize(nslice);
  out.frequencies = Vec::LinSpaced(nbin, 0.0, fs * static_cast<Real>(nbin - 1) /
                                                 static_cast<Real>(w));
  out.magnitude_db.resize(nslice, nbin);

  Eigen::FFT<Real> fft;
  std::vector<Real> frame(static_cast<std::size_t>(w));
  std::vector<Complex> bins;

  // floor_db marks truly empty cells; clamp just above it for log safety.
  const Real floor_power = std::pow(10.0, out.floor_db / 10.0);

  for (Index j = 0; j < nslice; ++j) {
    const Index start = j * hop;
    out.times[j] = s.time(start + w / 2);
    for (Index i = 0; i < w; ++i)
      frame[static_cast<std::size_t>(i)] = s.values[start + i] * hann[i];
    fft.fwd(bins, frame);
    for (Index k = 0; k < nbin; ++k) {
      const Real sided = (k == 0 || (w % 2 == 0 && k == nbin - 1)) ? 1.0 : 2.0;
      const Real amp = sided * std::abs(bins[static_cast<std::size_t>(k)]) / wsum;
      const Real power = 0.5 * amp * amp;  // mean-square of the reconstructed tone
      out.magnitude_db(j, k) =
          power > floor_power ? 10.0 * std::log10(power) : out.floor_db;
    }
  }
  return out;
}

BandPeak band_peak(const Spectrogram& spec, Real f_lo, Real f_hi) {
  if (spec.frequencies.size() == 0 || spec.times.size() == 0)
    throw InputError("band_peak: empty spectrogram");
  if (f_lo > f_hi || f_lo < spec.frequencies[0] - 1e-9 ||
      f_hi > spec.frequencies[spec.frequencies.size() - 1] + 1e-9)
    throw InputError("band_peak: band outside spectrogram range");

  std::vector<Index> idx;
  for (Index k = 0; k < spec.frequencies.size(); ++k)
    if (spec.frequencies[k] >= f_lo - 1e-9 && spec.frequencies[k] <= f_hi + 1e-9)
      idx.push_back(k);
  if (idx.empty()) throw InputError("band_peak: empty band");

  // Time-averaged power per bin, then back to dB.
  Vec avg_db(static_cast<Index>(idx.size()));
  for (std::size_t m = 0; m < idx.size(); ++m) {
    Real p = 0.0;
    for (Index j = 0; j < spec.times.size(); ++j)
      p += std::pow(10.0, spec.magnitude_db(j, idx[m]) / 10.0);
    p /= static_cast<Real>(spec.times.size());
    avg_db[static_cast<Index>(m)] =
        std::max(10.0 * std::log10(std::max(p, 1e-300)), spec.floor_db);
  }

  Index best = 0;
  avg_db.maxCoeff(&best);
  const Index kb = idx[static_cast<std::size_t>(best)];

  BandPeak out;
  out.mag_db = avg_db[best];
  out.f_peak = spec.frequencies[kb];

  // Parabolic refinement on the dB values of the three surrounding bins.
  if (kb > 0 && kb + 1 < spec.frequencies.size()) {
    Real ym = 0.0, y0 = avg_db[best], yp = 0.0;
    {
      Real pm = 0.0, pp = 0.0;
      for (Index j = 0; j < spec.times.size(); ++j) {
        pm += std::pow(10.0, spec.magnitude_db(j, kb - 1) / 10.0);
        pp += std::pow(10.0, spec.magnitude_db(j, kb + 1) / 10.0);
      }
      pm /= static_cast<Real>(spec.times.size());
      pp /= static_cast<Real>(spec.times.size());
      ym = 10.0 * std::log10(std::max(pm, 1e-300));
      yp = 10.0 * std::log10(std::max(pp, 1e-300));
    }
    const Real denom = ym - 2.0 * y0 + yp;
    if (std::abs(denom) > 1e-12) {
      Real delta = 0.5 * (ym - yp) / denom;
      delta = std::clamp(delta, -0.5, 0.5);
      const Real df = spec.frequencies[1] - spec.frequencies[0];
      out.f_peak += delta * df;
      out.mag_db = y0 - 0.25 * (ym - yp) * delta;
    }
  }
  out.f_peak = std::clamp(out.f_peak, f_lo, f_hi);

  // Significance: peak must clear the band's background median by 10 dB and
  // sit above the floor. The peak's own main lobe (+-2 bins) is excluded from
  // the median so narrow bands do not mask a clean tone.
  std::vector<Real> background;
  for (Index m = 0; m < avg_db.size(); ++m)
    if (std::abs(m - best) > 2) background.push_back(avg_db[m]);
  Real median = spec.floor_db;
  if (!background.empty()) {
    std::sort(background.begin(), background.end());
    median = background[background.size() / 2];
  }
  out.significant =
      out.mag_db > spec.floor_db + 0.5 && out.mag_db >= median + 10.0;
  return out;
}

}  // namespace osckit
