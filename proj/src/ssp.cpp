#include "osckit/ssp.hpp"

#include <algorithm>
#include <cmath>

#include "osckit/csv.hpp"
#include "osckit/signal.hpp"
#include "osckit/spectrum.hpp"

namespace osckit {

Real estimate_oscillation_frequency(const PowRecord& pow, Real f_lo, Real f_hi) {
  if (pow.data.length() < 2) throw InputError("estimate: empty record");
  auto [p, q] = instantaneous_pq(pow);
  (void)q;
  if (p.duration() < 2.0)
    throw InputError("estimate: record must span at least 2 s");

  UniformSeries ps = p;
  if (ps.fs() > 2000.0) ps = resample(ps, 1000.0);
  ps.values = detrended(ps.values, DetrendMode::Mean);

  const Real window = std::min(2.0, ps.duration());
  Spectrogram spec = stft(ps, window, window / 4.0);
  BandPeak peak = band_peak(spec, f_lo, f_hi);
  if (!peak.significant)
    throw AnalysisError("no significant oscillation peak in band");
  return peak.f_peak;
}

namespace {

Index window_samples(Real f_target, Real f0, Real fs) {
  // Smallest integer count of f_target cycles spanning >= 12 cycles of f0,
  // forced to an odd sample count so the Hann window is symmetric about the
  // reference sample.
  const Real cycles = std::ceil(12.0 * f_target / f0);
  const Real span_s = cycles / f_target;
  Index n = static_cast<Index>(std::round(span_s * fs));
  if (n % 2 == 0) ++n;
  return n;
}

}  // namespace

std::vector<Real> phasor_window_centers(const PowRecord& pow, Real f_sub,
                                        Real f_sup) {
  const Real fs = pow.fs();
  const Real f0 = pow.nominal_frequency;
  const Index n = pow.data.length();
  const Index half = std::max(window_samples(f_sub, f0, fs),
                              window_samples(f_sup, f0, fs)) /
                     2;
  // Keep clear of the pre-filter's edge transient (ring time ~0.45/bandwidth,
  // bandwidth ~0.19*f_target); drop the margin if the record cannot afford it.
  const Real bw_min = 0.19 * std::min(f_sub, f_sup);
  Index settle = static_cast<Index>(std::ceil(4.0 * 0.45 / bw_min * fs));
  const Index hop = std::max<Index>(1, static_cast<Index>(std::round(fs / f0)));
  for (;;) {
    const Index lead = half + settle;
    std::vector<Real> centers;
    for (Index i = lead; i + lead < n; i += hop)
      centers.push_back(pow.data.t0() + static_cast<Real>(i) / fs);
    if (!centers.empty()) return centers;
    if (settle == 0)
      throw InputError("record shorter than one phasor analysis window");
    settle /= 2;
    if (settle < hop) settle = 0;
  }
}

InterharmonicPhasor sliding_phasor(const PowRecord& pow, PowQuantity quantity,
                                   Real f_target,
                                   const std::vector<Real>& centers) {
  const Real fs = pow.fs();
  const Real f0 = pow.nominal_frequency;
  if (f_target <= 0.0 || f_target >= 0.5 * fs)
    throw InputError("sliding_phasor: target frequency at or above Nyquist");
  if (centers.empty()) throw InputError("sliding_phasor: no window centers");

  const Index nw = window_samples(f_target, f0, fs);
  if (pow.data.length() < nw)
    throw InputError("sliding_phasor: record shorter than one analysis window");

  // Guard band for the per-phase pre-filter.
  const Real band_lo = f_target / 1.1;
  const Real band_hi = std::min(f_target * 1.1, 0.499 * fs);

  const char* const* names =
      quantity == PowQuantity::Voltage ? &PowRecord::channel_names()[0]
                                       : &PowRecord::channel_names()[3];
  std::array<Vec, 3> phase;
  for (int ph = 0; ph < 3; ++ph)
    phase[static_cast<std::size_t>(ph)] =
        bandpassed(pow.data.at(names[ph]).values, band_lo, band_hi, fs);

  Vec hann(nw);
  for (Index i = 0; i < nw; ++i)
    hann[i] = 0.5 - 0.5 * std::cos(kTwoPi * static_cast<Real>(i) /
                                   static_cast<Real>(nw - 1));
  const Real wsum = hann.sum();
  const Index half = nw / 2;

  // Demodulation table relative to the window center.
  CVec rot(nw);
  for (Index i = 0; i < nw; ++i) {
    const Real tau = static_cast<Real>(i - half) / fs;
    rot[i] = std::polar(hann[i], -kTwoPi * f_target * tau);
  }

  const Complex a = std::polar(1.0, kTwoPi / 3.0);
  const Complex seq[3] = {Complex(1.0, 0.0), a, a * a};

  InterharmonicPhasor out;
  out.f_target = f_target;
  out.times.resize(static_cast<Index>(centers.size()));
  out.phasor.resize(static_cast<Index>(centers.size()));

  const Index n = pow.data.length();
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const Index ic = pow.data.channels.front().index_at(centers[c]);
    if (ic < half || ic + half >= n)
      throw InputError("sliding_phasor: window does not fit at requested center");
    Complex pos(0.0, 0.0);
    for (int ph = 0; ph < 3; ++ph) {
      Complex acc(0.0, 0.0);
      const Vec& x = phase[static_cast<std::size_t>(ph)];
      for (Index i = 0; i < nw; ++i) acc += x[ic - half + i] * rot[i];
      pos += seq[ph] * (2.0 * acc / wsum);
    }
    out.times[static_cast<Index>(c)] = pow.data.channels.front().time(ic);
    out.phasor[static_cast<Index>(c)] = pos / 3.0;
  }
  return out;
}

SspResult ssp_power(const std::string& device, const InterharmonicPhasor& v_sub,
                    const InterharmonicPhasor& i_sub,
                    const InterharmonicPhasor& v_sup,
                    const InterharmonicPhasor& i_sup, Real f0, Real t_lo,
                    Real t_hi) {
  if (std::abs(v_sub.f_target - i_sub.f_target) > 1e-9 ||
      std::abs(v_sup.f_target - i_sup.f_target) > 1e-9)
    throw InputError("ssp_power: voltage/current frequency mismatch");
  if (std::abs(v_sup.f_target - (2.0 * f0 - v_sub.f_target)) > 1e-9)
    throw InputError("ssp_power: f_sup must equal 2*f0 - f_sub");
  const Index n = v_sub.times.size();
  if (i_sub.times.size() != n || v_sup.times.size() != n ||
      i_sup.times.size() != n)
    throw InputError("ssp_power: phasor tracks have different lengths");
  for (Index i = 0; i < n; ++i)
    if (std::abs(v_sub.times[i] - v_sup.times[i]) > 1e-9 ||
        std::abs(v_sub.times[i] - i_sub.times[i]) > 1e-9 ||
        std::abs(v_sub.times[i] - i_sup.times[i]) > 1e-9)
      throw InputError("ssp_power: phasor tracks have different time bases");
  if (n < 2) throw InputError("ssp_power: need at least two phasor samples");

  SspResult r;
  r.device = device;
  r.f_sub = v_sub.f_target;
  r.f_sup = v_sup.f_target;

  auto make = [&](const char* name) {
    UniformSeries s;
    s.name = name;
    s.t0 = v_sub.times[0];
    s.dt = (v_sub.times[n - 1] - v_sub.times[0]) / static_cast<Real>(n - 1);
    s.unit = "pu";
    s.kind = SeriesKind::Power;
    s.values.resize(n);
    return s;
  };
  r.p_sub = make("p_sub");
  r.p_sup = make("p_sup");
  r.p_sc = make("p_sc");
  for (Index i = 0; i < n; ++i) {
    r.p_sub.values[i] = 1.5 * std::real(v_sub.phasor[i] * std::conj(i_sub.phasor[i]));
    r.p_sup.values[i] = 1.5 * std::real(v_sup.phasor[i] * std::conj(i_sup.phasor[i]));
    r.p_sc.values[i] = r.p_sub.values[i] + r.p_sup.values[i];
  }

  const Index i0 = r.p_sc.index_at(t_lo);
  const Index i1 = r.p_sc.index_at(t_hi);
  if (i1 <= i0) throw InputError("ssp_power: empty averaging window");
  r.mean_p_sc = r.p_sc.values.segment(i0, i1 - i0 + 1).mean();
  return r;
}

std::vector<SspResult> classify_sources(std::vector<SspResult> results,
                                        Real threshold) {
  if (threshold <= 0.0) {
    Real max_abs = 0.0;
    for (const auto& r : results)
      max_abs = std::max(max_abs, std::abs(r.mean_p_sc));
    threshold = 0.01 * max_abs;
  }
  for (auto& r : results) r.is_source = r.mean_p_sc < -threshold;
  std::stable_sort(results.begin(), results.end(),
                   [](const SspResult& a, const SspResult& b) {
                     return a.mean_p_sc < b.mean_p_sc;
                   });
  return results;
}

SspResult analyze_pow_device(const std::string& device, const PowRecord& pow,
                             Real f_osc, Real t_lo, Real t_hi,
                             bool current_into_device) {
  const Real f0 = pow.nominal_frequency;
  if (f_osc <= 0.0 || f_osc >= f0)
    throw InputError("analyze_pow_device: oscillation frequency must lie in (0, f0)");
  const Real f_sub = f0 - f_osc;
  const Real f_sup = f0 + f_osc;
  auto centers = phasor_window_centers(pow, f_sub, f_sup);
  InterharmonicPhasor v_sub = sliding_phasor(pow, PowQuantity::Voltage, f_sub, centers);
  InterharmonicPhasor i_sub = sliding_phasor(pow, PowQuantity::Current, f_sub, centers);
  InterharmonicPhasor v_sup = sliding_phasor(pow, PowQuantity::Voltage, f_sup, centers);
  InterharmonicPhasor i_sup = sliding_phasor(pow, PowQuantity::Current, f_sup, centers);
  if (!current_into_device) {
    i_sub.phasor = -i_sub.phasor;
    i_sup.phasor = -i_sup.phasor;
  }
  return ssp_power(device, v_sub, i_sub, v_sup, i_sup, f0, t_lo, t_hi);
}

void write_ssp_report_csv(const std::vector<SspResult>& results,
                          const std::filesystem::path& path) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : results)
    rows.push_back({r.device, format_number(r.f_sub), format_number(r.f_sup),
                    format_number(r.mean_p_sc), r.is_source ? "true" : "false"});
  write_table_csv(path,
                  {"device", "f_sub_hz", "f_sup_hz", "mean_p_sc_pu", "is_source"},
                  rows);
}

}  // namespace osckit
