#include "osckit/signal.hpp"

#include <algorithm>
#include <cmath>

namespace osckit {

namespace {

/// Applies one biquad over x (direct form II transposed) with given initial
/// state scaled by the first sample.
Vec run_biquad(const Biquad& s, const Vec& x, Real zi1, Real zi2) {
  Vec y(x.size());
  Real z1 = x.size() > 0 ? zi1 * x[0] : 0.0;
  Real z2 = x.size() > 0 ? zi2 * x[0] : 0.0;
  for (Index n = 0; n < x.size(); ++n) {
    Real in = x[n];
    Real out = s.b0 * in + z1;
    z1 = s.b1 * in + z2 - s.a1 * out;
    z2 = s.b2 * in - s.a2 * out;
    y[n] = out;
  }
  return y;
}

/// Steady-state (step-response) initial conditions for a biquad, per unit of
/// input, so startup transients on the padded edges stay small.
std::pair<Real, Real> biquad_zi(const Biquad& s) {
  Real den = 1.0 + s.a1 + s.a2;
  if (std::abs(den) < 1e-300) return {0.0, 0.0};
  Real h1 = (s.b0 + s.b1 + s.b2) / den;  // DC gain
  Real z2 = s.b2 - s.a2 * h1;
  Real z1 = s.b1 - s.a1 * h1 + z2;
  return {z1, z2};
}

Real kaiser_i0(Real x) {
  // Series expansion of the modified Bessel function I0.
  Real sum = 1.0, term = 1.0;
  for (int k = 1; k < 64; ++k) {
    term *= (x / (2.0 * k)) * (x / (2.0 * k));
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return sum;
}

Real sinc(Real x) {
  if (std::abs(x) < 1e-12) return 1.0;
  return std::sin(kPi * x) / (kPi * x);
}

Index reflect_index(Index i, Index n) {
  if (n == 1) return 0;
  Index period = 2 * (n - 1);
  i = ((i % period) + period) % period;
  return i < n ? i : period - i;
}

}  // namespace

Complex BandpassFilter::response(Real f) const {
  Complex z = std::exp(Complex(0.0, -kTwoPi * f / fs));
  Complex h(1.0, 0.0);
  for (const auto& s : sections) {
    Complex num = s.b0 + s.b1 * z + s.b2 * z * z;
    Complex den = 1.0 + s.a1 * z + s.a2 * z * z;
    h *= num / den;
  }
  return h;
}

BandpassFilter design_bandpass(Real f_lo, Real f_hi, Real fs) {
  if (!(0.0 < f_lo && f_lo < f_hi && f_hi < 0.5 * fs))
    throw InputError("band-pass band must satisfy 0 < f_lo < f_hi < fs/2");

  // Prewarped analog band edges.
  const Real wl = 2.0 * fs * std::tan(kPi * f_lo / fs);
  const Real wh = 2.0 * fs * std::tan(kPi * f_hi / fs);
  const Real w0 = std::sqrt(wl * wh);
  const Real bw = wh - wl;

  // Order-2 Butterworth prototype pole (upper half plane); the band-pass
  // transform s -> (s^2 + w0^2)/(bw*s) sends it to two pole pairs.
  const Complex proto(-std::sqrt(0.5), std::sqrt(0.5));
  std::array<Complex, 2> poles;  // upper-half-plane representatives
  {
    Complex b = proto * bw;
    Complex disc = std::sqrt(b * b - 4.0 * w0 * w0);
    poles[0] = (b + disc) / 2.0;
    poles[1] = (b - disc) / 2.0;
  }

  BandpassFilter filt;
  filt.f_lo = f_lo;
  filt.f_hi = f_hi;
  filt.fs = fs;

  // Bilinear transform per pole pair; zeros of the analog band-pass sit at
  // s=0 (z=+1) and s=inf (z=-1), so each section's numerator is (z^2 - 1).
  for (int k = 0; k < 2; ++k) {
    Complex p = poles[k];
    Complex zd = (2.0 * fs + p) / (2.0 * fs - p);
    Biquad s;
    s.b0 = 1.0;
    s.b1 = 0.0;
    s.b2 = -1.0;
    s.a1 = -2.0 * zd.real();
    s.a2 = std::norm(zd);
    filt.sections[k] = s;
  }

  // Pin the gain to exactly 1 at the geometric band center.
  const Real fc = std::sqrt(f_lo * f_hi);
  Real g = std::abs(filt.response(fc));
  if (g <= 0.0 || !std::isfinite(g))
    throw InputError("degenerate band-pass design");
  const Real scale = 1.0 / std::sqrt(g);
  for (auto& s : filt.sections) {
    s.b0 *= scale;
    s.b1 *= scale;
    s.b2 *= scale;
  }
  return filt;
}

Vec detrended(const Vec& x, DetrendMode mode) {
  if (mode == DetrendMode::Mean) {
    return x.array() - x.mean();
  }
  if (x.size() < 2) throw InputError("linear detrend needs at least 2 samples");
  // Least-squares line on index k, centered for conditioning.
  const Index n = x.size();
  Vec k = Vec::LinSpaced(n, 0.0, static_cast<Real>(n - 1));
  Real km = k.mean();
  Vec kc = k.array() - km;
  Real denom = kc.squaredNorm();
  Real slope = denom > 0 ? kc.dot(x) / denom : 0.0;
  Real intercept = x.mean() - slope * km;
  return x - (intercept + slope * k.array()).matrix();
}

Vec filtfilt(const BandpassFilter& filter, const Vec& x) {
  const Index n = x.size();
  if (n < 2) return Vec::Zero(n);

  // Edge padding: odd-symmetric extension long enough for the band-pass ring
  // (~1/bandwidth) to die out.
  const Real bw = filter.f_hi - filter.f_lo;
  Index pad = static_cast<Index>(std::ceil(3.0 * filter.fs / bw));
  pad = std::min<Index>(pad, 10 * (n - 1));

  Vec ext(n + 2 * pad);
  for (Index i = 0; i < pad; ++i)
    ext[i] = 2.0 * x[0] - x[reflect_index(pad - i, n)];
  ext.segment(pad, n) = x;
  for (Index i = 0; i < pad; ++i)
    ext[pad + n + i] = 2.0 * x[n - 1] - x[reflect_index(n - 2 - i, n)];

  auto run_cascade = [&](Vec v) {
    for (const auto& s : filter.sections) {
      auto [z1, z2] = biquad_zi(s);
      v = run_biquad(s, v, z1, z2);
    }
    return v;
  };

  Vec fwd = run_cascade(ext);
  Vec rev = fwd.reverse();
  Vec back = run_cascade(rev);
  Vec out = back.reverse();
  return out.segment(pad, n);
}

Vec bandpassed(const Vec& x, Real f_lo, Real f_hi, Real fs) {
  return filtfilt(design_bandpass(f_lo, f_hi, fs), x);
}

Vec resampled(const Vec& x, Real fs_old, Real fs_new) {
  if (fs_new <= 0.0) throw InputError("resample: fs_new must be > 0");
  if (fs_old <= 0.0) throw InputError("resample: fs_old must be > 0");
  if (std::abs(fs_new - fs_old) <= 1e-12 * fs_old) return x;
  const Index n = x.size();
  if (n == 1) return x;

  const Real dt_old = 1.0 / fs_old;
  const Real dt_new = 1.0 / fs_new;
  const Real duration = static_cast<Real>(n - 1) * dt_old;
  const Index n_out = static_cast<Index>(std::floor(duration / dt_new + 1e-9)) + 1;

  // Kaiser-windowed sinc kernel, cutoff below the tighter Nyquist.
  const Real cutoff = 0.45 * std::min(fs_old, fs_new);
  const Real beta = 10.0;
  const int zero_crossings = 32;
  const Real half_width = zero_crossings / (2.0 * cutoff);  // seconds
  const Real i0_beta = kaiser_i0(beta);

  Vec y(n_out);
  for (Index i = 0; i < n_out; ++i) {
    const Real t = static_cast<Real>(i) * dt_new;
    const Index k_center = static_cast<Index>(std::floor(t / dt_old));
    const Index reach = static_cast<Index>(std::ceil(half_width / dt_old)) + 1;
    Real acc = 0.0, wsum = 0.0;
    for (Index k = k_center - reach; k <= k_center + reach; ++k) {
      const Real tau = t - static_cast<Real>(k) * dt_old;
      if (std::abs(tau) > half_width) continue;
      const Real u = tau / half_width;
      const Real w = kaiser_i0(beta * std::sqrt(std::max(0.0, 1.0 - u * u))) / i0_beta;
      const Real h = w * sinc(2.0 * cutoff * tau) * (2.0 * cutoff * dt_old);
      acc += h * x[reflect_index(k, n)];
      wsum += h;
    }
    // Normalizing by the kernel sum keeps constants exactly constant.
    y[i] = wsum != 0.0 ? acc / wsum : 0.0;
  }
  return y;
}

UniformSeries detrend(const UniformSeries& s, DetrendMode mode) {
  s.validate();
  return s.with_values(detrended(s.values, mode));
}

UniformSeries bandpass(const UniformSeries& s, Real f_lo, Real f_hi) {
  s.validate();
  return s.with_values(bandpassed(s.values, f_lo, f_hi, s.fs()));
}

UniformSeries resample(const UniformSeries& s, Real fs_new) {
  s.validate();
  if (fs_new <= 0.0) throw InputError("resample: fs_new must be > 0");
  UniformSeries out = s;
  out.values = resampled(s.values, s.fs(), fs_new);
  out.dt = 1.0 / fs_new;
  return out;
}

std::pair<UniformSeries, UniformSeries> instantaneous_pq(const PowRecord& pow) {
  const Vec& va = pow.va();
  const Vec& vb = pow.vb();
  const Vec& vc = pow.vc();
  const Vec& ia = pow.ia();
  const Vec& ib = pow.ib();
  const Vec& ic = pow.ic();

  Vec p = va.cwiseProduct(ia) + vb.cwiseProduct(ib) + vc.cwiseProduct(ic);
  Vec q = ((vb - vc).cwiseProduct(ia) + (vc - va).cwiseProduct(ib) +
           (va - vb).cwiseProduct(ic)) /
          std::sqrt(3.0);

  UniformSeries ps, qs;
  ps.name = "p";
  qs.name = "q";
  ps.t0 = qs.t0 = pow.data.t0();
  ps.dt = qs.dt = pow.data.dt();
  ps.kind = qs.kind = SeriesKind::Power;
  ps.unit = qs.unit = pow.data.channels.front().unit;
  ps.values = std::move(p);
  qs.values = std::move(q);
  return {std::move(ps), std::move(qs)};
}

}  // namespace osckit
