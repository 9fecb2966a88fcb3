#include "osckit/def.hpp"

#include <algorithm>
#include <cmath>

#include "osckit/csv.hpp"
#include "osckit/signal.hpp"

namespace osckit {

namespace {

void check_shared_base(const DefInputs& in) {
  const UniformSeries* ref = &in.p;
  auto same = [&](const UniformSeries& s) {
    return s.size() == ref->size() && std::abs(s.t0 - ref->t0) < 1e-12 &&
           std::abs(s.dt - ref->dt) < 1e-15;
  };
  if (!same(in.q) || !same(in.vmag))
    throw InputError("def_energy: series lengths or time bases mismatch");
  if (in.theta.has_value() == in.freq.has_value())
    throw InputError("def_energy: provide exactly one of theta or freq");
  if (in.theta && !same(*in.theta))
    throw InputError("def_energy: theta time base mismatch");
  if (in.freq && !same(*in.freq))
    throw InputError("def_energy: freq time base mismatch");
  if (in.vmag.values.minCoeff() <= 0.0)
    throw InputError("def_energy: Vmag must be > 0 everywhere");
}

/// Least-squares line y = a + b*t; returns {slope, r^2}.
std::pair<Real, Real> line_fit(const Vec& y, Real dt) {
  const Index n = y.size();
  if (n < 2) return {0.0, 0.0};
  Vec t = Vec::LinSpaced(n, 0.0, dt * static_cast<Real>(n - 1));
  const Real tm = t.mean(), ym = y.mean();
  Vec tc = t.array() - tm;
  Vec yc = y.array() - ym;
  const Real stt = tc.squaredNorm();
  if (stt <= 0.0) return {0.0, 0.0};
  const Real b = tc.dot(yc) / stt;
  const Real ss_tot = yc.squaredNorm();
  const Real ss_res = (yc - b * tc).squaredNorm();
  const Real r2 = ss_tot > 0.0 ? std::max(0.0, 1.0 - ss_res / ss_tot) : 0.0;
  return {b, r2};
}

}  // namespace

UniformSeries def_energy(const DefInputs& in, Real f_lo, Real f_hi) {
  in.p.validate();
  in.q.validate();
  in.vmag.validate();
  check_shared_base(in);

  const Real fs = in.p.fs();
  const Index n = in.p.size();

  Vec dp = bandpassed(detrended(in.p.values, DetrendMode::Mean), f_lo, f_hi, fs);
  Vec dq = bandpassed(detrended(in.q.values, DetrendMode::Mean), f_lo, f_hi, fs);
  Vec dlnv = bandpassed(detrended(in.vmag.values.array().log().matrix(),
                                  DetrendMode::Mean),
                        f_lo, f_hi, fs);

  Vec dtheta;
  if (in.theta) {
    dtheta = bandpassed(detrended(in.theta->values, DetrendMode::Linear), f_lo,
                        f_hi, fs);
  } else {
    // Frequency channel: accumulate 2*pi*df*dt into an angle, then band-pass.
    Vec df = detrended(in.freq->values, DetrendMode::Mean);
    Vec theta(n);
    Real acc = 0.0;
    theta[0] = 0.0;
    for (Index i = 1; i < n; ++i) {
      acc += kTwoPi * 0.5 * (df[i] + df[i - 1]) * in.p.dt;
      theta[i] = acc;
    }
    dtheta = bandpassed(detrended(theta, DetrendMode::Linear), f_lo, f_hi, fs);
  }

  Vec w(n);
  w[0] = 0.0;
  for (Index i = 1; i < n; ++i) {
    const Real dth = dtheta[i] - dtheta[i - 1];
    const Real dlv = dlnv[i] - dlnv[i - 1];
    w[i] = w[i - 1] + 0.5 * (dp[i] + dp[i - 1]) * dth +
           0.5 * (dq[i] + dq[i - 1]) * dlv;
  }

  UniformSeries out;
  out.name = in.device.empty() ? "def_w" : in.device + "_w";
  out.t0 = in.p.t0;
  out.dt = in.p.dt;
  out.unit = "pu*rad";
  out.kind = SeriesKind::Power;
  out.values = std::move(w);
  return out;
}

std::vector<DefResult> def_rank(
    const std::vector<std::pair<std::string, UniformSeries>>& energies,
    Real t_lo, Real t_hi, Real threshold) {
  if (t_hi <= t_lo) throw InputError("def_rank: empty window");

  std::vector<DefResult> out;
  for (const auto& [device, w] : energies) {
    w.validate();
    const Index i0 = w.index_at(t_lo);
    const Index i1 = w.index_at(t_hi);
    if (i1 <= i0)
      throw InputError("def_rank: window does not overlap W of '" + device + "'");
    if (w.time(0) > t_lo + w.dt || w.time(w.size() - 1) < t_hi - w.dt)
      throw InputError("def_rank: W of '" + device + "' does not cover the window");
    DefResult r;
    r.device = device;
    r.energy = w;
    auto [slope, r2] = line_fit(w.values.segment(i0, i1 - i0 + 1), w.dt);
    r.slope = slope;
    r.fit_r2 = r2;
    out.push_back(std::move(r));
  }

  if (threshold <= 0.0) {
    Real max_abs = 0.0;
    for (const auto& r : out) max_abs = std::max(max_abs, std::abs(r.slope));
    threshold = 0.05 * max_abs;
  }
  for (auto& r : out)
    r.is_source = r.slope > threshold && r.slope > 0.0 && r.fit_r2 >= 0.5;

  std::stable_sort(out.begin(), out.end(),
                   [](const DefResult& a, const DefResult& b) {
                     return a.slope > b.slope;
                   });
  return out;
}

void write_def_report_csv(const std::vector<DefResult>& results,
                          const std::filesystem::path& path) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : results)
    rows.push_back({r.device, format_number(r.slope), format_number(r.fit_r2),
                    r.is_source ? "true" : "false"});
  write_table_csv(path, {"device", "slope_pu_rad_per_s", "fit_r2", "is_source"},
                  rows);
}

}  // namespace osckit
