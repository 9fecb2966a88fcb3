#include "osckit/modal.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "osckit/csv.hpp"

namespace osckit {

namespace {

/// Stacked-channel Hankel matrix: per channel an (N-L) x (L+1) block, blocks
/// stacked vertically so all channels share one right singular subspace.
Mat stacked_hankel(const ChannelSet& data, Index L) {
  const Index n = data.length();
  const Index rows = n - L;
  const Index ch = static_cast<Index>(data.size());
  Mat y(rows * ch, L + 1);
  for (Index c = 0; c < ch; ++c) {
    const Vec& v = data.channels[static_cast<std::size_t>(c)].values;
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j <= L; ++j) y(c * rows + i, j) = v[i + j];
  }
  return y;
}

struct RawMode {
  Complex pole_s;  // sigma + j*omega
  CVec residues;   // one-sided, per channel
};

}  // namespace

ModalFit fit_modes(const ChannelSet& data, Real f_lo, Real f_hi, int max_order) {
  if (data.empty()) throw InputError("fit_modes: no channels");
  if (max_order < 2) throw InputError("fit_modes: max_order must be >= 2");
  const Index n = data.length();
  if (n < 4 * max_order)
    throw InputError("fit_modes: need at least 4*max_order samples");
  const Real dt = data.dt();

  const Index L = n / 3;
  Mat y = stacked_hankel(data, L);

  // QR-reduce before the SVD: R shares Y's right singular subspace and the
  // square Jacobi SVD is robust for the exactly rank-deficient Hankel case.
  if (y.rows() > y.cols()) {
    Eigen::HouseholderQR<Mat> qr(y);
    y = qr.matrixQR().topRows(y.cols()).triangularView<Eigen::Upper>();
  }
  Eigen::JacobiSVD<Mat> svd(y, Eigen::ComputeThinV);
  const Vec& sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] <= 0.0 || !std::isfinite(sv[0]))
    throw AnalysisError("fit_modes: rank-deficient pencil (zero data)");

  // Model order: singular values above 1e-8 of the largest, capped.
  Index order = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv[i] >= 1e-8 * sv[0]) ++order;
  order = std::min<Index>({order, static_cast<Index>(max_order), L});
  if (order < 1) throw AnalysisError("fit_modes: rank-deficient pencil");

  // Poles from the shift-invariance of the signal subspace:
  // V1 * A = V2 with V1/V2 the truncated right singular vectors minus the
  // last/first row; eigenvalues of A are the discrete poles z_k.
  Mat vm = svd.matrixV().leftCols(order);
  Mat v1 = vm.topRows(L);
  Mat v2 = vm.bottomRows(L);
  Mat a = v1.colPivHouseholderQr().solve(v2);

  Eigen::EigenSolver<Mat> eig(a);
  if (eig.info() != Eigen::Success)
    throw AnalysisError("fit_modes: pencil eigenvalue iteration failed");
  CVec z = eig.eigenvalues();

  // Numerically meaningless spurious poles (|z|^n overflows) are dropped
  // before the residue solve; they cannot carry signal energy.
  std::vector<Index> keep;
  for (Index k = 0; k < order; ++k) {
    const Real lz = std::log(std::max(std::abs(z[k]), 1e-300));
    if (static_cast<Real>(n) * lz < 200.0) keep.push_back(k);
  }
  {
    CVec z_kept(static_cast<Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) z_kept[static_cast<Index>(k)] = z[keep[k]];
    z = std::move(z_kept);
    order = z.size();
  }
  if (order < 1) throw AnalysisError("fit_modes: no usable poles");

  // Joint least-squares residues: one scaled Vandermonde factorization for
  // all channels (column scaling keeps growing modes well conditioned).
  const Index ch = static_cast<Index>(data.size());
  CMat vand(n, order);
  Vec col_scale(order);
  for (Index k = 0; k < order; ++k) {
    Complex p = 1.0;
    for (Index i = 0; i < n; ++i) {
      vand(i, k) = p;
      p *= z[k];
    }
    col_scale[k] = vand.col(k).norm();
    if (col_scale[k] <= 0.0 || !std::isfinite(col_scale[k])) col_scale[k] = 1.0;
    vand.col(k) /= col_scale[k];
  }
  CMat rhs(n, ch);
  for (Index c = 0; c < ch; ++c)
    rhs.col(c) = data.channels[static_cast<std::size_t>(c)].values.cast<Complex>();
  CMat res = vand.colPivHouseholderQr().solve(rhs);  // order x ch
  for (Index k = 0; k < order; ++k) res.row(k) /= col_scale[k];

  // Collapse conjugate pairs; keep the non-negative-frequency member.
  std::vector<RawMode> raw;
  std::vector<bool> used(static_cast<std::size_t>(order), false);
  for (Index k = 0; k < order; ++k) {
    if (used[static_cast<std::size_t>(k)]) continue;
    used[static_cast<std::size_t>(k)] = true;
    const Complex zk = z[k];
    if (std::abs(zk) < 1e-12) continue;  // pole at the origin carries no mode
    Complex s = std::log(zk) / dt;
    RawMode m;
    m.residues = res.row(k).transpose();
    if (std::abs(s.imag()) < 1e-9) {
      m.pole_s = Complex(s.real(), 0.0);
      raw.push_back(std::move(m));
      continue;
    }
    // Find the conjugate partner (closest remaining pole to conj(zk)).
    Index partner = -1;
    Real best = 1e-6 * std::abs(zk) + 1e-12;
    for (Index j = 0; j < order; ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      Real d = std::abs(z[j] - std::conj(zk));
      if (d < best) {
        best = d;
        partner = j;
      }
    }
    if (partner >= 0) used[static_cast<std::size_t>(partner)] = true;
    if (s.imag() < 0.0) {
      s = std::conj(s);
      if (partner >= 0)
        m.residues = res.row(partner).transpose();
      else
        m.residues = m.residues.conjugate();
    }
    m.pole_s = s;
    m.residues *= 2.0;  // fold the conjugate pair into a real cosine
    raw.push_back(std::move(m));
  }

  ModalFit fit;
  fit.channels = data.names();
  for (const auto& m : raw) {
    const Real f = m.pole_s.imag() / kTwoPi;
    if (f < f_lo - 1e-12 || f > f_hi + 1e-12) continue;
    Mode mode;
    mode.frequency = f;
    mode.sigma = m.pole_s.real();
    const Real wn = std::hypot(mode.sigma, kTwoPi * f);
    mode.zeta = wn > 0.0 ? -mode.sigma / wn : 0.0;
    mode.residues = m.residues;
    fit.modes.push_back(std::move(mode));
  }
  std::stable_sort(fit.modes.begin(), fit.modes.end(),
                   [](const Mode& a, const Mode& b) { return a.energy() > b.energy(); });
  return fit;
}

ModeShape extract_shape(const ModalFit& fit, Real f_lo, Real f_hi) {
  const Mode* best = nullptr;
  for (const auto& m : fit.modes) {
    if (m.frequency < f_lo || m.frequency > f_hi) continue;
    if (best == nullptr || m.energy() > best->energy()) best = &m;
  }
  if (best == nullptr) throw AnalysisError("extract_shape: no in-band mode");

  ModeShape shape;
  shape.mode = *best;
  shape.channels = fit.channels;
  Index ref = 0;
  best->residues.cwiseAbs().maxCoeff(&ref);
  const Complex r = best->residues[ref];
  if (std::abs(r) == 0.0)
    throw AnalysisError("extract_shape: degenerate zero-residue mode");
  shape.normalized = best->residues / r;
  return shape;
}

void write_mode_table_csv(const ModalFit& fit, const std::filesystem::path& path) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& m : fit.modes) {
    for (Index c = 0; c < m.residues.size(); ++c) {
      const Complex r = m.residues[c];
      rows.push_back({format_number(m.frequency), format_number(m.sigma),
                      format_number(m.zeta),
                      fit.channels[static_cast<std::size_t>(c)],
                      format_number(std::abs(r)),
                      format_number(std::arg(r) * 180.0 / kPi)});
    }
  }
  write_table_csv(path,
                  {"freq_hz", "sigma_1_per_s", "zeta", "channel", "residue_mag",
                   "residue_phase_deg"},
                  rows);
}

}  // namespace osckit
