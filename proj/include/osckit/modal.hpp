#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "osckit/series.hpp"

namespace osckit {

/// One identified oscillatory mode in conjugate-collapsed form (frequency >= 0).
/// Residues are per-channel complex amplitudes of the real signal component
/// mag * exp(sigma*t) * cos(2*pi*f*t + phase), i.e. conjugate pairs already
/// folded (residue = 2x the one-sided residue for f > 0).
struct Mode {
  Real frequency = 0.0;  // Hz
  Real sigma = 0.0;      // 1/s, negative = decaying
  Real zeta = 0.0;       // -sigma / sqrt(sigma^2 + (2*pi*f)^2)
  CVec residues;         // one per channel

  Real energy() const { return residues.squaredNorm(); }
};

/// Joint multi-channel fit: shared poles, per-channel residues.
struct ModalFit {
  std::vector<Mode> modes;            // in-band, sorted by energy desc
  std::vector<std::string> channels;  // residue order
};

/// Mode shape of one mode: residues normalized so the largest-magnitude
/// channel reads exactly 1 at angle 0.
struct ModeShape {
  Mode mode;
  CVec normalized;
  std::vector<std::string> channels;
};

/// Fits damped sinusoids to all channels at once with the matrix-pencil
/// method (pencil parameter L = N/3, order from a singular-value threshold of
/// 1e-8 relative, capped at max_order). Only modes with frequency inside
/// [f_lo, f_hi] are returned; the caller windows the data beforehand.
ModalFit fit_modes(const ChannelSet& data, Real f_lo, Real f_hi,
                   int max_order = 16);

/// Shape of the highest-energy in-band mode. Throws AnalysisError when the
/// band is empty.
ModeShape extract_shape(const ModalFit& fit, Real f_lo, Real f_hi);

/// Mode table CSV: freq_hz,sigma_1_per_s,zeta,channel,residue_mag,residue_phase_deg.
void write_mode_table_csv(const ModalFit& fit, const std::filesystem::path& path);

}  // namespace osckit
