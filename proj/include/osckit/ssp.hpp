#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "osckit/series.hpp"

namespace osckit {

/// Positive-sequence interharmonic phasor track at one target frequency
/// (peak-value convention, phase referenced to each window center).
struct InterharmonicPhasor {
  Real f_target = 0.0;
  Vec times;
  CVec phasor;
};

/// Sub/super-synchronous power verdict for one device. p_sc uses the
/// absorbed-by-device convention: mean p_sc < 0 marks an oscillation source.
struct SspResult {
  std::string device;
  Real f_sub = 0.0;
  Real f_sup = 0.0;  // = 2*f0 - f_sub, asserted
  UniformSeries p_sub, p_sup, p_sc;  // pu
  Real mean_p_sc = 0.0;
  bool is_source = false;
};

enum class PowQuantity { Voltage, Current };

/// Frequency of the strongest power oscillation inside [f_lo, f_hi], from the
/// STFT band peak of the instantaneous three-phase power. Throws
/// AnalysisError when the peak is not at least 10 dB above the band median.
Real estimate_oscillation_frequency(const PowRecord& pow, Real f_lo, Real f_hi);

/// Window centers at which both the f_sub and f_sup extraction windows fit
/// inside the record; spaced one fundamental cycle apart.
std::vector<Real> phasor_window_centers(const PowRecord& pow, Real f_sub,
                                        Real f_sup);

/// Single-bin sliding Fourier projection at exactly f_target over a Hann
/// window spanning the smallest integer count of f_target cycles that is at
/// least twelve f0 cycles long; each phase is first band-limited to
/// [f_target/1.1, f_target*1.1] (zero phase) to keep fundamental leakage far
/// below the interharmonic level. The three phase estimates reduce to the
/// positive sequence.
InterharmonicPhasor sliding_phasor(const PowRecord& pow, PowQuantity quantity,
                                   Real f_target,
                                   const std::vector<Real>& centers);

/// Combined sub/super-synchronous active power:
///   p_sub = 1.5 Re(V_sub conj(I_sub)),  p_sup = 1.5 Re(V_sup conj(I_sup)),
///   p_sc = p_sub + p_sup,
/// currents measured into the device. mean_p_sc is taken over [t_lo, t_hi].
SspResult ssp_power(const std::string& device, const InterharmonicPhasor& v_sub,
                    const InterharmonicPhasor& i_sub,
                    const InterharmonicPhasor& v_sup,
                    const InterharmonicPhasor& i_sup, Real f0, Real t_lo,
                    Real t_hi);

/// Marks sources (mean_p_sc < -threshold) and sorts most-negative first.
/// threshold <= 0 selects the default 1% of the largest |mean_p_sc|.
std::vector<SspResult> classify_sources(std::vector<SspResult> results,
                                        Real threshold = -1.0);

/// Full PoW -> phasor -> power pipeline for one device. f_osc is the power
/// oscillation frequency (f_sub = f0 - f_osc, f_sup = f0 + f_osc). Set
/// current_into_device = false when the record's currents are measured
/// device -> grid; they are negated into the absorbed convention.
SspResult analyze_pow_device(const std::string& device, const PowRecord& pow,
                             Real f_osc, Real t_lo, Real t_hi,
                             bool current_into_device = true);

/// SSP report CSV: device,f_sub_hz,f_sup_hz,mean_p_sc_pu,is_source.
void write_ssp_report_csv(const std::vector<SspResult>& results,
                          const std::filesystem::path& path);

}  // namespace osckit
