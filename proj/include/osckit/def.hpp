#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "osckit/series.hpp"

namespace osckit {

/// Phasor-rate inputs for the dissipating-energy computation of one device.
/// P and Q are signed device -> grid; the angle may come either from a bus
/// angle channel or from a frequency channel (integrated internally).
struct DefInputs {
  std::string device;
  UniformSeries p;     // pu
  UniformSeries q;     // pu
  UniformSeries vmag;  // pu, > 0 everywhere
  std::optional<UniformSeries> theta;  // rad
  std::optional<UniformSeries> freq;   // Hz
};

struct DefResult {
  std::string device;
  UniformSeries energy;  // cumulative W(t), pu*rad, W[0] = 0
  Real slope = 0.0;      // pu*rad/s over the ranking window
  Real fit_r2 = 0.0;
  bool is_source = false;
};

/// Cumulative oscillation-band dissipating energy
///   W(t) = integral(dP ddtheta) + integral(dQ d(ln V)),
/// trapezoidal in time; the deviation signals are detrended then band-passed
/// with the zero-phase filter so the P-theta phase relation survives intact.
/// Positive trend = the device injects oscillation-frequency energy (source).
UniformSeries def_energy(const DefInputs& in, Real f_lo, Real f_hi);

/// Least-squares energy slope over [t_lo, t_hi] per device, ranked descending.
/// threshold <= 0 selects the default: 5% of the largest |slope| in the study.
/// A device is a source when slope > threshold and the line fit has r^2 >= 0.5.
std::vector<DefResult> def_rank(
    const std::vector<std::pair<std::string, UniformSeries>>& energies,
    Real t_lo, Real t_hi, Real threshold = -1.0);

/// DEF report CSV: device,slope_pu_rad_per_s,fit_r2,is_source.
void write_def_report_csv(const std::vector<DefResult>& results,
                          const std::filesystem::path& path);

}  // namespace osckit
