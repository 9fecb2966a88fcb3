#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "osckit/def.hpp"
#include "osckit/modal.hpp"
#include "osckit/sim.hpp"
#include "osckit/spectrum.hpp"
#include "osckit/ssp.hpp"

namespace osckit {

/// Shipped benchmark: a synthetic ~12-bus 57 kV island with one large oil
/// plant, biomass and hydro machines, three grid-following batteries and one
/// virtual-synchronous-machine battery, staged underfrequency load shedding,
/// and a plant trip at t = 1 s. Calibrated so the trip drops the converter
/// buses' short-circuit ratios into the region where the two aggressive
/// grid-following units drive a poorly damped subsynchronous mode.
Scenario kauai_mini();

/// Pre/post-trip SCR calibration targets for the benchmark (per IBR).
struct ScrTarget {
  std::string device;
  Real rating_mva;
  Real pre;
  Real post;
};
std::vector<ScrTarget> kauai_mini_scr_targets();

/// Everything the event-study pipeline produces for one simulation.
struct EventStudy {
  SimResult sim;
  BandPeak peak;              // band peak of the system frequency spectrogram
  Spectrogram spectrogram;
  ModalFit modal;             // joint fit over the IBR power channels
  std::optional<ModeShape> shape;
  std::vector<DefResult> def;
  std::vector<SspResult> ssp;          // empty unless PoW synthesis was on
  std::vector<std::string> def_sources;
  std::vector<std::string> ssp_sources;
  Real band_lo = 0.0, band_hi = 0.0;
  Real window_lo = 0.0, window_hi = 0.0;
  Real shed_fraction = 0.0;

  /// Damping ratio of the dominant in-band mode (+1 when none was found).
  Real band_mode_zeta() const;
};

/// Runs the scenario and applies the full forensic chain: spectrogram and
/// band peak on the system frequency, joint modal fit and mode shape on the
/// inverter power channels, dissipating-energy ranking per device, and (when
/// PoW synthesis is on) the sub/super-synchronous power classification.
EventStudy run_event_study(const Scenario& sc);

// ---------------------------------------------------------------------------

enum class SweepMetric { BandModeZeta, BandPeakDb, DefSlopeMax };

SweepMetric sweep_metric_from_name(const std::string& name);
const char* sweep_metric_name(SweepMetric m);

struct SweepSpec {
  struct Parameter {
    std::string path;
    std::vector<Real> values;
  };
  std::vector<Parameter> parameters;  // cartesian product
  SweepMetric metric = SweepMetric::BandModeZeta;
  Real band_lo = 10.0, band_hi = 25.0;
};

SweepSpec load_sweep_spec(const std::filesystem::path& path);

struct SweepRow {
  std::vector<Real> values;  // one per parameter, spec order
  Real metric = 0.0;
};

struct SweepTable {
  SweepSpec spec;
  std::vector<SweepRow> rows;  // deterministic lexicographic order
};

/// One isolated simulator instance per combination; rows come back in
/// lexicographic order of the value indices regardless of thread count.
SweepTable sensitivity_sweep(const SweepSpec& spec, const Scenario& base,
                             int threads = 1);

// ---------------------------------------------------------------------------

enum class MitigationMethod { Method1Droop, Method2Pll };

struct MitigationReport {
  MitigationMethod method = MitigationMethod::Method1Droop;
  std::vector<std::string> targets;  // devices the method was applied to
  bool valid = false;   // base case exhibited an in-band mode
  Real base_zeta = 0.0, mitigated_zeta = 0.0;
  Real base_peak_db = 0.0, mitigated_peak_db = 0.0;
  Real base_peak_hz = 0.0;
  Real zeta_delta = 0.0;     // mitigated - base
  Real peak_db_delta = 0.0;  // mitigated - base
  EventStudy base, mitigated;
};

/// Paired base-vs-mitigated comparison. Method 1 sets the flagged sources'
/// P/f droop constant to 4.0%; Method 2 sets their PLL proportional gain to
/// 0.10. Targets default to the devices the base run's energy ranking flags.
MitigationReport mitigation_compare(MitigationMethod method, const Scenario& base,
                                    std::vector<std::string> targets = {});

// ---------------------------------------------------------------------------

/// Writes per-device analysis CSVs (p/q/v/theta/f), optional PoW files, and
/// the system channels; returns the files written.
std::vector<std::filesystem::path> export_for_analysis(
    const SimResult& result, const std::filesystem::path& directory);

}  // namespace osckit
