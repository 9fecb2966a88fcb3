#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "osckit/device.hpp"
#include "osckit/grid.hpp"
#include "osckit/series.hpp"

namespace osckit {

struct Event {
  enum class Kind { TripDevice, SetParam, ShedLoad };
  Real t = 0.0;
  Kind kind = Kind::TripDevice;
  std::string target;  // device id or dotted parameter path
  Real value = 0.0;    // SetParam payload
  Real fraction = 0.0; // ShedLoad payload (share of initial total load)
};

struct Scenario {
  std::string name = "scenario";
  GridModel model;
  std::vector<Event> events;  // sorted by time on load
  Real duration_s = 10.0;
  Real dt_s = 50e-6;
  Real output_hz = 1000.0;
  bool pow_synthesis = false;
  Real pow_rate_hz = 15000.0;
  std::vector<std::string> pow_devices;  // empty = all inverter devices
  // Analysis defaults carried with the scenario (band prior and window).
  Real band_lo_hz = 10.0;
  Real band_hi_hz = 25.0;
  Real window_lo_s = -1.0;  // < 0: first event + 0.5 s
  Real window_hi_s = -1.0;  // < 0: first event + 3.5 s

  Real first_event_time() const;
  Real analysis_window_lo() const;
  Real analysis_window_hi() const;
};

/// Scenario file: JSON referencing the model file (path relative to the
/// scenario file's directory).
Scenario load_scenario(const std::filesystem::path& path);
void save_scenario(const Scenario& sc, const std::filesystem::path& path,
                   const std::string& model_file);

struct SimResult {
  ChannelSet channels;  // device + system channels at the output rate
  std::map<std::string, PowRecord> pow;  // synthesized point-on-wave records
  Real event_time = 0.0;
  std::vector<std::string> device_ids;  // generating devices, model order
};

/// Companion-model dq network: trapezoidal branch/shunt dynamics, constant
/// admittance loads, device Nortons; one LU factorization between topology
/// events.
class DynamicNetwork {
 public:
  DynamicNetwork(PuNetwork net, Real dt);

  void set_device_admittance(int bus, Complex y);
  void clear_device_admittances();
  void set_load_scale(Real scale);  // uniform constant-Z load shedding
  void finalize();                  // (re)factorize

  /// Steady-state initialization from a fundamental-frequency solution.
  void init_steady(const CVec& v_bus);

  /// One trapezoidal step driven by device source currents.
  const CVec& step(const CVec& device_currents);

  const CVec& bus_voltage() const { return v_; }
  const CVec& branch_current() const { return i_br_; }
  Real load_scale() const { return load_scale_; }
  const PuNetwork& pu() const { return net_; }

  Real total_load_power() const;    // pu
  Real total_branch_loss() const;   // pu
  Real stored_energy() const;       // pu*s

 private:
  PuNetwork net_;
  Real dt_;
  Real load_scale_ = 1.0;
  std::vector<Complex> y_device_;  // per bus
  std::vector<Complex> y_branch_;  // companion admittance per branch
  std::vector<Complex> k_branch_;  // history multiplier per branch
  std::vector<Complex> y_shunt_;   // companion admittance per bus shunt
  std::vector<Complex> k_shunt_;
  CVec v_;        // bus voltages
  CVec i_br_;     // branch currents
  CVec i_sh_;     // shunt currents
  CVec rhs_;
  Eigen::PartialPivLU<CMat> lu_;
};

/// Assembled simulator for one model; each instance owns isolated state.
class GridSim {
 public:
  explicit GridSim(GridModel model);

  /// Runs the scenario events against this model. Deterministic: identical
  /// inputs give bit-identical results. Throws SimDivergence when the state
  /// leaves the valid region.
  SimResult run(const std::vector<Event>& events, Real duration_s, Real dt_s,
                Real output_hz, bool pow_synthesis = false,
                Real pow_rate_hz = 15000.0,
                const std::vector<std::string>& pow_devices = {});

  const GridModel& model() const { return model_; }

 private:
  GridModel model_;
};

SimResult simulate(const Scenario& sc);

}  // namespace osckit
