#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "osckit/types.hpp"

namespace osckit {

// ---------------------------------------------------------------------------
// Device parameter blocks (device-rating per-unit unless noted).

struct SgParams {
  Real rating_mva = 10.0;
  Real h_s = 3.0;          // inertia constant
  Real d_pu = 0.0;         // damping torque coefficient
  Real xd_sub_pu = 0.2;    // subtransient reactance
  Real droop_r_pu = 0.05;  // governor speed droop
  Real governor_t_s = 0.5;
  Real avr_gain = 50.0;
  Real avr_t_s = 0.5;
  Real agc_ki = 0.0;  // optional slow restoration integral (0 = off)
};

struct GflParams {
  Real rating_mva = 10.0;
  Real pll_kp = 0.15;  // pu; effective gain kp*w0 rad/s per pu q-voltage
  Real pll_ki = 5.0;   // pu/s
  Real current_bw_hz = 300.0;
  Real droop_pf = 3.0;  // percent frequency deviation for 1 pu power
  Real ffr_delay_s = 0.05;
  Real ffr_deadband_hz = 0.036;
  Real i_max_pu = 1.2;
};

struct VsmParams {
  Real rating_mva = 10.0;
  Real h_v_s = 2.0;
  Real d_v_pu = 50.0;  // damping = droop: dP (pu) per unit speed deviation
  Real reactive_droop_pct = 5.0;
  Real x_v_pu = 0.25;  // virtual impedance
  Real r_v_pu = 0.01;
  Real e_t_s = 0.05;  // excitation lag
};

struct UflsStage {
  Real f_hz = 59.3;
  Real fraction = 0.02;  // share of total pre-event load
  Real delay_s = 0.1;
};

struct UflsParams {
  std::vector<UflsStage> stages;  // thresholds strictly decreasing
};

using DeviceParams = std::variant<SgParams, GflParams, VsmParams, UflsParams>;

enum class DeviceKind { Sg, Gfl, Vsm, Ufls };

DeviceKind device_kind(const DeviceParams& p);
const char* device_kind_name(DeviceKind k);

struct DeviceSpec {
  std::string id;
  std::string bus;
  DeviceParams params;
  Real p_set_mw = 0.0;
  Real q_set_mvar = 0.0;
  Real v_set_pu = 1.0;  // PV setpoint for SG/VSM
  bool slack = false;   // power-flow slack (exactly one SG/VSM)
  bool in_service = true;
};

// ---------------------------------------------------------------------------
// Network description (physical units; converted to per unit on base_mva).

struct Bus {
  std::string id;
  Real kv = 57.0;
};

struct Branch {
  std::string from, to;
  Real r_ohm = 0.0;
  Real l_h = 0.0;
};

struct Shunt {
  std::string bus;
  Real c_f = 0.0;
};

struct LoadSpec {
  std::string bus;
  Real p_mw = 0.0;
  Real q_mvar = 0.0;  // constant-impedance at nominal voltage
};

struct GridModel {
  Real base_mva = 100.0;
  Real f0 = 60.0;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Shunt> shunts;
  std::vector<LoadSpec> loads;
  std::vector<DeviceSpec> devices;

  int bus_index(const std::string& id) const;  // -1 when missing
  const DeviceSpec* find_device(const std::string& id) const;
  DeviceSpec* find_device(const std::string& id);

  /// Connectivity, positive impedances, device/bus references; throws.
  void validate() const;
};

GridModel load_grid_model(const std::filesystem::path& path);
void save_grid_model(const GridModel& model, const std::filesystem::path& path);

/// Reads or writes one device parameter through its dotted path, e.g.
/// "devices.IBR1.pll_kp" or "devices.IBR2.p_set_mw".
Real get_model_param(const GridModel& model, const std::string& path);
void set_model_param(GridModel& model, const std::string& path, Real value);

// ---------------------------------------------------------------------------
// Per-unit working form.

struct PuBranch {
  int from = -1, to = -1;
  Real r = 0.0;  // pu
  Real l = 0.0;  // pu*s (reactance / w0)
};

struct PuNetwork {
  Real s_base = 100.0;
  Real f0 = 60.0;
  Real w0 = kTwoPi * 60.0;
  std::vector<std::string> bus_ids;
  std::vector<PuBranch> branches;
  std::vector<Real> shunt_c;          // pu*s per bus (0 = none)
  std::vector<Complex> load_y;        // pu admittance per bus
  std::map<std::string, int> bus_of_device;

  int n_bus() const { return static_cast<int>(bus_ids.size()); }
};

PuNetwork to_per_unit(const GridModel& model);

/// Steady-state admittance matrix at f0 (branches + shunts [+ loads]).
CMat fundamental_ybus(const PuNetwork& net, bool include_loads);

// ---------------------------------------------------------------------------
// Power flow (Newton, loads folded into Ybus as constant admittances).

struct PowerFlowResult {
  CVec v;                                   // complex bus voltages, pu
  std::map<std::string, Complex> s_device;  // injected S per device, system pu
  int iterations = 0;
};

PowerFlowResult solve_power_flow(const GridModel& model,
                                 const std::vector<std::string>& out_of_service = {});

// ---------------------------------------------------------------------------
// Grid-strength queries.

/// Driving-point impedance at f0 seen from `bus`: network branches and shunts
/// with in-service synchronous machines as subtransient reactances to ground;
/// inverter devices are open circuits and loads are left out.
Complex thevenin(const GridModel& model, const std::string& bus,
                 const std::vector<std::string>& out_of_service = {});

/// Short-circuit ratio (V_nom^2/|Z_th|)/rating, all in consistent per unit.
Real scr(const GridModel& model, const std::string& bus, Real rating_mva,
         const std::vector<std::string>& out_of_service = {});

}  // namespace osckit
