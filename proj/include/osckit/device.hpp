#pragma once

#include <map>
#include <memory>
#include <string>

#include "osckit/grid.hpp"

namespace osckit {

/// One dynamic device attached to a network bus. All interface quantities are
/// in system per unit on the shared S_base; internal states live on the
/// device rating base. The simulator calls, once per step:
///   1. norton_admittance()/source_current() to stamp the network solve,
///   2. update(v_bus, dt) with the freshly solved terminal voltage.
class Device {
 public:
  Device(std::string id, Real s_base, Real f0)
      : id_(std::move(id)), s_base_(s_base), f0_(f0), w0_(kTwoPi * f0) {}
  virtual ~Device() = default;

  const std::string& id() const { return id_; }

  /// Exact equilibrium for the given terminal voltage and injected power
  /// (system pu); a correctly initialized device holds this point forever.
  virtual void init_equilibrium(Complex v_bus, Complex s_inj) = 0;

  /// Constant shunt admittance stamped into the network matrix (0 for pure
  /// current sources).
  virtual Complex norton_admittance() const { return {0.0, 0.0}; }

  /// Source current for the upcoming network solve, from internal state only.
  virtual Complex source_current() const = 0;

  /// Advances internal states with the solved terminal voltage.
  virtual void update(Complex v_bus, Real dt) = 0;

  /// Terminal current injected into the grid for the given bus voltage, as
  /// seen by the upcoming network solve (uses the predicted source).
  Complex terminal_current(Complex v_bus) const {
    return source_current() - norton_admittance() * v_bus;
  }

  /// Measurement-consistent terminal current: pairs the device state at the
  /// current instant with the voltage solved for the same instant.
  virtual Complex measured_current(Complex v_bus) const {
    return terminal_current(v_bus);
  }

  /// Extra per-device output channels (name suffix -> value).
  virtual void log_signals(std::map<std::string, Real>& out) const { (void)out; }

  /// Called after a parameter change event so cached derived values refresh.
  virtual void refresh_params() {}

 protected:
  std::string id_;
  Real s_base_;
  Real f0_;
  Real w0_;
};

class SgDevice : public Device {
 public:
  SgDevice(std::string id, SgParams p, Real s_base, Real f0);

  void init_equilibrium(Complex v_bus, Complex s_inj) override;
  Complex norton_admittance() const override;
  Complex source_current() const override;
  Complex measured_current(Complex v_bus) const override;
  void update(Complex v_bus, Real dt) override;
  void log_signals(std::map<std::string, Real>& out) const override;
  void refresh_params() override;

  SgParams& params() { return p_; }
  Real speed_pu() const { return domega_; }
  Real pm_pu() const { return pm_; }

 private:
  Real scale() const { return p_.rating_mva / s_base_; }  // device -> system
  Real x_sys() const { return p_.xd_sub_pu / scale(); }

  SgParams p_;
  Real delta_ = 0.0;   // rotor angle vs synchronous frame, rad
  Real domega_ = 0.0;  // speed deviation, pu
  Real pm_ = 0.0;      // mechanical power, device pu
  Real e_mag_ = 1.0;   // internal emf, pu
  Real pm_ref_ = 0.0;
  Real v_ref_ = 1.0;
  Real agc_state_ = 0.0;
  Real pe_prev_ = 0.0;  // device pu electrical power at previous step
  Real gov_in_prev_ = 0.0;
  Real avr_in_prev_ = 0.0;
  Real dt_last_ = 0.0;
};

class GflDevice : public Device {
 public:
  GflDevice(std::string id, GflParams p, Real s_base, Real f0);

  void init_equilibrium(Complex v_bus, Complex s_inj) override;
  Complex source_current() const override;  // pure current source
  Complex measured_current(Complex v_bus) const override;
  void update(Complex v_bus, Real dt) override;
  void log_signals(std::map<std::string, Real>& out) const override;

  GflParams& params() { return p_; }
  Real pll_frequency_hz() const { return f0_ * (1.0 + domega_pll_); }
  Real current_magnitude_pu() const { return std::abs(i_dq_); }

 private:
  Real scale() const { return p_.rating_mva / s_base_; }

  GflParams p_;
  Real theta_ = 0.0;       // PLL angle vs synchronous frame
  Real omega_i_ = 0.0;     // PLL integrator output, pu speed
  Real domega_pll_ = 0.0;  // total PLL speed deviation, pu
  Complex i_dq_{0.0, 0.0}; // converter current in the PLL frame, device pu
  Real p_set_ = 0.0;       // device pu
  Real q_set_ = 0.0;
  Real p_ffr_ = 0.0;       // delivered fast-reserve power, device pu
  Real vq_prev_ = 0.0;
  Real ffr_cmd_prev_ = 0.0;
  Complex i_cmd_prev_{0.0, 0.0};
  Real dt_last_ = 0.0;
};

class VsmDevice : public Device {
 public:
  VsmDevice(std::string id, VsmParams p, Real s_base, Real f0);

  void init_equilibrium(Complex v_bus, Complex s_inj) override;
  Complex norton_admittance() const override;
  Complex source_current() const override;
  Complex measured_current(Complex v_bus) const override;
  void update(Complex v_bus, Real dt) override;
  void log_signals(std::map<std::string, Real>& out) const override;
  void refresh_params() override;

  VsmParams& params() { return p_; }
  Real speed_pu() const { return domega_; }

 private:
  Real scale() const { return p_.rating_mva / s_base_; }
  Complex z_sys() const { return Complex(p_.r_v_pu, p_.x_v_pu) / scale(); }

  VsmParams p_;
  Real delta_ = 0.0;
  Real domega_ = 0.0;
  Real e_mag_ = 1.0;
  Real p_set_ = 0.0;
  Real q_set_ = 0.0;
  Real e_set_ = 1.0;
  Real pe_prev_ = 0.0;
  Real exc_in_prev_ = 1.0;
  Real dt_last_ = 0.0;
};

/// Staged underfrequency relay: a stage trips once its bus frequency stays
/// below the threshold for the full relay delay; every stage fires at most
/// once. step() returns the load fraction to shed right now (usually 0).
class UflsRelay {
 public:
  explicit UflsRelay(UflsParams p);

  Real step(Real f_hz, Real dt);
  Real total_shed() const { return total_; }
  const UflsParams& params() const { return p_; }

 private:
  UflsParams p_;
  std::vector<Real> timers_;
  std::vector<bool> tripped_;
  Real total_ = 0.0;
};

/// Factory keyed on the parameter variant (Ufls specs get no Device).
std::unique_ptr<Device> make_device(const DeviceSpec& spec, Real s_base, Real f0);

}  // namespace osckit
