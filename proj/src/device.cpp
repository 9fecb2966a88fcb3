#include "osckit/device.hpp"

#include <algorithm>
#include <cmath>

namespace osckit {

namespace {

/// Trapezoidal update of tau*x' = u - x.
Real lag_step(Real x, Real u_now, Real u_prev, Real tau, Real dt) {
  const Real a = dt / (2.0 * tau);
  return (x * (1.0 - a) + a * (u_now + u_prev)) / (1.0 + a);
}

}  // namespace

// ---------------------------------------------------------------------------
// Synchronous generator: swing + first-order governor + first-order exciter
// behind the subtransient reactance.

SgDevice::SgDevice(std::string id, SgParams p, Real s_base, Real f0)
    : Device(std::move(id), s_base, f0), p_(p) {}

void SgDevice::refresh_params() {}

Complex SgDevice::norton_admittance() const {
  return 1.0 / Complex(0.0, x_sys());
}

Complex SgDevice::source_current() const {
  // Predicted angle for the upcoming step keeps the explicit device/network
  // interface second-order in dt.
  const Real delta_pred = delta_ + w0_ * domega_ * dt_last_;
  return std::polar(e_mag_, delta_pred) / Complex(0.0, x_sys());
}

void SgDevice::init_equilibrium(Complex v_bus, Complex s_inj) {
  const Complex i_sys = std::conj(s_inj / v_bus);
  const Complex e = v_bus + Complex(0.0, x_sys()) * i_sys;
  delta_ = std::arg(e);
  e_mag_ = std::abs(e);
  domega_ = 0.0;
  pm_ = s_inj.real() / scale();
  pm_ref_ = pm_;
  agc_state_ = 0.0;
  v_ref_ = std::abs(v_bus) + e_mag_ / p_.avr_gain;
  pe_prev_ = pm_;
  gov_in_prev_ = pm_ref_;
  avr_in_prev_ = p_.avr_gain * (v_ref_ - std::abs(v_bus));
}

Complex SgDevice::measured_current(Complex v_bus) const {
  return (std::polar(e_mag_, delta_) - v_bus) / Complex(0.0, x_sys());
}

void SgDevice::update(Complex v_bus, Real dt) {
  // Electrical power must be taken at the same (predicted) angle the network
  // solve just used, otherwise the swing input lags half a step.
  const Real delta_net = delta_ + w0_ * domega_ * dt_last_;
  dt_last_ = dt;
  const Complex i_out =
      (std::polar(e_mag_, delta_net) - v_bus) / Complex(0.0, x_sys());
  const Real pe = (v_bus * std::conj(i_out)).real() / scale();

  if (p_.agc_ki > 0.0) {
    agc_state_ += -p_.agc_ki * domega_ * dt;
    agc_state_ = std::clamp(agc_state_, -1.0, 1.0);
  }
  const Real gov_in = pm_ref_ + agc_state_ - domega_ / p_.droop_r_pu;
  const Real pm_prev = pm_;
  pm_ = lag_step(pm_, gov_in, gov_in_prev_, p_.governor_t_s, dt);
  gov_in_prev_ = gov_in;

  // Swing with implicit damping:
  //   2H w' = pm - pe - D w
  const Real a = dt / (4.0 * p_.h_s);
  const Real w_prev = domega_;
  domega_ = (domega_ * (1.0 - a * p_.d_pu) +
             a * ((pm_ + pm_prev) - (pe + pe_prev_))) /
            (1.0 + a * p_.d_pu);
  delta_ += 0.5 * w0_ * dt * (domega_ + w_prev);
  pe_prev_ = pe;

  const Real avr_in = p_.avr_gain * (v_ref_ - std::abs(v_bus));
  e_mag_ = lag_step(e_mag_, avr_in, avr_in_prev_, p_.avr_t_s, dt);
  avr_in_prev_ = avr_in;
  e_mag_ = std::clamp(e_mag_, 0.0, 3.0);
}

void SgDevice::log_signals(std::map<std::string, Real>& out) const {
  out["delta_rad"] = delta_;
  out["speed_pu"] = domega_;
  out["pm_pu"] = pm_;
}

// ---------------------------------------------------------------------------
// Grid-following converter: SRF-PLL, P/f droop, deadbanded fast frequency
// reserve, and a first-order current loop with d-axis priority limiting.

GflDevice::GflDevice(std::string id, GflParams p, Real s_base, Real f0)
    : Device(std::move(id), s_base, f0), p_(p) {}

void GflDevice::init_equilibrium(Complex v_bus, Complex s_inj) {
  theta_ = std::arg(v_bus);
  omega_i_ = 0.0;
  domega_pll_ = 0.0;
  vq_prev_ = 0.0;
  const Real vmag = std::abs(v_bus);
  p_set_ = s_inj.real() / scale();
  q_set_ = s_inj.imag() / scale();
  i_dq_ = Complex(p_set_ / vmag, -q_set_ / vmag);
  i_cmd_prev_ = i_dq_;
  p_ffr_ = 0.0;
  ffr_cmd_prev_ = 0.0;
}

Complex GflDevice::source_current() const {
  const Real theta_pred = theta_ + w0_ * domega_pll_ * dt_last_;
  return i_dq_ * std::polar(1.0, theta_pred) * scale();
}

Complex GflDevice::measured_current(Complex) const {
  return i_dq_ * std::polar(1.0, theta_) * scale();
}

void GflDevice::update(Complex v_bus, Real dt) {
  dt_last_ = dt;
  const Complex v_pll = v_bus * std::polar(1.0, -theta_);
  const Real vq = v_pll.imag();

  // SRF-PLL: speed deviation (pu) = kp*vq + integral(ki*vq).
  omega_i_ += 0.5 * p_.pll_ki * dt * (vq + vq_prev_);
  const Real domega_prev = domega_pll_;
  domega_pll_ = p_.pll_kp * vq + omega_i_;
  theta_ += 0.5 * w0_ * dt * (domega_pll_ + domega_prev);
  vq_prev_ = vq;

  const Real df_hz = domega_pll_ * f0_;
  const Real droop_gain = 1.0 / (p_.droop_pf / 100.0);  // pu power per pu freq

  // Continuous droop path.
  const Real p_droop = -domega_pll_ * droop_gain;

  // Fast reserve: same slope, active only beyond the deadband, delivered
  // through a lag sized so ~95% arrives within ffr_delay_s.
  Real excess_hz = 0.0;
  if (df_hz > p_.ffr_deadband_hz) excess_hz = df_hz - p_.ffr_deadband_hz;
  if (df_hz < -p_.ffr_deadband_hz) excess_hz = df_hz + p_.ffr_deadband_hz;
  const Real ffr_cmd = -(excess_hz / f0_) * droop_gain;
  p_ffr_ = lag_step(p_ffr_, ffr_cmd, ffr_cmd_prev_, p_.ffr_delay_s / 3.0, dt);
  ffr_cmd_prev_ = ffr_cmd;

  const Real p_cmd = p_set_ + p_droop + p_ffr_;
  const Real q_cmd = q_set_;

  const Real vd_eff = std::max(v_pll.real(), 0.2);
  Real id_cmd = std::clamp(p_cmd / vd_eff, -p_.i_max_pu, p_.i_max_pu);
  const Real iq_room = std::sqrt(std::max(0.0, p_.i_max_pu * p_.i_max_pu -
                                                   id_cmd * id_cmd));
  Real iq_cmd = std::clamp(-q_cmd / vd_eff, -iq_room, iq_room);
  const Complex i_cmd(id_cmd, iq_cmd);

  const Real tau_i = 1.0 / (kTwoPi * p_.current_bw_hz);
  i_dq_ = Complex(lag_step(i_dq_.real(), i_cmd.real(), i_cmd_prev_.real(), tau_i, dt),
                  lag_step(i_dq_.imag(), i_cmd.imag(), i_cmd_prev_.imag(), tau_i, dt));
  i_cmd_prev_ = i_cmd;

  // Hard magnitude limit, active current first.
  if (std::abs(i_dq_) > p_.i_max_pu) {
    Real id = std::clamp(i_dq_.real(), -p_.i_max_pu, p_.i_max_pu);
    Real room = std::sqrt(std::max(0.0, p_.i_max_pu * p_.i_max_pu - id * id));
    i_dq_ = Complex(id, std::clamp(i_dq_.imag(), -room, room));
  }
}

void GflDevice::log_signals(std::map<std::string, Real>& out) const {
  out["pll_hz"] = pll_frequency_hz();
  out["i_mag_pu"] = std::abs(i_dq_);
  out["p_ffr_pu"] = p_ffr_;
}

// ---------------------------------------------------------------------------
// Virtual synchronous machine: swing-equation angle with no PLL, voltage
// source behind a virtual impedance, reactive droop on the emf magnitude.

VsmDevice::VsmDevice(std::string id, VsmParams p, Real s_base, Real f0)
    : Device(std::move(id), s_base, f0), p_(p) {}

void VsmDevice::refresh_params() {}

Complex VsmDevice::norton_admittance() const { return 1.0 / z_sys(); }

Complex VsmDevice::source_current() const {
  const Real delta_pred = delta_ + w0_ * domega_ * dt_last_;
  return std::polar(e_mag_, delta_pred) / z_sys();
}

void VsmDevice::init_equilibrium(Complex v_bus, Complex s_inj) {
  const Complex i_sys = std::conj(s_inj / v_bus);
  const Complex e = v_bus + z_sys() * i_sys;
  delta_ = std::arg(e);
  e_mag_ = std::abs(e);
  domega_ = 0.0;
  p_set_ = s_inj.real() / scale();
  q_set_ = s_inj.imag() / scale();
  e_set_ = e_mag_;
  pe_prev_ = p_set_;
  exc_in_prev_ = e_set_;
}

Complex VsmDevice::measured_current(Complex v_bus) const {
  return (std::polar(e_mag_, delta_) - v_bus) / z_sys();
}

void VsmDevice::update(Complex v_bus, Real dt) {
  const Real delta_net = delta_ + w0_ * domega_ * dt_last_;
  dt_last_ = dt;
  const Complex i_out = (std::polar(e_mag_, delta_net) - v_bus) / z_sys();
  const Complex s = v_bus * std::conj(i_out);
  const Real pe = s.real() / scale();
  const Real qe = s.imag() / scale();

  const Real a = dt / (4.0 * p_.h_v_s);
  const Real w_prev = domega_;
  domega_ = (domega_ * (1.0 - a * p_.d_v_pu) + a * (2.0 * p_set_ - pe - pe_prev_)) /
            (1.0 + a * p_.d_v_pu);
  delta_ += 0.5 * w0_ * dt * (domega_ + w_prev);
  pe_prev_ = pe;

  const Real exc_in = e_set_ - (p_.reactive_droop_pct / 100.0) * (qe - q_set_);
  e_mag_ = lag_step(e_mag_, exc_in, exc_in_prev_, p_.e_t_s, dt);
  exc_in_prev_ = exc_in;
  e_mag_ = std::clamp(e_mag_, 0.0, 3.0);
}

void VsmDevice::log_signals(std::map<std::string, Real>& out) const {
  out["delta_rad"] = delta_;
  out["speed_pu"] = domega_;
  out["e_pu"] = e_mag_;
}

// ---------------------------------------------------------------------------

UflsRelay::UflsRelay(UflsParams p) : p_(std::move(p)) {
  timers_.assign(p_.stages.size(), 0.0);
  tripped_.assign(p_.stages.size(), false);
}

Real UflsRelay::step(Real f_hz, Real dt) {
  Real shed_now = 0.0;
  for (std::size_t k = 0; k < p_.stages.size(); ++k) {
    if (tripped_[k]) continue;
    if (f_hz < p_.stages[k].f_hz) {
      timers_[k] += dt;
      if (timers_[k] >= p_.stages[k].delay_s) {
        tripped_[k] = true;
        shed_now += p_.stages[k].fraction;
        total_ += p_.stages[k].fraction;
      }
    } else {
      timers_[k] = 0.0;  // the dip must be continuous
    }
  }
  return shed_now;
}

std::unique_ptr<Device> make_device(const DeviceSpec& spec, Real s_base, Real f0) {
  if (const auto* sg = std::get_if<SgParams>(&spec.params))
    return std::make_unique<SgDevice>(spec.id, *sg, s_base, f0);
  if (const auto* gfl = std::get_if<GflParams>(&spec.params))
    return std::make_unique<GflDevice>(spec.id, *gfl, s_base, f0);
  if (const auto* vsm = std::get_if<VsmParams>(&spec.params))
    return std::make_unique<VsmDevice>(spec.id, *vsm, s_base, f0);
  return nullptr;  // relays are handled by the simulator, not the network
}

}  // namespace osckit
