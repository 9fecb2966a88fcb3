#pragma once

#include "osckit/grid.hpp"

namespace osckit::test {

/// Test models are easiest to reason about in per unit; these helpers convert
/// pu values to the physical units GridModel carries.
struct ModelBuilder {
  GridModel m;
  Real z_base;  // ohms on the (single) voltage level
  Real w0;

  explicit ModelBuilder(Real base_mva = 100.0, Real kv = 57.0, Real f0 = 60.0) {
    m.base_mva = base_mva;
    m.f0 = f0;
    z_base = kv * kv / base_mva;
    w0 = kTwoPi * f0;
    kv_ = kv;
  }

  void bus(const std::string& id) { m.buses.push_back({id, kv_}); }

  void branch(const std::string& from, const std::string& to, Real r_pu,
              Real x_pu) {
    m.branches.push_back({from, to, r_pu * z_base, x_pu * z_base / w0});
  }

  void shunt_b(const std::string& bus, Real b_pu) {
    m.shunts.push_back({bus, b_pu / (w0 * z_base)});
  }

  void load(const std::string& bus, Real p_pu, Real q_pu) {
    m.loads.push_back({bus, p_pu * m.base_mva, q_pu * m.base_mva});
  }

  DeviceSpec& device(const std::string& id, const std::string& bus,
                     DeviceParams params, Real p_pu, Real q_pu,
                     bool slack = false) {
    DeviceSpec d;
    d.id = id;
    d.bus = bus;
    d.params = std::move(params);
    d.p_set_mw = p_pu * m.base_mva;
    d.q_set_mvar = q_pu * m.base_mva;
    d.slack = slack;
    m.devices.push_back(std::move(d));
    return m.devices.back();
  }

 private:
  Real kv_ = 57.0;
};

}  // namespace osckit::test
