#include "osckit/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <Eigen/Dense>
#include <json.hpp>

namespace osckit {

using nlohmann::json;

DeviceKind device_kind(const DeviceParams& p) {
  if (std::holds_alternative<SgParams>(p)) return DeviceKind::Sg;
  if (std::holds_alternative<GflParams>(p)) return DeviceKind::Gfl;
  if (std::holds_alternative<VsmParams>(p)) return DeviceKind::Vsm;
  return DeviceKind::Ufls;
}

const char* device_kind_name(DeviceKind k) {
  switch (k) {
    case DeviceKind::Sg: return "sg";
    case DeviceKind::Gfl: return "gfl";
    case DeviceKind::Vsm: return "vsm";
    case DeviceKind::Ufls: return "ufls";
  }
  return "?";
}

int GridModel::bus_index(const std::string& id) const {
  for (std::size_t i = 0; i < buses.size(); ++i)
    if (buses[i].id == id) return static_cast<int>(i);
  return -1;
}

const DeviceSpec* GridModel::find_device(const std::string& id) const {
  for (const auto& d : devices)
    if (d.id == id) return &d;
  return nullptr;
}

DeviceSpec* GridModel::find_device(const std::string& id) {
  for (auto& d : devices)
    if (d.id == id) return &d;
  return nullptr;
}

void GridModel::validate() const {
  if (base_mva <= 0.0) throw InputError("model: base_mva must be > 0");
  if (buses.empty()) throw InputError("model: no buses");
  std::set<std::string> ids;
  for (const auto& b : buses) {
    if (!ids.insert(b.id).second)
      throw InputError("model: duplicate bus '" + b.id + "'");
    if (b.kv <= 0.0) throw InputError("model: bus kV must be > 0");
  }
  for (const auto& br : branches) {
    if (bus_index(br.from) < 0 || bus_index(br.to) < 0)
      throw InputError("model: branch references unknown bus");
    if (br.from == br.to) throw InputError("model: branch loops on one bus");
    if (br.r_ohm < 0.0 || br.l_h <= 0.0)
      throw InputError("model: branch impedance must be positive");
  }
  for (const auto& sh : shunts)
    if (bus_index(sh.bus) < 0 || sh.c_f <= 0.0)
      throw InputError("model: bad shunt");
  for (const auto& ld : loads)
    if (bus_index(ld.bus) < 0)
      throw InputError("model: load references unknown bus");
  std::set<std::string> dev_ids;
  std::set<std::string> dev_buses;
  for (const auto& d : devices) {
    if (!dev_ids.insert(d.id).second)
      throw InputError("model: duplicate device '" + d.id + "'");
    if (bus_index(d.bus) < 0)
      throw InputError("model: device '" + d.id + "' on unknown bus");
    if (device_kind(d.params) != DeviceKind::Ufls &&
        !dev_buses.insert(d.bus).second)
      throw InputError("model: more than one generating device on bus '" +
                       d.bus + "'");
  }

  // Connectivity over branches.
  const int n = static_cast<int>(buses.size());
  std::vector<int> seen(static_cast<std::size_t>(n), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  while (!stack.empty()) {
    int b = stack.back();
    stack.pop_back();
    for (const auto& br : branches) {
      int f = bus_index(br.from), t = bus_index(br.to);
      int other = -1;
      if (f == b) other = t;
      if (t == b) other = f;
      if (other >= 0 && !seen[static_cast<std::size_t>(other)]) {
        seen[static_cast<std::size_t>(other)] = 1;
        stack.push_back(other);
      }
    }
  }
  if (n > 1 && std::count(seen.begin(), seen.end(), 1) != n)
    throw InputError("model: network graph is disconnected");
}

// ---------------------------------------------------------------------------
// JSON serialization.

namespace {

json params_to_json(const DeviceParams& p) {
  json j;
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, SgParams>) {
          j = {{"rating_mva", v.rating_mva}, {"h_s", v.h_s},
               {"d_pu", v.d_pu},             {"xd_sub_pu", v.xd_sub_pu},
               {"droop_r_pu", v.droop_r_pu}, {"governor_t_s", v.governor_t_s},
               {"avr_gain", v.avr_gain},     {"avr_t_s", v.avr_t_s},
               {"agc_ki", v.agc_ki}};
        } else if constexpr (std::is_same_v<T, GflParams>) {
          j = {{"rating_mva", v.rating_mva},
               {"pll_kp", v.pll_kp},
               {"pll_ki", v.pll_ki},
               {"current_bw_hz", v.current_bw_hz},
               {"droop_pf", v.droop_pf},
               {"ffr_delay_s", v.ffr_delay_s},
               {"ffr_deadband_hz", v.ffr_deadband_hz},
               {"i_max_pu", v.i_max_pu}};
        } else if constexpr (std::is_same_v<T, VsmParams>) {
          j = {{"rating_mva", v.rating_mva},
               {"h_v_s", v.h_v_s},
               {"d_v_pu", v.d_v_pu},
               {"reactive_droop_pct", v.reactive_droop_pct},
               {"x_v_pu", v.x_v_pu},
               {"r_v_pu", v.r_v_pu},
               {"e_t_s", v.e_t_s}};
        } else {
          json stages = json::array();
          for (const auto& st : v.stages)
            stages.push_back({{"f_hz", st.f_hz},
                              {"fraction", st.fraction},
                              {"delay_s", st.delay_s}});
          j = {{"stages", stages}};
        }
      },
      p);
  return j;
}

template <typename T>
void get_if_present(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

DeviceParams params_from_json(const std::string& type, const json& j) {
  if (type == "sg") {
    SgParams p;
    get_if_present(j, "rating_mva", p.rating_mva);
    get_if_present(j, "h_s", p.h_s);
    get_if_present(j, "d_pu", p.d_pu);
    get_if_present(j, "xd_sub_pu", p.xd_sub_pu);
    get_if_present(j, "droop_r_pu", p.droop_r_pu);
    get_if_present(j, "governor_t_s", p.governor_t_s);
    get_if_present(j, "avr_gain", p.avr_gain);
    get_if_present(j, "avr_t_s", p.avr_t_s);
    get_if_present(j, "agc_ki", p.agc_ki);
    if (p.h_s <= 0.0 || p.droop_r_pu <= 0.0 || p.xd_sub_pu <= 0.0)
      throw InputError("sg params: H, droop R, and Xd'' must be > 0");
    return p;
  }
  if (type == "gfl") {
    GflParams p;
    get_if_present(j, "rating_mva", p.rating_mva);
    get_if_present(j, "pll_kp", p.pll_kp);
    get_if_present(j, "pll_ki", p.pll_ki);
    get_if_present(j, "current_bw_hz", p.current_bw_hz);
    get_if_present(j, "droop_pf", p.droop_pf);
    get_if_present(j, "ffr_delay_s", p.ffr_delay_s);
    get_if_present(j, "ffr_deadband_hz", p.ffr_deadband_hz);
    get_if_present(j, "i_max_pu", p.i_max_pu);
    if (p.pll_kp <= 0.0) throw InputError("gfl params: pll_kp must be > 0");
    if (p.droop_pf <= 0.0 || p.droop_pf > 10.0)
      throw InputError("gfl params: droop_pf must lie in (0, 10]");
    if (p.ffr_delay_s > 0.05 || p.ffr_delay_s <= 0.0)
      throw InputError("gfl params: ffr_delay_s must lie in (0, 0.05]");
    return p;
  }
  if (type == "vsm") {
    VsmParams p;
    get_if_present(j, "rating_mva", p.rating_mva);
    get_if_present(j, "h_v_s", p.h_v_s);
    get_if_present(j, "d_v_pu", p.d_v_pu);
    get_if_present(j, "reactive_droop_pct", p.reactive_droop_pct);
    get_if_present(j, "x_v_pu", p.x_v_pu);
    get_if_present(j, "r_v_pu", p.r_v_pu);
    get_if_present(j, "e_t_s", p.e_t_s);
    if (p.h_v_s <= 0.0 || p.d_v_pu < 0.0)
      throw InputError("vsm params: need H_v > 0 and D_v >= 0");
    return p;
  }
  if (type == "ufls") {
    UflsParams p;
    if (j.contains("stages")) {
      for (const auto& js : j.at("stages")) {
        UflsStage st;
        get_if_present(js, "f_hz", st.f_hz);
        get_if_present(js, "fraction", st.fraction);
        get_if_present(js, "delay_s", st.delay_s);
        p.stages.push_back(st);
      }
    }
    for (std::size_t i = 0; i < p.stages.size(); ++i) {
      if (p.stages[i].fraction <= 0.0 || p.stages[i].fraction > 1.0)
        throw InputError("ufls params: fractions must lie in (0, 1]");
      if (i > 0 && p.stages[i].f_hz >= p.stages[i - 1].f_hz)
        throw InputError("ufls params: thresholds must strictly decrease");
    }
    return p;
  }
  throw InputError("unknown device type '" + type + "'");
}

}  // namespace

GridModel load_grid_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open model '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InputError("model '" + path.string() + "': " + e.what());
  }
  GridModel m;
  try {
    get_if_present(j, "base_mva", m.base_mva);
    get_if_present(j, "f0_hz", m.f0);
    for (const auto& jb : j.value("buses", json::array()))
      m.buses.push_back({jb.at("id").get<std::string>(), jb.value("kv", 57.0)});
    for (const auto& jb : j.value("branches", json::array()))
      m.branches.push_back({jb.at("from").get<std::string>(),
                            jb.at("to").get<std::string>(),
                            jb.value("r_ohm", 0.0), jb.value("l_h", 0.0)});
    for (const auto& js : j.value("shunts", json::array()))
      m.shunts.push_back({js.at("bus").get<std::string>(), js.value("c_f", 0.0)});
    for (const auto& jl : j.value("loads", json::array()))
      m.loads.push_back({jl.at("bus").get<std::string>(), jl.value("p_mw", 0.0),
                         jl.value("q_mvar", 0.0)});
    for (const auto& jd : j.value("devices", json::array())) {
      DeviceSpec d;
      d.id = jd.at("id").get<std::string>();
      d.bus = jd.at("bus").get<std::string>();
      d.params = params_from_json(jd.at("type").get<std::string>(),
                                  jd.value("params", json::object()));
      d.p_set_mw = jd.value("p_set_mw", 0.0);
      d.q_set_mvar = jd.value("q_set_mvar", 0.0);
      d.v_set_pu = jd.value("v_set_pu", 1.0);
      d.slack = jd.value("slack", false);
      d.in_service = jd.value("in_service", true);
      m.devices.push_back(std::move(d));
    }
  } catch (const json::exception& e) {
    throw InputError("model '" + path.string() + "': " + e.what());
  }
  m.validate();
  return m;
}

void save_grid_model(const GridModel& m, const std::filesystem::path& path) {
  json j;
  j["base_mva"] = m.base_mva;
  j["f0_hz"] = m.f0;
  j["buses"] = json::array();
  for (const auto& b : m.buses) j["buses"].push_back({{"id", b.id}, {"kv", b.kv}});
  j["branches"] = json::array();
  for (const auto& br : m.branches)
    j["branches"].push_back({{"from", br.from},
                             {"to", br.to},
                             {"r_ohm", br.r_ohm},
                             {"l_h", br.l_h}});
  j["shunts"] = json::array();
  for (const auto& sh : m.shunts)
    j["shunts"].push_back({{"bus", sh.bus}, {"c_f", sh.c_f}});
  j["loads"] = json::array();
  for (const auto& ld : m.loads)
    j["loads"].push_back(
        {{"bus", ld.bus}, {"p_mw", ld.p_mw}, {"q_mvar", ld.q_mvar}});
  j["devices"] = json::array();
  for (const auto& d : m.devices) {
    json jd = {{"id", d.id},
               {"bus", d.bus},
               {"type", device_kind_name(device_kind(d.params))},
               {"p_set_mw", d.p_set_mw},
               {"q_set_mvar", d.q_set_mvar},
               {"v_set_pu", d.v_set_pu},
               {"slack", d.slack},
               {"in_service", d.in_service},
               {"params", params_to_json(d.params)}};
    j["devices"].push_back(std::move(jd));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write model '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Dotted parameter paths.

namespace {

struct ParamRef {
  Real* value = nullptr;
};

ParamRef resolve_param(DeviceSpec& d, const std::string& field) {
  if (field == "p_set_mw") return {&d.p_set_mw};
  if (field == "q_set_mvar") return {&d.q_set_mvar};
  if (field == "v_set_pu") return {&d.v_set_pu};
  ParamRef ref;
  std::visit(
      [&](auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, SgParams>) {
          if (field == "rating_mva") ref.value = &p.rating_mva;
          else if (field == "h_s") ref.value = &p.h_s;
          else if (field == "d_pu") ref.value = &p.d_pu;
          else if (field == "xd_sub_pu") ref.value = &p.xd_sub_pu;
          else if (field == "droop_r_pu") ref.value = &p.droop_r_pu;
          else if (field == "governor_t_s") ref.value = &p.governor_t_s;
          else if (field == "avr_gain") ref.value = &p.avr_gain;
          else if (field == "avr_t_s") ref.value = &p.avr_t_s;
          else if (field == "agc_ki") ref.value = &p.agc_ki;
        } else if constexpr (std::is_same_v<T, GflParams>) {
          if (field == "rating_mva") ref.value = &p.rating_mva;
          else if (field == "pll_kp") ref.value = &p.pll_kp;
          else if (field == "pll_ki") ref.value = &p.pll_ki;
          else if (field == "current_bw_hz") ref.value = &p.current_bw_hz;
          else if (field == "droop_pf") ref.value = &p.droop_pf;
          else if (field == "ffr_delay_s") ref.value = &p.ffr_delay_s;
          else if (field == "ffr_deadband_hz") ref.value = &p.ffr_deadband_hz;
          else if (field == "i_max_pu") ref.value = &p.i_max_pu;
        } else if constexpr (std::is_same_v<T, VsmParams>) {
          if (field == "rating_mva") ref.value = &p.rating_mva;
          else if (field == "h_v_s") ref.value = &p.h_v_s;
          else if (field == "d_v_pu") ref.value = &p.d_v_pu;
          else if (field == "reactive_droop_pct") ref.value = &p.reactive_droop_pct;
          else if (field == "x_v_pu") ref.value = &p.x_v_pu;
          else if (field == "r_v_pu") ref.value = &p.r_v_pu;
          else if (field == "e_t_s") ref.value = &p.e_t_s;
        } else {
          (void)p;
        }
      },
      d.params);
  return ref;
}

std::pair<std::string, std::string> split_device_path(const std::string& path) {
  // devices.<id>.<field>
  const std::string prefix = "devices.";
  if (path.rfind(prefix, 0) != 0)
    throw InputError("parameter path must start with 'devices.': " + path);
  auto rest = path.substr(prefix.size());
  auto dot = rest.rfind('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 >= rest.size())
    throw InputError("malformed parameter path: " + path);
  return {rest.substr(0, dot), rest.substr(dot + 1)};
}

}  // namespace

Real get_model_param(const GridModel& model, const std::string& path) {
  auto [id, field] = split_device_path(path);
  const DeviceSpec* d = model.find_device(id);
  if (!d) throw InputError("unknown device in path: " + path);
  ParamRef ref = resolve_param(const_cast<DeviceSpec&>(*d), field);
  if (!ref.value) throw InputError("unknown field in path: " + path);
  return *ref.value;
}

void set_model_param(GridModel& model, const std::string& path, Real value) {
  auto [id, field] = split_device_path(path);
  DeviceSpec* d = model.find_device(id);
  if (!d) throw InputError("unknown device in path: " + path);
  ParamRef ref = resolve_param(*d, field);
  if (!ref.value) throw InputError("unknown field in path: " + path);
  *ref.value = value;
}

// ---------------------------------------------------------------------------
// Per-unit conversion and fundamental-frequency matrices.

PuNetwork to_per_unit(const GridModel& model) {
  model.validate();
  PuNetwork net;
  net.s_base = model.base_mva;
  net.f0 = model.f0;
  net.w0 = kTwoPi * model.f0;
  for (const auto& b : model.buses) net.bus_ids.push_back(b.id);
  const int n = net.n_bus();
  net.shunt_c.assign(static_cast<std::size_t>(n), 0.0);
  net.load_y.assign(static_cast<std::size_t>(n), Complex(0.0, 0.0));

  auto z_base = [&](int bus) {
    const Real kv = model.buses[static_cast<std::size_t>(bus)].kv;
    return kv * kv / model.base_mva;  // ohms
  };

  for (const auto& br : model.branches) {
    PuBranch pb;
    pb.from = model.bus_index(br.from);
    pb.to = model.bus_index(br.to);
    const Real zb = z_base(pb.from);
    pb.r = br.r_ohm / zb;
    pb.l = br.l_h / zb;  // pu*s
    net.branches.push_back(pb);
  }
  for (const auto& sh : model.shunts) {
    int b = model.bus_index(sh.bus);
    net.shunt_c[static_cast<std::size_t>(b)] += sh.c_f * z_base(b);  // pu*s
  }
  for (const auto& ld : model.loads) {
    int b = model.bus_index(ld.bus);
    net.load_y[static_cast<std::size_t>(b)] +=
        Complex(ld.p_mw, -ld.q_mvar) / model.base_mva;
  }
  for (const auto& d : model.devices)
    net.bus_of_device[d.id] = model.bus_index(d.bus);
  return net;
}

CMat fundamental_ybus(const PuNetwork& net, bool include_loads) {
  const int n = net.n_bus();
  CMat y = CMat::Zero(n, n);
  for (const auto& br : net.branches) {
    const Complex yb = 1.0 / Complex(br.r, net.w0 * br.l);
    y(br.from, br.from) += yb;
    y(br.to, br.to) += yb;
    y(br.from, br.to) -= yb;
    y(br.to, br.from) -= yb;
  }
  for (int b = 0; b < n; ++b) {
    y(b, b) += Complex(0.0, net.w0 * net.shunt_c[static_cast<std::size_t>(b)]);
    if (include_loads) y(b, b) += net.load_y[static_cast<std::size_t>(b)];
  }
  return y;
}

// ---------------------------------------------------------------------------
// Power flow: polar Newton with finite-difference Jacobian (networks here are
// a dozen buses; robustness beats elegance).

namespace {

struct PfSetup {
  CMat y;                 // with loads
  int slack = -1;         // bus index
  Real slack_v = 1.0;
  std::vector<int> pv;    // bus indices
  std::vector<Real> pv_p; // pu
  std::vector<Real> pv_v;
  std::vector<int> pq;    // device PQ buses (zero-injection buses included)
  std::vector<Complex> pq_s;
};

}  // namespace

PowerFlowResult solve_power_flow(const GridModel& model,
                                 const std::vector<std::string>& out_of_service) {
  PuNetwork net = to_per_unit(model);
  const int n = net.n_bus();
  auto off = [&](const std::string& id) {
    return std::find(out_of_service.begin(), out_of_service.end(), id) !=
           out_of_service.end();
  };

  PfSetup s;
  s.y = fundamental_ybus(net, true);
  std::vector<Complex> s_inj(static_cast<std::size_t>(n), Complex(0, 0));
  std::vector<int> bus_role(static_cast<std::size_t>(n), 0);  // 0 pq, 1 pv, 2 slack
  std::vector<Real> bus_vset(static_cast<std::size_t>(n), 1.0);

  for (const auto& d : model.devices) {
    if (!d.in_service || off(d.id)) continue;
    const int b = model.bus_index(d.bus);
    const DeviceKind k = device_kind(d.params);
    if (k == DeviceKind::Ufls) continue;
    const Complex sd(d.p_set_mw / model.base_mva, d.q_set_mvar / model.base_mva);
    if (d.slack) {
      if (s.slack >= 0) throw InputError("power flow: more than one slack device");
      s.slack = b;
      s.slack_v = d.v_set_pu;
      bus_role[static_cast<std::size_t>(b)] = 2;
    } else if (k == DeviceKind::Sg || k == DeviceKind::Vsm) {
      bus_role[static_cast<std::size_t>(b)] = 1;
      bus_vset[static_cast<std::size_t>(b)] = d.v_set_pu;
      s_inj[static_cast<std::size_t>(b)] += sd;
    } else {
      s_inj[static_cast<std::size_t>(b)] += sd;
    }
  }
  if (s.slack < 0) throw InputError("power flow: no in-service slack device");

  // Unknowns: angle at every non-slack bus, magnitude at non-slack non-PV buses.
  std::vector<int> ang_ix, mag_ix;
  for (int b = 0; b < n; ++b) {
    if (bus_role[static_cast<std::size_t>(b)] == 2) continue;
    ang_ix.push_back(b);
    if (bus_role[static_cast<std::size_t>(b)] != 1) mag_ix.push_back(b);
  }
  const int nu = static_cast<int>(ang_ix.size() + mag_ix.size());

  Vec th = Vec::Zero(n);
  Vec vm = Vec::Ones(n);
  vm[s.slack] = s.slack_v;
  for (int b = 0; b < n; ++b)
    if (bus_role[static_cast<std::size_t>(b)] == 1)
      vm[b] = bus_vset[static_cast<std::size_t>(b)];

  auto pack = [&](Vec& x) {
    int k = 0;
    for (int b : ang_ix) x[k++] = th[b];
    for (int b : mag_ix) x[k++] = vm[b];
  };
  auto unpack = [&](const Vec& x) {
    int k = 0;
    for (int b : ang_ix) th[b] = x[k++];
    for (int b : mag_ix) vm[b] = x[k++];
  };
  auto residual = [&](Vec& r) {
    CVec v(n);
    for (int b = 0; b < n; ++b) v[b] = std::polar(vm[b], th[b]);
    CVec i = s.y * v;
    int k = 0;
    for (int b : ang_ix) {  // P mismatch for every non-slack bus
      const Complex sb = v[b] * std::conj(i[b]);
      r[k++] = sb.real() - s_inj[static_cast<std::size_t>(b)].real();
    }
    for (int b : mag_ix) {  // Q mismatch for PQ buses
      const Complex sb = v[b] * std::conj(i[b]);
      r[k++] = sb.imag() - s_inj[static_cast<std::size_t>(b)].imag();
    }
  };

  Vec x(nu), r(nu), r2(nu);
  pack(x);
  PowerFlowResult out;
  bool converged = false;
  for (int iter = 0; iter < 60; ++iter) {
    unpack(x);
    residual(r);
    out.iterations = iter;
    if (r.cwiseAbs().maxCoeff() < 1e-11) {
      converged = true;
      break;
    }
    Mat jac(nu, nu);
    const Real h = 1e-7;
    for (int c = 0; c < nu; ++c) {
      Vec xp = x;
      xp[c] += h;
      unpack(xp);
      residual(r2);
      jac.col(c) = (r2 - r) / h;
    }
    Vec dx = jac.partialPivLu().solve(r);
    if (!dx.allFinite()) throw AnalysisError("power flow: singular Jacobian");
    x -= dx;
  }
  if (!converged) throw AnalysisError("power flow did not converge");

  unpack(x);
  out.v.resize(n);
  for (int b = 0; b < n; ++b) out.v[b] = std::polar(vm[b], th[b]);

  // Per-device injections: PV/slack buses absorb the bus residual S.
  CVec i = s.y * out.v;
  for (const auto& d : model.devices) {
    if (!d.in_service || off(d.id)) continue;
    if (device_kind(d.params) == DeviceKind::Ufls) continue;
    const int b = model.bus_index(d.bus);
    const Complex sb = out.v[b] * std::conj(i[b]);
    if (d.slack || device_kind(d.params) == DeviceKind::Sg ||
        device_kind(d.params) == DeviceKind::Vsm) {
      out.s_device[d.id] = sb;
    } else {
      out.s_device[d.id] =
          Complex(d.p_set_mw / model.base_mva, d.q_set_mvar / model.base_mva);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

Complex thevenin(const GridModel& model, const std::string& bus,
                 const std::vector<std::string>& out_of_service) {
  const int target = model.bus_index(bus);
  if (target < 0) throw InputError("thevenin: unknown bus '" + bus + "'");
  PuNetwork net = to_per_unit(model);
  CMat y = fundamental_ybus(net, false);
  auto off = [&](const std::string& id) {
    return std::find(out_of_service.begin(), out_of_service.end(), id) !=
           out_of_service.end();
  };
  int sources = 0;
  for (const auto& d : model.devices) {
    if (!d.in_service || off(d.id)) continue;
    if (const auto* sg = std::get_if<SgParams>(&d.params)) {
      const int b = model.bus_index(d.bus);
      const Real x_sys = sg->xd_sub_pu * model.base_mva / sg->rating_mva;
      y(b, b) += 1.0 / Complex(0.0, x_sys);
      ++sources;
    }
  }
  if (sources == 0)
    throw InputError("thevenin: no in-service synchronous source");
  CVec e = CVec::Zero(net.n_bus());
  e[target] = 1.0;
  CVec z = y.partialPivLu().solve(e);
  if (!z.allFinite()) throw AnalysisError("thevenin: singular network");
  return z[target];
}

Real scr(const GridModel& model, const std::string& bus, Real rating_mva,
         const std::vector<std::string>& out_of_service) {
  if (rating_mva <= 0.0) throw InputError("scr: rating must be > 0");
  const Complex zth = thevenin(model, bus, out_of_service);
  const Real rating_pu = rating_mva / model.base_mva;
  return (1.0 / std::abs(zth)) / rating_pu;
}

}  // namespace osckit
