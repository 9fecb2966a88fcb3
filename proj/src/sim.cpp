#include "osckit/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace osckit {

using nlohmann::json;

Real Scenario::first_event_time() const {
  Real t = duration_s;
  for (const auto& e : events) t = std::min(t, e.t);
  return events.empty() ? 0.0 : t;
}

Real Scenario::analysis_window_lo() const {
  return window_lo_s >= 0.0 ? window_lo_s : first_event_time() + 0.5;
}

Real Scenario::analysis_window_hi() const {
  return window_hi_s >= 0.0 ? window_hi_s : first_event_time() + 3.5;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open scenario '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InputError("scenario '" + path.string() + "': " + e.what());
  }
  Scenario sc;
  try {
    sc.name = j.value("name", path.stem().string());
    const std::string model_file = j.at("model").get<std::string>();
    std::filesystem::path model_path = model_file;
    if (model_path.is_relative()) model_path = path.parent_path() / model_path;
    sc.model = load_grid_model(model_path);
    sc.duration_s = j.value("duration_s", 10.0);
    sc.dt_s = j.value("dt_s", 50e-6);
    sc.output_hz = j.value("output_hz", 1000.0);
    sc.pow_synthesis = j.value("pow_synthesis", false);
    sc.pow_rate_hz = j.value("pow_rate_hz", 15000.0);
    if (j.contains("pow_devices"))
      for (const auto& d : j.at("pow_devices"))
        sc.pow_devices.push_back(d.get<std::string>());
    if (j.contains("band_hz")) {
      sc.band_lo_hz = j.at("band_hz").at(0).get<Real>();
      sc.band_hi_hz = j.at("band_hz").at(1).get<Real>();
    }
    if (j.contains("window_s")) {
      sc.window_lo_s = j.at("window_s").at(0).get<Real>();
      sc.window_hi_s = j.at("window_s").at(1).get<Real>();
    }
    for (const auto& je : j.value("events", json::array())) {
      Event e;
      e.t = je.at("t_s").get<Real>();
      const std::string action = je.at("action").get<std::string>();
      if (action == "trip_device") {
        e.kind = Event::Kind::TripDevice;
        e.target = je.at("device").get<std::string>();
      } else if (action == "set_param") {
        e.kind = Event::Kind::SetParam;
        e.target = je.at("path").get<std::string>();
        e.value = je.at("value").get<Real>();
      } else if (action == "shed_load") {
        e.kind = Event::Kind::ShedLoad;
        e.fraction = je.at("fraction").get<Real>();
      } else {
        throw InputError("scenario: unknown action '" + action + "'");
      }
      if (e.t < 0.0 || e.t > sc.duration_s)
        throw InputError("scenario: event outside [0, duration]");
      sc.events.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw InputError("scenario '" + path.string() + "': " + e.what());
  }
  std::stable_sort(sc.events.begin(), sc.events.end(),
                   [](const Event& a, const Event& b) { return a.t < b.t; });
  // Parameter paths must resolve against the model.
  for (const auto& e : sc.events)
    if (e.kind == Event::Kind::SetParam) get_model_param(sc.model, e.target);
  return sc;
}

void save_scenario(const Scenario& sc, const std::filesystem::path& path,
                   const std::string& model_file) {
  json j;
  j["name"] = sc.name;
  j["model"] = model_file;
  j["duration_s"] = sc.duration_s;
  j["dt_s"] = sc.dt_s;
  j["output_hz"] = sc.output_hz;
  j["pow_synthesis"] = sc.pow_synthesis;
  j["pow_rate_hz"] = sc.pow_rate_hz;
  j["pow_devices"] = sc.pow_devices;
  j["band_hz"] = {sc.band_lo_hz, sc.band_hi_hz};
  if (sc.window_lo_s >= 0.0) j["window_s"] = {sc.window_lo_s, sc.window_hi_s};
  j["events"] = json::array();
  for (const auto& e : sc.events) {
    json je;
    je["t_s"] = e.t;
    switch (e.kind) {
      case Event::Kind::TripDevice:
        je["action"] = "trip_device";
        je["device"] = e.target;
        break;
      case Event::Kind::SetParam:
        je["action"] = "set_param";
        je["path"] = e.target;
        je["value"] = e.value;
        break;
      case Event::Kind::ShedLoad:
        je["action"] = "shed_load";
        je["fraction"] = e.fraction;
        break;
    }
    j["events"].push_back(std::move(je));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write scenario '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// DynamicNetwork

DynamicNetwork::DynamicNetwork(PuNetwork net, Real dt)
    : net_(std::move(net)), dt_(dt) {
  const int n = net_.n_bus();
  y_device_.assign(static_cast<std::size_t>(n), Complex(0, 0));
  v_ = CVec::Zero(n);
  rhs_ = CVec::Zero(n);
  i_br_ = CVec::Zero(static_cast<Index>(net_.branches.size()));
  i_sh_ = CVec::Zero(n);

  y_branch_.resize(net_.branches.size());
  k_branch_.resize(net_.branches.size());
  for (std::size_t b = 0; b < net_.branches.size(); ++b) {
    const auto& br = net_.branches[b];
    if (br.l <= 0.0) throw InputError("network: zero-impedance branch");
    const Complex z(br.r, net_.w0 * br.l);
    const Complex g = 2.0 * br.l / dt_;
    y_branch_[b] = 1.0 / (g + z);
    k_branch_[b] = g - z;
  }
  y_shunt_.assign(static_cast<std::size_t>(n), Complex(0, 0));
  k_shunt_.assign(static_cast<std::size_t>(n), Complex(0, 0));
  for (int b = 0; b < n; ++b) {
    const Real c = net_.shunt_c[static_cast<std::size_t>(b)];
    if (c > 0.0) {
      y_shunt_[static_cast<std::size_t>(b)] =
          Complex(2.0 * c / dt_, net_.w0 * c);
      k_shunt_[static_cast<std::size_t>(b)] =
          Complex(2.0 * c / dt_, -net_.w0 * c);
    }
  }
  finalize();
}

void DynamicNetwork::set_device_admittance(int bus, Complex y) {
  y_device_[static_cast<std::size_t>(bus)] += y;
}

void DynamicNetwork::clear_device_admittances() {
  std::fill(y_device_.begin(), y_device_.end(), Complex(0, 0));
}

void DynamicNetwork::set_load_scale(Real scale) { load_scale_ = scale; }

void DynamicNetwork::finalize() {
  const int n = net_.n_bus();
  CMat a = CMat::Zero(n, n);
  for (std::size_t b = 0; b < net_.branches.size(); ++b) {
    const auto& br = net_.branches[b];
    const Complex y = y_branch_[b];
    a(br.from, br.from) += y;
    a(br.to, br.to) += y;
    a(br.from, br.to) -= y;
    a(br.to, br.from) -= y;
  }
  for (int b = 0; b < n; ++b) {
    a(b, b) += y_shunt_[static_cast<std::size_t>(b)];
    a(b, b) += load_scale_ * net_.load_y[static_cast<std::size_t>(b)];
    a(b, b) += y_device_[static_cast<std::size_t>(b)];
  }
  lu_.compute(a);
}

void DynamicNetwork::init_steady(const CVec& v_bus) {
  v_ = v_bus;
  for (std::size_t b = 0; b < net_.branches.size(); ++b) {
    const auto& br = net_.branches[b];
    const Complex z(br.r, net_.w0 * br.l);
    i_br_[static_cast<Index>(b)] = (v_[br.from] - v_[br.to]) / z;
  }
  for (int b = 0; b < net_.n_bus(); ++b) {
    const Real c = net_.shunt_c[static_cast<std::size_t>(b)];
    i_sh_[b] = c > 0.0 ? Complex(0.0, net_.w0 * c) * v_[b] : Complex(0, 0);
  }
}

const CVec& DynamicNetwork::step(const CVec& device_currents) {
  rhs_ = device_currents;
  for (std::size_t b = 0; b < net_.branches.size(); ++b) {
    const auto& br = net_.branches[b];
    const Complex h =
        y_branch_[b] * (k_branch_[b] * i_br_[static_cast<Index>(b)] +
                        (v_[br.from] - v_[br.to]));
    rhs_[br.from] -= h;
    rhs_[br.to] += h;
  }
  for (int b = 0; b < net_.n_bus(); ++b) {
    if (net_.shunt_c[static_cast<std::size_t>(b)] > 0.0)
      rhs_[b] += k_shunt_[static_cast<std::size_t>(b)] * v_[b] + i_sh_[b];
  }

  CVec v_new = lu_.solve(rhs_);

  for (std::size_t b = 0; b < net_.branches.size(); ++b) {
    const auto& br = net_.branches[b];
    const Complex h =
        y_branch_[b] * (k_branch_[b] * i_br_[static_cast<Index>(b)] +
                        (v_[br.from] - v_[br.to]));
    i_br_[static_cast<Index>(b)] =
        y_branch_[b] * (v_new[br.from] - v_new[br.to]) + h;
  }
  for (int b = 0; b < net_.n_bus(); ++b) {
    if (net_.shunt_c[static_cast<std::size_t>(b)] > 0.0) {
      const Complex j = k_shunt_[static_cast<std::size_t>(b)] * v_[b] + i_sh_[b];
      i_sh_[b] = y_shunt_[static_cast<std::size_t>(b)] * v_new[b] - j;
    }
  }
  v_ = std::move(v_new);
  return v_;
}

Real DynamicNetwork::total_load_power() const {
  Real p = 0.0;
  for (int b = 0; b < net_.n_bus(); ++b)
    p += load_scale_ * net_.load_y[static_cast<std::size_t>(b)].real() *
         std::norm(v_[b]);
  return p;
}

Real DynamicNetwork::total_branch_loss() const {
  Real p = 0.0;
  for (std::size_t b = 0; b < net_.branches.size(); ++b)
    p += net_.branches[b].r * std::norm(i_br_[static_cast<Index>(b)]);
  return p;
}

Real DynamicNetwork::stored_energy() const {
  Real e = 0.0;
  for (std::size_t b = 0; b < net_.branches.size(); ++b)
    e += 0.5 * net_.branches[b].l * std::norm(i_br_[static_cast<Index>(b)]);
  for (int b = 0; b < net_.n_bus(); ++b)
    e += 0.5 * net_.shunt_c[static_cast<std::size_t>(b)] * std::norm(v_[b]);
  return e;
}

// ---------------------------------------------------------------------------
// GridSim

GridSim::GridSim(GridModel model) : model_(std::move(model)) {
  model_.validate();
}

namespace {

struct BusFreqMeter {
  Real theta_cum = 0.0;
  Real arg_prev = 0.0;
  Real f_filt = 0.0;
  void reset(Complex v, Real f0) {
    arg_prev = std::arg(v);
    theta_cum = arg_prev;
    f_filt = f0;
  }
  void step(Complex v, Real dt, Real f0, Real tau) {
    const Real a = std::arg(v);
    Real d = a - arg_prev;
    d -= kTwoPi * std::round(d / kTwoPi);
    arg_prev = a;
    theta_cum += d;
    const Real f_raw = f0 + d / (kTwoPi * dt);
    f_filt += (dt / tau) * (f_raw - f_filt);
  }
};

}  // namespace

SimResult GridSim::run(const std::vector<Event>& events_in, Real duration_s,
                       Real dt_s, Real output_hz, bool pow_synthesis,
                       Real pow_rate_hz,
                       const std::vector<std::string>& pow_devices_in) {
  if (dt_s <= 0.0 || dt_s > 100e-6)
    throw InputError("sim: dt must lie in (0, 100 us]");
  if (duration_s <= 0.0) throw InputError("sim: duration must be > 0");

  GridModel model = model_;  // runtime copy; events mutate it
  PuNetwork net = to_per_unit(model);
  const Real f0 = model.f0;
  const int n_bus = net.n_bus();

  std::vector<Event> events = events_in;
  std::stable_sort(events.begin(), events.end(),
                   [](const Event& a, const Event& b) { return a.t < b.t; });

  // Devices.
  struct Entry {
    std::unique_ptr<Device> dev;
    int bus = -1;
    bool in_service = true;
  };
  std::vector<Entry> devs;
  struct RelayEntry {
    UflsRelay relay;
    int bus;
  };
  std::vector<RelayEntry> relays;
  for (const auto& spec : model.devices) {
    if (const auto* ufls = std::get_if<UflsParams>(&spec.params)) {
      if (spec.in_service)
        relays.push_back({UflsRelay(*ufls), model.bus_index(spec.bus)});
      continue;
    }
    Entry e;
    e.dev = make_device(spec, model.base_mva, f0);
    e.bus = model.bus_index(spec.bus);
    e.in_service = spec.in_service;
    devs.push_back(std::move(e));
  }

  // Initial operating point.
  PowerFlowResult pf = solve_power_flow(model);
  for (auto& e : devs) {
    if (!e.in_service) continue;
    const Complex s = pf.s_device.at(e.dev->id());
    e.dev->init_equilibrium(pf.v[e.bus], s);
  }

  DynamicNetwork network(net, dt_s);
  auto restamp = [&]() {
    network.clear_device_admittances();
    for (const auto& e : devs)
      if (e.in_service) network.set_device_admittance(e.bus, e.dev->norton_admittance());
    network.finalize();
  };
  restamp();
  network.init_steady(pf.v);

  // Frequency meters at every bus (relays and output channels read them).
  const Real tau_f = 0.02;
  std::vector<BusFreqMeter> fmeter(static_cast<std::size_t>(n_bus));
  for (int b = 0; b < n_bus; ++b)
    fmeter[static_cast<std::size_t>(b)].reset(pf.v[b], f0);

  // Output buffers.
  const Index steps = static_cast<Index>(std::llround(duration_s / dt_s));
  Index out_every = std::max<Index>(
      1, static_cast<Index>(std::llround(1.0 / (dt_s * output_hz))));
  const Index n_out = steps / out_every + 1;

  std::vector<std::string> dev_ids;
  for (const auto& e : devs) dev_ids.push_back(e.dev->id());

  struct DevTrace {
    Vec p, q, v, theta, f;
    std::map<std::string, Vec> extra;
  };
  std::vector<DevTrace> traces(devs.size());
  std::map<std::string, Real> sigbuf;
  for (std::size_t d = 0; d < devs.size(); ++d) {
    traces[d].p.resize(n_out);
    traces[d].q.resize(n_out);
    traces[d].v.resize(n_out);
    traces[d].theta.resize(n_out);
    traces[d].f.resize(n_out);
    sigbuf.clear();
    devs[d].dev->log_signals(sigbuf);
    for (const auto& [k, v] : sigbuf) {
      (void)v;
      traces[d].extra[k].resize(n_out);
    }
  }
  Vec sys_f(n_out), sys_gen(n_out), sys_load(n_out), sys_loss(n_out),
      sys_stored(n_out), sys_shed(n_out);

  // Reference bus for the system frequency trace: the slack device's bus.
  int ref_bus = 0;
  for (const auto& spec : model.devices)
    if (spec.slack) ref_bus = model.bus_index(spec.bus);

  // Point-on-wave capture: per-step terminal voltage/current per device.
  std::vector<std::string> pow_devices = pow_devices_in;
  if (pow_synthesis && pow_devices.empty()) {
    for (const auto& spec : model.devices)
      if (device_kind(spec.params) == DeviceKind::Gfl ||
          device_kind(spec.params) == DeviceKind::Vsm)
        pow_devices.push_back(spec.id);
  }
  std::vector<int> pow_ix;  // index into devs
  for (const auto& id : pow_devices) {
    int found = -1;
    for (std::size_t d = 0; d < devs.size(); ++d)
      if (devs[d].dev->id() == id) found = static_cast<int>(d);
    if (found < 0) throw InputError("pow_devices: unknown device '" + id + "'");
    pow_ix.push_back(found);
  }
  std::vector<std::vector<Complex>> pow_v(pow_ix.size()), pow_i(pow_ix.size());
  if (pow_synthesis)
    for (std::size_t k = 0; k < pow_ix.size(); ++k) {
      pow_v[k].reserve(static_cast<std::size_t>(steps) + 1);
      pow_i[k].reserve(static_cast<std::size_t>(steps) + 1);
    }

  // Per-bus unwrapped angle for the theta channels.
  std::vector<Real> theta_out(static_cast<std::size_t>(n_bus));
  std::vector<Real> arg_out_prev(static_cast<std::size_t>(n_bus));
  for (int b = 0; b < n_bus; ++b) {
    arg_out_prev[static_cast<std::size_t>(b)] = std::arg(pf.v[b]);
    theta_out[static_cast<std::size_t>(b)] = arg_out_prev[static_cast<std::size_t>(b)];
  }
  auto update_theta_out = [&](const CVec& v) {
    for (int b = 0; b < n_bus; ++b) {
      const Real a = std::arg(v[b]);
      Real d = a - arg_out_prev[static_cast<std::size_t>(b)];
      d -= kTwoPi * std::round(d / kTwoPi);
      arg_out_prev[static_cast<std::size_t>(b)] = a;
      theta_out[static_cast<std::size_t>(b)] += d;
    }
  };

  Real shed_total = 0.0;
  auto record = [&](Index slot) {
    const CVec& v = network.bus_voltage();
    Real gen = 0.0;
    for (std::size_t d = 0; d < devs.size(); ++d) {
      const auto& e = devs[d];
      Complex s(0.0, 0.0);
      if (e.in_service) {
        const Complex i_t = e.dev->measured_current(v[e.bus]);
        s = v[e.bus] * std::conj(i_t);
      }
      traces[d].p[slot] = s.real();
      traces[d].q[slot] = s.imag();
      traces[d].v[slot] = std::abs(v[e.bus]);
      traces[d].theta[slot] = theta_out[static_cast<std::size_t>(e.bus)];
      traces[d].f[slot] = fmeter[static_cast<std::size_t>(e.bus)].f_filt;
      gen += s.real();
      sigbuf.clear();
      e.dev->log_signals(sigbuf);
      for (auto& [k, val] : sigbuf) traces[d].extra[k][slot] = val;
    }
    sys_f[slot] = fmeter[static_cast<std::size_t>(ref_bus)].f_filt;
    sys_gen[slot] = gen;
    sys_load[slot] = network.total_load_power();
    sys_loss[slot] = network.total_branch_loss();
    sys_stored[slot] = network.stored_energy();
    sys_shed[slot] = shed_total;
  };
  record(0);
  if (pow_synthesis)
    for (std::size_t k = 0; k < pow_ix.size(); ++k) {
      const auto& e = devs[static_cast<std::size_t>(pow_ix[k])];
      pow_v[k].push_back(pf.v[e.bus]);
      pow_i[k].push_back(e.in_service ? e.dev->measured_current(pf.v[e.bus])
                                      : Complex(0, 0));
    }

  // Main loop.
  std::size_t next_event = 0;
  CVec inj = CVec::Zero(n_bus);
  for (Index step = 1; step <= steps; ++step) {
    const Real t_prev = static_cast<Real>(step - 1) * dt_s;

    // Events scheduled at or before the start of this step.
    bool topology_changed = false;
    while (next_event < events.size() && events[next_event].t <= t_prev + 1e-12) {
      const Event& ev = events[next_event];
      switch (ev.kind) {
        case Event::Kind::TripDevice: {
          bool found = false;
          for (auto& e : devs)
            if (e.dev->id() == ev.target) {
              e.in_service = false;
              found = true;
            }
          if (!found) throw InputError("event: unknown device '" + ev.target + "'");
          topology_changed = true;
          break;
        }
        case Event::Kind::SetParam: {
          set_model_param(model, ev.target, ev.value);
          // Re-seat the live parameter block.
          const auto [id, field] = [&]() {
            auto dot1 = ev.target.find('.');
            auto dot2 = ev.target.rfind('.');
            return std::make_pair(ev.target.substr(dot1 + 1, dot2 - dot1 - 1),
                                  ev.target.substr(dot2 + 1));
          }();
          (void)field;
          for (auto& e : devs) {
            if (e.dev->id() != id) continue;
            const DeviceSpec* spec = model.find_device(id);
            if (auto* sg = dynamic_cast<SgDevice*>(e.dev.get()))
              sg->params() = std::get<SgParams>(spec->params);
            else if (auto* gfl = dynamic_cast<GflDevice*>(e.dev.get()))
              gfl->params() = std::get<GflParams>(spec->params);
            else if (auto* vsm = dynamic_cast<VsmDevice*>(e.dev.get()))
              vsm->params() = std::get<VsmParams>(spec->params);
            e.dev->refresh_params();
          }
          topology_changed = true;  // Norton admittances may depend on params
          break;
        }
        case Event::Kind::ShedLoad: {
          shed_total += ev.fraction;
          network.set_load_scale(std::max(0.0, 1.0 - shed_total));
          topology_changed = true;
          break;
        }
      }
      ++next_event;
    }
    if (topology_changed) restamp();

    // Device source currents from current state, then the network solve.
    inj.setZero();
    for (const auto& e : devs)
      if (e.in_service) inj[e.bus] += e.dev->source_current();
    const CVec& v = network.step(inj);

    // Device state advance with the fresh terminal voltages.
    for (auto& e : devs)
      if (e.in_service) e.dev->update(v[e.bus], dt_s);

    for (int b = 0; b < n_bus; ++b)
      fmeter[static_cast<std::size_t>(b)].step(v[b], dt_s, f0, tau_f);
    update_theta_out(v);

    // Underfrequency relays (shed applies from the next step boundary).
    for (auto& r : relays) {
      const Real shed =
          r.relay.step(fmeter[static_cast<std::size_t>(r.bus)].f_filt, dt_s);
      if (shed > 0.0) {
        shed_total += shed;
        network.set_load_scale(std::max(0.0, 1.0 - shed_total));
        restamp();
      }
    }

    // Divergence detection.
    for (int b = 0; b < n_bus; ++b) {
      const Real mag = std::abs(v[b]);
      if (!std::isfinite(mag) || mag <= 0.0 || mag >= 2.0)
        throw SimDivergence("bus '" + net.bus_ids[static_cast<std::size_t>(b)] +
                                "' voltage left (0,2) pu",
                            static_cast<Real>(step) * dt_s);
    }

    if (pow_synthesis)
      for (std::size_t k = 0; k < pow_ix.size(); ++k) {
        const auto& e = devs[static_cast<std::size_t>(pow_ix[k])];
        pow_v[k].push_back(v[e.bus]);
        pow_i[k].push_back(e.in_service ? e.dev->measured_current(v[e.bus])
                                        : Complex(0, 0));
      }

    if (step % out_every == 0) record(step / out_every);
  }

  // Assemble channels.
  SimResult result;
  result.device_ids = dev_ids;
  result.event_time = events.empty() ? 0.0 : events.front().t;
  const Real out_dt = dt_s * static_cast<Real>(out_every);
  auto add_channel = [&](const std::string& name, const Vec& vals,
                         SeriesKind kind, const std::string& unit) {
    UniformSeries s;
    s.name = name;
    s.t0 = 0.0;
    s.dt = out_dt;
    s.values = vals;
    s.kind = kind;
    s.unit = unit;
    result.channels.add(std::move(s));
  };
  for (std::size_t d = 0; d < devs.size(); ++d) {
    const std::string& id = dev_ids[d];
    add_channel(id + "_p_pu", traces[d].p, SeriesKind::Power, "pu");
    add_channel(id + "_q_pu", traces[d].q, SeriesKind::Power, "pu");
    add_channel(id + "_v_pu", traces[d].v, SeriesKind::PhasorMagnitude, "pu");
    add_channel(id + "_theta_rad", traces[d].theta, SeriesKind::PhasorAngle, "rad");
    add_channel(id + "_f_hz", traces[d].f, SeriesKind::Frequency, "Hz");
    for (const auto& [k, vals] : traces[d].extra)
      add_channel(id + "_" + k, vals,
                  k.size() > 3 && k.rfind("_hz") == k.size() - 3
                      ? SeriesKind::Frequency
                      : SeriesKind::Instantaneous,
                  "pu");
  }
  add_channel("sys_f_hz", sys_f, SeriesKind::Frequency, "Hz");
  add_channel("sys_gen_pu", sys_gen, SeriesKind::Power, "pu");
  add_channel("sys_load_pu", sys_load, SeriesKind::Power, "pu");
  add_channel("sys_loss_pu", sys_loss, SeriesKind::Power, "pu");
  add_channel("sys_stored_pu_s", sys_stored, SeriesKind::Instantaneous, "pu*s");
  add_channel("sys_shed_frac", sys_shed, SeriesKind::Instantaneous, "1");

  // Point-on-wave synthesis: linear interpolation of the dq states onto the
  // PoW clock, then the inverse dq -> abc map (amplitude-invariant).
  if (pow_synthesis) {
    const Real dt_pow = 1.0 / pow_rate_hz;
    const Index n_pow = static_cast<Index>(std::floor(duration_s / dt_pow)) + 1;
    for (std::size_t k = 0; k < pow_ix.size(); ++k) {
      ChannelSet cs;
      const char* vnames[3] = {"va", "vb", "vc"};
      const char* inames[3] = {"ia", "ib", "ic"};
      const Real shift[3] = {0.0, -kTwoPi / 3.0, kTwoPi / 3.0};
      std::array<Vec, 6> wave;
      for (auto& w : wave) w.resize(n_pow);
      for (Index i = 0; i < n_pow; ++i) {
        const Real t = static_cast<Real>(i) * dt_pow;
        const Real x = t / dt_s;
        const Index k0 = std::min<Index>(static_cast<Index>(x),
                                         static_cast<Index>(pow_v[k].size()) - 2);
        const Real frac = x - static_cast<Real>(k0);
        const Complex vdq = pow_v[k][static_cast<std::size_t>(k0)] * (1.0 - frac) +
                            pow_v[k][static_cast<std::size_t>(k0 + 1)] * frac;
        const Complex idq = pow_i[k][static_cast<std::size_t>(k0)] * (1.0 - frac) +
                            pow_i[k][static_cast<std::size_t>(k0 + 1)] * frac;
        const Real wt = net.w0 * t;
        for (int ph = 0; ph < 3; ++ph) {
          wave[static_cast<std::size_t>(ph)][i] =
              std::abs(vdq) * std::cos(wt + std::arg(vdq) + shift[ph]);
          wave[static_cast<std::size_t>(3 + ph)][i] =
              std::abs(idq) * std::cos(wt + std::arg(idq) + shift[ph]);
        }
      }
      for (int c = 0; c < 3; ++c) {
        UniformSeries s;
        s.name = vnames[c];
        s.t0 = 0.0;
        s.dt = dt_pow;
        s.values = wave[static_cast<std::size_t>(c)];
        s.unit = "pu";
        cs.add(std::move(s));
      }
      for (int c = 0; c < 3; ++c) {
        UniformSeries s;
        s.name = inames[c];
        s.t0 = 0.0;
        s.dt = dt_pow;
        s.values = wave[static_cast<std::size_t>(3 + c)];
        s.unit = "pu";
        cs.add(std::move(s));
      }
      result.pow.emplace(pow_devices[k], PowRecord::from(std::move(cs), f0));
    }
  }
  return result;
}

SimResult simulate(const Scenario& sc) {
  GridSim sim(sc.model);
  return sim.run(sc.events, sc.duration_s, sc.dt_s, sc.output_hz,
                 sc.pow_synthesis, sc.pow_rate_hz, sc.pow_devices);
}

}  // namespace osckit
