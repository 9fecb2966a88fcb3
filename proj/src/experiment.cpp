#include "osckit/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <atomic>
#include <future>
#include <set>
#include <thread>

#include <json.hpp>

#include "osckit/csv.hpp"
#include "osckit/signal.hpp"

namespace osckit {

using nlohmann::json;

// ---------------------------------------------------------------------------
// kauai-mini benchmark

namespace {

constexpr Real kKv = 57.0;
constexpr Real kBaseMva = 100.0;

void add_branch_pu(GridModel& m, const std::string& from, const std::string& to,
                   Real x_pu, Real r_over_x = 0.25) {
  const Real z_base = kKv * kKv / kBaseMva;
  Branch br;
  br.from = from;
  br.to = to;
  br.r_ohm = x_pu * r_over_x * z_base;
  br.l_h = x_pu * z_base / (kTwoPi * 60.0);
  m.branches.push_back(br);
}

void add_shunt_pu(GridModel& m, const std::string& bus, Real b_pu) {
  const Real z_base = kKv * kKv / kBaseMva;
  m.shunts.push_back({bus, b_pu / (kTwoPi * 60.0 * z_base)});
}

}  // namespace

Scenario kauai_mini() {
  GridModel m;
  m.base_mva = kBaseMva;
  m.f0 = 60.0;
  for (const char* id : {"PLA", "HUB1", "HUB2", "HUB3", "BI1", "BI2", "BI3",
                         "BI4", "BBM", "BH1", "BH2", "BLD"})
    m.buses.push_back({id, kKv});

  // Meshed 57 kV core with radial plant spurs.
  add_branch_pu(m, "PLA", "HUB1", 0.35);
  add_branch_pu(m, "HUB1", "HUB2", 0.45);
  add_branch_pu(m, "HUB2", "HUB3", 0.45);
  add_branch_pu(m, "HUB3", "PLA", 0.40);
  add_branch_pu(m, "HUB1", "HUB3", 0.60);
  add_branch_pu(m, "BI4", "PLA", 0.90);
  add_branch_pu(m, "BI1", "HUB1", 0.90);
  add_branch_pu(m, "BI2", "HUB2", 1.50);
  add_branch_pu(m, "BI3", "HUB3", 0.45);
  add_branch_pu(m, "BBM", "HUB3", 0.30);
  add_branch_pu(m, "BH1", "HUB3", 0.50);
  add_branch_pu(m, "BH2", "HUB2", 0.50);
  add_branch_pu(m, "BLD", "HUB2", 0.30);

  // Line charging.
  for (const auto& b : m.buses) add_shunt_pu(m, b.id, 0.01);

  // 55 MW early-morning load, constant impedance.
  m.loads.push_back({"BLD", 16.0, 3.2});
  m.loads.push_back({"HUB1", 12.0, 2.4});
  m.loads.push_back({"HUB2", 12.0, 2.4});
  m.loads.push_back({"HUB3", 9.0, 1.8});
  m.loads.push_back({"PLA", 6.0, 1.2});

  // Generation fleet. Setpoints follow the pre-event mix; the slack (plant A)
  // picks up the residual so its share lands at 60.6% of total generation.
  const Real gen_total = 56.6;  // MW, load plus network losses

  {
    SgParams p;
    p.rating_mva = 40.0;
    p.h_s = 3.5;
    p.d_pu = 0.0;
    p.xd_sub_pu = 0.25;
    p.droop_r_pu = 0.05;
    p.governor_t_s = 0.5;
    p.avr_gain = 50.0;
    p.avr_t_s = 0.5;
    DeviceSpec d;
    d.id = "plantA";
    d.bus = "PLA";
    d.params = p;
    d.p_set_mw = 0.606 * gen_total;
    d.v_set_pu = 1.02;
    d.slack = true;
    m.devices.push_back(d);
  }
  {
    SgParams p;
    p.rating_mva = 12.0;
    p.h_s = 2.5;
    p.xd_sub_pu = 0.20;
    p.droop_r_pu = 0.05;
    p.governor_t_s = 0.8;
    DeviceSpec d;
    d.id = "biomass";
    d.bus = "BBM";
    d.params = p;
    d.p_set_mw = 0.137 * gen_total;
    d.v_set_pu = 1.01;
    m.devices.push_back(d);
  }
  for (int h = 1; h <= 2; ++h) {
    SgParams p;
    p.rating_mva = 8.0;
    p.h_s = 2.0;
    p.xd_sub_pu = 0.25;
    p.droop_r_pu = 0.05;
    p.governor_t_s = 1.2;
    DeviceSpec d;
    d.id = "hydro" + std::to_string(h);
    d.bus = h == 1 ? "BH1" : "BH2";
    d.params = p;
    d.p_set_mw = 0.065 * gen_total;
    d.v_set_pu = 1.01;
    m.devices.push_back(d);
  }
  auto gfl = [&](const std::string& id, const std::string& bus, Real rating,
                 Real p_share, Real kp, Real ki, Real droop) {
    GflParams p;
    p.rating_mva = rating;
    p.pll_kp = kp;
    p.pll_ki = ki;
    p.current_bw_hz = 300.0;
    p.droop_pf = droop;
    p.ffr_delay_s = 0.05;
    p.ffr_deadband_hz = 0.036;
    p.i_max_pu = 1.2;
    DeviceSpec d;
    d.id = id;
    d.bus = bus;
    d.params = p;
    d.p_set_mw = p_share * gen_total;
    d.q_set_mvar = 0.0;
    m.devices.push_back(d);
  };
  gfl("IBR1", "BI1", 13.0, 0.041, 0.15, 5.0, 3.0);
  gfl("IBR2", "BI2", 14.0, 0.046, 0.15, 5.0, 3.0);
  gfl("IBR3", "BI3", 12.0, 0.000, 0.08, 3.0, 5.0);
  {
    VsmParams p;
    p.rating_mva = 14.0;
    p.h_v_s = 1.5;
    p.d_v_pu = 25.0;
    p.reactive_droop_pct = 5.0;
    p.x_v_pu = 0.25;
    p.r_v_pu = 0.01;
    DeviceSpec d;
    d.id = "IBR4";
    d.bus = "BI4";
    d.params = p;
    d.p_set_mw = 0.041 * gen_total;
    m.devices.push_back(d);
  }
  {
    UflsParams p;
    p.stages = {{59.3, 0.020, 0.15}, {59.0, 0.017, 0.15}};
    DeviceSpec d;
    d.id = "ufls";
    d.bus = "BLD";
    d.params = p;
    m.devices.push_back(d);
  }

  Scenario sc;
  sc.name = "kauai_mini_event";
  sc.model = std::move(m);
  sc.duration_s = 10.0;
  sc.dt_s = 50e-6;
  sc.output_hz = 1000.0;
  sc.pow_synthesis = true;
  sc.pow_devices = {"IBR1", "IBR2", "IBR3", "IBR4"};
  sc.band_lo_hz = 10.0;
  sc.band_hi_hz = 25.0;
  Event trip;
  trip.kind = Event::Kind::TripDevice;
  trip.t = 1.0;
  trip.target = "plantA";
  sc.events.push_back(trip);
  return sc;
}

std::vector<ScrTarget> kauai_mini_scr_targets() {
  return {{"IBR1", 13.0, 4.3, 3.4},
          {"IBR2", 14.0, 3.4, 2.6},
          {"IBR3", 12.0, 6.2, 5.7},
          {"IBR4", 14.0, 4.4, 2.9}};
}

// ---------------------------------------------------------------------------
// Event study

Real EventStudy::band_mode_zeta() const {
  for (const auto& m : modal.modes)
    if (m.frequency >= band_lo && m.frequency <= band_hi) return m.zeta;
  return 1.0;
}

EventStudy run_event_study(const Scenario& sc) {
  EventStudy study;
  study.sim = simulate(sc);
  study.band_lo = sc.band_lo_hz;
  study.band_hi = sc.band_hi_hz;
  study.window_lo = sc.analysis_window_lo();
  study.window_hi = sc.analysis_window_hi();

  const ChannelSet& ch = study.sim.channels;
  study.shed_fraction = ch.at("sys_shed_frac").values.maxCoeff();

  // Spectrogram of the system frequency over the post-event interval.
  study.spectrogram = stft(ch.at("sys_f_hz"), 2.0, 0.5);
  study.peak = band_peak(study.spectrogram, sc.band_lo_hz, sc.band_hi_hz);

  // Joint modal fit over the inverter power channels in the analysis window,
  // decimated so the pencil stays small.
  ChannelSet modal_in;
  std::vector<std::pair<std::string, UniformSeries>> energies;
  for (const auto& id : study.sim.device_ids) {
    const UniformSeries* p = ch.find(id + "_p_pu");
    if (p == nullptr) continue;
    const Index i0 = p->index_at(study.window_lo);
    const Index i1 = p->index_at(study.window_hi);
    if (i1 - i0 < 32) throw InputError("event study: analysis window too short");
    UniformSeries w = *p;
    w.values = p->values.segment(i0, i1 - i0 + 1);
    w.t0 = p->time(i0);
    w.name = id;
    if (id.rfind("IBR", 0) == 0) {
      UniformSeries dec = resample(w, 250.0);
      dec.values = detrended(dec.values, DetrendMode::Linear);
      modal_in.add(std::move(dec));
    }
  }
  if (!modal_in.empty()) {
    study.modal = fit_modes(modal_in, sc.band_lo_hz, sc.band_hi_hz, 24);
    try {
      study.shape = extract_shape(study.modal, sc.band_lo_hz, sc.band_hi_hz);
    } catch (const AnalysisError&) {
      study.shape.reset();
    }
  }

  // Dissipating-energy verdicts on every generating device.
  for (const auto& id : study.sim.device_ids) {
    const UniformSeries* p = ch.find(id + "_p_pu");
    if (p == nullptr) continue;
    DefInputs in;
    in.device = id;
    in.p = *p;
    in.q = ch.at(id + "_q_pu");
    in.vmag = ch.at(id + "_v_pu");
    in.theta = ch.at(id + "_theta_rad");
    // A tripped device reports zero voltage magnitude samples only if its bus
    // collapsed; Vmag stays positive on a healthy network.
    energies.emplace_back(id, def_energy(in, sc.band_lo_hz, sc.band_hi_hz));
  }
  study.def = def_rank(energies, study.window_lo, study.window_hi);
  for (const auto& r : study.def)
    if (r.is_source) study.def_sources.push_back(r.device);

  // Sub/super-synchronous power verdicts from the synthesized PoW records.
  if (!study.sim.pow.empty() && study.peak.significant) {
    std::vector<SspResult> results;
    for (const auto& [id, pow] : study.sim.pow) {
      results.push_back(analyze_pow_device(id, pow, study.peak.f_peak,
                                           study.window_lo, study.window_hi,
                                           /*current_into_device=*/false));
    }
    study.ssp = classify_sources(std::move(results));
    for (const auto& r : study.ssp)
      if (r.is_source) study.ssp_sources.push_back(r.device);
    std::sort(study.ssp_sources.begin(), study.ssp_sources.end());
  }
  std::sort(study.def_sources.begin(), study.def_sources.end());
  return study;
}

// ---------------------------------------------------------------------------
// Sensitivity sweep

SweepMetric sweep_metric_from_name(const std::string& name) {
  if (name == "band_mode_zeta") return SweepMetric::BandModeZeta;
  if (name == "band_peak_db") return SweepMetric::BandPeakDb;
  if (name == "def_slope_max") return SweepMetric::DefSlopeMax;
  throw InputError("unknown sweep metric '" + name + "'");
}

const char* sweep_metric_name(SweepMetric m) {
  switch (m) {
    case SweepMetric::BandModeZeta: return "band_mode_zeta";
    case SweepMetric::BandPeakDb: return "band_peak_db";
    case SweepMetric::DefSlopeMax: return "def_slope_max";
  }
  return "?";
}

SweepSpec load_sweep_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open sweep spec '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InputError("sweep spec: " + std::string(e.what()));
  }
  SweepSpec spec;
  try {
    for (const auto& jp : j.at("parameters")) {
      SweepSpec::Parameter p;
      p.path = jp.at("path").get<std::string>();
      for (const auto& v : jp.at("values")) p.values.push_back(v.get<Real>());
      if (p.values.empty()) throw InputError("sweep parameter without values");
      spec.parameters.push_back(std::move(p));
    }
    if (j.contains("metric"))
      spec.metric = sweep_metric_from_name(j.at("metric").get<std::string>());
    if (j.contains("band_hz")) {
      spec.band_lo = j.at("band_hz").at(0).get<Real>();
      spec.band_hi = j.at("band_hz").at(1).get<Real>();
    }
  } catch (const json::exception& e) {
    throw InputError("sweep spec: " + std::string(e.what()));
  }
  if (spec.parameters.empty()) throw InputError("sweep spec: no parameters");
  return spec;
}

namespace {

Real evaluate_metric(const EventStudy& study, SweepMetric metric) {
  switch (metric) {
    case SweepMetric::BandModeZeta:
      return study.band_mode_zeta();
    case SweepMetric::BandPeakDb:
      return study.peak.mag_db;
    case SweepMetric::DefSlopeMax: {
      Real best = 0.0;
      for (const auto& r : study.def) best = std::max(best, r.slope);
      return best;
    }
  }
  return 0.0;
}

}  // namespace

SweepTable sensitivity_sweep(const SweepSpec& spec, const Scenario& base,
                             int threads) {
  // Resolve every path up front so bad specs fail before any simulation.
  for (const auto& p : spec.parameters) get_model_param(base.model, p.path);

  std::vector<std::size_t> counts;
  std::size_t total = 1;
  for (const auto& p : spec.parameters) {
    counts.push_back(p.values.size());
    total *= p.values.size();
  }

  auto combo_values = [&](std::size_t index) {
    std::vector<Real> vals(spec.parameters.size());
    for (std::size_t k = spec.parameters.size(); k-- > 0;) {
      vals[k] = spec.parameters[k].values[index % counts[k]];
      index /= counts[k];
    }
    return vals;
  };

  auto run_one = [&](std::size_t index) {
    Scenario sc = base;
    sc.pow_synthesis = false;  // metrics never need PoW
    sc.band_lo_hz = spec.band_lo;
    sc.band_hi_hz = spec.band_hi;
    const auto vals = combo_values(index);
    for (std::size_t k = 0; k < spec.parameters.size(); ++k)
      set_model_param(sc.model, spec.parameters[k].path, vals[k]);
    SweepRow row;
    row.values = vals;
    row.metric = evaluate_metric(run_event_study(sc), spec.metric);
    return row;
  };

  SweepTable table;
  table.spec = spec;
  table.rows.resize(total);
  threads = std::max(1, threads);
  if (threads == 1) {
    for (std::size_t i = 0; i < total; ++i) table.rows[i] = run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= total) return;
        table.rows[i] = run_one(i);
      }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return table;
}

// ---------------------------------------------------------------------------
// Mitigation comparison

MitigationReport mitigation_compare(MitigationMethod method, const Scenario& base,
                                    std::vector<std::string> targets) {
  MitigationReport report;
  report.method = method;
  report.base = run_event_study(base);

  report.valid = !report.base.modal.modes.empty() && report.base.peak.significant;
  report.base_zeta = report.base.band_mode_zeta();
  report.base_peak_db = report.base.peak.mag_db;
  report.base_peak_hz = report.base.peak.f_peak;

  if (targets.empty()) targets = report.base.def_sources;
  if (targets.empty()) {
    // Nothing flagged: fall back to the aggressive GFL pair by convention.
    for (const auto& d : base.model.devices)
      if (device_kind(d.params) == DeviceKind::Gfl &&
          std::get<GflParams>(d.params).pll_kp >= 0.15 - 1e-12)
        targets.push_back(d.id);
  }
  report.targets = targets;

  Scenario mitigated = base;
  for (const auto& id : targets) {
    const DeviceSpec* d = mitigated.model.find_device(id);
    if (d == nullptr || device_kind(d->params) != DeviceKind::Gfl)
      throw InputError("mitigation targets must be grid-following devices: " + id);
    const std::string field =
        method == MitigationMethod::Method1Droop ? "droop_pf" : "pll_kp";
    const Real value = method == MitigationMethod::Method1Droop ? 4.0 : 0.10;
    set_model_param(mitigated.model, "devices." + id + "." + field, value);
  }
  report.mitigated = run_event_study(mitigated);
  report.mitigated_zeta = report.mitigated.band_mode_zeta();
  report.mitigated_peak_db = report.mitigated.peak.mag_db;

  report.zeta_delta = report.mitigated_zeta - report.base_zeta;
  report.peak_db_delta = report.mitigated_peak_db - report.base_peak_db;
  return report;
}

// ---------------------------------------------------------------------------
// Export

std::vector<std::filesystem::path> export_for_analysis(
    const SimResult& result, const std::filesystem::path& directory) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (!std::filesystem::is_directory(directory))
    throw InputError("cannot create directory '" + directory.string() + "'");

  std::vector<std::filesystem::path> files;
  for (const auto& id : result.device_ids) {
    ChannelSet cs;
    for (const char* suffix : {"_p_pu", "_q_pu", "_v_pu", "_theta_rad", "_f_hz"}) {
      const UniformSeries* s = result.channels.find(id + suffix);
      if (s == nullptr) continue;
      UniformSeries renamed = *s;
      renamed.name = renamed.name.substr(id.size() + 1);
      cs.add(std::move(renamed));
    }
    if (cs.empty()) continue;
    auto path = directory / (id + ".csv");
    export_csv(cs, path);
    files.push_back(path);
  }
  {
    ChannelSet cs;
    for (const auto& c : result.channels.channels)
      if (c.name.rfind("sys_", 0) == 0) cs.add(c);
    auto path = directory / "system.csv";
    export_csv(cs, path);
    files.push_back(path);
  }
  for (const auto& [id, pow] : result.pow) {
    auto path = directory / (id + "_pow.csv");
    export_csv(pow.data, path);
    files.push_back(path);
  }
  return files;
}

}  // namespace osckit
