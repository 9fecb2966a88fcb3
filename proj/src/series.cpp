#include "osckit/series.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace osckit {

Index UniformSeries::index_at(Real t) const {
  if (values.size() == 0) return 0;
  Real x = std::round((t - t0) / dt);
  x = std::clamp(x, 0.0, static_cast<Real>(values.size() - 1));
  return static_cast<Index>(x);
}

void UniformSeries::validate() const {
  if (dt <= 0.0) throw InputError("series '" + name + "': dt must be > 0");
  if (values.size() < 1) throw InputError("series '" + name + "': empty");
  if (!values.allFinite())
    throw InputError("series '" + name + "': non-finite sample");
}

void ChannelSet::add(UniformSeries s) {
  s.validate();
  if (!channels.empty()) {
    const auto& ref = channels.front();
    if (std::abs(s.t0 - ref.t0) > 1e-12 || std::abs(s.dt - ref.dt) > 1e-15 ||
        s.size() != ref.size())
      throw InputError("channel '" + s.name + "' does not share the set's time base");
  }
  if (find(s.name) != nullptr)
    throw InputError("duplicate channel name '" + s.name + "'");
  channels.push_back(std::move(s));
}

const UniformSeries* ChannelSet::find(const std::string& name) const {
  for (const auto& c : channels)
    if (c.name == name) return &c;
  return nullptr;
}

const UniformSeries& ChannelSet::at(const std::string& name) const {
  const UniformSeries* s = find(name);
  if (s == nullptr) throw InputError("missing channel '" + name + "'");
  return *s;
}

std::vector<std::string> ChannelSet::names() const {
  std::vector<std::string> out;
  out.reserve(channels.size());
  for (const auto& c : channels) out.push_back(c.name);
  return out;
}

void unwrap_angle(Vec& theta) {
  for (Index i = 1; i < theta.size(); ++i) {
    Real d = theta[i] - theta[i - 1];
    d -= kTwoPi * std::round(d / kTwoPi);
    theta[i] = theta[i - 1] + d;
  }
}

namespace {
bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}
}  // namespace

void apply_name_conventions(UniformSeries& s) {
  if (ends_with(s.name, "_rad")) {
    s.kind = SeriesKind::PhasorAngle;
    s.unit = "rad";
    unwrap_angle(s.values);
  } else if (ends_with(s.name, "_hz")) {
    s.kind = SeriesKind::Frequency;
    s.unit = "Hz";
  } else if (ends_with(s.name, "_pu")) {
    s.kind = SeriesKind::Power;
    s.unit = "pu";
  } else if (ends_with(s.name, "_mw")) {
    s.kind = SeriesKind::Power;
    s.unit = "MW";
  }
}

const std::array<const char*, 6>& PowRecord::channel_names() {
  static const std::array<const char*, 6> names = {"va", "vb", "vc",
                                                   "ia", "ib", "ic"};
  return names;
}

PowRecord PowRecord::from(ChannelSet cs, Real f0) {
  if (cs.size() != 6)
    throw InputError("PoW record must hold exactly the six canonical channels");
  for (const char* n : channel_names()) cs.at(n);
  if (cs.dt() <= 0.0 || 1.0 / cs.dt() < 8.0 * f0)
    throw InputError("PoW sample rate below 4x the highest analyzed frequency");
  PowRecord rec;
  rec.data = std::move(cs);
  rec.nominal_frequency = f0;
  return rec;
}

}  // namespace osckit
