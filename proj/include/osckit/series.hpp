#pragma once

#include <string>
#include <vector>

#include "osckit/types.hpp"

namespace osckit {

enum class SeriesKind {
  Instantaneous,
  PhasorMagnitude,
  PhasorAngle,
  Power,
  Frequency,
};

/// A uniformly sampled, named signal channel.
///
/// Angle series are stored unwrapped: no +-pi jumps survive ingestion, so
/// every consumer may difference and integrate them freely.
struct UniformSeries {
  std::string name;
  Real t0 = 0.0;
  Real dt = 1.0;
  Vec values;
  std::string unit = "pu";
  SeriesKind kind = SeriesKind::Instantaneous;

  Index size() const { return values.size(); }
  Real fs() const { return 1.0 / dt; }
  Real time(Index i) const { return t0 + static_cast<Real>(i) * dt; }
  Real duration() const { return static_cast<Real>(values.size() - 1) * dt; }

  /// Index of the sample nearest to time t, clamped to the valid range.
  Index index_at(Real t) const;

  /// Throws InputError if dt <= 0, the series is empty, or values are not finite.
  void validate() const;

  UniformSeries with_values(Vec v) const {
    UniformSeries out = *this;
    out.values = std::move(v);
    return out;
  }
};

/// Channels sharing one time base. Names are unique, lengths identical.
struct ChannelSet {
  std::vector<UniformSeries> channels;

  Real t0() const { return channels.empty() ? 0.0 : channels.front().t0; }
  Real dt() const { return channels.empty() ? 1.0 : channels.front().dt; }
  Index length() const { return channels.empty() ? 0 : channels.front().size(); }
  std::size_t size() const { return channels.size(); }
  bool empty() const { return channels.empty(); }

  /// Adds a channel, enforcing the shared-time-base and unique-name invariants.
  void add(UniformSeries s);

  const UniformSeries* find(const std::string& name) const;
  /// Like find() but throws InputError when the channel is missing.
  const UniformSeries& at(const std::string& name) const;

  std::vector<std::string> names() const;
};

/// Unwraps a sampled angle in place: successive jumps > pi are folded by 2*pi.
void unwrap_angle(Vec& theta);

/// Infers the series kind and unit from the channel-name suffix convention
/// (`_rad` angle, `_hz` frequency, `_pu`/`_mw` power-like).
void apply_name_conventions(UniformSeries& s);

/// Six point-on-wave channels (va, vb, vc, ia, ib, ic) on one time base.
struct PowRecord {
  ChannelSet data;
  Real nominal_frequency = 60.0;

  static const std::array<const char*, 6>& channel_names();

  /// Wraps a ChannelSet, checking the canonical six channels and the
  /// sample-rate floor (fs >= 4x the highest analyzed frequency, taken
  /// here as 2x nominal, i.e. fs >= 8*f0).
  static PowRecord from(ChannelSet cs, Real f0 = 60.0);

  Real fs() const { return data.dt() > 0 ? 1.0 / data.dt() : 0.0; }
  const Vec& va() const { return data.at("va").values; }
  const Vec& vb() const { return data.at("vb").values; }
  const Vec& vc() const { return data.at("vc").values; }
  const Vec& ia() const { return data.at("ia").values; }
  const Vec& ib() const { return data.at("ib").values; }
  const Vec& ic() const { return data.at("ic").values; }
};

}  // namespace osckit
