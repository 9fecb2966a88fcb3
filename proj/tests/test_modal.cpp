#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "osckit/modal.hpp"

using namespace osckit;

namespace {

ChannelSet ringdown(Real f, Real sigma, const std::vector<Real>& phases_deg,
                    Real fs = 1000.0, Real duration = 2.0,
                    const std::vector<Real>& amps = {}) {
  ChannelSet cs;
  for (std::size_t c = 0; c < phases_deg.size(); ++c) {
    Real amp = c < amps.size() ? amps[c] : 1.0;
    Real ph = phases_deg[c] * kPi / 180.0;
    cs.add(test::make_series("ch" + std::to_string(c), 0.0, fs,
                             static_cast<Index>(duration * fs), [=](Real t) {
                               return amp * std::exp(sigma * t) *
                                      std::cos(kTwoPi * f * t + ph);
                             }));
  }
  return cs;
}

}  // namespace

TEST_CASE("single damped tone is recovered") {
  ChannelSet cs = ringdown(19.0, -0.30, {0.0});
  ModalFit fit = fit_modes(cs, 15.0, 25.0, 16);
  REQUIRE(fit.modes.size() >= 1);
  const Mode& m = fit.modes.front();
  CHECK(std::abs(m.frequency - 19.0) <= 0.05);
  CHECK(std::abs(m.sigma - (-0.30)) <= 0.02);
  CHECK(std::abs(std::abs(m.residues[0]) - 1.0) <= 0.01);
  // zeta invariant
  CHECK(m.zeta ==
        doctest::Approx(-m.sigma / std::hypot(m.sigma, kTwoPi * m.frequency))
            .epsilon(1e-12));
}

TEST_CASE("constant channel yields no in-band modes and no error") {
  ChannelSet cs;
  cs.add(test::make_series("c", 0.0, 1000.0, 2000, [](Real) { return 3.0; }));
  ModalFit fit = fit_modes(cs, 18.0, 20.0, 16);
  CHECK(fit.modes.empty());
}

TEST_CASE("all-zero input is a rank-deficient pencil") {
  ChannelSet cs;
  cs.add(test::make_series("z", 0.0, 1000.0, 2000, [](Real) { return 0.0; }));
  CHECK_THROWS_AS(fit_modes(cs, 18.0, 20.0, 16), AnalysisError);
}

TEST_CASE("max_order below 2 is rejected") {
  ChannelSet cs = ringdown(19.0, -0.3, {0.0});
  CHECK_THROWS_AS(fit_modes(cs, 15.0, 25.0, 1), InputError);
}

TEST_CASE("antiphase channels give 180-degree residue phase difference") {
  ChannelSet cs = ringdown(19.0, -0.30, {0.0, 180.0});
  ModalFit fit = fit_modes(cs, 15.0, 25.0, 16);
  REQUIRE(!fit.modes.empty());
  const Mode& m = fit.modes.front();
  Real d = std::arg(m.residues[0] / m.residues[1]) * 180.0 / kPi;
  d = std::abs(std::remainder(d - 180.0, 360.0));
  CHECK(d <= 5.0);
}

TEST_CASE("four-channel joint fit recovers shared pole and phases") {
  ChannelSet cs = ringdown(19.0, -0.30, {0.0, 20.0, 180.0, 200.0}, 1000.0, 2.0,
                           {1.0, 0.8, 0.9, 0.6});
  ModalFit fit = fit_modes(cs, 10.0, 30.0, 16);
  REQUIRE(!fit.modes.empty());
  const Mode& m = fit.modes.front();
  CHECK(std::abs(m.frequency - 19.0) <= 0.05);
  CHECK(std::abs(m.sigma + 0.30) <= 0.02);
  const Real want[4] = {0.0, 20.0, 180.0, 200.0};
  const Real ref = std::arg(m.residues[0]) * 180.0 / kPi;
  for (int c = 0; c < 4; ++c) {
    Real ph = std::arg(m.residues[c]) * 180.0 / kPi - ref;
    CHECK(std::abs(std::remainder(ph - want[c], 360.0)) <= 5.0);
  }
}

TEST_CASE("channel scaling moves residues, not poles") {
  ChannelSet a = ringdown(19.0, -0.25, {0.0, 90.0});
  ChannelSet b = a;
  b.channels[1].values *= 7.5;
  ModalFit fa = fit_modes(a, 15.0, 25.0, 16);
  ModalFit fb = fit_modes(b, 15.0, 25.0, 16);
  REQUIRE(!fa.modes.empty());
  REQUIRE(!fb.modes.empty());
  CHECK(std::abs(fa.modes[0].frequency - fb.modes[0].frequency) < 1e-9);
  CHECK(std::abs(fa.modes[0].sigma - fb.modes[0].sigma) < 1e-9);
  CHECK(std::abs(std::abs(fb.modes[0].residues[1]) -
                 7.5 * std::abs(fa.modes[0].residues[1])) < 1e-6);
}

TEST_CASE("fitted modes reconstruct a noiseless two-mode signal") {
  const Real fs = 1000.0;
  const Index n = 2000;
  ChannelSet cs;
  cs.add(test::make_series("x", 0.0, fs, n, [](Real t) {
    return std::exp(-0.3 * t) * std::cos(kTwoPi * 19.0 * t + 0.4) +
           0.5 * std::exp(-1.0 * t) * std::cos(kTwoPi * 7.0 * t - 1.0);
  }));
  ModalFit fit = fit_modes(cs, 0.5, 100.0, 16);
  REQUIRE(fit.modes.size() >= 2);
  Vec recon = Vec::Zero(n);
  for (const auto& m : fit.modes) {
    Real mag = std::abs(m.residues[0]);
    Real ph = std::arg(m.residues[0]);
    for (Index i = 0; i < n; ++i) {
      Real t = i / fs;
      recon[i] += mag * std::exp(m.sigma * t) * std::cos(kTwoPi * m.frequency * t + ph);
    }
  }
  Real nrmse = (recon - cs.channels[0].values).norm() / cs.channels[0].values.norm();
  CHECK(nrmse < 1e-3);
}

TEST_CASE("extract_shape normalizes to the largest residue") {
  ModalFit fit;
  fit.channels = {"a", "b"};
  Mode m;
  m.frequency = 19.0;
  m.sigma = -0.3;
  m.zeta = -m.sigma / std::hypot(m.sigma, kTwoPi * m.frequency);
  m.residues = CVec(2);
  m.residues << std::polar(2.0, 10.0 * kPi / 180.0),
      std::polar(1.0, 190.0 * kPi / 180.0);
  fit.modes.push_back(m);

  ModeShape shape = extract_shape(fit, 18.0, 20.0);
  CHECK(std::abs(shape.normalized[0] - Complex(1.0, 0.0)) < 1e-12);
  CHECK(std::abs(std::abs(shape.normalized[1]) - 0.5) < 1e-12);
  CHECK(std::abs(std::remainder(std::arg(shape.normalized[1]) - kPi, kTwoPi)) <
        1e-12);

  CHECK_THROWS_AS(extract_shape(fit, 30.0, 40.0), AnalysisError);
}

TEST_CASE("collapsed residue reports cosine amplitude and phase") {
  const Real phi = 0.7;
  ChannelSet cs;
  cs.add(test::make_series("x", 0.0, 1000.0, 1500, [=](Real t) {
    return std::exp(-0.2 * t) * std::cos(kTwoPi * 12.0 * t + phi);
  }));
  ModalFit fit = fit_modes(cs, 5.0, 20.0, 12);
  REQUIRE(!fit.modes.empty());
  CHECK(std::abs(std::abs(fit.modes[0].residues[0]) - 1.0) < 1e-3);
  CHECK(std::abs(std::remainder(std::arg(fit.modes[0].residues[0]) - phi, kTwoPi)) <
        0.01);
}
