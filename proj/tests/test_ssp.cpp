#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "osckit/signal.hpp"
#include "osckit/ssp.hpp"

using namespace osckit;

TEST_CASE("estimate_oscillation_frequency finds the power beat") {
  SUBCASE("19.2 Hz modulation") {
    test::PowSpec sp;
    sp.duration_s = 4.0;
    sp.f_x = 60.0 - 19.2;  // sub-synchronous interharmonic beats at 19.2 Hz
    sp.ix = 0.05;
    Real f = estimate_oscillation_frequency(test::make_pow(sp), 10.0, 30.0);
    CHECK(std::abs(f - 19.2) <= 0.1);
  }
  SUBCASE("18.4 Hz modulation") {
    test::PowSpec sp;
    sp.duration_s = 4.0;
    sp.f_x = 60.0 - 18.4;
    sp.ix = 0.04;
    Real f = estimate_oscillation_frequency(test::make_pow(sp), 10.0, 30.0);
    CHECK(std::abs(f - 18.4) <= 0.1);
  }
  SUBCASE("clean 60 Hz only: no significant peak") {
    test::PowSpec sp;
    sp.duration_s = 4.0;
    CHECK_THROWS_AS(estimate_oscillation_frequency(test::make_pow(sp), 10.0, 30.0),
                    AnalysisError);
  }
}

TEST_CASE("sliding_phasor amplitude and leakage") {
  test::PowSpec sp;
  sp.duration_s = 2.0;
  PowRecord pow = test::make_pow(sp);

  SUBCASE("balanced 60 Hz probed at 60 Hz reads 1.0 throughout") {
    auto centers = phasor_window_centers(pow, 60.0, 60.0);
    InterharmonicPhasor ph =
        sliding_phasor(pow, PowQuantity::Voltage, 60.0, centers);
    for (Index i = 0; i < ph.phasor.size(); ++i)
      CHECK(std::abs(ph.phasor[i]) == doctest::Approx(1.0).epsilon(1e-3));
  }

  SUBCASE("balanced 60 Hz probed at 19 Hz leaks below 0.005") {
    auto centers = phasor_window_centers(pow, 19.0, 101.0);
    InterharmonicPhasor ph =
        sliding_phasor(pow, PowQuantity::Voltage, 19.0, centers);
    CHECK(ph.phasor.cwiseAbs().maxCoeff() <= 0.005);
  }

  SUBCASE("zero waveforms give a zero phasor") {
    test::PowSpec zero;
    zero.v1 = 0.0;
    zero.i1 = 0.0;
    zero.duration_s = 1.0;
    PowRecord pz = test::make_pow(zero);
    auto centers = phasor_window_centers(pz, 41.0, 79.0);
    InterharmonicPhasor ph =
        sliding_phasor(pz, PowQuantity::Current, 41.0, centers);
    CHECK(ph.phasor.cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("target at or above Nyquist rejected") {
    auto centers = phasor_window_centers(pow, 60.0, 60.0);
    CHECK_THROWS_AS(sliding_phasor(pow, PowQuantity::Voltage, 7500.0, centers),
                    InputError);
  }
}

TEST_CASE("frequency coupling: AM sidebands land at f0 -+ fm and sum to 2*f0") {
  // Amplitude-modulated balanced fundamental, modulation depth 0.2 at 19 Hz.
  const Real fs = 15000.0, f0 = 60.0, fm = 19.0, m = 0.2;
  const Index n = static_cast<Index>(2.0 * fs) + 1;
  ChannelSet cs;
  const Real shift[3] = {0.0, -kTwoPi / 3.0, kTwoPi / 3.0};
  const char* vn[3] = {"va", "vb", "vc"};
  const char* in_[3] = {"ia", "ib", "ic"};
  for (int ph = 0; ph < 3; ++ph) {
    cs.add(test::make_series(vn[ph], 0.0, fs, n, [=](Real t) {
      return (1.0 + m * std::cos(kTwoPi * fm * t)) *
             std::cos(kTwoPi * f0 * t + shift[ph]);
    }));
  }
  for (int ph = 0; ph < 3; ++ph)
    cs.add(test::make_series(in_[ph], 0.0, fs, n,
                             [=](Real t) { return std::cos(kTwoPi * f0 * t + shift[ph]); }));
  PowRecord pow = PowRecord::from(std::move(cs), f0);

  const Real f_sub = f0 - fm, f_sup = f0 + fm;
  CHECK(f_sub + f_sup == doctest::Approx(2.0 * f0).epsilon(1e-15));
  auto centers = phasor_window_centers(pow, f_sub, f_sup);
  InterharmonicPhasor sub = sliding_phasor(pow, PowQuantity::Voltage, f_sub, centers);
  InterharmonicPhasor sup = sliding_phasor(pow, PowQuantity::Voltage, f_sup, centers);
  // Each sideband carries m/2 of the carrier amplitude.
  CHECK(std::abs(sub.phasor[sub.phasor.size() / 2]) ==
        doctest::Approx(m / 2.0).epsilon(0.01));
  CHECK(std::abs(sup.phasor[sup.phasor.size() / 2]) ==
        doctest::Approx(m / 2.0).epsilon(0.01));
}

TEST_CASE("ssp closed form: absorbed sub power flags a source") {
  // V_sub = 0.02 at 0 deg, I_sub = 0.05 at 180 deg (into device), no super
  // component: p_sc = 1.5*0.02*0.05*cos(180) = -0.0015 pu.
  test::PowSpec sp;
  sp.duration_s = 4.0;
  sp.i1 = 0.8;
  sp.i1_phase = -0.3;
  sp.f_x = 41.0;
  sp.vx = 0.02;
  sp.vx_phase = 0.0;
  sp.ix = 0.05;
  sp.ix_phase = kPi;
  PowRecord pow = test::make_pow(sp);

  SspResult r = analyze_pow_device("ibr", pow, 19.0, 0.5, 3.5, true);
  CHECK(r.f_sub == doctest::Approx(41.0));
  CHECK(r.f_sup == doctest::Approx(79.0));
  CHECK(r.mean_p_sc == doctest::Approx(-0.0015).epsilon(0.005));
  // Super track carries nothing.
  CHECK(std::abs(r.p_sup.values.mean()) < 2e-5);

  SUBCASE("sign antisymmetry under current polarity reversal") {
    SspResult flipped = analyze_pow_device("ibr", pow, 19.0, 0.5, 3.5, false);
    CHECK(flipped.mean_p_sc == doctest::Approx(-r.mean_p_sc).epsilon(1e-12));
    CHECK((flipped.p_sc.values + r.p_sc.values).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("in-phase sub current makes a sink") {
    test::PowSpec sink = sp;
    sink.ix_phase = 0.0;
    SspResult rs = analyze_pow_device("ibr", test::make_pow(sink), 19.0, 0.5, 3.5, true);
    CHECK(rs.mean_p_sc == doctest::Approx(+0.0015).epsilon(0.005));
  }
}

TEST_CASE("zero interharmonics: p_sc is zero and not a source") {
  test::PowSpec sp;
  sp.duration_s = 2.0;
  SspResult r = analyze_pow_device("idle", test::make_pow(sp), 19.0, 0.3, 1.7, true);
  CHECK(std::abs(r.mean_p_sc) < 1e-6);
  auto cls = classify_sources({r}, 1e-4);
  CHECK_FALSE(cls[0].is_source);
}

TEST_CASE("classify_sources thresholds and ordering") {
  auto mk = [](const std::string& d, Real mean) {
    SspResult r;
    r.device = d;
    r.f_sub = 41.0;
    r.f_sup = 79.0;
    r.mean_p_sc = mean;
    return r;
  };
  auto out = classify_sources({mk("a", -0.001), mk("b", -0.002), mk("c", 0.0005)},
                              1e-4);
  REQUIRE(out.size() == 3);
  CHECK(out[0].device == "b");
  CHECK(out[1].device == "a");
  CHECK(out[0].is_source);
  CHECK(out[1].is_source);
  CHECK_FALSE(out[2].is_source);

  auto none = classify_sources({mk("a", 0.001), mk("b", 0.002)});
  for (const auto& r : none) CHECK_FALSE(r.is_source);
}

TEST_CASE("ssp_power validates the frequency pair") {
  test::PowSpec sp;
  sp.duration_s = 1.0;
  PowRecord pow = test::make_pow(sp);
  auto centers = phasor_window_centers(pow, 41.0, 80.0);
  auto v41 = sliding_phasor(pow, PowQuantity::Voltage, 41.0, centers);
  auto i41 = sliding_phasor(pow, PowQuantity::Current, 41.0, centers);
  auto v80 = sliding_phasor(pow, PowQuantity::Voltage, 80.0, centers);
  auto i80 = sliding_phasor(pow, PowQuantity::Current, 80.0, centers);
  CHECK_THROWS_AS(ssp_power("x", v41, i41, v80, i80, 60.0, 0.2, 0.8), InputError);
}

TEST_CASE("instantaneous power beat is consistent with extracted phasors") {
  test::PowSpec sp;
  sp.duration_s = 4.0;
  sp.i1 = 0.9;
  sp.i1_phase = -0.4;
  sp.f_x = 41.0;
  sp.vx = 0.01;
  sp.vx_phase = 0.7;
  sp.ix = 0.05;
  sp.ix_phase = 2.0;
  PowRecord pow = test::make_pow(sp);
  const Real fm = 19.0;

  auto centers = phasor_window_centers(pow, 41.0, 79.0);
  auto v1 = sliding_phasor(pow, PowQuantity::Voltage, 60.0, centers);
  auto i1 = sliding_phasor(pow, PowQuantity::Current, 60.0, centers);
  auto vs = sliding_phasor(pow, PowQuantity::Voltage, 41.0, centers);
  auto is = sliding_phasor(pow, PowQuantity::Current, 41.0, centers);

  const Index mid = v1.phasor.size() / 2;
  // Beat amplitude at fm from the phasor picture (no super content present).
  const Complex a = v1.phasor[mid] * std::conj(is.phasor[mid]) +
                    std::conj(vs.phasor[mid]) * i1.phasor[mid];
  const Real predicted_rms = 1.5 * std::abs(a) / std::sqrt(2.0);

  auto [p, q] = instantaneous_pq(pow);
  (void)q;
  Vec posc = bandpassed(detrended(p.values, DetrendMode::Mean), fm - 3.0,
                        fm + 3.0, pow.fs());
  const Index lo = p.index_at(1.0), hi = p.index_at(3.0);
  const Real measured_rms =
      std::sqrt(posc.segment(lo, hi - lo).squaredNorm() / (hi - lo));
  CHECK(measured_rms == doctest::Approx(predicted_rms).epsilon(0.05));
}
