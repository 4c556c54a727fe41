#include <doctest.h>

#include <cmath>
#include <complex>

#include "cbc/continuation.hpp"
#include "cbc/control.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using cbc::ControlLoop;
using cbc::FourierVector;
using cbc::LoopSettings;
using testutil::kTwoPi;

TEST_CASE("loop settings validation") {
    LoopSettings s;
    s.max_periods = 3;
    s.stationarity_count = 5;
    CHECK_THROWS_AS(s.validate(), cbc::ValidationError);
    s = LoopSettings{};
    s.stationarity_count = 1;
    CHECK_THROWS_AS(s.validate(), cbc::ValidationError);
    s = LoopSettings{};
    s.stationarity_tol_rel = 0.0;
    CHECK_THROWS_AS(s.validate(), cbc::ValidationError);
    CHECK_THROWS_AS(
        [] {
            cbc::Plant plant(testutil::duffing_config());
            ControlLoop loop(plant, testutil::run_gains(), {4, 75.0, 2000.0}, LoopSettings{});
        }(),
        cbc::ValidationError);
}

TEST_CASE("controlled run settles quickly onto a moderate orbit") {
    cbc::Plant plant(testutil::duffing_config());
    // Two consecutive stationary periods mark when the transient has died;
    // the default asks for a longer confirmation streak on top of that.
    LoopSettings s;
    s.stationarity_count = 2;
    ControlLoop loop(plant, testutil::run_gains(), testutil::run_filter(), s);
    const double omega = kTwoPi * 21.0;
    const cbc::SettledRun run = loop.run_until_settled(FourierVector::harmonic(omega, 7, 0.5, 0.0));
    CHECK(run.settled);
    CHECK(run.periods_used <= 40);
    CHECK(run.x_fv.fundamental_amplitude() > 0.1);
    CHECK(loop.total_periods() == run.periods_used);
}

TEST_CASE("linear plant: near-zero invasiveness and the closed-form response") {
    // 20 Hz at 5 kHz is an exact 250-sample period, so no window leakage
    // masks the residual.
    cbc::Plant plant(testutil::linear_config());
    // Tight stationarity so the measured residual reflects the plant, not an
    // early stop of the settling transient.
    LoopSettings s;
    s.stationarity_tol_rel = 1e-7;
    ControlLoop loop(plant, testutil::run_gains(), testutil::run_filter(), s);
    const double omega = kTwoPi * 20.0;
    cbc::CorrectorSettings corr;
    const cbc::BranchPoint pt =
        cbc::correct_fixed_point(loop, FourierVector::harmonic(omega, 5, 0.2, 0.0), corr);
    CHECK(pt.iterations == 1);
    CHECK(pt.measures.error_pct < 1e-4);  // e_rel below 1e-6

    // Receptance check away from resonance, where the closed form is not
    // hypersensitive to the discretization (25 Hz: 200 samples per period).
    const double omega2 = kTwoPi * 25.0;
    const cbc::BranchPoint pt2 =
        cbc::correct_fixed_point(loop, FourierVector::harmonic(omega2, 5, 0.2, 0.0), corr);
    const double gain = pt2.measures.response_amp / pt2.measures.forcing_amp;
    const double expected = std::abs(oracle::linear_frf({}, omega2));
    CHECK(gain == doctest::Approx(expected).epsilon(1e-3));
}

TEST_CASE("accepted nonlinear point matches the shooting oracle") {
    cbc::Plant plant(testutil::duffing_config());
    ControlLoop loop(plant, testutil::run_gains(), testutil::run_filter(), LoopSettings{});
    const double omega = kTwoPi * 22.5;
    cbc::CorrectorSettings corr;
    const cbc::BranchPoint pt =
        cbc::correct_fixed_point(loop, FourierVector::harmonic(omega, 7, 0.3, 0.0), corr);
    CHECK(pt.iterations <= 5);
    CHECK(pt.settle_cycles >= pt.iterations);

    const auto shot = oracle::shoot_periodic({}, pt.a, pt.b, omega,
                                             {pt.x.evaluate(0.0), pt.x.derivative(0.0)});
    REQUIRE(shot.converged);
    const double t_end = static_cast<double>(shot.samples.size() - 1) * shot.dt;
    const auto ref = oracle::naive_fourier(shot.samples, 0.0, shot.dt, omega, 1);
    const double r_oracle = std::hypot(ref[1], ref[2]);
    CHECK(pt.measures.response_amp == doctest::Approx(r_oracle).epsilon(0.005));
    CHECK(t_end == doctest::Approx(kTwoPi / omega).epsilon(1e-12));
}

TEST_CASE("pd control law arithmetic") {
    const cbc::PDGains gains{0.2, -0.004};
    CHECK(cbc::pd_control(0.7, -3.1, 0.7, -3.1, gains) == 0.0);
    CHECK(cbc::pd_control(1.5, 2.0, 0.5, 2.0, gains) == doctest::Approx(0.2));
    CHECK(cbc::pd_control(0.0, 10.0, 0.0, 0.0, gains) == doctest::Approx(-0.04));
}

TEST_CASE("fundamental forcing update arithmetic") {
    // Reference gains of the general feedback variant.
    const cbc::PDGains gains{0.2, -0.004};
    const auto [a, b] = cbc::update_fundamental_forcing(10.0, -2.0, 0.5, -0.25, 0.4, -0.2,
                                                        gains, 3.0);
    // a = a* + kp (A1* - A1) + w kd (B1* - B1)
    CHECK(a == doctest::Approx(10.0 + 0.2 * 0.1 + 3.0 * (-0.004) * (-0.05)).epsilon(1e-12));
    // b = b* + kp (B1* - B1) - w kd (A1* - A1)
    CHECK(b == doctest::Approx(-2.0 + 0.2 * (-0.05) + 3.0 * (-0.004) * (-0.1)).epsilon(1e-12));

    // Matching measured and reference coefficients leave the drive unchanged.
    const auto [a2, b2] =
        cbc::update_fundamental_forcing(7.0, 1.0, 0.5, -0.25, 0.5, -0.25, gains, 3.0);
    CHECK(a2 == 7.0);
    CHECK(b2 == 1.0);

    // Proportional-only: a unit cosine mismatch moves only a, by kp.
    const auto [a3, b3] = cbc::update_fundamental_forcing(7.0, 1.0, 1.5, -0.25, 0.5, -0.25,
                                                          {0.2, 0.0}, kTwoPi * 22.0);
    CHECK(a3 == doctest::Approx(7.2).epsilon(1e-12));
    CHECK(b3 == doctest::Approx(1.0).epsilon(1e-12));

    // Derivative-only: a unit sine mismatch moves only a, by omega*kd.
    const auto [a4, b4] = cbc::update_fundamental_forcing(7.0, 1.0, 0.5, 0.75, 0.5, -0.25,
                                                          {0.0, -0.004}, kTwoPi * 22.0);
    CHECK(a4 == doctest::Approx(7.0 - 0.004 * kTwoPi * 22.0).epsilon(1e-12));
    CHECK(b4 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("settle timeout carries the partial run") {
    cbc::Plant plant(testutil::duffing_config());
    LoopSettings s;
    s.max_periods = 6;
    s.stationarity_count = 5;
    s.stationarity_tol_rel = 1e-13;
    ControlLoop loop(plant, testutil::run_gains(), testutil::run_filter(), s);
    const double omega = kTwoPi * 20.0;
    try {
        loop.run_until_settled(FourierVector::harmonic(omega, 3, 0.3, 0.0));
        FAIL("expected a settle timeout");
    } catch (const cbc::SettleTimeout& e) {
        CHECK(e.partial.periods_used == 6);
        CHECK_FALSE(e.partial.settled);
        CHECK(e.partial.x_window.size() == 251);
        CHECK(e.partial.u_window.size() == e.partial.x_window.size());
    }
}

TEST_CASE("trace sink observes every tick") {
    cbc::Plant plant(testutil::duffing_config());
    LoopSettings s;
    ControlLoop loop(plant, testutil::run_gains(), testutil::run_filter(), s);
    long ticks = 0;
    double last_t = -1.0;
    loop.set_trace_sink([&](double t, double, double, double) {
        CHECK(t > last_t);
        last_t = t;
        ++ticks;
    });
    const cbc::SettledRun run =
        loop.run_until_settled(cbc::FourierVector::harmonic(kTwoPi * 20.0, 3, 0.1, 0.0));
    CHECK(ticks == 250L * run.periods_used);
}
