#include <doctest.h>

#include <cmath>
#include <deque>
#include <numbers>
#include <vector>

#include "cbc/fourier.hpp"
#include "cbc/plant.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using cbc::FourierVector;
using testutil::kTwoPi;
using testutil::sample_window;

namespace {

// 20 Hz at 5 kHz: exactly 250 samples per period, so the trapezoid
// quadrature is free of window-length bias.
constexpr double kOmega = kTwoPi * 20.0;
constexpr double kDt = 1.0 / 5000.0;
constexpr std::size_t kN = 250;

FourierVector make_rich(double omega) {
    FourierVector fv(omega, 3);
    fv.a0 = 0.8;
    fv.a = {1.2, -0.4, 0.05};
    fv.b = {-0.7, 0.3, -0.02};
    return fv;
}

}  // namespace

TEST_CASE("direct evaluation of small coefficient sets") {
    FourierVector zero(kOmega, 3);
    CHECK(zero.evaluate(0.0) == 0.0);
    CHECK(zero.evaluate(0.123) == 0.0);

    FourierVector tone(kOmega, 1);
    tone.a[0] = 1.0;
    CHECK(tone.evaluate(0.0) == doctest::Approx(1.0));
    CHECK(tone.evaluate(std::numbers::pi / kOmega) == doctest::Approx(-1.0));

    // x(t) = A0/2 + B2 sin(2 w t) at w = 1, t = pi/4.
    FourierVector mix(1.0, 2);
    mix.a0 = 2.0;
    mix.b[1] = 3.0;
    CHECK(mix.evaluate(std::numbers::pi / 4.0) == doctest::Approx(4.0));
}

TEST_CASE("projection of a constant lands on the doubled mean") {
    const std::vector<double> window(kN + 1, 5.0);
    const FourierVector fv = cbc::project(window, kDt, 0.05, kOmega, 3);
    CHECK(fv.a0 == doctest::Approx(10.0).epsilon(1e-12));
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(std::abs(fv.a[k]) < 1e-9);
        CHECK(std::abs(fv.b[k]) < 1e-9);
    }
}

TEST_CASE("batch projection matches the plain trapezoid analysis") {
    const auto signal = [](double t) {
        return 0.4 + 1.1 * std::cos(kOmega * t) - 0.6 * std::sin(kOmega * t) +
               0.2 * std::cos(2.0 * kOmega * t) + 0.07 * std::sin(3.0 * kOmega * t);
    };
    const double t_end = 1.7;
    const auto window = sample_window(signal, t_end, kDt, kN);
    const FourierVector fv = cbc::project(window, kDt, t_end, kOmega, 3);

    const double t0 = t_end - static_cast<double>(kN) * kDt;
    const auto ref = oracle::naive_fourier(window, t0, kDt, kOmega, 3);
    CHECK(fv.a0 == doctest::Approx(ref[0]).epsilon(1e-12));
    for (std::size_t k = 1; k <= 3; ++k) {
        CHECK(fv.a[k - 1] == doctest::Approx(ref[2 * k - 1]).epsilon(1e-12));
        CHECK(fv.b[k - 1] == doctest::Approx(ref[2 * k]).epsilon(1e-12));
    }
}

TEST_CASE("projection of a synthesized coefficient set is the identity") {
    const FourierVector truth = make_rich(kOmega);
    const double t_end = 0.31;
    const auto window =
        sample_window([&](double t) { return truth.evaluate(t); }, t_end, kDt, kN);
    const FourierVector fv = cbc::project(window, kDt, t_end, kOmega, 3);
    CHECK(fv.max_coefficient_diff(truth) < 1e-10);
    CHECK(std::abs(fv.a0 - truth.a0) < 1e-10);
}

TEST_CASE("one recursive update from zero equals the batch projection") {
    const FourierVector truth = make_rich(kOmega);
    const double t_end = 0.12;
    const auto window =
        sample_window([&](double t) { return truth.evaluate(t); }, t_end, kDt, kN);

    FourierVector fv(kOmega, 3);
    cbc::recursive_update(fv, window, kDt, t_end);
    const FourierVector batch = cbc::project(window, kDt, t_end, kOmega, 3);
    CHECK(fv.max_coefficient_diff(batch) < 1e-13);
    // A band-limited tone is recovered exactly in that single update.
    CHECK(fv.max_coefficient_diff(truth) < 1e-10);
    // The projection is a fixed point of the update.
    cbc::recursive_update(fv, window, kDt, t_end);
    CHECK(fv.max_coefficient_diff(batch) < 1e-9);
}

TEST_CASE("two recursive updates match the batch projection on a plant trace") {
    cbc::Plant plant(testutil::duffing_config());
    const double omega = kTwoPi * 25.0;  // 200 samples per period
    const auto trace = plant.run_uncontrolled(500.0, 0.0, omega, 3.0);
    REQUIRE_FALSE(trace.diverged);
    const std::size_t n = 200;
    REQUIRE(trace.samples.size() > 2 * n + 1);
    const double t_end = static_cast<double>(trace.samples.size() - 1) * kDt;
    const std::vector<double> window(trace.samples.end() - static_cast<long>(n) - 1,
                                     trace.samples.end());
    const FourierVector batch = cbc::project(window, kDt, t_end, omega, 5);

    SUBCASE("starting from zero") {
        FourierVector fv(omega, 5);
        cbc::recursive_update(fv, window, kDt, t_end);
        cbc::recursive_update(fv, window, kDt, t_end);
        CHECK(fv.max_coefficient_diff(batch) < 1e-6);
    }
    SUBCASE("starting from the previous period's estimate") {
        const double prev_end = t_end - static_cast<double>(n) * kDt;
        const std::vector<double> prev(trace.samples.end() - static_cast<long>(2 * n) - 1,
                                       trace.samples.end() - static_cast<long>(n));
        FourierVector fv = cbc::project(prev, kDt, prev_end, omega, 5);
        cbc::recursive_update(fv, window, kDt, t_end);
        cbc::recursive_update(fv, window, kDt, t_end);
        CHECK(fv.max_coefficient_diff(batch) < 1e-6);
    }
}

TEST_CASE("short or inconsistent windows are rejected") {
    const std::vector<double> tiny(10, 0.0);
    CHECK_THROWS_AS(cbc::project(tiny, kDt, 0.002, kOmega, 2), cbc::InvalidWindow);
    const std::vector<double> half(kN / 2 + 1, 0.0);
    CHECK_THROWS_AS(cbc::project(half, kDt, 0.025, kOmega, 2), cbc::InvalidWindow);
    CHECK_THROWS_AS(cbc::project(std::vector<double>(kN + 1, 0.0), kDt, 0.05, -1.0, 2),
                    cbc::InvalidWindow);
    FourierVector fv(kOmega, 2);
    CHECK_THROWS_AS(cbc::recursive_update(fv, tiny, kDt, 0.002), cbc::InvalidWindow);
}

TEST_CASE("coefficient layout round trips") {
    const FourierVector fv = make_rich(kOmega);
    SUBCASE("non-harmonic part") {
        FourierVector other(kOmega, 3);
        other.a[0] = fv.a[0];
        other.b[0] = fv.b[0];
        other.set_nonharmonic(fv.nonharmonic());
        CHECK(other.max_coefficient_diff(fv) == 0.0);
        CHECK_THROWS_AS(other.set_nonharmonic(std::vector<double>{1.0, 2.0}), cbc::Error);
    }
    SUBCASE("flat layout") {
        const FourierVector back = FourierVector::from_flat(kOmega, fv.flat());
        CHECK(back.max_coefficient_diff(fv) == 0.0);
        CHECK(back.a0 == fv.a0);
        CHECK_THROWS_AS(FourierVector::from_flat(kOmega, std::vector<double>{1.0, 2.0}),
                        cbc::Error);
    }
}

TEST_CASE("measures: amplitude, phase invariance and the harmonic residual") {
    const double a = 2.0, b = 1.0;
    const double t_end = 0.45;
    const auto u = sample_window(
        [&](double t) { return a * std::cos(kOmega * t) + b * std::sin(kOmega * t); }, t_end,
        kDt, kN);
    const FourierVector u_fv = cbc::project(u, kDt, t_end, kOmega, 3);
    const FourierVector x_fv = make_rich(kOmega);
    const cbc::Measures m = cbc::compute_measures(u, kDt, t_end, x_fv, u_fv);
    CHECK(m.forcing_amp == doctest::Approx(std::hypot(a, b)).epsilon(1e-10));
    CHECK(m.response_amp == doctest::Approx(x_fv.fundamental_amplitude()).epsilon(1e-12));
    CHECK(m.error_rms < 1e-9);
    CHECK(m.error_pct < 1e-7);

    // The same forcing with its phase rotated has the same amplitude measure.
    const double phi = 0.7;
    const auto u2 = sample_window(
        [&](double t) { return std::hypot(a, b) * std::cos(kOmega * t + phi); }, t_end, kDt, kN);
    const FourierVector u2_fv = cbc::project(u2, kDt, t_end, kOmega, 3);
    const cbc::Measures m2 = cbc::compute_measures(u2, kDt, t_end, x_fv, u2_fv);
    CHECK(m2.forcing_amp == doctest::Approx(m.forcing_amp).epsilon(1e-10));
}

TEST_CASE("a second-harmonic sideband sets the residual scale") {
    // u = cos(wt) + 0.1 cos(2wt): F = 1 and the residual is the pure tone
    // 0.1 cos(2wt), whose RMS is 0.1/sqrt(2).
    const double t_end = 0.25;
    const auto u = sample_window(
        [](double t) { return std::cos(kOmega * t) + 0.1 * std::cos(2.0 * kOmega * t); },
        t_end, kDt, kN);
    const FourierVector u_fv = cbc::project(u, kDt, t_end, kOmega, 3);
    const cbc::Measures m = cbc::compute_measures(u, kDt, t_end, make_rich(kOmega), u_fv);
    CHECK(m.forcing_amp == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(m.error_rms == doctest::Approx(0.1 / std::sqrt(2.0)).epsilon(1e-6));
    CHECK(m.error_pct == doctest::Approx(100.0 * 0.1 / std::sqrt(2.0)).epsilon(1e-6));
}

TEST_CASE("measures are undefined without fundamental forcing") {
    const double t_end = 0.05;
    const auto u = sample_window([](double t) { return 0.3 * std::cos(2.0 * kOmega * t); },
                                 t_end, kDt, kN);
    FourierVector u_fv = cbc::project(u, kDt, t_end, kOmega, 3);
    u_fv.a[0] = 0.0;  // strip projection roundoff; the drive has no fundamental
    u_fv.b[0] = 0.0;
    CHECK_THROWS_AS(cbc::compute_measures(u, kDt, t_end, make_rich(kOmega), u_fv),
                    cbc::InvasivenessUndefined);
}

TEST_CASE("stationarity over coefficient history") {
    std::deque<FourierVector> history;
    FourierVector fv = make_rich(kOmega);
    history.push_back(fv);
    CHECK_FALSE(cbc::is_stationary(history, 1e-3, 3));  // too short
    history.push_back(fv);
    history.push_back(fv);
    CHECK(cbc::is_stationary(history, 1e-3, 3));
    fv.a[1] += 0.01;
    history.push_back(fv);
    CHECK_FALSE(cbc::is_stationary(history, 1e-3, 3));
    CHECK_FALSE(cbc::is_stationary(history, 1e-3, 1));  // needs at least two snapshots
    CHECK(cbc::is_stationary(history, 0.1, 3));
}
