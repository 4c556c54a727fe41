#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "cbc/fourier.hpp"
#include "cbc/plant.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using cbc::Plant;
using cbc::PlantConfig;
using cbc::PlantModel;
using cbc::PlantState;

TEST_CASE("plant configuration validation") {
    PlantConfig pc = testutil::duffing_config();
    pc.sample_rate = 0.0;
    CHECK_THROWS_AS(Plant{pc}, cbc::ValidationError);
    pc = testutil::duffing_config();
    pc.zeta = -0.1;
    CHECK_THROWS_AS(Plant{pc}, cbc::ValidationError);
    pc = testutil::duffing_config();
    pc.noise_std = -1e-3;
    CHECK_THROWS_AS(Plant{pc}, cbc::ValidationError);
    pc = testutil::duffing_config();
    pc.blowup_bound = 0.0;
    CHECK_THROWS_AS(Plant{pc}, cbc::ValidationError);
}

TEST_CASE("identical config and seed give bit-identical runs") {
    PlantConfig pc = testutil::duffing_config();
    pc.noise_std = 1e-3;
    pc.rng_seed = 42;
    Plant a(pc), b(pc);
    for (int i = 0; i < 500; ++i) {
        const double u = 100.0 * std::sin(0.01 * i);
        CHECK(a.step(u) == b.step(u));
    }
    CHECK(a.output() == b.output());
    CHECK(a.time() == b.time());
}

TEST_CASE("sensor noise perturbs the sample, not the state") {
    PlantConfig noisy = testutil::duffing_config();
    noisy.noise_std = 0.05;
    Plant a(noisy), clean(testutil::duffing_config());
    bool saw_noise = false;
    for (int i = 0; i < 400; ++i) {
        const double u = 50.0 * std::cos(0.02 * i);
        const double ya = a.step(u);
        const double yc = clean.step(u);
        saw_noise = saw_noise || ya != yc;
        CHECK(a.output() == clean.output());  // noise-free internal state
    }
    CHECK(saw_noise);
}

TEST_CASE("integration converges at fourth order") {
    // Free decay of the hardening oscillator; the max trace error against a
    // much finer run must shrink by ~16x per halving of the step.
    const auto trace_at = [](double fs) {
        PlantConfig pc = testutil::duffing_config();
        pc.sample_rate = fs;
        Plant plant(pc);
        PlantState st;
        st.x = {0.01, 0.0};
        plant.set_state(st);
        return plant.run_uncontrolled(0.0, 0.0, 1.0, 0.1);
    };
    const auto ref = trace_at(64000.0);
    const auto max_err = [&](double fs) {
        const auto trace = trace_at(fs);
        const std::size_t stride = static_cast<std::size_t>(64000.0 / fs);
        double mx = 0.0;
        for (std::size_t i = 0; i < trace.samples.size(); ++i) {
            mx = std::max(mx, std::abs(trace.samples[i] - ref.samples[i * stride]));
        }
        return mx;
    };
    const double e1 = max_err(1000.0);
    const double e2 = max_err(2000.0);
    REQUIRE(e2 > 0.0);
    const double order = std::log2(e1 / e2);
    CHECK(order > 3.5);
    CHECK(order < 4.5);
}

TEST_CASE("blow-up during an open-loop run is divergence, not a fault") {
    PlantConfig pc;
    pc.model = PlantModel::FoldNormalForm;
    pc.sample_rate = 5000.0;
    Plant plant(pc);
    PlantState st;
    st.x = {-1.0, 0.0};  // below the repelling equilibrium of xdot = -x^2
    plant.set_state(st);
    const auto trace = plant.run_uncontrolled(0.0, 0.0, 1.0, 2.0);
    CHECK(trace.diverged);
    CHECK_FALSE(trace.samples.empty());
}

TEST_CASE("non-finite input trips the stepwise interface") {
    Plant plant(testutil::duffing_config());
    CHECK_THROWS_AS(plant.step(std::numeric_limits<double>::quiet_NaN()), cbc::PlantFault);
    CHECK_THROWS_AS(plant.step(std::numeric_limits<double>::infinity()), cbc::PlantFault);
}

TEST_CASE("unforced plant at rest stays at rest") {
    Plant plant(testutil::duffing_config());
    for (int i = 0; i < 1000; ++i) {
        CHECK(plant.step(0.0) == 0.0);
    }
    Plant fresh(testutil::duffing_config());
    const auto trace = fresh.run_uncontrolled(0.0, 0.0, testutil::kTwoPi * 20.0, 1.0);
    for (const double s : trace.samples) {
        CHECK(s == 0.0);
    }
}

TEST_CASE("fold normal form decays monotonically onto the stable root") {
    PlantConfig pc;
    pc.model = PlantModel::FoldNormalForm;
    pc.sample_rate = 5000.0;
    Plant plant(pc);
    PlantState st;
    st.x = {2.0, 0.0};
    plant.set_state(st);
    double prev = 2.0;
    double x = 2.0;
    for (int i = 0; i < 50000; ++i) {
        x = plant.step(1.0);
        CHECK(x <= prev);
        prev = x;
    }
    CHECK(x == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("linear steady amplitude matches the closed-form receptance") {
    // omega0 = 1 rad/s, forcing at 2 rad/s; sample rate chosen so one period
    // is exactly 1000 samples.
    PlantConfig pc;
    pc.model = PlantModel::Duffing;
    pc.omega0 = 1.0;
    pc.zeta = 0.05;
    pc.gamma = 0.0;
    pc.sample_rate = 1000.0 / std::numbers::pi;
    Plant plant(pc);
    const double f0 = 3.0;
    const auto trace = plant.run_uncontrolled(f0, 0.0, 2.0, 200.0);
    REQUIRE_FALSE(trace.diverged);
    const double dt = plant.dt();
    const std::vector<double> window(trace.samples.end() - 1001, trace.samples.end());
    const double t_end = static_cast<double>(trace.samples.size() - 1) * dt;
    const cbc::FourierVector fv = cbc::project(window, dt, t_end, 2.0, 1);
    const double expected = f0 * std::abs(oracle::linear_frf({1.0, 0.05, 0.0}, 2.0));
    CHECK(fv.fundamental_amplitude() == doctest::Approx(expected).epsilon(1e-3));
}

TEST_CASE("steady linear orbit persists under its own forcing") {
    PlantConfig pc = testutil::duffing_config();
    pc.gamma = 0.0;
    Plant plant(pc);
    const double omega = testutil::kTwoPi * 20.0;
    const std::size_t n = 250;
    const double dt = plant.dt();
    // Long enough to settle, then 20 further periods to watch for drift.
    const auto trace = plant.run_uncontrolled(100.0, 0.0, omega, 4.0);
    REQUIRE_FALSE(trace.diverged);
    const auto amp_ending_at = [&](std::size_t last) {
        const std::vector<double> window(trace.samples.begin() + static_cast<long>(last - n),
                                         trace.samples.begin() + static_cast<long>(last) + 1);
        return cbc::project(window, dt, static_cast<double>(last) * dt, omega, 1)
            .fundamental_amplitude();
    };
    const std::size_t end = trace.samples.size() - 1;
    const double late = amp_ending_at(end);
    const double early = amp_ending_at(end - 20 * n);
    CHECK(std::abs(late - early) < 1e-3 * early);
}

TEST_CASE("undamped free vibration conserves energy") {
    PlantConfig pc = testutil::duffing_config();
    pc.zeta = 0.0;
    Plant plant(pc);
    PlantState st;
    st.x = {0.05, 0.0};
    plant.set_state(st);
    const auto energy = [&pc](const PlantState& s) {
        const double x = s.x[0], v = s.x[1];
        return 0.5 * v * v + 0.5 * pc.omega0 * pc.omega0 * x * x +
               0.25 * pc.gamma * x * x * x * x;
    };
    const double h0 = energy(plant.state());
    for (int i = 0; i < 25000; ++i) {  // 100 periods at 20 Hz, 5 kHz
        plant.step(0.0);
    }
    CHECK(std::abs(energy(plant.state()) - h0) < 1e-6 * h0);
}

TEST_CASE("fold normal form settles on the stable equilibrium") {
    PlantConfig pc;
    pc.model = PlantModel::FoldNormalForm;
    pc.sample_rate = 5000.0;
    Plant plant(pc);
    PlantState st;
    st.x = {0.5, 0.0};
    plant.set_state(st);
    double x = 0.0;
    for (int i = 0; i < 50000; ++i) {
        x = plant.step(1.0);  // equilibria at x = +-1, +1 attracting
    }
    CHECK(std::abs(x - 1.0) < 1e-6);
    CHECK(pc.dimension() == 1);
    CHECK(testutil::duffing_config().dimension() == 2);
}
