#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "cbc/config.hpp"
#include "cbc/control.hpp"
#include "cbc/plant.hpp"

namespace testutil {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline cbc::PlantConfig duffing_config() {
    cbc::PlantConfig pc;
    pc.model = cbc::PlantModel::Duffing;
    pc.omega0 = kTwoPi * 20.0;
    pc.zeta = 0.03;
    pc.gamma = 4000.0;
    pc.sample_rate = 5000.0;
    return pc;
}

inline cbc::PlantConfig linear_config() {
    cbc::PlantConfig pc = duffing_config();
    pc.gamma = 0.0;
    return pc;
}

// Stabilizing loop parameters shared by the shipped run configs.
inline cbc::PDGains run_gains() { return {3500.0, 2.0}; }
inline cbc::FilterSpec run_filter() { return {4, 1500.0, 5000.0}; }

inline cbc::StepControl branch_step() {
    cbc::StepControl step;
    step.h = 1.0;
    step.h_min = 0.05;
    step.h_max = 4.0;
    step.max_points = 60;
    step.forcing_max = 2600.0;
    step.response_max = 2.0;
    step.ds_min = 0.005;
    step.ds_max = 0.05;
    return step;
}

// Window of n+1 samples of f over the period ending at t_end.
template <typename F>
std::vector<double> sample_window(F&& f, double t_end, double dt, std::size_t n) {
    std::vector<double> w(n + 1);
    const double t0 = t_end - static_cast<double>(n) * dt;
    for (std::size_t i = 0; i <= n; ++i) {
        w[i] = f(t0 + static_cast<double>(i) * dt);
    }
    return w;
}

}  // namespace testutil
