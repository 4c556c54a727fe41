#include "cbc/plant.hpp"

#include <cmath>
#include <numbers>

namespace cbc {

void PlantConfig::validate() const {
    if (!(sample_rate > 0.0)) {
        throw ValidationError("plant.sample_rate must be positive");
    }
    if (zeta < 0.0) {
        throw ValidationError("plant.zeta must be non-negative");
    }
    if (noise_std < 0.0) {
        throw ValidationError("plant.noise_std must be non-negative");
    }
    if (!(blowup_bound > 0.0)) {
        throw ValidationError("plant.blowup_bound must be positive");
    }
}

int PlantConfig::dimension() const {
    return model == PlantModel::Duffing ? 2 : 1;
}

Plant::Plant(const PlantConfig& config) : cfg_(config), rng_(config.rng_seed) {
    cfg_.validate();
}

double Plant::read_output() const {
    double y = state_.x[0];
    if (cfg_.noise_std > 0.0) {
        y += cfg_.noise_std * noise_(rng_);
    }
    return y;
}

void Plant::rhs(const std::array<double, 2>& x, double u, std::array<double, 2>& dx) const {
    switch (cfg_.model) {
        case PlantModel::FoldNormalForm:
            dx[0] = u - x[0] * x[0];
            dx[1] = 0.0;
            break;
        case PlantModel::Duffing:
            dx[0] = x[1];
            dx[1] = -2.0 * cfg_.zeta * cfg_.omega0 * x[1] - cfg_.omega0 * cfg_.omega0 * x[0] -
                    cfg_.gamma * x[0] * x[0] * x[0] + u;
            break;
        case PlantModel::DegenerateFlat:
            dx[0] = -x[0];
            dx[1] = 0.0;
            break;
    }
}

void Plant::rk4_step(double u) {
    const double h = dt();
    std::array<double, 2> k1{}, k2{}, k3{}, k4{}, tmp{};
    rhs(state_.x, u, k1);
    for (int i = 0; i < 2; ++i) tmp[i] = state_.x[i] + 0.5 * h * k1[i];
    rhs(tmp, u, k2);
    for (int i = 0; i < 2; ++i) tmp[i] = state_.x[i] + 0.5 * h * k2[i];
    rhs(tmp, u, k3);
    for (int i = 0; i < 2; ++i) tmp[i] = state_.x[i] + h * k3[i];
    rhs(tmp, u, k4);
    for (int i = 0; i < 2; ++i) {
        state_.x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    state_.t += h;
}

double Plant::step(double u_total) {
    if (!std::isfinite(u_total)) {
        throw PlantFault("non-finite plant input");
    }
    rk4_step(u_total);
    if (!std::isfinite(state_.x[0]) || !std::isfinite(state_.x[1])) {
        throw PlantFault("plant state became non-finite");
    }
    return read_output();
}

Plant::Trace Plant::run_uncontrolled(double a, double b, double omega, double duration) {
    Trace trace;
    const auto steps = static_cast<std::size_t>(std::llround(duration * cfg_.sample_rate));
    trace.samples.reserve(steps + 1);
    trace.samples.push_back(read_output());
    const auto forcing = [&](double t) { return a * std::cos(omega * t) + b * std::sin(omega * t); };
    const double h = dt();
    for (std::size_t i = 0; i < steps; ++i) {
        // The forcing is known analytically here, so the RK4 stages sample it
        // at the stage times and the full fourth-order accuracy is retained.
        const double t = state_.t;
        std::array<double, 2> k1{}, k2{}, k3{}, k4{}, tmp{};
        rhs(state_.x, forcing(t), k1);
        for (int j = 0; j < 2; ++j) tmp[j] = state_.x[j] + 0.5 * h * k1[j];
        rhs(tmp, forcing(t + 0.5 * h), k2);
        for (int j = 0; j < 2; ++j) tmp[j] = state_.x[j] + 0.5 * h * k2[j];
        rhs(tmp, forcing(t + 0.5 * h), k3);
        for (int j = 0; j < 2; ++j) tmp[j] = state_.x[j] + h * k3[j];
        rhs(tmp, forcing(t + h), k4);
        for (int j = 0; j < 2; ++j) {
            state_.x[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        state_.t += h;
        if (!std::isfinite(state_.x[0]) || !std::isfinite(state_.x[1]) ||
            std::abs(state_.x[0]) > cfg_.blowup_bound || std::abs(state_.x[1]) > cfg_.blowup_bound * cfg_.omega0) {
            trace.diverged = true;
            break;
        }
        trace.samples.push_back(read_output());
    }
    return trace;
}

}  // namespace cbc
