#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "cbc/errors.hpp"

namespace cbc {

enum class PlantModel {
    FoldNormalForm,  // xdot = p - x^2, scalar state
    Duffing,         // xddot + 2*zeta*omega0*xdot + omega0^2*x + gamma*x^3 = u
    DegenerateFlat,  // xdot = -x + 0*p, output independent of the input
};

struct PlantConfig {
    PlantModel model = PlantModel::Duffing;
    double omega0 = 2.0 * 3.14159265358979323846 * 20.0;  // rad/s
    double zeta = 0.03;
    double gamma = 4000.0;  // cubic stiffness, 1/(amplitude^2 s^2)
    double sample_rate = 5000.0;  // Hz
    double noise_std = 0.0;       // output units
    std::uint64_t rng_seed = 1;
    double blowup_bound = 1e6;  // |state| beyond this counts as divergence

    void validate() const;
    int dimension() const;
};

struct PlantState {
    std::array<double, 2> x{0.0, 0.0};
    double t = 0.0;
};

// Stepwise black-box dynamical system: scalar forcing in, one noisy
// displacement sample out per tick. Deterministic for a fixed config and
// seed. Integration is classical RK4 at the sample rate with the input held
// constant over each step.
class Plant {
  public:
    explicit Plant(const PlantConfig& config);

    const PlantConfig& config() const { return cfg_; }
    double dt() const { return 1.0 / cfg_.sample_rate; }
    double time() const { return state_.t; }
    PlantState state() const { return state_; }
    void set_state(const PlantState& s) { state_ = s; }

    // Advances one sample period under constant input and returns the
    // displacement sample (plus sensor noise). Throws PlantFault on
    // non-finite input or state.
    double step(double u_total);

    // Current displacement without sensor noise and without advancing time.
    double output() const { return state_.x[0]; }

    struct Trace {
        std::vector<double> samples;
        bool diverged = false;
    };

    // Open-loop run with u = a*cos(omega t) + b*sin(omega t) from the
    // current state. State blow-up is reported as divergence, not a fault.
    Trace run_uncontrolled(double a, double b, double omega, double duration);

  private:
    double read_output() const;
    void rhs(const std::array<double, 2>& x, double u, std::array<double, 2>& dx) const;
    void rk4_step(double u);

    PlantConfig cfg_;
    PlantState state_;
    mutable std::mt19937_64 rng_;
    mutable std::normal_distribution<double> noise_{0.0, 1.0};
};

}  // namespace cbc
