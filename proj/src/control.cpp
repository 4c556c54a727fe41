#include "cbc/control.hpp"

#include <cmath>
#include <numbers>

namespace cbc {

void LoopSettings::validate() const {
    if (max_periods < stationarity_count) {
        throw ValidationError("loop.max_periods must be at least the stationarity count");
    }
    if (stationarity_count < 2 || transient_skip_periods < 0) {
        throw ValidationError("loop settings out of range");
    }
    if (!(stationarity_tol_rel > 0.0) || !(amplitude_floor > 0.0)) {
        throw ValidationError("loop tolerances must be positive");
    }
}

ControlLoop::ControlLoop(Plant& plant, const PDGains& gains, const FilterSpec& filter,
                         const LoopSettings& settings)
    : plant_(plant), gains_(gains), settings_(settings), filter_(filter) {
    settings_.validate();
    if (filter.sample_rate_hz != plant.config().sample_rate) {
        throw ValidationError("filter sample rate must match the plant sample rate");
    }
}

SettledRun ControlLoop::run_until_settled(const FourierVector& reference) {
    return run(reference, std::nullopt);
}

SettledRun ControlLoop::run_until_settled(const FourierVector& reference,
                                          std::pair<double, double> reference_forcing) {
    return run(reference, reference_forcing);
}

SettledRun ControlLoop::run(const FourierVector& reference,
                            std::optional<std::pair<double, double>> reference_forcing) {
    const double dt = plant_.dt();
    const double omega = reference.omega;
    const double period = 2.0 * std::numbers::pi / omega;
    const auto n = static_cast<std::size_t>(std::llround(period / dt));
    if (n < 16) {
        throw InvalidWindow("fewer than 16 samples per forcing period");
    }

    if (!primed_) {
        last_raw_ = plant_.output();
        last_filtered_ = filter_.process(last_raw_);
        primed_ = true;
    }

    SettledRun result;
    result.x_fv = FourierVector(omega, reference.modes());
    result.u_fv = FourierVector(omega, reference.modes());
    result.window_dt = dt;

    std::deque<double> x_buf;
    std::deque<double> u_buf;
    std::deque<FourierVector> x_history;
    std::deque<FourierVector> u_history;

    for (int p = 0; p < settings_.max_periods; ++p) {
        for (std::size_t i = 0; i < n; ++i) {
            const double t = plant_.time();
            const double x_filt = filter_.process(last_raw_);
            const double dx = derivative_estimate(last_filtered_, x_filt, dt);
            last_filtered_ = x_filt;

            double u = pd_control(reference.evaluate(t), reference.derivative(t), x_filt, dx,
                                  gains_);
            if (reference_forcing) {
                u += reference_forcing->first * std::cos(omega * t) +
                     reference_forcing->second * std::sin(omega * t);
            }
            if (sink_) {
                sink_(t, last_raw_, x_filt, u);
            }

            // The sample pair (x, u) is recorded at the tick time t, i.e. the
            // measurement the controller acted on and the input it produced.
            x_buf.push_back(last_raw_);
            u_buf.push_back(u);
            if (x_buf.size() > n + 1) {
                x_buf.pop_front();
                u_buf.pop_front();
            }

            last_raw_ = plant_.step(u);
        }
        ++total_periods_;
        result.periods_used = p + 1;
        result.window_t_end = plant_.time() - dt;

        // The window needs one sample from the previous period to span it.
        if (x_buf.size() < n + 1) {
            continue;
        }
        result.x_window.assign(x_buf.begin(), x_buf.end());
        result.u_window.assign(u_buf.begin(), u_buf.end());
        recursive_update(result.x_fv, result.x_window, dt, result.window_t_end);
        recursive_update(result.u_fv, result.u_window, dt, result.window_t_end);
        x_history.push_back(result.x_fv);
        u_history.push_back(result.u_fv);

        if (p + 1 <= settings_.transient_skip_periods) {
            continue;
        }
        const double x_tol = settings_.stationarity_tol_rel *
                             std::max(result.x_fv.fundamental_amplitude(), settings_.amplitude_floor);
        const double u_tol = settings_.stationarity_tol_rel *
                             std::max(result.u_fv.fundamental_amplitude(),
                                      settings_.amplitude_floor * (1.0 + std::abs(gains_.kp)));
        const auto count = static_cast<std::size_t>(settings_.stationarity_count);
        if (is_stationary(x_history, x_tol, count) && is_stationary(u_history, u_tol, count)) {
            result.settled = true;
            return result;
        }
    }
    throw SettleTimeout("control loop did not settle within max_periods", result);
}

}  // namespace cbc
