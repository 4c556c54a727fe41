#pragma once

#include <deque>
#include <functional>
#include <optional>

#include "cbc/filter.hpp"
#include "cbc/fourier.hpp"
#include "cbc/plant.hpp"

namespace cbc {

struct PDGains {
    double kp = 0.2;
    double kd = -0.004;
};

struct LoopSettings {
    int max_periods = 200;
    int stationarity_count = 5;
    int transient_skip_periods = 3;
    double stationarity_tol_rel = 1e-3;
    double amplitude_floor = 1e-6;

    void validate() const;
};

// u = kp*(x* - x) + kd*(xdot* - xdot), with the measured side filtered.
inline double pd_control(double xstar, double dxstar, double x_filt, double dx_est,
                         const PDGains& gains) {
    return gains.kp * (xstar - x_filt) + gains.kd * (dxstar - dx_est);
}

struct SettledRun {
    FourierVector x_fv;  // output coefficients, estimated from raw samples
    FourierVector u_fv;  // total input coefficients
    std::vector<double> x_window;  // last period, aligned sample times
    std::vector<double> u_window;
    double window_t_end = 0.0;
    double window_dt = 0.0;
    int periods_used = 0;
    bool settled = false;
};

// run_until_settled exceeded max_periods; carries the partial data.
struct SettleTimeout : Error {
    SettleTimeout(const std::string& msg, SettledRun partial_)
        : Error(msg), partial(std::move(partial_)) {}
    SettledRun partial;
};

// The sampled control leg around one plant: Butterworth filter on the
// measurement, two-point finite-difference derivative, PD law, per-period
// recursive Fourier estimation of output and input. The plant, filter and
// sample history persist across calls, so consecutive runs continue a single
// uninterrupted experiment.
class ControlLoop {
  public:
    ControlLoop(Plant& plant, const PDGains& gains, const FilterSpec& filter,
                const LoopSettings& settings);

    // Runs the loop until the Fourier coefficients of output and input are
    // stationary. `reference_forcing` (a*, b*) adds the explicit harmonic
    // drive of the general feedback variant; without it all forcing comes
    // from the PD terms. Throws SettleTimeout after max_periods.
    SettledRun run_until_settled(const FourierVector& reference);
    SettledRun run_until_settled(const FourierVector& reference,
                                 std::pair<double, double> reference_forcing);

    Plant& plant() { return plant_; }
    const PDGains& gains() const { return gains_; }
    const LoopSettings& settings() const { return settings_; }

    // Total forcing periods consumed since construction (the cost currency).
    long total_periods() const { return total_periods_; }

    // Optional per-sample sink (t, x_raw, x_filt, u) for trace dumps.
    using TraceSink = std::function<void(double, double, double, double)>;
    void set_trace_sink(TraceSink sink) { sink_ = std::move(sink); }

  private:
    SettledRun run(const FourierVector& reference,
                   std::optional<std::pair<double, double>> reference_forcing);

    Plant& plant_;
    PDGains gains_;
    LoopSettings settings_;
    ButterworthFilter filter_;
    TraceSink sink_;

    double last_raw_ = 0.0;
    double last_filtered_ = 0.0;
    bool primed_ = false;
    long total_periods_ = 0;
};

}  // namespace cbc
