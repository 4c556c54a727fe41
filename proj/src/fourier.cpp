#include "cbc/fourier.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cbc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Trapezoidal integral of f(s)*w(s) over the window, where the samples of f
// are given and w is evaluated analytically at the sample times.
template <typename W>
double trapz(std::span<const double> samples, double dt, double t_end, W&& weight) {
    const std::size_t n = samples.size() - 1;
    const double t0 = t_end - static_cast<double>(n) * dt;
    double acc = 0.5 * (samples[0] * weight(t0) + samples[n] * weight(t_end));
    for (std::size_t i = 1; i < n; ++i) {
        acc += samples[i] * weight(t0 + static_cast<double>(i) * dt);
    }
    return acc * dt;
}

void check_window(std::span<const double> window, double dt, double omega) {
    if (omega <= 0.0 || dt <= 0.0) {
        throw InvalidWindow("window requires positive omega and dt");
    }
    const double period = kTwoPi / omega;
    if (window.size() < 2 || static_cast<double>(window.size() - 1) * dt < period * (15.0 / 16.0) ||
        window.size() - 1 < 16) {
        throw InvalidWindow("sample window shorter than one fundamental period (min 16 samples)");
    }
}

}  // namespace

FourierVector::FourierVector(double omega_, std::size_t modes_)
    : omega(omega_), a(modes_, 0.0), b(modes_, 0.0) {}

FourierVector FourierVector::harmonic(double omega, std::size_t modes, double a1, double b1) {
    FourierVector fv(omega, modes);
    fv.a[0] = a1;
    fv.b[0] = b1;
    return fv;
}

double FourierVector::evaluate(double t) const {
    double v = 0.5 * a0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double arg = static_cast<double>(j + 1) * omega * t;
        v += a[j] * std::cos(arg) + b[j] * std::sin(arg);
    }
    return v;
}

double FourierVector::derivative(double t) const {
    double v = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double jw = static_cast<double>(j + 1) * omega;
        const double arg = jw * t;
        v += jw * (b[j] * std::cos(arg) - a[j] * std::sin(arg));
    }
    return v;
}

std::vector<double> FourierVector::nonharmonic() const {
    std::vector<double> out;
    out.reserve(2 * modes() - 1);
    out.push_back(a0);
    for (std::size_t j = 1; j < modes(); ++j) {
        out.push_back(a[j]);
        out.push_back(b[j]);
    }
    return out;
}

void FourierVector::set_nonharmonic(std::span<const double> coeffs) {
    if (coeffs.size() != 2 * modes() - 1) {
        throw Error("non-harmonic coefficient count mismatch");
    }
    a0 = coeffs[0];
    for (std::size_t j = 1; j < modes(); ++j) {
        a[j] = coeffs[2 * j - 1];
        b[j] = coeffs[2 * j];
    }
}

std::vector<double> FourierVector::flat() const {
    std::vector<double> out;
    out.reserve(2 * modes() + 1);
    out.push_back(a0);
    for (std::size_t j = 0; j < modes(); ++j) {
        out.push_back(a[j]);
        out.push_back(b[j]);
    }
    return out;
}

FourierVector FourierVector::from_flat(double omega, std::span<const double> coeffs) {
    if (coeffs.empty() || coeffs.size() % 2 == 0) {
        throw Error("flat coefficient list must have odd length 2m+1");
    }
    FourierVector fv(omega, (coeffs.size() - 1) / 2);
    fv.a0 = coeffs[0];
    for (std::size_t j = 0; j < fv.modes(); ++j) {
        fv.a[j] = coeffs[2 * j + 1];
        fv.b[j] = coeffs[2 * j + 2];
    }
    return fv;
}

double FourierVector::fundamental_amplitude() const {
    return std::hypot(a[0], b[0]);
}

double FourierVector::max_coefficient_diff(const FourierVector& other) const {
    double d = std::abs(a0 - other.a0);
    const std::size_t m = std::min(modes(), other.modes());
    for (std::size_t j = 0; j < m; ++j) {
        d = std::max(d, std::abs(a[j] - other.a[j]));
        d = std::max(d, std::abs(b[j] - other.b[j]));
    }
    return d;
}

double FourierVector::nonharmonic_rms_diff(const FourierVector& other) const {
    double acc = (a0 - other.a0) * (a0 - other.a0);
    const std::size_t m = std::min(modes(), other.modes());
    for (std::size_t j = 1; j < m; ++j) {
        acc += (a[j] - other.a[j]) * (a[j] - other.a[j]);
        acc += (b[j] - other.b[j]) * (b[j] - other.b[j]);
    }
    return std::sqrt(acc);
}

FourierVector project(std::span<const double> window, double dt, double t_end, double omega,
                      std::size_t modes) {
    check_window(window, dt, omega);
    const double span = static_cast<double>(window.size() - 1) * dt;
    const double c = 2.0 / span;  // equals omega/pi for an exact period
    FourierVector fv(omega, modes);
    fv.a0 = c * trapz(window, dt, t_end, [](double) { return 1.0; });
    for (std::size_t j = 1; j <= modes; ++j) {
        const double jw = static_cast<double>(j) * omega;
        fv.a[j - 1] = c * trapz(window, dt, t_end, [jw](double s) { return std::cos(jw * s); });
        fv.b[j - 1] = c * trapz(window, dt, t_end, [jw](double s) { return std::sin(jw * s); });
    }
    return fv;
}

void recursive_update(FourierVector& fv, std::span<const double> window, double dt, double t_end) {
    check_window(window, dt, fv.omega);
    // Residual samples x(s) - current estimate; the update then reduces to a
    // batch projection of the residual added onto the current coefficients.
    const std::size_t n = window.size();
    const double t0 = t_end - static_cast<double>(n - 1) * dt;
    std::vector<double> residual(n);
    for (std::size_t i = 0; i < n; ++i) {
        residual[i] = window[i] - fv.evaluate(t0 + static_cast<double>(i) * dt);
    }
    const FourierVector delta = project(residual, dt, t_end, fv.omega, fv.modes());
    fv.a0 += delta.a0;
    for (std::size_t j = 0; j < fv.modes(); ++j) {
        fv.a[j] += delta.a[j];
        fv.b[j] += delta.b[j];
    }
}

Measures compute_measures(std::span<const double> u_window, double dt, double t_end,
                          const FourierVector& x_fv, const FourierVector& u_fv) {
    Measures m;
    m.forcing_amp = u_fv.fundamental_amplitude();
    m.response_amp = x_fv.fundamental_amplitude();
    if (m.forcing_amp == 0.0) {
        throw InvasivenessUndefined("fundamental forcing amplitude is zero");
    }
    // e(t) = u(t) - A1^u cos(w t) - B1^u sin(w t), RMS over the window.
    const std::size_t n = u_window.size() - 1;
    const double t0 = t_end - static_cast<double>(n) * dt;
    const double w = u_fv.omega;
    double acc = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        const double t = t0 + static_cast<double>(i) * dt;
        const double e =
            u_window[i] - u_fv.a[0] * std::cos(w * t) - u_fv.b[0] * std::sin(w * t);
        acc += (i == 0 || i == n) ? 0.5 * e * e : e * e;
    }
    m.error_rms = std::sqrt(acc / static_cast<double>(n));
    m.error_pct = 100.0 * m.error_rms / m.forcing_amp;
    return m;
}

bool is_stationary(const std::deque<FourierVector>& history, double tol, std::size_t count) {
    if (count < 2 || history.size() < count) {
        return false;
    }
    const std::size_t first = history.size() - count;
    for (std::size_t i = first; i < history.size(); ++i) {
        for (std::size_t k = i + 1; k < history.size(); ++k) {
            if (history[i].max_coefficient_diff(history[k]) >= tol) {
                return false;
            }
        }
    }
    return true;
}

}  // namespace cbc
