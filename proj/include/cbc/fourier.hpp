#pragma once

#include <cstddef>
#include <deque>
#include <span>
#include <vector>

#include "cbc/errors.hpp"

namespace cbc {

// Truncated Fourier coefficient set for a periodic signal with fundamental
// frequency omega:
//
//   s(t) = a0/2 + sum_{j=1..m} a[j-1]*cos(j*omega*t) + b[j-1]*sin(j*omega*t)
//
// Represents reference signals, measured outputs and control inputs alike.
class FourierVector {
  public:
    FourierVector() = default;
    FourierVector(double omega, std::size_t modes);

    // Purely harmonic vector: a0 = 0, only the fundamental pair set.
    static FourierVector harmonic(double omega, std::size_t modes, double a1, double b1);

    double omega = 0.0;
    double a0 = 0.0;
    std::vector<double> a;  // cosine coefficients, mode j at index j-1
    std::vector<double> b;  // sine coefficients, mode j at index j-1

    std::size_t modes() const { return a.size(); }

    double evaluate(double t) const;
    // Term-wise analytic time derivative of evaluate().
    double derivative(double t) const;

    // Non-harmonic part [a0, a2, b2, ..., am, bm]; length 2m-1.
    std::vector<double> nonharmonic() const;
    // Inverse of nonharmonic(): overwrites everything except (a1, b1).
    void set_nonharmonic(std::span<const double> coeffs);

    // Flat layout A0, A1, B1, ..., Am, Bm used by the CSV/JSON exports.
    std::vector<double> flat() const;
    static FourierVector from_flat(double omega, std::span<const double> coeffs);

    double fundamental_amplitude() const;  // sqrt(a1^2 + b1^2)
    // Max-norm distance over all coefficients (a0 included).
    double max_coefficient_diff(const FourierVector& other) const;
    // RMS of the coefficient differences with the fundamental pair skipped.
    double nonharmonic_rms_diff(const FourierVector& other) const;
};

// Batch Fourier projection of one period of uniformly sampled data.
//
// `window` holds n+1 samples spanning [t_end - n*dt, t_end] where n is
// expected to be round(2*pi/(omega*dt)); the quadrature is trapezoidal on
// that grid. Throws InvalidWindow for windows under 16 samples per period.
FourierVector project(std::span<const double> window, double dt, double t_end, double omega,
                      std::size_t modes);

// One sweep of the recursive per-mode estimator over the last period:
//
//   [A_k,B_k] += c * integral window [cos,sin](k w s) * (x(s) - A_k cos - B_k sin) ds
//
// with c = omega/pi (c = 2/period; the same constant updates a0 against
// a0/2). A single update is exact for signals band-limited to the estimated
// modes; otherwise the update converges linearly to project()'s output.
void recursive_update(FourierVector& fv, std::span<const double> window, double dt, double t_end);

// The three data measures of one accepted run.
struct Measures {
    double forcing_amp = 0.0;   // F: fundamental amplitude of the input
    double response_amp = 0.0;  // R: fundamental amplitude of the output
    double error_rms = 0.0;     // RMS of the non-fundamental input residual
    double error_pct = 0.0;     // error_rms as a percentage of F
};

// Computes F, R and the invasiveness error from one period of the input
// trace and the matching estimated coefficient sets. Throws
// InvasivenessUndefined when F = 0.
Measures compute_measures(std::span<const double> u_window, double dt, double t_end,
                          const FourierVector& x_fv, const FourierVector& u_fv);

// True iff the last `count` coefficient snapshots pairwise differ by less
// than `tol` in max-norm. A history shorter than `count` is not stationary.
bool is_stationary(const std::deque<FourierVector>& history, double tol, std::size_t count);

}  // namespace cbc
