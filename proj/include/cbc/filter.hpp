#pragma once

#include <complex>
#include <vector>

#include "cbc/errors.hpp"

namespace cbc {

struct FilterSpec {
    int order = 4;            // even
    double cutoff_hz = 75.0;  // -3 dB point
    double sample_rate_hz = 5000.0;

    void validate() const;
};

// One second-order low-pass section, transposed direct form II.
struct Biquad {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;
    double z1 = 0.0, z2 = 0.0;

    double process(double x) {
        const double y = b0 * x + z1;
        z1 = b1 * x - a1 * y + z2;
        z2 = b2 * x - a2 * y;
        return y;
    }
};

// Cascaded-biquad Butterworth low-pass designed via the bilinear transform
// with frequency pre-warping at the cutoff. DC gain is exactly 1 and the
// magnitude at the cutoff is exactly -3.01 dB by construction.
class ButterworthFilter {
  public:
    explicit ButterworthFilter(const FilterSpec& spec);

    const FilterSpec& spec() const { return spec_; }
    const std::vector<Biquad>& sections() const { return sections_; }

    double process(double x) {
        for (auto& s : sections_) {
            x = s.process(x);
        }
        return x;
    }

    void reset();

    // Frequency response of the designed discrete-time filter at f Hz.
    std::complex<double> response(double f_hz) const;

  private:
    FilterSpec spec_;
    std::vector<Biquad> sections_;
};

// Two-point backward finite difference, the on-line derivative estimate used
// in the control path.
inline double derivative_estimate(double prev, double curr, double dt) {
    return (curr - prev) / dt;
}

}  // namespace cbc
