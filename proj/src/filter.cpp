#include "cbc/filter.hpp"

#include <cmath>
#include <numbers>

namespace cbc {

void FilterSpec::validate() const {
    if (order <= 0 || order % 2 != 0) {
        throw FilterDesignError("filter order must be a positive even integer");
    }
    if (!(sample_rate_hz > 0.0)) {
        throw FilterDesignError("filter sample rate must be positive");
    }
    if (!(cutoff_hz > 0.0) || cutoff_hz >= 0.5 * sample_rate_hz) {
        throw FilterDesignError("filter cutoff must lie strictly below Nyquist");
    }
}

ButterworthFilter::ButterworthFilter(const FilterSpec& spec) : spec_(spec) {
    spec_.validate();
    const int pairs = spec_.order / 2;
    const double w0 = 2.0 * std::numbers::pi * spec_.cutoff_hz / spec_.sample_rate_hz;
    const double cw = std::cos(w0);
    const double sw = std::sin(w0);
    sections_.reserve(pairs);
    for (int k = 0; k < pairs; ++k) {
        // Butterworth pole-pair quality factors: Q_k = 1 / (2 sin theta_k)
        // with theta_k = (2k+1) pi / (2n).
        const double theta = (2.0 * k + 1.0) * std::numbers::pi / (2.0 * spec_.order);
        const double q = 1.0 / (2.0 * std::sin(theta));
        const double alpha = sw / (2.0 * q);
        const double a0 = 1.0 + alpha;
        Biquad s;
        s.b0 = 0.5 * (1.0 - cw) / a0;
        s.b1 = (1.0 - cw) / a0;
        s.b2 = s.b0;
        s.a1 = -2.0 * cw / a0;
        s.a2 = (1.0 - alpha) / a0;
        sections_.push_back(s);
    }
}

void ButterworthFilter::reset() {
    for (auto& s : sections_) {
        s.z1 = s.z2 = 0.0;
    }
}

std::complex<double> ButterworthFilter::response(double f_hz) const {
    const double w = 2.0 * std::numbers::pi * f_hz / spec_.sample_rate_hz;
    const std::complex<double> z1 = std::polar(1.0, -w);
    const std::complex<double> z2 = z1 * z1;
    std::complex<double> h{1.0, 0.0};
    for (const auto& s : sections_) {
        h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
    }
    return h;
}

}  // namespace cbc
