#pragma once

#include <span>
#include <string>
#include <vector>

#include "cbc/continuation.hpp"

namespace cbc {

// One scattered resonance-surface sample: forcing amplitude F as a function
// of (forcing frequency, response amplitude).
struct SurfaceSample {
    double omega = 0.0;     // rad/s
    double response = 0.0;  // R
    double forcing = 0.0;   // F
};

// Wendland C2 compactly supported RBF interpolant of F(omega, R) with an
// appended linear polynomial tail, built on sites normalized to the unit
// square. phi(r) = (1-r)^4 (4r+1) for r < 1.
class RBFModel {
  public:
    struct Eval {
        double f = 0.0;
        bool extrapolated = false;  // query outside the data's support
    };

    Eval evaluate(double omega, double response) const;
    // Analytic partial derivative dF/dR at fixed omega.
    double df_dresponse(double omega, double response) const;

    double support_radius() const { return rho_; }
    std::size_t center_count() const { return sites_.size(); }

    double omega_min = 0.0, omega_max = 0.0;
    double response_min = 0.0, response_max = 0.0;

  private:
    friend RBFModel build_interpolant(std::span<const SurfaceSample> samples, double rho);

    struct Site {
        double w = 0.0;  // normalized omega
        double r = 0.0;  // normalized response
    };

    std::vector<Site> sites_;
    std::vector<double> weights_;  // kernel weights, then tail [1, w, r]
    double rho_ = 0.0;             // support radius in normalized coordinates
};

// Solves the symmetric interpolation system with polynomial side conditions.
// Duplicate sites (closer than 1e-9 normalized) are averaged first. rho <= 0
// selects the default of 4x the median nearest-neighbor spacing. Throws
// IllConditioned when the system cannot be solved reliably.
RBFModel build_interpolant(std::span<const SurfaceSample> samples, double rho = 0.0);

struct FoldCurvePoint {
    double omega = 0.0;
    double forcing = 0.0;
    double response = 0.0;
};

struct FoldCurve {
    std::vector<FoldCurvePoint> lower;  // smaller-R fold branch, ordered by omega
    std::vector<FoldCurvePoint> upper;  // larger-R fold branch
};

// Collects the per-frequency fold pairs from the branches, refines each
// against the interpolant by solving dF/dR = 0 along the constant-omega
// slice, and orders the result into lower/upper fold branches.
FoldCurve extract_fold_curve(const std::vector<Branch>& branches, const RBFModel& model);

struct CuspPoint {
    double omega = 0.0;
    double forcing = 0.0;
    double response = 0.0;
};

// The point where the two fold branches merge: fits the power law
// separation ~ (omega - omega_c)^q to the fold pairs closest to the merge
// and extrapolates the branch midpoints to zero separation. Throws
// InsufficientData with fewer than 3 fold pairs.
CuspPoint locate_cusp(const FoldCurve& curve);

struct ContourCurve {
    double level = 0.0;                              // forcing amplitude F
    std::vector<std::pair<double, double>> points;   // (omega, response)
};

// Constant forcing-amplitude slices F(omega, R) = level traced on the
// interpolant by predictor-corrector marching; fold-induced multi-valued
// windows are followed in arclength. Out-of-range levels are skipped and
// reported in `warnings`.
std::vector<ContourCurve> constant_amplitude_slices(const RBFModel& model,
                                                    std::span<const double> levels,
                                                    double omega_min, double omega_max,
                                                    std::vector<std::string>* warnings = nullptr);

}  // namespace cbc
