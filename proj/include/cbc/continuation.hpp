#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cbc/control.hpp"
#include "cbc/fourier.hpp"
#include "cbc/plant.hpp"

namespace cbc {

// ---------------------------------------------------------------------------
// Equilibrium branch tracking (proportional control line)
// ---------------------------------------------------------------------------

struct EqPoint {
    double p = 0.0;
    double x = 0.0;
};

struct StepControl {
    double h = 1.0;
    double h_min = 0.05;
    double h_max = 4.0;
    double shrink = 0.5;
    double grow = 1.5;
    int max_points = 80;
    // Stop bounds. For equilibria: parameter range; for periodic orbits:
    // forcing/response amplitude ceilings.
    double param_min = -1e9;
    double param_max = 1e9;
    double forcing_max = 1e9;
    double response_max = 1e9;
    // Bounds on the predicted fundamental-amplitude move per step; the
    // secant is rescaled into this window so the spacing can neither jump a
    // fold nor collapse to a stall. 0 / inf disable them.
    double ds_min = 0.0;
    double ds_max = 1e18;

    void validate() const;
};

EqPoint secant_predict_eq(const EqPoint& pa, const EqPoint& pb, double h);

struct EquilibriumSettings {
    double gain = 1.0;            // proportional gain k
    double settle_tol = 1e-7;     // |x| drift per check window to call it settled
    double settle_window = 0.25;  // seconds per drift check
    double max_settle_time = 30.0;
    double authority_probe = 0.05;     // parameter perturbation for the probe
    double authority_tol = 1e-3;       // minimum |dx/dc| considered controllable
    double divergence_bound = 1e3;
};

struct EquilibriumBranch {
    std::vector<EqPoint> points;
    std::string diagnostic;  // empty on a clean stop
};

// Runs the plant under p + u = c - k*x until the output drift vanishes.
// Returns the settled output; throws CorrectorFailure on non-settling.
double settle_equilibrium(Plant& plant, double c, double k, const EquilibriumSettings& s);

// Secant predictor plus proportional control line, traced through folds.
// Performs a control-authority probe first and throws ControlAuthorityError
// when the settled output does not respond to the parameter (horizontal
// branches, where the method is inapplicable).
EquilibriumBranch track_equilibrium_branch(Plant& plant, std::pair<EqPoint, EqPoint> seeds,
                                           const StepControl& step, const EquilibriumSettings& s);

// ---------------------------------------------------------------------------
// Periodic orbit branch tracking
// ---------------------------------------------------------------------------

enum class Stability { Unknown, Stable, Unstable };

struct BranchPoint {
    double omega = 0.0;
    double a = 0.0;  // fundamental forcing, cosine
    double b = 0.0;  // fundamental forcing, sine
    FourierVector x;
    Measures measures;
    Stability stability = Stability::Unknown;
    int iterations = 0;     // corrector passes
    int settle_cycles = 0;  // run_until_settled calls consumed
    long periods = 0;       // forcing periods consumed
    PlantState settled_state;  // plant state at acceptance, for replays
};

struct Branch {
    double omega = 0.0;
    std::vector<BranchPoint> points;
    std::string diagnostic;
    long total_periods = 0;
};

struct CorrectorSettings {
    double tol_rel = 1e-3;      // RMS over non-fundamental modes, relative to R
    double amplitude_floor = 1e-6;
    double relax = 1.0;         // relaxation parameter in (0, 1]
    int max_iter = 8;
    // Accepted points must have non-fundamental input content below this
    // fraction of F; larger residuals reject the point.
    double input_residual_rel = 0.05;
    // Newton corrector only.
    double fd_perturbation_rel = 1e-3;
    int newton_max_iter = 12;

    void validate() const;
};

// Fundamental forcing implied by the general PD feedback variant.
std::pair<double, double> update_fundamental_forcing(double astar, double bstar, double a1star,
                                                     double b1star, double a1, double b1,
                                                     const PDGains& gains, double omega);

// Picard correction of the non-fundamental reference modes: runs the loop,
// replaces the non-fundamental part of X* by the measured X (relaxed by R)
// until the skipped-fundamental RMS error is below tolerance, then reads the
// fundamental forcing directly from the settled input.
BranchPoint correct_fixed_point(ControlLoop& loop, const FourierVector& prediction,
                                const CorrectorSettings& s);

// Newton pseudo-arclength baseline: solves for the reference coefficients
// that zero the non-fundamental input content subject to orthogonality to
// the secant, with a forward-difference Jacobian. Every residual evaluation
// costs one settled run; settle_cycles reports the total.
BranchPoint correct_pseudo_arclength(ControlLoop& loop, double omega,
                                     const std::vector<double>& prediction,
                                     const std::vector<double>& secant, double fixed_b1star,
                                     const CorrectorSettings& s,
                                     std::vector<double>* accepted_reference = nullptr);

enum class CorrectorKind { FixedPoint, PseudoArclength };

// Full amplitude sweep at fixed forcing frequency: two low-amplitude seeds,
// then secant prediction over all Fourier coefficients with adaptive step
// scale (halve on corrector failure, grow after repeated cheap successes).
Branch track_branch(ControlLoop& loop, double omega, std::size_t modes, double seed_amplitude,
                    const StepControl& step, const CorrectorSettings& corr,
                    CorrectorKind kind = CorrectorKind::FixedPoint);

// Replay-based stability classification: clones the plant at the settled
// state, perturbs it by `perturbation_rel` relative to R, and runs without
// control under the frozen harmonic forcing (a, b). Stable iff the
// fundamental response amplitude stays within `amplitude_tol_rel` of R.
struct StabilitySettings {
    int periods = 30;
    double perturbation_rel = 1e-3;
    double amplitude_tol_rel = 0.05;
};

Stability classify_stability(const BranchPoint& point, const PlantConfig& config,
                             const StabilitySettings& s = {});

// ---------------------------------------------------------------------------
// Fold detection
// ---------------------------------------------------------------------------

struct FoldPoint {
    double param = 0.0;     // F (or p for equilibria) at the fold
    double response = 0.0;  // R (or x)
    std::size_t index = 0;  // bracketing index into the source branch
};

// Sign changes of the parameter increment along an ordered branch, refined
// by quadratic interpolation in arclength through the bracketing points.
std::vector<FoldPoint> detect_folds(const std::vector<std::pair<double, double>>& param_response);

std::vector<FoldPoint> detect_folds(const Branch& branch);
std::vector<FoldPoint> detect_folds(const EquilibriumBranch& branch);

}  // namespace cbc
