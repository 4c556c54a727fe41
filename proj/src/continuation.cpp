#include "cbc/continuation.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cbc {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

void StepControl::validate() const {
    if (!(h_min > 0.0) || !(h_min <= h) || !(h <= h_max)) {
        throw ValidationError("step control requires 0 < h_min <= h <= h_max");
    }
    if (!(shrink > 0.0 && shrink < 1.0) || !(grow > 1.0)) {
        throw ValidationError("step control shrink/grow factors out of range");
    }
    if (max_points < 3) {
        throw ValidationError("step control max_points must be at least 3");
    }
    if (!(ds_min >= 0.0) || !(ds_max > 0.0) || ds_min > ds_max) {
        throw ValidationError("step control requires 0 <= ds_min <= ds_max");
    }
}

void CorrectorSettings::validate() const {
    if (!(tol_rel > 0.0) || !(amplitude_floor > 0.0)) {
        throw ValidationError("corrector tolerances must be positive");
    }
    if (!(relax > 0.0 && relax <= 1.0)) {
        throw ValidationError("corrector relaxation parameter must lie in (0, 1]");
    }
    if (max_iter < 1 || newton_max_iter < 1) {
        throw ValidationError("corrector iteration limits must be positive");
    }
}

// ---------------------------------------------------------------------------
// Equilibria
// ---------------------------------------------------------------------------

EqPoint secant_predict_eq(const EqPoint& pa, const EqPoint& pb, double h) {
    if (pa.p == pb.p && pa.x == pb.x) {
        throw DegenerateSecant("secant predictor given two coincident points");
    }
    return EqPoint{pb.p + h * (pb.p - pa.p), pb.x + h * (pb.x - pa.x)};
}

double settle_equilibrium(Plant& plant, double c, double k, const EquilibriumSettings& s) {
    const double dt = plant.dt();
    const auto window = std::max<std::size_t>(2, static_cast<std::size_t>(s.settle_window / dt));
    const auto max_steps = static_cast<std::size_t>(s.max_settle_time / dt);

    double x = plant.output();
    double window_start_x = x;
    int quiet_windows = 0;
    for (std::size_t i = 1; i <= max_steps; ++i) {
        x = plant.step(c - k * x);
        if (std::abs(x) > s.divergence_bound) {
            throw CorrectorFailure("equilibrium run diverged under control");
        }
        if (i % window == 0) {
            quiet_windows = std::abs(x - window_start_x) < s.settle_tol ? quiet_windows + 1 : 0;
            window_start_x = x;
            if (quiet_windows >= 2) {
                return x;
            }
        }
    }
    throw CorrectorFailure("equilibrium run did not settle within max_settle_time");
}

EquilibriumBranch track_equilibrium_branch(Plant& plant, std::pair<EqPoint, EqPoint> seeds,
                                           const StepControl& step, const EquilibriumSettings& s) {
    step.validate();
    if (!(s.gain > 0.0)) {
        throw ValidationError("equilibrium gain k must be positive");
    }
    const double k = s.gain;

    // Control-authority probe: the method needs the settled output to respond
    // to the control parameter at the linear level.
    {
        const double c0 = seeds.second.p + k * seeds.second.x;
        const double x0 = settle_equilibrium(plant, c0, k, s);
        const double delta = std::max(s.authority_probe, s.authority_probe * std::abs(c0));
        const double x1 = settle_equilibrium(plant, c0 + delta, k, s);
        if (std::abs(x1 - x0) < s.authority_tol * delta) {
            throw ControlAuthorityError(
                "settled output does not respond to the parameter; the branch is horizontal "
                "at the linear level and control-based continuation is not applicable");
        }
        settle_equilibrium(plant, c0, k, s);
    }

    EquilibriumBranch branch;
    branch.points = {seeds.first, seeds.second};
    double h = step.h;
    while (static_cast<int>(branch.points.size()) < step.max_points) {
        const EqPoint& pa = branch.points[branch.points.size() - 2];
        const EqPoint& pb = branch.points.back();
        EqPoint pred;
        try {
            pred = secant_predict_eq(pa, pb, h);
        } catch (const DegenerateSecant&) {
            branch.diagnostic = "degenerate secant; branch terminated";
            break;
        }
        try {
            const double c = pred.p + k * pred.x;
            const double x_asy = settle_equilibrium(plant, c, k, s);
            branch.points.push_back(EqPoint{pred.p + k * (pred.x - x_asy), x_asy});
            h = std::min(h * step.grow, step.h_max);
        } catch (const CorrectorFailure&) {
            // A diverged attempt leaves the rig far from the branch; restart
            // it from the last accepted operating point before retrying.
            PlantState st = plant.state();
            st.x = {pb.x, 0.0};
            plant.set_state(st);
            h *= step.shrink;
            if (h < step.h_min) {
                branch.diagnostic = "corrector failed at minimum step scale; branch terminated";
                break;
            }
            continue;
        }
        const EqPoint& last = branch.points.back();
        if (last.p < step.param_min || last.p > step.param_max ||
            std::abs(last.x) > step.response_max) {
            break;
        }
    }
    return branch;
}

// ---------------------------------------------------------------------------
// Periodic orbits
// ---------------------------------------------------------------------------

std::pair<double, double> update_fundamental_forcing(double astar, double bstar, double a1star,
                                                     double b1star, double a1, double b1,
                                                     const PDGains& gains, double omega) {
    const double a = astar + gains.kp * (a1star - a1) + omega * gains.kd * (b1star - b1);
    const double b = bstar + gains.kp * (b1star - b1) + omega * gains.kd * (a1 - a1star);
    return {a, b};
}

namespace {

BranchPoint accept_point(ControlLoop& loop, const SettledRun& run, int iterations,
                         int settle_cycles, long periods, const CorrectorSettings& s) {
    BranchPoint pt;
    pt.omega = run.x_fv.omega;
    pt.a = run.u_fv.a[0];
    pt.b = run.u_fv.b[0];
    pt.x = run.x_fv;
    pt.measures =
        compute_measures(run.u_window, run.window_dt, run.window_t_end, run.x_fv, run.u_fv);
    pt.iterations = iterations;
    pt.settle_cycles = settle_cycles;
    pt.periods = periods;
    pt.settled_state = loop.plant().state();
    if (pt.measures.error_rms > s.input_residual_rel * pt.measures.forcing_amp) {
        throw CorrectorFailure("settled input is not harmonic within tolerance");
    }
    return pt;
}

}  // namespace

BranchPoint correct_fixed_point(ControlLoop& loop, const FourierVector& prediction,
                                const CorrectorSettings& s) {
    s.validate();
    FourierVector reference = prediction;
    int settle_cycles = 0;
    const long periods0 = loop.total_periods();
    for (int iter = 1; iter <= s.max_iter; ++iter) {
        const SettledRun run = loop.run_until_settled(reference);
        ++settle_cycles;
        const double err = reference.nonharmonic_rms_diff(run.x_fv);
        const double resp = run.x_fv.fundamental_amplitude();
        if (err < s.tol_rel * std::max(resp, s.amplitude_floor)) {
            return accept_point(loop, run, iter, settle_cycles, loop.total_periods() - periods0,
                                s);
        }
        // Relaxed Picard update of the non-fundamental modes only; the
        // fundamental reference pair stays frozen.
        const auto current = reference.nonharmonic();
        const auto measured = run.x_fv.nonharmonic();
        std::vector<double> next(current.size());
        for (std::size_t i = 0; i < next.size(); ++i) {
            next[i] = (1.0 - s.relax) * current[i] + s.relax * measured[i];
        }
        reference.set_nonharmonic(next);
    }
    throw CorrectorFailure("fixed-point corrector exceeded max_iter");
}

namespace {

// Reduced Newton coordinates: y = [A1*, A0*, A2*, B2*, ..., Am*, Bm*] with
// B1* frozen along the branch to anchor the forcing phase.
FourierVector reference_from_reduced(double omega, std::size_t modes,
                                     const std::vector<double>& y, double fixed_b1star) {
    FourierVector ref(omega, modes);
    ref.a[0] = y[0];
    ref.b[0] = fixed_b1star;
    ref.set_nonharmonic(std::span<const double>(y).subspan(1));
    return ref;
}

}  // namespace

BranchPoint correct_pseudo_arclength(ControlLoop& loop, double omega,
                                     const std::vector<double>& prediction,
                                     const std::vector<double>& secant, double fixed_b1star,
                                     const CorrectorSettings& s,
                                     std::vector<double>* accepted_reference) {
    s.validate();
    const std::size_t dim = prediction.size();
    if (secant.size() != dim || dim < 2 || dim % 2 != 0) {
        throw ValidationError("pseudo-arclength prediction/secant dimension mismatch");
    }
    const std::size_t modes = dim / 2;
    const PDGains& g = loop.gains();
    const double uscale = std::hypot(g.kp, omega * g.kd) + 1e-12;
    int settle_cycles = 0;
    const long periods0 = loop.total_periods();

    struct Eval {
        Eigen::VectorXd r;
        SettledRun run;
    };

    // Residual: orthogonality of (y - prediction) to the secant, followed by
    // the non-fundamental input coefficients scaled into reference units.
    const auto evaluate = [&](const std::vector<double>& y) -> Eval {
        const FourierVector ref = reference_from_reduced(omega, modes, y, fixed_b1star);
        SettledRun run = loop.run_until_settled(ref);
        ++settle_cycles;
        Eigen::VectorXd r(static_cast<Eigen::Index>(dim));
        double orth = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            orth += (y[i] - prediction[i]) * secant[i];
        }
        r(0) = orth;
        const auto u_nh = run.u_fv.nonharmonic();
        for (std::size_t i = 0; i < u_nh.size(); ++i) {
            r(static_cast<Eigen::Index>(i + 1)) = u_nh[i] / uscale;
        }
        return {std::move(r), std::move(run)};
    };

    double secant_norm = 0.0;
    for (double d : secant) secant_norm += d * d;
    secant_norm = std::sqrt(secant_norm);

    std::vector<double> y = prediction;
    Eval cur = evaluate(y);

    for (int iter = 1; iter <= s.newton_max_iter; ++iter) {
        const double resp = cur.run.x_fv.fundamental_amplitude();
        double u_nh_rms = 0.0;
        for (Eigen::Index i = 1; i < cur.r.size(); ++i) u_nh_rms += cur.r(i) * cur.r(i);
        u_nh_rms = std::sqrt(u_nh_rms);
        const double arc_tol = std::max(1e-8 * secant_norm * std::max(resp, 1.0), 1e-12);
        if (u_nh_rms * uscale < s.tol_rel * std::max(resp, s.amplitude_floor) * uscale &&
            std::abs(cur.r(0)) < arc_tol) {
            if (accepted_reference) {
                *accepted_reference = y;
            }
            return accept_point(loop, cur.run, iter, settle_cycles,
                                loop.total_periods() - periods0, s);
        }

        // Forward-difference Jacobian; one settled run per column.
        double scale = 0.0;
        for (double v : y) scale = std::max(scale, std::abs(v));
        scale = std::max(scale, s.amplitude_floor);
        Eigen::MatrixXd jac(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
        for (std::size_t j = 0; j < dim; ++j) {
            const double eps = s.fd_perturbation_rel * std::max(scale, std::abs(y[j]));
            std::vector<double> yp = y;
            yp[j] += eps;
            const Eval pert = evaluate(yp);
            jac.col(static_cast<Eigen::Index>(j)) = (pert.r - cur.r) / eps;
        }
        const Eigen::VectorXd delta = jac.partialPivLu().solve(-cur.r);
        bool improved = false;
        for (double lambda : {1.0, 0.5, 0.25, 0.125}) {
            std::vector<double> yn = y;
            for (std::size_t i = 0; i < dim; ++i) {
                yn[i] += lambda * delta(static_cast<Eigen::Index>(i));
            }
            Eval next = evaluate(yn);
            if (next.r.norm() < cur.r.norm()) {
                y = std::move(yn);
                cur = std::move(next);
                improved = true;
                break;
            }
        }
        if (!improved) {
            throw CorrectorFailure("pseudo-arclength Newton step failed to reduce the residual");
        }
    }
    throw CorrectorFailure("pseudo-arclength corrector exceeded max_iter");
}

// ---------------------------------------------------------------------------
// Branch sweep
// ---------------------------------------------------------------------------

namespace {

std::vector<double> reduced_from_reference(const FourierVector& ref) {
    std::vector<double> y;
    y.reserve(2 * ref.modes());
    y.push_back(ref.a[0]);
    const auto nh = ref.nonharmonic();
    y.insert(y.end(), nh.begin(), nh.end());
    return y;
}

}  // namespace

Branch track_branch(ControlLoop& loop, double omega, std::size_t modes, double seed_amplitude,
                    const StepControl& step, const CorrectorSettings& corr, CorrectorKind kind) {
    step.validate();
    corr.validate();
    if (!(seed_amplitude > 0.0)) {
        throw ValidationError("seed amplitude must be positive");
    }

    Branch branch;
    branch.omega = omega;
    const long periods0 = loop.total_periods();

    // Two low-amplitude seeds in the (stable) linear regime. Both correctors
    // share this seeding; the Picard corrector is used because the response
    // is essentially harmonic here and it converges immediately.
    //
    // The branch is parameterized by the reference coefficients X*, not by
    // the measured response: the closed-loop response saturates near the
    // folds, so a secant over measured coefficients would stall there.
    std::vector<std::vector<double>> references;  // reduced coords
    for (double amp : {seed_amplitude, 1.2 * seed_amplitude}) {
        const FourierVector pred = FourierVector::harmonic(omega, modes, amp, 0.0);
        BranchPoint pt = correct_fixed_point(loop, pred, corr);
        // The Picard corrector never touches the fundamental reference, so
        // the accepted reference is the harmonic prediction plus the measured
        // non-fundamental part.
        FourierVector ref = pred;
        ref.set_nonharmonic(pt.x.nonharmonic());
        references.push_back(reduced_from_reference(ref));
        branch.points.push_back(std::move(pt));
    }

    double h = step.h;
    int cheap_successes = 0;
    while (static_cast<int>(branch.points.size()) < step.max_points) {
        const std::size_t n = branch.points.size();
        bool ok = false;
        try {
            const auto& ya = references[references.size() - 2];
            const auto& yb = references.back();
            // Clamp the predicted fundamental-amplitude move into
            // [ds_min, ds_max] by rescaling the whole secant step.
            const double fun_move = h * std::abs(yb[0] - ya[0]);
            double scale = h;
            if (fun_move > step.ds_max) {
                scale = h * step.ds_max / fun_move;
            } else if (fun_move > 0.0 && fun_move < step.ds_min) {
                scale = h * step.ds_min / fun_move;
            }
            std::vector<double> secant(yb.size());
            std::vector<double> pred(yb.size());
            double secant_mag = 0.0;
            for (std::size_t i = 0; i < pred.size(); ++i) {
                secant[i] = yb[i] - ya[i];
                secant_mag = std::max(secant_mag, std::abs(secant[i]));
                pred[i] = yb[i] + scale * secant[i];
            }
            if (secant_mag == 0.0) {
                throw DegenerateSecant("coincident branch points");
            }
            if (kind == CorrectorKind::FixedPoint) {
                BranchPoint pt = correct_fixed_point(
                    loop, reference_from_reduced(omega, modes, pred, 0.0), corr);
                // Accepted reference: the frozen predicted fundamental plus
                // the converged non-fundamental modes.
                std::vector<double> accepted = pred;
                const auto nh = pt.x.nonharmonic();
                std::copy(nh.begin(), nh.end(), accepted.begin() + 1);
                references.push_back(std::move(accepted));
                branch.points.push_back(std::move(pt));
            } else {
                std::vector<double> accepted;
                branch.points.push_back(correct_pseudo_arclength(loop, omega, pred, secant, 0.0,
                                                                 corr, &accepted));
                references.push_back(std::move(accepted));
            }
            ok = true;
        } catch (const DegenerateSecant&) {
            branch.diagnostic = "degenerate secant; branch terminated";
            break;
        } catch (const CorrectorFailure&) {
        } catch (const SettleTimeout&) {
        }

        if (!ok) {
            h *= step.shrink;
            if (h < step.h_min) {
                branch.diagnostic = "corrector failed at minimum step scale; branch terminated";
                break;
            }
            continue;
        }

        if (branch.points.back().iterations <= 1) {
            if (++cheap_successes >= 2) {
                h = std::min(h * step.grow, step.h_max);
                cheap_successes = 0;
            }
        } else {
            cheap_successes = 0;
        }

        const BranchPoint& last = branch.points.back();
        if (last.measures.forcing_amp >= step.forcing_max ||
            last.measures.response_amp >= step.response_max) {
            break;
        }
    }
    branch.total_periods = loop.total_periods() - periods0;
    return branch;
}

Stability classify_stability(const BranchPoint& point, const PlantConfig& config,
                             const StabilitySettings& s) {
    Plant replica(config);
    PlantState st = point.settled_state;
    const double resp = point.measures.response_amp;
    st.x[0] += s.perturbation_rel * std::max(resp, 1e-9);
    replica.set_state(st);

    const double period = kTwoPi / point.omega;
    const auto trace =
        replica.run_uncontrolled(point.a, point.b, point.omega, s.periods * period);
    if (trace.diverged) {
        return Stability::Unstable;
    }
    const auto n = static_cast<std::size_t>(std::llround(period * config.sample_rate));
    if (trace.samples.size() < n + 1) {
        return Stability::Unstable;
    }
    const std::span<const double> window(trace.samples.data() + trace.samples.size() - n - 1,
                                         n + 1);
    const double t_end = replica.time();
    const FourierVector replay = project(window, replica.dt(), t_end, point.omega, 1);
    const double drift = std::abs(replay.fundamental_amplitude() - resp);
    return drift <= s.amplitude_tol_rel * std::max(resp, 1e-9) ? Stability::Stable
                                                               : Stability::Unstable;
}

// ---------------------------------------------------------------------------
// Fold detection
// ---------------------------------------------------------------------------

std::vector<FoldPoint> detect_folds(const std::vector<std::pair<double, double>>& branch) {
    std::vector<FoldPoint> folds;
    if (branch.size() < 3) {
        return folds;
    }
    // Normalize both coordinates so the arclength parameterization is not
    // dominated by whichever axis has the larger physical units.
    double pmin = branch[0].first, pmax = branch[0].first;
    double rmin = branch[0].second, rmax = branch[0].second;
    for (const auto& [p, r] : branch) {
        pmin = std::min(pmin, p);
        pmax = std::max(pmax, p);
        rmin = std::min(rmin, r);
        rmax = std::max(rmax, r);
    }
    const double pscale = pmax > pmin ? pmax - pmin : 1.0;
    const double rscale = rmax > rmin ? rmax - rmin : 1.0;

    for (std::size_t i = 1; i + 1 < branch.size(); ++i) {
        const double d1 = branch[i].first - branch[i - 1].first;
        const double d2 = branch[i + 1].first - branch[i].first;
        if (d1 == 0.0 || d1 * d2 >= 0.0) {
            continue;
        }
        // Quadratic through the three bracketing points in arclength.
        const auto& z0 = branch[i - 1];
        const auto& z1 = branch[i];
        const auto& z2 = branch[i + 1];
        const double s1 = std::hypot((z1.first - z0.first) / pscale, (z1.second - z0.second) / rscale);
        const double s2 = s1 + std::hypot((z2.first - z1.first) / pscale,
                                          (z2.second - z1.second) / rscale);
        // Lagrange coefficients of p(s) = c0 + c1 s + c2 s^2.
        const auto quad_extremum = [&](double f0, double f1, double f2) {
            const double denom1 = s1 * (s1 - s2);
            const double denom2 = s2 * (s2 - s1);
            const double c2 = (f1 - f0) / denom1 + (f2 - f0) / denom2;
            const double c1 = -(f1 - f0) * s2 / denom1 - (f2 - f0) * s1 / denom2;
            return std::pair{c1, c2};
        };
        const auto eval_quad = [&](double f0, double f1, double f2, double sq) {
            const double l0 = (sq - s1) * (sq - s2) / (s1 * s2);
            const double l1 = sq * (sq - s2) / (s1 * (s1 - s2));
            const double l2 = sq * (sq - s1) / (s2 * (s2 - s1));
            return f0 * l0 + f1 * l1 + f2 * l2;
        };
        const auto [c1, c2] = quad_extremum(z0.first, z1.first, z2.first);
        FoldPoint fold;
        fold.index = i;
        if (c2 != 0.0) {
            const double sq = std::clamp(-0.5 * c1 / c2, 0.0, s2);
            fold.param = eval_quad(z0.first, z1.first, z2.first, sq);
            fold.response = eval_quad(z0.second, z1.second, z2.second, sq);
        } else {
            fold.param = z1.first;
            fold.response = z1.second;
        }
        folds.push_back(fold);
    }
    return folds;
}

std::vector<FoldPoint> detect_folds(const Branch& branch) {
    std::vector<std::pair<double, double>> fr;
    fr.reserve(branch.points.size());
    for (const auto& pt : branch.points) {
        fr.emplace_back(pt.measures.forcing_amp, pt.measures.response_amp);
    }
    return detect_folds(fr);
}

std::vector<FoldPoint> detect_folds(const EquilibriumBranch& branch) {
    std::vector<std::pair<double, double>> px;
    px.reserve(branch.points.size());
    for (const auto& pt : branch.points) {
        px.emplace_back(pt.p, pt.x);
    }
    return detect_folds(px);
}

}  // namespace cbc
