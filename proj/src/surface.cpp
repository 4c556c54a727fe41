#include "cbc/surface.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace cbc {

namespace {

double wendland_c2(double r) {
    if (r >= 1.0) {
        return 0.0;
    }
    const double q = 1.0 - r;
    const double q2 = q * q;
    return q2 * q2 * (4.0 * r + 1.0);
}

// d phi / d r = -20 r (1-r)^3
double wendland_c2_deriv(double r) {
    if (r >= 1.0) {
        return 0.0;
    }
    const double q = 1.0 - r;
    return -20.0 * r * q * q * q;
}

}  // namespace

RBFModel build_interpolant(std::span<const SurfaceSample> samples, double rho) {
    if (samples.size() < 3) {
        throw ValidationError("surface interpolation needs at least 3 samples");
    }
    RBFModel model;
    model.omega_min = model.omega_max = samples[0].omega;
    model.response_min = model.response_max = samples[0].response;
    for (const auto& s : samples) {
        model.omega_min = std::min(model.omega_min, s.omega);
        model.omega_max = std::max(model.omega_max, s.omega);
        model.response_min = std::min(model.response_min, s.response);
        model.response_max = std::max(model.response_max, s.response);
    }
    if (!(model.omega_max > model.omega_min) || !(model.response_max > model.response_min)) {
        throw ValidationError("surface samples must span a 2-D range of (omega, R)");
    }
    const double wspan = model.omega_max - model.omega_min;
    const double rspan = model.response_max - model.response_min;

    // Normalize and merge duplicate sites by averaging their F values.
    struct Merged {
        double w, r, f;
        int count;
    };
    std::vector<Merged> merged;
    merged.reserve(samples.size());
    for (const auto& s : samples) {
        const double w = (s.omega - model.omega_min) / wspan;
        const double r = (s.response - model.response_min) / rspan;
        bool found = false;
        for (auto& m : merged) {
            if (std::hypot(m.w - w, m.r - r) < 1e-9) {
                m.f = (m.f * m.count + s.forcing) / (m.count + 1);
                ++m.count;
                found = true;
                break;
            }
        }
        if (!found) {
            merged.push_back({w, r, s.forcing, 1});
        }
    }

    const auto n = merged.size();
    if (rho <= 0.0) {
        // 4x the median nearest-neighbor spacing in normalized coordinates.
        std::vector<double> nn(n, std::numeric_limits<double>::max());
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (i != j) {
                    nn[i] = std::min(nn[i], std::hypot(merged[i].w - merged[j].w,
                                                       merged[i].r - merged[j].r));
                }
            }
        }
        std::nth_element(nn.begin(), nn.begin() + n / 2, nn.end());
        rho = 4.0 * nn[n / 2];
    }
    model.rho_ = rho;

    const auto dim = static_cast<Eigen::Index>(n + 3);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double d = std::hypot(merged[i].w - merged[j].w, merged[i].r - merged[j].r);
            a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = wendland_c2(d / rho);
        }
        a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n)) = 1.0;
        a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n + 1)) = merged[i].w;
        a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n + 2)) = merged[i].r;
        a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(i)) = 1.0;
        a(static_cast<Eigen::Index>(n + 1), static_cast<Eigen::Index>(i)) = merged[i].w;
        a(static_cast<Eigen::Index>(n + 2), static_cast<Eigen::Index>(i)) = merged[i].r;
        rhs(static_cast<Eigen::Index>(i)) = merged[i].f;
    }

    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible()) {
        throw IllConditioned(
            "RBF interpolation system is singular; increase the support radius rho");
    }
    const Eigen::VectorXd sol = lu.solve(rhs);

    double fmax = 0.0;
    for (const auto& m : merged) {
        fmax = std::max(fmax, std::abs(m.f));
    }
    // Interpolation exactness check at the centers.
    const Eigen::VectorXd residual = a * sol - rhs;
    if (residual.head(static_cast<Eigen::Index>(n)).lpNorm<Eigen::Infinity>() >
        1e-8 * std::max(fmax, 1.0)) {
        throw IllConditioned("RBF interpolation residual exceeds tolerance at the centers");
    }

    model.sites_.reserve(n);
    for (const auto& m : merged) {
        model.sites_.push_back({m.w, m.r});
    }
    model.weights_.assign(sol.data(), sol.data() + dim);
    return model;
}

RBFModel::Eval RBFModel::evaluate(double omega, double response) const {
    const double w = (omega - omega_min) / (omega_max - omega_min);
    const double r = (response - response_min) / (response_max - response_min);
    const std::size_t n = sites_.size();
    double f = weights_[n] + weights_[n + 1] * w + weights_[n + 2] * r;
    double nearest = std::numeric_limits<double>::max();
    for (std::size_t i = 0; i < n; ++i) {
        const double d = std::hypot(w - sites_[i].w, r - sites_[i].r);
        nearest = std::min(nearest, d);
        f += weights_[i] * wendland_c2(d / rho_);
    }
    Eval out;
    out.f = f;
    out.extrapolated = w < -1e-12 || w > 1.0 + 1e-12 || r < -1e-12 || r > 1.0 + 1e-12 ||
                       nearest > rho_;
    return out;
}

double RBFModel::df_dresponse(double omega, double response) const {
    const double w = (omega - omega_min) / (omega_max - omega_min);
    const double r = (response - response_min) / (response_max - response_min);
    const double rnorm = 1.0 / (response_max - response_min);
    const std::size_t n = sites_.size();
    double df = weights_[n + 2] * rnorm;
    for (std::size_t i = 0; i < n; ++i) {
        const double dw = w - sites_[i].w;
        const double dr = r - sites_[i].r;
        const double d = std::hypot(dw, dr);
        if (d < 1e-14 || d >= rho_) {
            continue;
        }
        df += weights_[i] * wendland_c2_deriv(d / rho_) * (dr / (d * rho_)) * rnorm;
    }
    return df;
}

FoldCurve extract_fold_curve(const std::vector<Branch>& branches, const RBFModel& model) {
    struct Pair {
        double omega;
        FoldCurvePoint lower, upper;
    };
    std::vector<Pair> pairs;

    for (const auto& branch : branches) {
        auto folds = detect_folds(branch);
        if (folds.size() < 2) {
            continue;  // below the cusp (or a fold grazing the sweep bounds)
        }
        // Keep the extremal pair when more than two sign changes slip in.
        std::sort(folds.begin(), folds.end(),
                  [](const FoldPoint& a, const FoldPoint& b) { return a.response < b.response; });
        const FoldPoint& lo = folds.front();
        const FoldPoint& hi = folds.back();

        // Refine each fold response against the interpolant: dF/dR = 0 on
        // the constant-omega slice, solved by bisection on a small bracket.
        const auto refine = [&](const FoldPoint& seed) {
            const double half =
                0.05 * (model.response_max - model.response_min);
            double a = seed.response - half;
            double b = seed.response + half;
            double da = model.df_dresponse(branch.omega, a);
            double db = model.df_dresponse(branch.omega, b);
            FoldCurvePoint out;
            out.omega = branch.omega;
            if (da * db < 0.0) {
                for (int it = 0; it < 60; ++it) {
                    const double mid = 0.5 * (a + b);
                    const double dm = model.df_dresponse(branch.omega, mid);
                    if (da * dm <= 0.0) {
                        b = mid;
                        db = dm;
                    } else {
                        a = mid;
                        da = dm;
                    }
                }
                out.response = 0.5 * (a + b);
                out.forcing = model.evaluate(branch.omega, out.response).f;
            } else {
                out.response = seed.response;
                out.forcing = seed.param;
            }
            return out;
        };
        pairs.push_back({branch.omega, refine(lo), refine(hi)});
    }

    std::sort(pairs.begin(), pairs.end(),
              [](const Pair& a, const Pair& b) { return a.omega < b.omega; });
    FoldCurve curve;
    for (const auto& p : pairs) {
        curve.lower.push_back(p.lower);
        curve.upper.push_back(p.upper);
    }
    return curve;
}

CuspPoint locate_cusp(const FoldCurve& curve) {
    const std::size_t n = std::min(curve.lower.size(), curve.upper.size());
    if (n < 3) {
        throw InsufficientData("cusp location needs at least 3 fold pairs");
    }

    // Normalized separation between the fold branches per frequency.
    double fscale = 0.0, rscale = 0.0, wmin = curve.lower[0].omega, wmax = wmin;
    for (std::size_t i = 0; i < n; ++i) {
        fscale = std::max({fscale, std::abs(curve.lower[i].forcing),
                           std::abs(curve.upper[i].forcing)});
        rscale = std::max({rscale, std::abs(curve.lower[i].response),
                           std::abs(curve.upper[i].response)});
        wmin = std::min(wmin, curve.lower[i].omega);
        wmax = std::max(wmax, curve.lower[i].omega);
    }
    fscale = std::max(fscale, 1e-300);
    rscale = std::max(rscale, 1e-300);

    struct Obs {
        double omega, sep;
    };
    // The F and R separations follow distinct power laws near the merge, so
    // each coordinate is fitted separately and the better fit wins.
    const auto collect = [&](auto field, double scale) {
        std::vector<Obs> obs;
        for (std::size_t i = 0; i < n; ++i) {
            const double sep =
                std::abs(field(curve.upper[i]) - field(curve.lower[i])) / scale;
            if (sep > 0.0) {
                obs.push_back({curve.lower[i].omega, sep});
            }
        }
        std::sort(obs.begin(), obs.end(),
                  [](const Obs& a, const Obs& b) { return a.omega < b.omega; });
        return obs;
    };

    // Fits sep = C (omega - omega_c)^q by scanning omega_c below the
    // smallest two-fold frequency and minimizing the log-log regression
    // residual, with a golden-section polish around the scan minimum.
    const auto fit_cusp = [&](const std::vector<Obs>& obs) {
        const auto fit_residual = [&](double wc) {
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            const auto m = static_cast<double>(obs.size());
            for (const auto& o : obs) {
                const double x = std::log(o.omega - wc);
                const double y = std::log(o.sep);
                sx += x;
                sy += y;
                sxx += x * x;
                sxy += x * y;
            }
            const double denom = m * sxx - sx * sx;
            if (std::abs(denom) < 1e-30) {
                return std::numeric_limits<double>::max();
            }
            const double slope = (m * sxy - sx * sy) / denom;
            const double intercept = (sy - slope * sx) / m;
            double ss = 0.0;
            for (const auto& o : obs) {
                const double x = std::log(o.omega - wc);
                const double e = std::log(o.sep) - (intercept + slope * x);
                ss += e * e;
            }
            return ss;
        };

        const double span = std::max(wmax - wmin, 1e-6 * std::abs(wmin) + 1e-12);
        const double lo = obs.front().omega - 2.0 * span;
        const double hi = obs.front().omega - 1e-9 * span;
        double best = lo;
        double best_ss = std::numeric_limits<double>::max();
        for (int i = 0; i <= 400; ++i) {
            const double wc = lo + (hi - lo) * i / 400.0;
            const double ss = fit_residual(wc);
            if (ss < best_ss) {
                best_ss = ss;
                best = wc;
            }
        }
        {
            const double g = 0.5 * (std::sqrt(5.0) - 1.0);
            double a = std::max(lo, best - (hi - lo) / 400.0);
            double b = std::min(hi, best + (hi - lo) / 400.0);
            double c = b - g * (b - a);
            double d = a + g * (b - a);
            for (int it = 0; it < 80; ++it) {
                if (fit_residual(c) < fit_residual(d)) {
                    b = d;
                } else {
                    a = c;
                }
                c = b - g * (b - a);
                d = a + g * (b - a);
            }
            best = 0.5 * (a + b);
        }
        return std::pair{best, best_ss};
    };

    const auto obs_f =
        collect([](const FoldCurvePoint& p) { return p.forcing; }, fscale);
    const auto obs_r =
        collect([](const FoldCurvePoint& p) { return p.response; }, rscale);
    if (obs_f.size() < 3 && obs_r.size() < 3) {
        throw InsufficientData("fold branches are degenerate; cannot locate cusp");
    }
    double best = 0.0;
    double best_ss = std::numeric_limits<double>::max();
    std::vector<Obs> obs;  // the winning observation set, reused below
    for (const auto* cand : {&obs_f, &obs_r}) {
        if (cand->size() < 3) {
            continue;
        }
        const auto [wc, ss] = fit_cusp(*cand);
        const double per_point = ss / static_cast<double>(cand->size());
        if (per_point < best_ss) {
            best_ss = per_point;
            best = wc;
            obs = *cand;
        }
    }

    CuspPoint cusp;
    cusp.omega = best;
    // Extrapolate the branch midpoints to the cusp frequency (linear least
    // squares in omega over the same nearby pairs).
    const auto extrapolate = [&](auto field) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const auto m = static_cast<double>(obs.size());
        std::size_t k = 0;
        for (std::size_t i = 0; i < n && k < obs.size(); ++i) {
            if (curve.lower[i].omega != obs[k].omega) {
                continue;
            }
            const double x = curve.lower[i].omega;
            const double y = 0.5 * (field(curve.lower[i]) + field(curve.upper[i]));
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++k;
        }
        const double denom = m * sxx - sx * sx;
        const double slope = std::abs(denom) > 1e-30 ? (m * sxy - sx * sy) / denom : 0.0;
        const double intercept = (sy - slope * sx) / m;
        return intercept + slope * best;
    };
    cusp.forcing = extrapolate([](const FoldCurvePoint& p) { return p.forcing; });
    cusp.response = extrapolate([](const FoldCurvePoint& p) { return p.response; });
    return cusp;
}

std::vector<ContourCurve> constant_amplitude_slices(const RBFModel& model,
                                                    std::span<const double> levels,
                                                    double omega_min, double omega_max,
                                                    std::vector<std::string>* warnings) {
    std::vector<ContourCurve> curves;
    const double wlo = std::max(omega_min, model.omega_min);
    const double whi = std::min(omega_max, model.omega_max);
    const double rlo = model.response_min;
    const double rhi = model.response_max;

    double fmin = std::numeric_limits<double>::max();
    double fmax = std::numeric_limits<double>::lowest();
    constexpr int kScan = 96;
    for (int i = 0; i <= kScan; ++i) {
        for (int j = 0; j <= kScan; ++j) {
            const double f = model
                                 .evaluate(wlo + (whi - wlo) * i / kScan,
                                           rlo + (rhi - rlo) * j / kScan)
                                 .f;
            fmin = std::min(fmin, f);
            fmax = std::max(fmax, f);
        }
    }

    for (double level : levels) {
        if (level < fmin || level > fmax) {
            if (warnings) {
                warnings->push_back("slice level outside the surface range; skipped");
            }
            continue;
        }
        ContourCurve curve;
        curve.level = level;

        // Seed on the box boundary, then march the implicit curve with a
        // tangent predictor and a gradient-direction Newton corrector.
        const auto fval = [&](double w, double r) { return model.evaluate(w, r).f - level; };
        const auto grad = [&](double w, double r) {
            const double hw = 1e-6 * (whi - wlo);
            const double hr = 1e-6 * (rhi - rlo);
            const double gw = (fval(w + hw, r) - fval(w - hw, r)) / (2.0 * hw);
            const double gr = (fval(w, r + hr) - fval(w, r - hr)) / (2.0 * hr);
            return std::pair{gw, gr};
        };

        struct Seed {
            double w, r;
        };
        std::vector<Seed> seeds;
        constexpr int kEdge = 400;
        const auto scan_edge = [&](auto point_at) {
            double prev = fval(point_at(0).w, point_at(0).r);
            for (int i = 1; i <= kEdge; ++i) {
                const Seed p = point_at(i);
                const double cur = fval(p.w, p.r);
                if (prev == 0.0 || prev * cur < 0.0) {
                    const Seed q = point_at(i - 1);
                    const double tfrac = prev / (prev - cur);
                    seeds.push_back({q.w + tfrac * (p.w - q.w), q.r + tfrac * (p.r - q.r)});
                }
                prev = cur;
            }
        };
        scan_edge([&](int i) { return Seed{wlo, rlo + (rhi - rlo) * i / kEdge}; });
        scan_edge([&](int i) { return Seed{whi, rlo + (rhi - rlo) * i / kEdge}; });
        scan_edge([&](int i) { return Seed{wlo + (whi - wlo) * i / kEdge, rlo}; });
        scan_edge([&](int i) { return Seed{wlo + (whi - wlo) * i / kEdge, rhi}; });

        const double ds = 0.01 * std::hypot(whi - wlo, rhi - rlo);
        std::vector<std::vector<std::pair<double, double>>> segments;
        const auto near_traced = [&](double w, double r) {
            for (const auto& seg : segments) {
                for (const auto& [sw, sr] : seg) {
                    if (std::hypot((sw - w) / (whi - wlo), (sr - r) / (rhi - rlo)) < 0.02) {
                        return true;
                    }
                }
            }
            return false;
        };

        for (const auto& seed : seeds) {
            if (near_traced(seed.w, seed.r)) {
                continue;
            }
            std::vector<std::pair<double, double>> seg;
            double w = seed.w;
            double r = seed.r;
            // Pick the tangent direction that enters the box.
            auto [gw, gr] = grad(w, r);
            double tw = -gr;
            double tr = gw;
            const double wmid = 0.5 * (wlo + whi);
            const double rmid = 0.5 * (rlo + rhi);
            if (tw * (wmid - w) + tr * (rmid - r) < 0.0) {
                tw = -tw;
                tr = -tr;
            }
            for (int stepi = 0; stepi < 600; ++stepi) {
                seg.emplace_back(w, r);
                // Closed contour: back near the seed after leaving it.
                if (stepi > 10 &&
                    std::hypot((w - seed.w) / (whi - wlo), (r - seed.r) / (rhi - rlo)) <
                        1.5 * ds / std::hypot(whi - wlo, rhi - rlo)) {
                    break;
                }
                const double tn = std::hypot(tw / (whi - wlo), tr / (rhi - rlo));
                if (tn < 1e-14) {
                    break;
                }
                // Normalized-space stepping keeps the march isotropic.
                double nw = (w - wlo) / (whi - wlo) + ds / std::hypot(whi - wlo, rhi - rlo) *
                                                          (tw / (whi - wlo)) / tn;
                double nr = (r - rlo) / (rhi - rlo) + ds / std::hypot(whi - wlo, rhi - rlo) *
                                                          (tr / (rhi - rlo)) / tn;
                w = wlo + nw * (whi - wlo);
                r = rlo + nr * (rhi - rlo);
                // Corrector: project back onto the contour along the gradient.
                for (int c = 0; c < 3; ++c) {
                    const auto [cgw, cgr] = grad(w, r);
                    const double g2 = cgw * cgw + cgr * cgr;
                    if (g2 < 1e-30) {
                        break;
                    }
                    const double f = fval(w, r);
                    w -= f * cgw / g2;
                    r -= f * cgr / g2;
                }
                if (w < wlo - 1e-9 || w > whi + 1e-9 || r < rlo - 1e-9 || r > rhi + 1e-9) {
                    break;
                }
                auto [ngw, ngr] = grad(w, r);
                double ntw = -ngr;
                double ntr = ngw;
                // Keep marching in a consistent direction.
                if (ntw * tw + ntr * tr < 0.0) {
                    ntw = -ntw;
                    ntr = -ntr;
                }
                tw = ntw;
                tr = ntr;
            }
            if (seg.size() > 3) {
                segments.push_back(std::move(seg));
            }
        }
        for (auto& seg : segments) {
            curve.points.insert(curve.points.end(), seg.begin(), seg.end());
        }
        curves.push_back(std::move(curve));
    }
    return curves;
}

}  // namespace cbc
