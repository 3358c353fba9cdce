#include "betasort/kernel.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "betasort/threading.hpp"

namespace betasort {

double KernelSpec::k(double u) const {
    if (u < -1.0 || u > 0.0) return 0.0;
    switch (kind) {
        case KernelKind::uniform: return 1.0;
        case KernelKind::epanechnikov: return 1.5 * (1.0 - u * u);
        case KernelKind::triangular: return 2.0 * (1.0 + u);
    }
    return 0.0;
}

double KernelSpec::k_squared_integral() const {
    switch (kind) {
        case KernelKind::uniform: return 1.0;
        case KernelKind::epanechnikov: return 1.2;
        case KernelKind::triangular: return 4.0 / 3.0;
    }
    return 1.0;
}

int KernelSpec::window(int T) const { return static_cast<int>(std::floor(T * h)); }

int KernelSpec::effective_min_obs(int T) const {
    if (min_obs > 0) return min_obs;
    return std::max(10, static_cast<int>(std::ceil(0.25 * T * h)));
}

void KernelSpec::validate() const {
    if (!(h > 0.0 && h < 1.0)) throw ValidationError("kernel.h: must be in (0, 1)");
    if (!(cond_ceiling > 1.0)) throw ValidationError("kernel.cond_ceiling: must exceed 1");
}

double kernel_weight(const KernelSpec& spec, int t, int t0, int T) {
    if (t >= t0 || t < t0 - spec.window(T)) return 0.0;
    double u = static_cast<double>(t - t0) / (T * spec.h);
    return spec.k(u) / spec.h;
}

namespace {

enum class FitCode { ok, insufficient, singular };

}  // namespace

// status-returning core shared by the throwing wrapper and the panel sweep
static FitCode rolling_coeffs_impl(const double* r, const Eigen::VectorXd& f,
                                   const KernelSpec& spec, int t0, int T, CoeffPair* out,
                                   double* condition) {
    const int win = spec.window(T);
    const int t_first = std::max(1, t0 - win);
    double sw = 0, swf = 0, swf2 = 0, swr = 0, swfr = 0;
    int nobs = 0;
    for (int t = t_first; t <= t0 - 1; ++t) {
        double rit = r[t - 1];
        if (is_missing(rit)) continue;
        double w = kernel_weight(spec, t, t0, T);
        if (w == 0.0) continue;
        double ft = f(t - 1);
        sw += w;
        swf += w * ft;
        swf2 += w * ft * ft;
        swr += w * rit;
        swfr += w * ft * rit;
        ++nobs;
    }
    if (nobs < spec.effective_min_obs(T)) return FitCode::insufficient;

    // condition of the weighted 2x2 Gram [[sw, swf], [swf, swf2]]
    double tr = sw + swf2;
    double det = sw * swf2 - swf * swf;
    double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
    double lmax = 0.5 * tr + disc;
    double lmin = 0.5 * tr - disc;
    double cond = (lmin > 0.0) ? lmax / lmin : std::numeric_limits<double>::infinity();
    if (condition != nullptr) *condition = cond;
    if (!(cond <= spec.cond_ceiling)) return FitCode::singular;

    // centered solve; algebraically the inverse-Gram solution
    double fbar = swf / sw;
    double rbar = swr / sw;
    double sff = swf2 - sw * fbar * fbar;
    double sfr = swfr - sw * fbar * rbar;
    out->beta = sfr / sff;
    out->alpha = rbar - out->beta * fbar;
    return FitCode::ok;
}

CoeffPair rolling_coeffs(const Eigen::VectorXd& returns_i, const FactorSeries& factor,
                         const KernelSpec& spec, int t0) {
    spec.validate();
    const int T = factor.T();
    if (t0 < 1 || t0 > T) throw ValidationError("rolling_coeffs: t0 out of range");
    if (returns_i.size() != T)
        throw ValidationError("rolling_coeffs: returns length does not match factor");
    CoeffPair out;
    double cond = 0.0;
    switch (rolling_coeffs_impl(returns_i.data(), factor.f, spec, t0, T, &out, &cond)) {
        case FitCode::ok: return out;
        case FitCode::insufficient:
            throw InsufficientData("rolling_coeffs: fewer than " +
                                   std::to_string(spec.effective_min_obs(T)) +
                                   " usable observations before t0 = " + std::to_string(t0));
        case FitCode::singular: throw SingularWindow(cond);
    }
    throw NumericalError("rolling_coeffs: unreachable");
}

static BetaPanel estimate_impl(const PanelData& panel, const FactorSeries& factor,
                               const KernelSpec& spec, bool parallel) {
    spec.validate();
    const int T = panel.T();
    const int n = panel.n_assets();
    if (factor.T() != T) throw ValidationError("estimate_beta_panel: factor/panel length mismatch");
    const int win = spec.window(T);
    if (win < spec.effective_min_obs(T))
        throw ValidationError("estimate_beta_panel: T*h smaller than the minimum window size");
    const int t_lo = win;
    const int t_hi = T - win;
    if (t_lo < 2 || t_lo > t_hi)
        throw ValidationError("estimate_beta_panel: empty trimmed range [floor(Th), T - floor(Th)]");

    BetaPanel bp;
    bp.T = T;
    bp.n = n;
    bp.t_lo = t_lo;
    bp.t_hi = t_hi;
    bp.alpha_hat.setConstant(T, n, kMissing);
    bp.beta_hat.setConstant(T, n, kMissing);
    bp.residuals.setConstant(T, n, kMissing);
    bp.valid_mask.assign(static_cast<std::size_t>(T) * n, 0);

#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(max_threads()) if (parallel)
#endif
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd ri = panel.returns.col(i);
        for (int t0 = t_lo; t0 <= t_hi; ++t0) {
            CoeffPair cp;
            double cond = 0.0;
            if (rolling_coeffs_impl(ri.data(), factor.f, spec, t0, T, &cp, &cond) != FitCode::ok)
                continue;
            bp.alpha_hat(t0 - 1, i) = cp.alpha;
            bp.beta_hat(t0 - 1, i) = cp.beta;
            bp.valid_mask[static_cast<std::size_t>(t0 - 1) * n + i] = 1;
            double rit = ri(t0 - 1);
            if (!is_missing(rit))
                bp.residuals(t0 - 1, i) = rit - cp.alpha - cp.beta * factor.f(t0 - 1);
        }
    }
    return bp;
}

BetaPanel estimate_beta_panel(const PanelData& panel, const FactorSeries& factor,
                              const KernelSpec& spec, bool parallel) {
    return estimate_impl(panel, factor, spec, parallel);
}

BetaPanel estimate_beta_panel_serial(const PanelData& panel, const FactorSeries& factor,
                                     const KernelSpec& spec) {
    return estimate_impl(panel, factor, spec, false);
}

FirstStageVariance first_stage_variance(const PanelData& panel, const FactorSeries& factor,
                                        const BetaPanel& bp, const KernelSpec& spec, int t0) {
    const int T = panel.T();
    const int n = panel.n_assets();
    const int win = spec.window(T);
    const int t_first = std::max(bp.t_lo, t0 - win);

    // kernel-weighted local-linear fit of the squared residuals on (t - t0)/T
    double sw = 0, swx = 0, swx2 = 0, swy = 0, swxy = 0;
    int nobs = 0;
    int t_min_seen = 0, t_max_seen = 0;
    for (int t = t_first; t <= t0 - 1; ++t) {
        double w = kernel_weight(spec, t, t0, T);
        if (w == 0.0) continue;
        double x = static_cast<double>(t - t0) / T;
        for (int i = 0; i < n; ++i) {
            double e = bp.residuals(t - 1, i);
            if (is_missing(e)) continue;
            double y = e * e;
            sw += w;
            swx += w * x;
            swx2 += w * x * x;
            swy += w * y;
            swxy += w * x * y;
            ++nobs;
            if (t_min_seen == 0) t_min_seen = t;
            t_max_seen = t;
        }
    }
    if (nobs < 10 || t_max_seen <= t_min_seen)
        throw InsufficientData("first_stage_variance: too few residual observations before t0 = " +
                               std::to_string(t0));

    double xbar = swx / sw;
    double ybar = swy / sw;
    double sxx = swx2 - sw * xbar * xbar;
    double sxy = swxy - sw * xbar * ybar;
    double slope = sxy / sxx;
    double intercept = ybar - slope * xbar;  // the fit evaluated at t = t0

    FirstStageVariance out;
    out.sigma2 = std::max(0.0, intercept);
    out.sigma2_slope = slope;

    Eigen::Matrix2d A = Eigen::Matrix2d::Zero();
    for (int t = std::max(1, t0 - win); t <= t0 - 1; ++t) {
        double w = kernel_weight(spec, t, t0, T);
        if (w == 0.0) continue;
        double ft = factor.f(t - 1);
        A(0, 0) += w;
        A(0, 1) += w * ft;
        A(1, 1) += w * ft * ft;
    }
    A(1, 0) = A(0, 1);
    out.A = A;

    double det = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
    double tr = A(0, 0) + A(1, 1);
    double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
    double lmin = 0.5 * tr - disc;
    if (!(lmin > 0.0) || (0.5 * tr + disc) / lmin > spec.cond_ceiling)
        throw SingularWindow(lmin > 0.0 ? (0.5 * tr + disc) / lmin
                                        : std::numeric_limits<double>::infinity());
    Eigen::Matrix2d Ainv;
    Ainv << A(1, 1), -A(0, 1), -A(1, 0), A(0, 0);
    Ainv /= det;
    out.Sigma_b = static_cast<double>(T) * Ainv * out.sigma2 * spec.k_squared_integral();
    return out;
}

}  // namespace betasort
