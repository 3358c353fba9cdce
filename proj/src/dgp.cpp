#include "betasort/dgp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace betasort {

namespace {

double polyval(const std::vector<double>& coeffs, double x) {
    double acc = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
    return acc;
}

std::string period_label(int t) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "t%06d", t);
    return buf;
}

std::string asset_label(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "a%05d", i);
    return buf;
}

}  // namespace

double DgpSpec::tau_at(double u) const { return polyval(tau, u); }
double DgpSpec::alpha_at(double beta) const { return polyval(alpha, beta); }

double DgpSpec::loading_at(double u) const {
    return load_const + load_lin * u + load_sin * std::sin(2.0 * M_PI * u);
}

double DgpSpec::sigma_eps_at(double u) const { return polyval(sigma_eps, u); }

void DgpSpec::validate() const {
    if (n < 1) throw ValidationError("dgp.n: must be >= 1");
    if (T < 2) throw ValidationError("dgp.T: must be >= 2");
    if (!(std::abs(rho) < 1.0)) throw ValidationError("dgp.rho: |rho| must be < 1");
    if (!(sigma_x >= 0.0)) throw ValidationError("dgp.sigma_x: must be >= 0");
    if (!(eta_hi >= eta_lo)) throw ValidationError("dgp.eta: eta_hi must be >= eta_lo");
    if (!(retention > 0.0 && retention <= 1.0))
        throw ValidationError("dgp.retention: must be in (0, 1]");
    if (tau.empty()) throw ValidationError("dgp.tau: needs at least one coefficient");
    if (alpha.empty()) throw ValidationError("dgp.alpha: needs at least one coefficient");
    if (sigma_eps.empty()) throw ValidationError("dgp.sigma_eps: needs at least one coefficient");
    // sigma_eps(u) >= 0 on the whole unit interval, checked on a fine mesh
    for (int k = 0; k <= 1000; ++k)
        if (sigma_eps_at(k / 1000.0) < 0.0)
            throw ValidationError("dgp.sigma_eps: negative at u = " + std::to_string(k / 1000.0));
}

double GroundTruth::alpha_at(double beta) const {
    double acc = 0.0;
    for (auto it = alpha_coeffs.rbegin(); it != alpha_coeffs.rend(); ++it) acc = acc * beta + *it;
    return acc;
}

double GroundTruth::mu_t(int t, double beta) const {
    return alpha_at(beta) + beta * cond_mean_f(t - 1);
}

double GroundTruth::M_t(int t, double beta) const { return alpha_at(beta) + beta * factor(t - 1); }

double GroundTruth::mu_avg(int t_lo, int t_hi, double beta) const {
    double acc = 0.0;
    for (int t = t_lo; t <= t_hi; ++t) acc += cond_mean_f(t - 1);
    double mean_cond = acc / (t_hi - t_lo + 1);
    return alpha_at(beta) + beta * mean_cond;
}

FactorSeries simulate_factor(const DgpSpec& spec, RngStream& rng) {
    spec.validate();
    const int T = spec.T;
    FactorSeries fs;
    fs.periods.reserve(T);
    fs.f.resize(T);
    fs.cond_mean.resize(T);

    // stationary initialization of the AR(1) state
    double x_prev;
    if (spec.sigma_x == 0.0) {
        x_prev = 0.0;
    } else {
        double sd0 = spec.sigma_x / std::sqrt(1.0 - spec.rho * spec.rho);
        x_prev = sd0 * rng.normal();
    }
    for (int t = 1; t <= T; ++t) {
        double u = static_cast<double>(t) / T;
        fs.cond_mean(t - 1) = spec.tau_at(u) + spec.rho * x_prev;
        double x_t = spec.rho * x_prev + spec.sigma_x * rng.normal();
        fs.f(t - 1) = spec.tau_at(u) + x_t;
        fs.periods.push_back(period_label(t));
        x_prev = x_t;
    }
    return fs;
}

std::pair<PanelData, GroundTruth> simulate_panel(const DgpSpec& spec, const FactorSeries& factor,
                                                 RngStream& rng) {
    spec.validate();
    if (factor.T() != spec.T)
        throw ValidationError("dgp: factor length does not match spec.T");
    if (!factor.has_cond_mean())
        throw ValidationError("dgp: factor is missing its conditional mean path");

    const int T = spec.T;
    const int n = spec.n;

    PanelData panel;
    panel.periods = factor.periods;
    panel.assets.reserve(n);
    for (int i = 0; i < n; ++i) panel.assets.push_back(asset_label(i));
    panel.returns.setConstant(T, n, kMissing);

    GroundTruth truth;
    truth.beta_true.resize(T, n);
    truth.alpha_true.resize(T, n);
    truth.cond_mean_f = factor.cond_mean;
    truth.factor = factor.f;
    truth.alpha_coeffs = spec.alpha;

    std::vector<double> eta(n);
    for (int i = 0; i < n; ++i) eta[i] = spec.eta_lo + (spec.eta_hi - spec.eta_lo) * rng.uniform();

    truth.beta_min = std::numeric_limits<double>::infinity();
    truth.beta_max = -std::numeric_limits<double>::infinity();
    for (int t = 1; t <= T; ++t) {
        double u = static_cast<double>(t) / T;
        double g = spec.loading_at(u);
        double sd = spec.sigma_eps_at(u);
        double f_t = factor.f(t - 1);
        for (int i = 0; i < n; ++i) {
            double beta = eta[i] * g;
            double a = spec.alpha_at(beta);
            truth.beta_true(t - 1, i) = beta;
            truth.alpha_true(t - 1, i) = a;
            truth.beta_min = std::min(truth.beta_min, beta);
            truth.beta_max = std::max(truth.beta_max, beta);
            double ret = a + beta * f_t + sd * rng.normal();
            bool keep = spec.retention >= 1.0 || rng.uniform() < spec.retention;
            if (keep) panel.returns(t - 1, i) = ret;
        }
    }
    return {std::move(panel), std::move(truth)};
}

MuCurve true_grand_mean(const GroundTruth& truth, const std::vector<double>& grid) {
    const int T = static_cast<int>(truth.cond_mean_f.size());
    MuCurve curve;
    curve.grid = grid;
    curve.values.resize(static_cast<int>(grid.size()));
    curve.effective_T.assign(grid.size(), T);
    for (std::size_t v = 0; v < grid.size(); ++v) {
        if (grid[v] < truth.beta_min || grid[v] > truth.beta_max)
            throw ValidationError("true_grand_mean: grid point " + std::to_string(grid[v]) +
                                  " outside the realized beta support");
        curve.values(static_cast<int>(v)) = truth.mu_avg(1, T, grid[v]);
    }
    return curve;
}

}  // namespace betasort
