#include "betasort/inference.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "betasort/rng.hpp"
#include "betasort/threading.hpp"

namespace betasort {

void GaussianSimSpec::validate() const {
    if (S < 100) throw ValidationError("sim.S: need at least 100 draws");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("sim.alpha: must be in (0, 1)");
}

double upper_quantile(std::vector<double> samples, double alpha) {
    if (samples.empty()) throw ValidationError("upper_quantile: empty sample");
    std::sort(samples.begin(), samples.end());
    std::size_t k = static_cast<std::size_t>(
        std::ceil((1.0 - alpha) * static_cast<double>(samples.size())));
    k = std::min(std::max<std::size_t>(k, 1), samples.size());
    return samples[k - 1];
}

Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) throw ValidationError("symmetric_sqrt: matrix not square");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
    if (eig.info() != Eigen::Success) throw NumericalError("symmetric_sqrt: eigensolver failed");
    double floor_tol = -1e-8 * std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
    if (eig.eigenvalues().minCoeff() < floor_tol)
        throw NumericalError("symmetric_sqrt: matrix is not PSD after clipping");
    Eigen::VectorXd lam = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
}

std::vector<double> simulate_field_stats(const Eigen::MatrixXd& corr, const GaussianSimSpec& sim,
                                         const std::function<double(const double*, int)>& stat,
                                         bool parallel) {
    sim.validate();
    const int k = static_cast<int>(corr.rows());
    const int S = sim.S;
    const bool identity = corr.isIdentity(1e-14);
    Eigen::MatrixXd root;
    if (!identity) root = symmetric_sqrt(corr);

    std::vector<double> out(S);
    const int block = 512;
    const int n_blocks = (S + block - 1) / block;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(max_threads()) if (parallel)
#endif
    for (int b = 0; b < n_blocks; ++b) {
        const int s0 = b * block;
        const int s1 = std::min(S, s0 + block);
        Eigen::MatrixXd z(k, s1 - s0);
        for (int s = s0; s < s1; ++s) {
            RngStream rng(derive_stream(sim.seed, {kDrawTag, static_cast<std::uint64_t>(s)}));
            for (int j = 0; j < k; ++j) z(j, s - s0) = rng.normal();
        }
        if (!identity) z = root * z;
        for (int s = s0; s < s1; ++s) out[s] = stat(z.col(s - s0).data(), k);
    }
    return out;
}

double sup_gaussian_quantile(const Eigen::MatrixXd& corr, const GaussianSimSpec& sim,
                             SupMode mode) {
    auto stat = [mode](const double* z, int k) {
        double m = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < k; ++j) {
            double v = (mode == SupMode::abs_sup) ? std::abs(z[j]) : z[j];
            m = std::max(m, v);
        }
        return m;
    };
    return upper_quantile(simulate_field_stats(corr, sim, stat), sim.alpha);
}

bool Band::contains(const Eigen::VectorXd& truth) const {
    for (int v = 0; v < center.size(); ++v) {
        if (is_missing(half_width(v))) continue;
        if (truth(v) < center(v) - half_width(v) || truth(v) > center(v) + half_width(v))
            return false;
    }
    return true;
}

bool Band::contains_zero_everywhere() const {
    for (int v = 0; v < center.size(); ++v) {
        if (is_missing(half_width(v))) continue;
        if (0.0 < center(v) - half_width(v) || 0.0 > center(v) + half_width(v)) return false;
    }
    return true;
}

Band grand_mean_band(const MuCurve& curve, const Eigen::MatrixXd& fm_cov,
                     const Eigen::VectorXd& plugin_var, const GaussianSimSpec& sim,
                     BandTarget target) {
    const int V = curve.n_grid();
    if (fm_cov.rows() != V) throw ValidationError("grand_mean_band: covariance/grid mismatch");
    Eigen::MatrixXd corr = to_correlation(fm_cov);
    double q = sup_gaussian_quantile(corr, sim, SupMode::abs_sup);

    Band band;
    band.kind = (target == BandTarget::mu_bar_t) ? BandKind::grand_mean_sharp
                                                 : BandKind::grand_mean_conservative;
    band.grid = curve.grid;
    band.center = curve.values;
    band.q_hat = q;
    band.alpha = sim.alpha;
    band.scale.resize(V);
    band.half_width.resize(V);
    for (int v = 0; v < V; ++v) {
        double s2 = (target == BandTarget::mu_bar_t) ? plugin_var(v) : fm_cov(v, v);
        if (s2 < 0.0) s2 = 0.0;
        band.scale(v) = s2;
        band.half_width(v) = std::sqrt(s2) * q / std::sqrt(curve.effective_T[v]);
    }
    return band;
}

TestResult test_grand_mean_zero(const Band& band) {
    TestResult res;
    res.alpha = band.alpha;
    res.critical_value = band.q_hat;
    double stat = 0.0;
    int arg = -1;
    for (int v = 0; v < band.center.size(); ++v) {
        if (is_missing(band.half_width(v))) continue;
        double z;
        if (band.half_width(v) > 0.0) {
            z = std::abs(band.center(v)) / band.half_width(v) * band.q_hat;
        } else {
            z = (band.center(v) == 0.0) ? 0.0 : std::numeric_limits<double>::infinity();
        }
        if (z > stat) {
            stat = z;
            arg = v;
        }
    }
    res.statistic = stat;
    res.reject = stat > res.critical_value;
    std::ostringstream os;
    os << "sup standardized |mu|" << (arg >= 0 ? " at beta = " + std::to_string(band.grid[arg]) : "");
    res.details = os.str();
    return res;
}

TestResult test_high_minus_low(const MuCurve& curve, const Eigen::MatrixXd& fm_cov,
                               const GaussianSimSpec& sim) {
    const int V = curve.n_grid();
    if (fm_cov.rows() != V) throw ValidationError("test_high_minus_low: covariance/grid mismatch");
    HmlPoint pt = high_minus_low_point(curve);

    TestResult res;
    res.alpha = sim.alpha;
    res.statistic = pt.spread;
    if (pt.idx_max == pt.idx_min) {
        res.critical_value = 0.0;
        res.reject = false;
        res.details = "degenerate selection: argmax == argmin";
        return res;
    }

    Eigen::VectorXd sd = fm_cov.diagonal().cwiseMax(0.0).cwiseSqrt();
    Eigen::MatrixXd corr = to_correlation(fm_cov);
    // each draw maximizes over its own bin paths: the range of the scaled field
    auto stat = [&sd](const double* z, int k) {
        double hi = -std::numeric_limits<double>::infinity();
        double lo = std::numeric_limits<double>::infinity();
        for (int j = 0; j < k; ++j) {
            double v = sd(j) * z[j];
            hi = std::max(hi, v);
            lo = std::min(lo, v);
        }
        return hi - lo;
    };
    double q_range = upper_quantile(simulate_field_stats(corr, sim, stat), sim.alpha);

    int common = 0;
    for (int r = 0; r < curve.n_periods(); ++r)
        if (!is_missing(curve.values_t(r, pt.idx_max)) && !is_missing(curve.values_t(r, pt.idx_min)))
            ++common;
    if (common < 1) throw InsufficientData("test_high_minus_low: selected points never co-observed");

    res.critical_value = q_range / std::sqrt(static_cast<double>(common));
    res.reject = res.statistic > res.critical_value;

    double scale2 = fm_cov(pt.idx_max, pt.idx_max) + fm_cov(pt.idx_min, pt.idx_min) -
                    2.0 * fm_cov(pt.idx_max, pt.idx_min);
    std::ostringstream os;
    os << "beta* = " << pt.beta_max << ", beta** = " << pt.beta_min
       << ", pair scale = " << std::sqrt(std::max(0.0, scale2))
       << ", spread interval = [" << pt.spread - res.critical_value << ", "
       << pt.spread + res.critical_value << "]";
    res.details = os.str();
    return res;
}

TestResult test_butterfly(const ButterflyStats& stats, const GaussianSimSpec& sim) {
    TestResult res;
    res.alpha = sim.alpha;
    const int K = static_cast<int>(stats.triples.size());
    if (K == 0)
        throw NumericalError("test_butterfly: every triple is degenerate");

    Eigen::MatrixXd corr = to_correlation(stats.cov);
    double q = sup_gaussian_quantile(corr, sim, SupMode::abs_sup);

    double root_scale = std::sqrt(stats.scale_T_n_over_J);
    double stat = 0.0;
    int arg = 0;
    for (int k = 0; k < K; ++k) {
        double z = root_scale * std::abs(stats.delta_hat(k)) / std::sqrt(stats.sigma_D(k));
        if (z > stat) {
            stat = z;
            arg = k;
        }
    }
    res.statistic = stat;
    res.critical_value = q;
    res.reject = stat > q;

    const Triple& tr = stats.triples[arg];
    double sd = std::sqrt(stats.sigma_D(arg));
    std::ostringstream os;
    os << "sup triple indices (" << tr.i1 << ", " << tr.i2 << ", " << tr.i3 << ")"
       << ", delta = " << stats.delta_hat(arg) << ", dropped " << stats.dropped
       << " degenerate triples, conservative interval = [" << stats.delta_hat(arg) -
           sd * q * stats.interval_factor_max
       << ", " << stats.delta_hat(arg) + sd * q * stats.interval_factor_max << "]";
    res.details = os.str();
    return res;
}

Band fixed_t_band(const PartitionScheme& partition, const PortfolioReturns& returns,
                  const std::vector<double>& sj2, const std::vector<double>& grid,
                  const GaussianSimSpec& sim) {
    if (static_cast<int>(sj2.size()) != partition.J)
        throw ValidationError("fixed_t_band: sigma_j2 does not match the partition");
    const int J = partition.J;
    Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(J, J);
    double q = sup_gaussian_quantile(eye, sim, SupMode::abs_sup);

    Band band;
    band.kind = BandKind::fixed_t;
    band.t = partition.t;
    band.grid = grid;
    band.q_hat = q;
    band.alpha = sim.alpha;
    const int V = static_cast<int>(grid.size());
    band.center.setConstant(V, kMissing);
    band.half_width.setConstant(V, kMissing);
    band.scale.setConstant(V, kMissing);
    double root_J_over_n = std::sqrt(static_cast<double>(J) / partition.n_t);
    for (int v = 0; v < V; ++v) {
        int j = partition.bin_of(grid[v]);
        if (j < 0) continue;
        band.center(v) = returns.a_hat[j];
        band.scale(v) = sj2[j];
        band.half_width(v) = std::sqrt(sj2[j]) * q * root_J_over_n;
    }
    return band;
}

}  // namespace betasort
