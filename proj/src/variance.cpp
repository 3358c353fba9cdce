#include "betasort/variance.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace betasort {

CondMeanModel fit_factor_condmean(const FactorSeries& factor, CondMeanKind kind, bool expanding) {
    const int T = factor.T();
    if (T < 1) throw ValidationError("condmean: empty factor");
    CondMeanModel m;
    m.kind = kind;
    m.expanding = expanding;
    m.fitted.setZero(T);
    if (kind == CondMeanKind::zero) return m;

    // expanding mean of past values; fitted[0] has no past and stays 0
    Eigen::VectorXd running_mean = Eigen::VectorXd::Zero(T);
    double acc = 0.0;
    for (int t = 1; t < T; ++t) {
        acc += factor.f(t - 1);
        running_mean(t) = acc / t;
    }
    if (kind == CondMeanKind::constant) {
        m.fitted = running_mean;
        m.params << (T > 1 ? (acc + factor.f(T - 1)) / T : factor.f(0)), 0.0;
        return m;
    }

    if (T < 10) throw InsufficientData("condmean: ar1 needs T >= 10");
    // OLS of f_s on (1, f_{s-1}); expanding uses pairs with s <= t-1 only
    auto fit_pairs = [&](int last_s, double* th0, double* th1) {
        double sw = 0, sx = 0, sx2 = 0, sy = 0, sxy = 0;
        for (int s = 2; s <= last_s; ++s) {
            double x = factor.f(s - 2);
            double y = factor.f(s - 1);
            sw += 1.0;
            sx += x;
            sx2 += x * x;
            sy += y;
            sxy += x * y;
        }
        if (sw < 2.0) return false;
        double xbar = sx / sw, ybar = sy / sw;
        double sxx = sx2 - sw * xbar * xbar;
        if (sxx <= 1e-12 * std::max(1.0, sx2)) return false;
        *th1 = (sxy - sw * xbar * ybar) / sxx;
        *th0 = ybar - *th1 * xbar;
        return true;
    };

    if (!expanding) {
        double th0 = 0, th1 = 0;
        if (!fit_pairs(T, &th0, &th1)) {
            m.fallback = true;
            m.fitted = running_mean;
            m.params << running_mean(T - 1), 0.0;
            return m;
        }
        m.params << th0, th1;
        m.fitted(0) = 0.0;
        for (int t = 2; t <= T; ++t) m.fitted(t - 1) = th0 + th1 * factor.f(t - 2);
        return m;
    }

    // expanding: fitted values from t = 11 on, constant fallback before
    double th0 = 0, th1 = 0;
    bool any_fit = false;
    for (int t = 1; t <= T; ++t) {
        if (t <= 10) {
            m.fitted(t - 1) = running_mean(t - 1);
            continue;
        }
        if (fit_pairs(t - 1, &th0, &th1)) {
            m.fitted(t - 1) = th0 + th1 * factor.f(t - 2);
            any_fit = true;
        } else {
            m.fitted(t - 1) = running_mean(t - 1);
            m.fallback = true;
        }
    }
    if (any_fit) {
        double p0 = 0, p1 = 0;
        if (fit_pairs(T, &p0, &p1)) m.params << p0, p1;
    } else {
        m.fallback = true;
        m.params << running_mean(T - 1), 0.0;
    }
    return m;
}

Eigen::MatrixXd fm_covariance(const MuCurve& curve) {
    const int R = curve.n_periods();
    const int V = curve.n_grid();
    if (curve.values_t.rows() != R || R == 0)
        throw ValidationError("fm_covariance: curve has no per-period values");
    Eigen::MatrixXd cov(V, V);
    for (int a = 0; a < V; ++a) {
        for (int b = a; b < V; ++b) {
            double sa = 0, sb = 0;
            int common = 0;
            for (int r = 0; r < R; ++r) {
                double xa = curve.values_t(r, a), xb = curve.values_t(r, b);
                if (is_missing(xa) || is_missing(xb)) continue;
                sa += xa;
                sb += xb;
                ++common;
            }
            if (common < 2)
                throw InsufficientData("fm_covariance: fewer than 2 common periods for a pair");
            double ma = sa / common, mb = sb / common;
            double acc = 0;
            for (int r = 0; r < R; ++r) {
                double xa = curve.values_t(r, a), xb = curve.values_t(r, b);
                if (is_missing(xa) || is_missing(xb)) continue;
                acc += (xa - ma) * (xb - mb);
            }
            cov(a, b) = acc / common;
            cov(b, a) = cov(a, b);
        }
    }
    return cov;
}

Eigen::VectorXd plugin_variance(const std::vector<PartitionScheme>& partitions,
                                const BetaPanel& bp, const FactorSeries& factor,
                                const CondMeanModel& cm, const MuCurve& curve) {
    const int R = curve.n_periods();
    const int V = curve.n_grid();
    if (static_cast<int>(partitions.size()) != R)
        throw ValidationError("plugin_variance: partitions do not match the curve periods");
    if (cm.fitted.size() != factor.T())
        throw ValidationError("plugin_variance: conditional-mean fit does not match the factor");

    Eigen::VectorXd acc = Eigen::VectorXd::Zero(V);
    std::vector<int> cnt(V, 0);
    std::vector<double> sum_beta, sum_eps2;
    for (int r = 0; r < R; ++r) {
        const PartitionScheme& part = partitions[r];
        const int t = part.t;
        const int J = part.J;
        sum_beta.assign(J, 0.0);
        sum_eps2.assign(J, 0.0);
        for (std::size_t i = 0; i < part.assignment.size(); ++i) {
            int j = part.assignment[i];
            if (j < 0) continue;
            sum_beta[j] += bp.beta_hat(t - 1, static_cast<int>(i));
            double e = bp.residuals(t - 1, static_cast<int>(i));
            if (!is_missing(e)) sum_eps2[j] += e * e;
        }
        double u = factor.f(t - 1) - cm.fitted(t - 1);
        double u2 = u * u;
        double nt2 = static_cast<double>(part.n_t) * part.n_t;
        for (int v = 0; v < V; ++v) {
            int j = curve.bin_index(r, v);
            if (j < 0) continue;
            double q = part.q_hat[j];
            if (q <= 0.0) continue;  // indicator guard for empty bins
            double denom = nt2 * q * q;
            acc(v) += (sum_beta[j] * sum_beta[j]) * u2 / denom + sum_eps2[j] / denom;
            ++cnt[v];
        }
    }
    for (int v = 0; v < V; ++v) {
        if (cnt[v] == 0)
            throw AllMasked("plugin_variance: grid point " + std::to_string(curve.grid[v]) +
                            " has no contributing period");
        acc(v) /= cnt[v];
    }
    return acc;
}

std::vector<double> sigma_j2(const PartitionScheme& partition, const BetaPanel& bp) {
    const int t = partition.t;
    std::vector<double> out(partition.J, 0.0);
    for (std::size_t i = 0; i < partition.assignment.size(); ++i) {
        int j = partition.assignment[i];
        if (j < 0) continue;
        double e = bp.residuals(t - 1, static_cast<int>(i));
        if (is_missing(e)) continue;
        out[j] += e * e;
    }
    double n_over_J = static_cast<double>(partition.n_t) / partition.J;
    for (int j = 0; j < partition.J; ++j) {
        int c = partition.counts[j];
        out[j] = c > 0 ? n_over_J * out[j] / (static_cast<double>(c) * c) : 0.0;
    }
    return out;
}

Eigen::VectorXd sigma_t_curve(const PartitionScheme& partition, const std::vector<double>& sj2,
                              const std::vector<double>& grid) {
    if (static_cast<int>(sj2.size()) != partition.J)
        throw ValidationError("sigma_t_curve: sigma_j2 does not match the partition");
    Eigen::VectorXd out(static_cast<int>(grid.size()));
    for (std::size_t v = 0; v < grid.size(); ++v) {
        int j = partition.bin_of(grid[v]);
        out(static_cast<int>(v)) = j >= 0 ? sj2[j] : kMissing;
    }
    return out;
}

std::vector<Triple> make_triples(const std::vector<double>& grid) {
    const int V = static_cast<int>(grid.size());
    if (V < 3) throw ValidationError("make_triples: need at least 3 grid points");
    double span = grid.back() - grid.front();
    std::vector<Triple> out;
    for (int a = 0; a < V; ++a) {
        for (int c = a + 2; c < V; ++c) {
            if ((a + c) % 2 != 0) continue;
            int b = (a + c) / 2;
            if (std::abs(grid[a] + grid[c] - 2.0 * grid[b]) > 1e-9 * std::max(1.0, std::abs(span)))
                throw ValidationError("make_triples: grid is not equispaced enough for midpoints");
            out.push_back({a, b, c});
        }
    }
    return out;
}

namespace {

// weights of a triple on the bins of one period; empty when any point is masked
struct TripleWeights {
    int bins[3];
    double w[3];
    int k = 0;  // distinct bins used
    bool ok = false;
};

TripleWeights triple_weights(const MuCurve& curve, int r, const Triple& tr) {
    TripleWeights tw;
    int j1 = curve.bin_index(r, tr.i1);
    int j2 = curve.bin_index(r, tr.i2);
    int j3 = curve.bin_index(r, tr.i3);
    if (j1 < 0 || j2 < 0 || j3 < 0) return tw;
    tw.ok = true;
    auto add = [&tw](int bin, double weight) {
        for (int k = 0; k < tw.k; ++k)
            if (tw.bins[k] == bin) {
                tw.w[k] += weight;
                return;
            }
        tw.bins[tw.k] = bin;
        tw.w[tw.k] = weight;
        ++tw.k;
    };
    add(j1, 1.0);
    add(j3, 1.0);
    add(j2, -2.0);
    return tw;
}

}  // namespace

ButterflyStats butterfly_stats(const MuCurve& curve, const std::vector<PartitionScheme>& partitions,
                               const std::vector<std::vector<double>>& sj2_all,
                               const std::vector<Triple>& triples) {
    const int R = curve.n_periods();
    const int K = static_cast<int>(triples.size());
    if (static_cast<int>(partitions.size()) != R || static_cast<int>(sj2_all.size()) != R)
        throw ValidationError("butterfly_stats: inputs do not match the curve periods");
    if (K == 0) throw ValidationError("butterfly_stats: empty triple set");

    // per-period weights, plus validity bitmasks for masked-period handling
    std::vector<std::vector<TripleWeights>> weights(R, std::vector<TripleWeights>(K));
    for (int r = 0; r < R; ++r)
        for (int k = 0; k < K; ++k) weights[r][k] = triple_weights(curve, r, triples[k]);

    Eigen::MatrixXd cov_full = Eigen::MatrixXd::Zero(K, K);
    Eigen::MatrixXi common = Eigen::MatrixXi::Zero(K, K);
    for (int r = 0; r < R; ++r) {
        const std::vector<double>& s2 = sj2_all[r];
        for (int k = 0; k < K; ++k) {
            const TripleWeights& wk = weights[r][k];
            if (!wk.ok) continue;
            for (int l = k; l < K; ++l) {
                const TripleWeights& wl = weights[r][l];
                if (!wl.ok) continue;
                double dot = 0.0;
                for (int ak = 0; ak < wk.k; ++ak)
                    for (int al = 0; al < wl.k; ++al)
                        if (wk.bins[ak] == wl.bins[al])
                            dot += wk.w[ak] * wl.w[al] * s2[wk.bins[ak]];
                cov_full(k, l) += dot;
                common(k, l) += 1;
            }
        }
    }
    for (int k = 0; k < K; ++k)
        for (int l = k; l < K; ++l) {
            if (common(k, l) > 0) cov_full(k, l) /= common(k, l);
            cov_full(l, k) = cov_full(k, l);
        }

    ButterflyStats out;
    std::vector<int> keep;
    for (int k = 0; k < K; ++k) {
        if (cov_full(k, k) > 0.0)
            keep.push_back(k);
        else
            ++out.dropped;
    }
    const int Kk = static_cast<int>(keep.size());
    out.triples.reserve(Kk);
    out.delta_hat.resize(Kk);
    out.sigma_D.resize(Kk);
    out.cov.resize(Kk, Kk);
    for (int a = 0; a < Kk; ++a) {
        const Triple& tr = triples[keep[a]];
        out.triples.push_back(tr);
        out.delta_hat(a) = curve.values(tr.i1) + curve.values(tr.i3) - 2.0 * curve.values(tr.i2);
        out.sigma_D(a) = cov_full(keep[a], keep[a]);
        for (int b = 0; b < Kk; ++b) out.cov(a, b) = cov_full(keep[a], keep[b]);
    }

    double sum_J_over_n = 0.0;
    double fmin = std::numeric_limits<double>::infinity();
    double fmax = 0.0;
    for (int r = 0; r < R; ++r) {
        double ratio = static_cast<double>(partitions[r].J) / partitions[r].n_t;
        sum_J_over_n += ratio;
        double factor = std::sqrt(ratio / R);
        fmin = std::min(fmin, factor);
        fmax = std::max(fmax, factor);
    }
    // T * harmonic mean of n_t / J_t
    out.scale_T_n_over_J = static_cast<double>(R) * R / sum_J_over_n;
    out.interval_factor_min = fmin;
    out.interval_factor_max = fmax;
    return out;
}

Eigen::MatrixXd to_correlation(const Eigen::MatrixXd& cov, double clip) {
    if (cov.rows() != cov.cols()) throw ValidationError("to_correlation: matrix not square");
    Eigen::MatrixXd sym = 0.5 * (cov + cov.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    if (eig.info() != Eigen::Success) throw NumericalError("to_correlation: eigensolver failed");
    Eigen::VectorXd lam = eig.eigenvalues().cwiseMax(clip);
    Eigen::MatrixXd clipped =
        eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
    Eigen::VectorXd d = clipped.diagonal().cwiseSqrt();
    Eigen::MatrixXd corr = clipped.array() / (d * d.transpose()).array();
    corr.diagonal().setOnes();
    return corr;
}

}  // namespace betasort
