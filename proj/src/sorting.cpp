#include "betasort/sorting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace betasort {

int choose_J(int n_t, int J1, int n_max) {
    if (n_t < 1 || n_max < 1) throw ValidationError("choose_J: counts must be >= 1");
    if (J1 < 1) throw ValidationError("choose_J: J1 must be >= 1");
    long rounded = std::lround(J1 * std::sqrt(static_cast<double>(n_t) / n_max));
    return static_cast<int>(std::max(2L, rounded));
}

int PartitionScheme::bin_of(double beta) const {
    if (breakpoints.empty()) return -1;
    if (beta < breakpoints.front() || beta > breakpoints.back()) return -1;
    // first bin whose right edge exceeds beta; the last bin is right-closed
    auto it = std::upper_bound(breakpoints.begin() + 1, breakpoints.end() - 1, beta);
    return static_cast<int>(it - (breakpoints.begin() + 1));
}

void PartitionScheme::merge_empty_bins() {
    for (int j = J - 1; j >= 0; --j) {
        if (counts[j] != 0) continue;
        int target = (j > 0) ? j - 1 : 1;
        if (target >= J) break;  // single empty bin, nothing to merge into
        merges.emplace_back(j, target > j ? target - 1 : target);
        // drop the breakpoint between bin j and the absorbing neighbour
        breakpoints.erase(breakpoints.begin() + (j > 0 ? j : 1));
        counts[target] += counts[j];
        counts.erase(counts.begin() + j);
        for (auto& a : assignment)
            if (a > j) --a;
        --J;
    }
    q_hat.assign(J, 0.0);
    for (int j = 0; j < J; ++j) q_hat[j] = n_t > 0 ? static_cast<double>(counts[j]) / n_t : 0.0;
}

PartitionScheme build_partition(const std::vector<std::pair<int, double>>& betas_t, int J, int t) {
    const int n_t = static_cast<int>(betas_t.size());
    if (J < 1) throw ValidationError("build_partition: J must be >= 1");
    if (n_t < J)
        throw DegeneratePartition("build_partition: " + std::to_string(n_t) +
                                  " assets cannot fill " + std::to_string(J) + " bins");

    // stable order by (beta, asset id) so tie handling is deterministic
    std::vector<int> order(n_t);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (betas_t[a].second != betas_t[b].second) return betas_t[a].second < betas_t[b].second;
        return betas_t[a].first < betas_t[b].first;
    });

    int distinct = 1;
    for (int r = 1; r < n_t; ++r)
        if (betas_t[order[r]].second != betas_t[order[r - 1]].second) ++distinct;
    if (distinct < J)
        throw DegeneratePartition("build_partition: only " + std::to_string(distinct) +
                                  " distinct beta values for " + std::to_string(J) + " bins");

    int max_slot = 0;
    for (const auto& [slot, beta] : betas_t) {
        (void)beta;
        max_slot = std::max(max_slot, slot);
    }

    PartitionScheme p;
    p.t = t;
    p.J = J;
    p.n_t = n_t;
    p.assignment.assign(max_slot + 1, -1);
    p.counts.assign(J, 0);
    p.breakpoints.resize(J + 1);
    p.breakpoints[0] = betas_t[order[0]].second;
    for (int j = 1; j <= J; ++j) {
        long long k = static_cast<long long>(n_t) * j / J;  // order statistic index
        p.breakpoints[j] = betas_t[order[k - 1]].second;
    }
    // rank chunks: bin j takes ranks floor(n (j-1)/J) + 1 .. floor(n j/J)
    int r = 0;
    for (int j = 0; j < J; ++j) {
        long long k_hi = static_cast<long long>(n_t) * (j + 1) / J;
        for (; r < k_hi; ++r) {
            p.assignment[betas_t[order[r]].first] = j;
            ++p.counts[j];
        }
    }
    p.q_hat.assign(J, 0.0);
    for (int j = 0; j < J; ++j) p.q_hat[j] = static_cast<double>(p.counts[j]) / n_t;
    p.merge_empty_bins();  // no-op here; kept for hand-built schemes
    return p;
}

PortfolioReturns portfolio_means(const Eigen::VectorXd& returns_t, const PartitionScheme& partition,
                                 const Eigen::VectorXd* weights_t) {
    PortfolioReturns out;
    out.t = partition.t;
    out.a_hat.assign(partition.J, 0.0);
    std::vector<double> wsum(partition.J, 0.0);
    for (std::size_t i = 0; i < partition.assignment.size(); ++i) {
        int j = partition.assignment[i];
        if (j < 0) continue;
        if (static_cast<int>(i) >= returns_t.size() || is_missing(returns_t(i)))
            throw ValidationError("portfolio_means: assigned asset without a return at t = " +
                                  std::to_string(partition.t));
        double w = 1.0;
        if (weights_t != nullptr) {
            w = (*weights_t)(i);
            if (is_missing(w) || w <= 0.0) w = 0.0;
        }
        out.a_hat[j] += w * returns_t(i);
        wsum[j] += w;
    }
    for (int j = 0; j < partition.J; ++j) {
        if (wsum[j] <= 0.0)
            throw DegeneratePartition("portfolio_means: bin " + std::to_string(j) +
                                      " has no weight; merge empty bins first");
        out.a_hat[j] /= wsum[j];
    }
    return out;
}

MuCurve mu_curve(const std::vector<PartitionScheme>& partitions,
                 const std::vector<PortfolioReturns>& returns, const std::vector<double>& grid) {
    if (partitions.size() != returns.size())
        throw ValidationError("mu_curve: partitions/returns length mismatch");
    if (partitions.empty()) throw ValidationError("mu_curve: no periods");
    if (grid.empty()) throw ValidationError("mu_curve: empty grid");

    const int R = static_cast<int>(partitions.size());
    const int V = static_cast<int>(grid.size());
    MuCurve curve;
    curve.grid = grid;
    curve.periods.resize(R);
    curve.values_t.setConstant(R, V, kMissing);
    curve.bin_index.setConstant(R, V, -1);
    curve.values.setZero(V);
    curve.effective_T.assign(V, 0);

    for (int r = 0; r < R; ++r) {
        curve.periods[r] = partitions[r].t;
        for (int v = 0; v < V; ++v) {
            int j = partitions[r].bin_of(grid[v]);
            if (j < 0) continue;
            curve.bin_index(r, v) = j;
            curve.values_t(r, v) = returns[r].a_hat[j];
            curve.values(v) += returns[r].a_hat[j];
            ++curve.effective_T[v];
        }
    }
    for (int v = 0; v < V; ++v) {
        if (curve.effective_T[v] == 0)
            throw AllMasked("mu_curve: grid point " + std::to_string(grid[v]) +
                            " lies outside every period's partition");
        curve.values(v) /= curve.effective_T[v];
    }
    return curve;
}

HmlPoint high_minus_low_point(const MuCurve& curve) {
    HmlPoint out;
    const int V = curve.n_grid();
    for (int v = 1; v < V; ++v) {
        if (curve.values(v) > curve.values(out.idx_max)) out.idx_max = v;
        if (curve.values(v) < curve.values(out.idx_min)) out.idx_min = v;
    }
    out.beta_max = curve.grid[out.idx_max];
    out.beta_min = curve.grid[out.idx_min];
    out.spread = curve.values(out.idx_max) - curve.values(out.idx_min);
    return out;
}

std::vector<double> default_grid(const BetaPanel& bp, int count, double trim) {
    if (count < 2) throw ValidationError("grid: need at least two points");
    if (!(trim >= 0.0 && trim < 0.5)) throw ValidationError("grid: trim must be in [0, 0.5)");
    std::vector<double> pool;
    pool.reserve(static_cast<std::size_t>(bp.t_hi - bp.t_lo + 1) * bp.n);
    for (int t = bp.t_lo; t <= bp.t_hi; ++t)
        for (int i = 0; i < bp.n; ++i)
            if (bp.valid(t, i)) pool.push_back(bp.beta_hat(t - 1, i));
    if (pool.size() < 2) throw InsufficientData("grid: no valid first-stage betas");
    std::sort(pool.begin(), pool.end());
    auto quantile = [&](double q) {
        std::size_t k = static_cast<std::size_t>(std::ceil(q * pool.size()));
        k = std::min(std::max<std::size_t>(k, 1), pool.size());
        return pool[k - 1];
    };
    double lo = quantile(trim);
    double hi = quantile(1.0 - trim);
    if (!(hi > lo)) throw DegeneratePartition("grid: degenerate pooled beta range");
    std::vector<double> grid(count);
    for (int v = 0; v < count; ++v) grid[v] = lo + (hi - lo) * v / (count - 1);
    return grid;
}

}  // namespace betasort
