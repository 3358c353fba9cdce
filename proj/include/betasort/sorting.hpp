#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "betasort/kernel.hpp"

namespace betasort {

// J_t = max(2, round(J1 * sqrt(n_t / n_max))).
int choose_J(int n_t, int J1, int n_max);

// Beta-adaptive partition for one period: breakpoints at the order statistics
// with indices floor(n_t j / J), assignments by rank chunks with ties broken
// by stable asset order. Bins are left-closed right-open except the last.
struct PartitionScheme {
    int t = 0;  // 1-based period, 0 when free-standing
    int J = 0;
    int n_t = 0;
    std::vector<double> breakpoints;      // size J + 1
    std::vector<int> assignment;          // asset slot -> bin in [0, J), -1 = not in partition
    std::vector<int> counts;              // per bin
    std::vector<double> q_hat;            // counts / n_t
    std::vector<std::pair<int, int>> merges;  // (empty bin, absorbed into)

    // Bin containing beta under the interval semantics; -1 outside
    // [breakpoints.front(), breakpoints.back()].
    int bin_of(double beta) const;

    // Collapse empty bins into their left neighbour (the leftmost merges
    // right), recording each merge. No-op for partitions built here.
    void merge_empty_bins();
};

// betas_t: (asset slot, beta estimate) pairs for one period. Requires at
// least J distinct beta values, else DegeneratePartition.
PartitionScheme build_partition(const std::vector<std::pair<int, double>>& betas_t, int J,
                                int t = 0);

struct PortfolioReturns {
    int t = 0;
    std::vector<double> a_hat;  // per-bin mean return
};

// a_jt = mean of returns_t over assets assigned to bin j (weighted mean when
// weights are supplied).
PortfolioReturns portfolio_means(const Eigen::VectorXd& returns_t, const PartitionScheme& partition,
                                 const Eigen::VectorXd* weights_t = nullptr);

// Step-function curves mu_t(beta) on a fixed grid plus their time average.
struct MuCurve {
    std::vector<double> grid;
    std::vector<int> periods;     // 1-based period for each row of values_t
    Eigen::MatrixXd values_t;     // kept periods x grid, NaN where masked
    Eigen::MatrixXi bin_index;    // same shape, -1 where masked
    Eigen::VectorXd values;       // grand mean over unmasked periods
    std::vector<int> effective_T;

    int n_grid() const { return static_cast<int>(grid.size()); }
    int n_periods() const { return static_cast<int>(periods.size()); }
};

MuCurve mu_curve(const std::vector<PartitionScheme>& partitions,
                 const std::vector<PortfolioReturns>& returns, const std::vector<double>& grid);

struct HmlPoint {
    int idx_max = 0;
    int idx_min = 0;
    double beta_max = 0.0;
    double beta_min = 0.0;
    double spread = 0.0;
};

// Argmax/argmin over the grid with first-occurrence tie breaking.
HmlPoint high_minus_low_point(const MuCurve& curve);

// Equispaced grid on the [trim, 1 - trim] pooled quantile range of the valid
// first-stage betas.
std::vector<double> default_grid(const BetaPanel& bp, int count = 25, double trim = 0.025);

}  // namespace betasort
