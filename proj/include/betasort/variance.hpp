#pragma once

#include <Eigen/Dense>
#include <vector>

#include "betasort/panel.hpp"
#include "betasort/sorting.hpp"

namespace betasort {

enum class CondMeanKind { zero, constant, ar1 };

// Parametric estimate h_{t-1}(theta) of E(f_t | F_{t-1}). fitted[t-1] only
// uses factor values strictly before t. The expanding AR(1) fit produces
// fitted values from t = 11 on; earlier periods use the expanding mean.
struct CondMeanModel {
    CondMeanKind kind = CondMeanKind::zero;
    Eigen::Vector2d params = Eigen::Vector2d::Zero();  // (intercept, slope)
    Eigen::VectorXd fitted;
    bool fallback = false;   // AR(1) regressor degenerated, fell back to constant
    bool expanding = true;   // full-sample fits are flagged non-adapted
};

CondMeanModel fit_factor_condmean(const FactorSeries& factor, CondMeanKind kind,
                                  bool expanding = true);

// Fama-MacBeth covariance matrix on the curve grid:
//   sigma_FM(b1, b2) = T^{-1} sum_t (mu_t(b1) - mu(b1)) (mu_t(b2) - mu(b2))
// over jointly unmasked periods, means taken over the same periods.
Eigen::MatrixXd fm_covariance(const MuCurve& curve);

// Plug-in variance per grid point: factor term with (f_t - h_{t-1})^2 and the
// within-bin beta sums, idiosyncratic term with the first-stage residuals.
Eigen::VectorXd plugin_variance(const std::vector<PartitionScheme>& partitions,
                                const BetaPanel& bp, const FactorSeries& factor,
                                const CondMeanModel& cm, const MuCurve& curve);

// Per-bin fixed-t variances sigma^2_{jt} = (n_t/J_t) (sum_i Phi eps^2) (sum_i Phi)^{-2}.
std::vector<double> sigma_j2(const PartitionScheme& partition, const BetaPanel& bp);

// sigma_t(beta) = sigma^2_{j(beta), t} looked up along the grid; NaN outside
// the partition support.
Eigen::VectorXd sigma_t_curve(const PartitionScheme& partition, const std::vector<double>& sj2,
                              const std::vector<double>& grid);

// Butterfly triple of grid indices with i1 < i3 and i2 the midpoint.
struct Triple {
    int i1 = 0;
    int i2 = 0;
    int i3 = 0;
};

// All (a, c) grid pairs with a < c whose midpoint is again a grid point.
// Asserts beta_1 + beta_3 = 2 beta_2 on the (equispaced) grid.
std::vector<Triple> make_triples(const std::vector<double>& grid);

// Variances and cross-covariances of the butterfly statistics:
//   sigma_D(triple) = T^{-1} sum_t sum_j (p_jt(b1) + p_jt(b3) - 2 p_jt(b2))^2 sigma^2_{jt}.
struct ButterflyStats {
    std::vector<Triple> triples;  // retained, degenerate ones dropped
    Eigen::VectorXd delta_hat;    // mu(b1) + mu(b3) - 2 mu(b2)
    Eigen::VectorXd sigma_D;
    Eigen::MatrixXd cov;             // retained x retained, diag == sigma_D
    double scale_T_n_over_J = 0.0;   // T * harmonic mean of n_t / J_t
    double interval_factor_min = 0.0;  // min_t sqrt(J_t / (n_t T))
    double interval_factor_max = 0.0;
    int dropped = 0;
};

ButterflyStats butterfly_stats(const MuCurve& curve, const std::vector<PartitionScheme>& partitions,
                               const std::vector<std::vector<double>>& sj2_all,
                               const std::vector<Triple>& triples);

// Symmetrize, clip eigenvalues at `clip`, renormalize to unit diagonal.
Eigen::MatrixXd to_correlation(const Eigen::MatrixXd& cov, double clip = 1e-10);

}  // namespace betasort
