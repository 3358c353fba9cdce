#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "betasort/variance.hpp"

namespace betasort {

struct GaussianSimSpec {
    int S = 10000;
    double alpha = 0.05;
    std::uint64_t seed = 0;

    void validate() const;  // S >= 100, alpha in (0, 1)
};

enum class SupMode { abs_sup, signed_sup };

// Order statistic ceil(S (1 - alpha)) of the sample, ascending.
double upper_quantile(std::vector<double> samples, double alpha);

// Symmetric PSD square root via eigendecomposition (eigenvalues clipped at 0;
// throws NumericalError when materially negative).
Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& m);

// One statistic per draw of the correlated Gaussian field corr^{1/2} Z.
// Draw s uses its own substream, so results do not depend on threading.
std::vector<double> simulate_field_stats(
    const Eigen::MatrixXd& corr, const GaussianSimSpec& sim,
    const std::function<double(const double*, int)>& stat, bool parallel = true);

// Empirical (1 - alpha) quantile of the max-abs (or max) coordinate of the
// correlated field. corr must be unit-diagonal and PSD after clipping.
double sup_gaussian_quantile(const Eigen::MatrixXd& corr, const GaussianSimSpec& sim,
                             SupMode mode = SupMode::abs_sup);

enum class BandKind { grand_mean_sharp, grand_mean_conservative, fixed_t };
enum class BandTarget { mu_bar_t, mu_limit };

struct Band {
    std::vector<double> grid;
    Eigen::VectorXd center;
    Eigen::VectorXd half_width;  // sigma(beta)^{1/2} q / sqrt(scale), NaN where masked
    Eigen::VectorXd scale;       // the variance that fed the band
    BandKind kind = BandKind::grand_mean_sharp;
    double q_hat = 0.0;
    double alpha = 0.05;
    int t = 0;  // fixed-t bands record their period

    bool contains(const Eigen::VectorXd& truth) const;  // everywhere unmasked
    bool contains_zero_everywhere() const;
};

// Algorithm: simulate the sup of the correlated field (correlation from the
// Fama-MacBeth covariance), then mu(beta) +/- sigma(beta)^{1/2} q / sqrt(T).
// Target mu_bar_t (the sample average of mu_t) takes the plug-in scale;
// target mu_limit takes the Fama-MacBeth scale.
Band grand_mean_band(const MuCurve& curve, const Eigen::MatrixXd& fm_cov,
                     const Eigen::VectorXd& plugin_var, const GaussianSimSpec& sim,
                     BandTarget target);

struct TestResult {
    double statistic = 0.0;
    double critical_value = 0.0;
    bool reject = false;
    double alpha = 0.05;
    std::string details;
};

// Reject when 0 leaves the band at any grid point.
TestResult test_grand_mean_zero(const Band& band);

// High-minus-low: statistic sup mu - inf mu; critical value from the range of
// the scaled Gaussian field, each draw maximized over its own bin paths.
TestResult test_high_minus_low(const MuCurve& curve, const Eigen::MatrixXd& fm_cov,
                               const GaussianSimSpec& sim);

// Butterfly spreads over the triple set; statistic is the sup of
// sqrt(T n/J) |mu(b1) + mu(b3) - 2 mu(b2)| / sigma_D^{1/2}.
TestResult test_butterfly(const ButterflyStats& stats, const GaussianSimSpec& sim);

// Uniform band for M_t(beta) at a single period t:
//   M_t(beta) +/- sigma_t(beta)^{1/2} q sqrt(J_t) / sqrt(n_t),
// q the (1 - alpha) quantile of max_j |Z_j| over J_t independent normals.
Band fixed_t_band(const PartitionScheme& partition, const PortfolioReturns& returns,
                  const std::vector<double>& sj2, const std::vector<double>& grid,
                  const GaussianSimSpec& sim);

}  // namespace betasort
