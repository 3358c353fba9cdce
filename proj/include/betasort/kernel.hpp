#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "betasort/panel.hpp"

namespace betasort {

// One-sided kernels supported on [-1, 0], each integrating to one there.
enum class KernelKind { uniform, epanechnikov, triangular };

struct KernelSpec {
    KernelKind kind = KernelKind::uniform;
    double h = 0.0;  // bandwidth as a fraction of T, 0 < h < 1
    // Minimum in-window observations for a fit; 0 means the default rule
    // max(10, ceil(0.25 * T * h)).
    int min_obs = 0;
    double cond_ceiling = 1e8;

    double k(double u) const;                   // K(u), zero outside [-1, 0]
    double k_squared_integral() const;          // int_{-1}^{0} K(u)^2 du
    int window(int T) const;                    // floor(T * h)
    int effective_min_obs(int T) const;
    void validate() const;
};

// w(t, t0) = h^{-1} K((t - t0) / (Th)), forced to zero for t >= t0 and for
// t < t0 - floor(Th). Periods are 1-based.
double kernel_weight(const KernelSpec& spec, int t, int t0, int T);

struct CoeffPair {
    double alpha = 0.0;
    double beta = 0.0;
};

// Leave-one-out rolling WLS of R_it on (1, f_t) over the window before t0.
// Missing returns contribute zero weight. Throws InsufficientData or
// SingularWindow when the window cannot support the 2x2 solve.
CoeffPair rolling_coeffs(const Eigen::VectorXd& returns_i, const FactorSeries& factor,
                         const KernelSpec& spec, int t0);

// First-stage estimates over the trimmed range [floor(Th), T - floor(Th)].
// Entries outside the range, or where the per-(asset, t0) fit failed, are NaN
// with valid(t0, i) == false.
struct BetaPanel {
    Eigen::MatrixXd alpha_hat;  // T x n
    Eigen::MatrixXd beta_hat;   // T x n
    Eigen::MatrixXd residuals;  // T x n, eps_it = R_it - alpha_it - beta_it f_t
    std::vector<std::uint8_t> valid_mask;  // row-major T x n
    int t_lo = 0;  // 1-based inclusive
    int t_hi = 0;
    int T = 0;
    int n = 0;

    bool valid(int t, int i) const { return valid_mask[static_cast<std::size_t>(t - 1) * n + i] != 0; }
};

BetaPanel estimate_beta_panel(const PanelData& panel, const FactorSeries& factor,
                              const KernelSpec& spec, bool parallel = true);

// Serial reference implementation; kept for tests and the benchmark target.
BetaPanel estimate_beta_panel_serial(const PanelData& panel, const FactorSeries& factor,
                                     const KernelSpec& spec);

struct FirstStageVariance {
    double sigma2 = 0.0;        // local-linear fit of eps^2 at t0, floored at 0
    double sigma2_slope = 0.0;  // varsigma^2; reported, unused downstream
    Eigen::Matrix2d Sigma_b;    // T A(t0)^{-1} sigma2 int K^2
    Eigen::Matrix2d A;          // sum_t w(t, t0) X_t X_t'
};

FirstStageVariance first_stage_variance(const PanelData& panel, const FactorSeries& factor,
                                        const BetaPanel& bp, const KernelSpec& spec, int t0);

}  // namespace betasort
