#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "betasort/panel.hpp"
#include "betasort/rng.hpp"
#include "betasort/sorting.hpp"

namespace betasort {

// Synthetic data generating process
//   R_it = alpha(beta_it) + beta_it f_t + eps_it,
//   f_t = tau(t/T) + x_t,   x_t = rho x_{t-1} + u_t,   u_t ~ N(0, sigma_x^2),
//   beta_it = eta_i * g(t/T),   eps_it ~ N(0, sigma_eps(t/T)^2).
// The loading is g(u) = load_const + load_lin u + load_sin sin(2 pi u);
// tau, alpha and sigma_eps are polynomials in their arguments.
struct DgpSpec {
    int n = 200;
    int T = 200;
    double rho = 0.5;
    std::vector<double> tau = {0.2, 0.1};
    double sigma_x = 1.0;
    std::vector<double> alpha = {0.5, 0.0, 0.3};
    double load_const = 1.0;
    double load_lin = 0.0;
    double load_sin = 0.5;
    double eta_lo = 0.5;  // eta_i ~ Uniform[eta_lo, eta_hi]
    double eta_hi = 1.5;
    std::vector<double> sigma_eps = {1.0};
    double retention = 1.0;  // per-(period, asset) retention probability
    std::uint64_t seed = 1;

    double tau_at(double u) const;
    double alpha_at(double beta) const;
    double loading_at(double u) const;
    double sigma_eps_at(double u) const;

    // Throws ValidationError naming the violated field.
    void validate() const;
};

struct GroundTruth {
    Eigen::MatrixXd beta_true;    // T x n
    Eigen::MatrixXd alpha_true;   // T x n
    Eigen::VectorXd cond_mean_f;  // E(f_t | F_{t-1})
    Eigen::VectorXd factor;
    std::vector<double> alpha_coeffs;
    double beta_min = 0.0;  // realized support over (t, i)
    double beta_max = 0.0;

    double alpha_at(double beta) const;
    // mu_t(beta) = alpha(beta) + beta E(f_t | F_{t-1}); t is 1-based.
    double mu_t(int t, double beta) const;
    // M_t(beta) = mu_t(beta) + beta (f_t - E(f_t | F_{t-1})) = alpha(beta) + beta f_t.
    double M_t(int t, double beta) const;
    // Average of mu_t over t in [t_lo, t_hi] (1-based, inclusive).
    double mu_avg(int t_lo, int t_hi, double beta) const;
};

FactorSeries simulate_factor(const DgpSpec& spec, RngStream& rng);

std::pair<PanelData, GroundTruth> simulate_panel(const DgpSpec& spec, const FactorSeries& factor,
                                                 RngStream& rng);

// Exact T^{-1} sum_t mu_t(beta) on the grid; every grid point must lie in the
// realized beta support.
MuCurve true_grand_mean(const GroundTruth& truth, const std::vector<double>& grid);

}  // namespace betasort
