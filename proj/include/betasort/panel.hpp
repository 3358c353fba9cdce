#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "betasort/types.hpp"

namespace betasort {

// Unbalanced panel of asset returns. Matrices are T x n with row t-1 holding
// period t (periods are 1-based throughout the estimation code, mirroring the
// usual time-series convention). Missing observations are NaN.
struct PanelData {
    std::vector<std::string> periods;  // strictly increasing opaque labels
    std::vector<std::string> assets;
    Eigen::MatrixXd returns;  // T x n, NaN = missing
    Eigen::MatrixXd weights;  // T x n or 0x0 when absent

    int T() const { return static_cast<int>(periods.size()); }
    int n_assets() const { return static_cast<int>(assets.size()); }
    bool has_weights() const { return weights.size() > 0; }

    // Assets with a return observation in period t (1-based).
    int n_at(int t) const {
        int count = 0;
        for (int i = 0; i < returns.cols(); ++i)
            if (!is_missing(returns(t - 1, i))) ++count;
        return count;
    }

    void validate() const;
};

// Observable factor path; cond_mean is only populated for simulated data
// where E(f_t | past) is known exactly.
struct FactorSeries {
    std::vector<std::string> periods;
    Eigen::VectorXd f;
    Eigen::VectorXd cond_mean;  // empty when unknown

    int T() const { return static_cast<int>(f.size()); }
    bool has_cond_mean() const { return cond_mean.size() == f.size() && f.size() > 0; }
};

}  // namespace betasort
