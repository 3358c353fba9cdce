#pragma once

#include <vector>

#include "betasort/inference.hpp"

namespace betasort {

struct GridSpec {
    int count = 25;
    double trim = 0.025;
    std::vector<double> explicit_grid;  // overrides count/trim when non-empty
};

struct FitOptions {
    KernelSpec kernel;
    int J1 = 10;
    GridSpec grid;
    bool parallel = true;
    bool value_weighted = false;  // uses the panel's weight column when present
};

// End-to-end second stage: first-stage panel, per-period partitions and
// portfolio means on the trimmed range, fixed-t variances, and the curve.
struct FitResult {
    BetaPanel bp;
    std::vector<int> kept;  // 1-based periods carrying a partition
    std::vector<PartitionScheme> partitions;
    std::vector<PortfolioReturns> means;
    std::vector<std::vector<double>> sj2;  // per kept period, per bin
    MuCurve curve;
    int n_max = 0;
    std::vector<int> skipped;  // periods where the partition degenerated
};

FitResult fit_curve(const PanelData& panel, const FactorSeries& factor, const FitOptions& opts);

}  // namespace betasort
