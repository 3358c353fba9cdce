#include "betasort/workflow.hpp"

#include <algorithm>

namespace betasort {

FitResult fit_curve(const PanelData& panel, const FactorSeries& factor, const FitOptions& opts) {
    panel.validate();
    FitResult fr;
    fr.bp = estimate_beta_panel(panel, factor, opts.kernel, opts.parallel);

    // assets enter a period's partition when they carry a valid beta and a
    // return there; n_t counts exactly those
    std::vector<std::vector<std::pair<int, double>>> betas(fr.bp.t_hi - fr.bp.t_lo + 1);
    int n_max = 0;
    for (int t = fr.bp.t_lo; t <= fr.bp.t_hi; ++t) {
        auto& bt = betas[t - fr.bp.t_lo];
        for (int i = 0; i < fr.bp.n; ++i) {
            if (!fr.bp.valid(t, i)) continue;
            if (is_missing(panel.returns(t - 1, i))) continue;
            bt.emplace_back(i, fr.bp.beta_hat(t - 1, i));
        }
        n_max = std::max(n_max, static_cast<int>(bt.size()));
    }
    if (n_max == 0) throw InsufficientData("fit_curve: no period has usable first-stage betas");
    fr.n_max = n_max;

    for (int t = fr.bp.t_lo; t <= fr.bp.t_hi; ++t) {
        const auto& bt = betas[t - fr.bp.t_lo];
        if (bt.empty()) {
            fr.skipped.push_back(t);
            continue;
        }
        int J = choose_J(static_cast<int>(bt.size()), opts.J1, n_max);
        try {
            PartitionScheme part = build_partition(bt, J, t);
            Eigen::VectorXd w;
            if (opts.value_weighted && panel.has_weights()) w = panel.weights.row(t - 1).transpose();
            PortfolioReturns ret = portfolio_means(panel.returns.row(t - 1).transpose(), part,
                                                   w.size() > 0 ? &w : nullptr);
            fr.sj2.push_back(sigma_j2(part, fr.bp));
            fr.partitions.push_back(std::move(part));
            fr.means.push_back(std::move(ret));
            fr.kept.push_back(t);
        } catch (const DegeneratePartition&) {
            fr.skipped.push_back(t);
        }
    }
    if (fr.kept.empty()) throw InsufficientData("fit_curve: every period degenerated");

    std::vector<double> grid = opts.grid.explicit_grid;
    if (grid.empty()) grid = default_grid(fr.bp, opts.grid.count, opts.grid.trim);
    fr.curve = mu_curve(fr.partitions, fr.means, grid);
    return fr;
}

}  // namespace betasort
