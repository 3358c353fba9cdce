#include "betasort/panel.hpp"

namespace betasort {

void PanelData::validate() const {
    const int T_ = T();
    const int n_ = n_assets();
    if (returns.rows() != T_ || returns.cols() != n_)
        throw ValidationError("panel: returns matrix shape does not match labels");
    if (has_weights() && (weights.rows() != T_ || weights.cols() != n_))
        throw ValidationError("panel: weights matrix shape does not match labels");
    for (int t = 1; t < T_; ++t)
        if (!(periods[t - 1] < periods[t]))
            throw ValidationError("panel: periods not strictly increasing at '" + periods[t] + "'");
    for (int t = 0; t < T_; ++t)
        for (int i = 0; i < n_; ++i) {
            double r = returns(t, i);
            if (!is_missing(r) && !std::isfinite(r))
                throw ValidationError("panel: non-finite return at (" + periods[t] + ", " +
                                      assets[i] + ")");
        }
}

}  // namespace betasort
