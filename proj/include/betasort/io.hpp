#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "betasort/inference.hpp"
#include "betasort/panel.hpp"

namespace betasort {

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t hash_file(const std::string& path);
std::string format_double(double x);  // 15 significant digits

struct LineError {
    int line = 0;
    std::string message;
};

struct PanelLoad {
    PanelData panel;
    std::vector<LineError> bad_rows;
};

// Header `date,asset_id,ret[,weight]`. Unparseable rows are collected with
// their line numbers; duplicate (date, asset) keys and missing columns are
// hard errors. percent = true converts returns to fractions on load.
PanelLoad load_panel_csv(const std::string& path, bool percent = false);

// Header `date,factor`.
FactorSeries load_factor_csv(const std::string& path);

// Subset and order the factor to the panel's periods; throws ValidationError
// listing panel dates missing from the factor.
FactorSeries align_factor(const PanelData& panel, const FactorSeries& factor);

void write_panel_csv(const std::string& path, const PanelData& panel, bool percent = false);
void write_factor_csv(const std::string& path, const FactorSeries& factor);

// CCW_t = (0.5 SLOOS_t + 50) + ISM_t on ISM's (monthly) dates, with SLOOS
// forward-filled; dates before the first SLOOS observation are dropped.
FactorSeries build_ccw_factor(const std::vector<std::pair<std::string, double>>& sloos,
                              const std::vector<std::pair<std::string, double>>& ism);

// `key = value` configuration file; lines starting with '#' are comments.
struct KeyValueConfig {
    std::map<std::string, std::string> kv;

    bool has(const std::string& key) const { return kv.count(key) != 0; }
    std::string require(const std::string& key) const;  // throws naming the key
    std::string get(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const;
};

KeyValueConfig load_config(const std::string& path);
void apply_overrides(KeyValueConfig& cfg, const std::vector<std::string>& assignments);

// Columns: beta,center,lower,upper,se,kind with se = half_width / q_hat.
// Masked points are skipped.
void write_band_csv(const std::string& path, const Band& band);

// Columns: beta,value,se.
void write_curve_csv(const std::string& path, const MuCurve& curve, const Eigen::VectorXd& se);

}  // namespace betasort
