#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "betasort/dgp.hpp"
#include "betasort/workflow.hpp"

namespace betasort {

// Replication harness configuration. Checks: "first_stage" (uniform error of
// the first stage), "normality" (standardized first-stage errors),
// "pointwise" (coverage of pointwise intervals and the FM/plug-in
// comparison), "uniform" (simultaneous bands), "tests" (the three hypothesis
// tests), "fixed_t" (per-period bands against M_t and mu_t).
struct McConfig {
    DgpSpec dgp;
    int reps = 300;
    double h_coef = 1.0;        // h = h_coef * T^{h_exponent} unless h_override > 0
    double h_exponent = -1.0 / 3.0;
    double h_override = 0.0;
    KernelKind kernel = KernelKind::uniform;
    int J1 = 10;
    GridSpec grid;
    GaussianSimSpec sim;
    CondMeanKind condmean = CondMeanKind::ar1;
    std::set<std::string> checks = {"first_stage", "pointwise", "uniform", "tests"};
    int n_interior = 10;   // interior grid points tracked per replication
    int fs_points = 20;    // (i, t0) draws for the normality check
    std::uint64_t base_seed = 12345;

    double h_for(int T) const;
    void validate() const;
    std::string canonical_string() const;
};

// One replication's outputs. `ind` holds 0/1 indicators (aggregated with
// binomial standard errors), `val` holds losses and estimates; the *_vec maps
// hold per-grid-point versions.
struct RepRecord {
    bool failed = false;
    std::string error;
    std::map<std::string, double> ind;
    std::map<std::string, double> val;
    std::map<std::string, std::vector<double>> ind_vec;
    std::map<std::string, std::vector<double>> val_vec;
};

RepRecord run_replication(const McConfig& cfg, int r);

struct McTable {
    std::vector<std::string> columns;
    std::vector<std::string> row_labels;
    std::vector<std::vector<double>> rows;

    std::string to_csv() const;
    // Row lookup by label; throws ValidationError when absent.
    const std::vector<double>& row(const std::string& label) const;
};

struct McReport {
    std::map<std::string, McTable> tables;  // "indicators", "values", "meta"
    int reps = 0;
    int failures = 0;
    double wall_seconds = 0.0;
    std::string config_hash;

    bool suite_ok() const;  // failure rate <= 5% and at least one success
    double rate(const std::string& label) const;   // indicator mean
    double value(const std::string& label) const;  // value mean
    std::string all_tables_csv() const;            // deterministic dump
};

std::vector<RepRecord> run_replications(const McConfig& cfg, bool parallel = true);
McReport aggregate(const std::vector<RepRecord>& records);
McReport run_suite(const McConfig& cfg, bool parallel = true);

// k indices evenly spaced through the central 20%..80% stretch of [0, V).
std::vector<int> interior_indices(int V, int k);

}  // namespace betasort
