#include "betasort/montecarlo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <sstream>

#include "betasort/io.hpp"
#include "betasort/threading.hpp"

namespace betasort {

namespace {
constexpr double kZ975 = 1.959963984540054;
constexpr std::uint64_t kSimTag = 0x51a0;
constexpr std::uint64_t kFixedTTag = 0xf17e;
}  // namespace

double McConfig::h_for(int T) const {
    if (h_override > 0.0) return h_override;
    return h_coef * std::pow(static_cast<double>(T), h_exponent);
}

void McConfig::validate() const {
    dgp.validate();
    sim.validate();
    if (reps < 1) throw ValidationError("mc.reps: must be >= 1");
    double h = h_for(dgp.T);
    if (!(h > 0.0 && h < 1.0)) throw ValidationError("mc.h: rule yields h outside (0, 1)");
    if (J1 < 1) throw ValidationError("mc.J1: must be >= 1");
    if (n_interior < 1) throw ValidationError("mc.n_interior: must be >= 1");
    static const std::set<std::string> known = {"first_stage", "normality", "pointwise",
                                               "uniform",     "tests",     "fixed_t"};
    for (const auto& c : checks)
        if (known.count(c) == 0) throw ValidationError("mc.checks: unknown check '" + c + "'");
}

std::string McConfig::canonical_string() const {
    std::ostringstream os;
    os << "n=" << dgp.n << ";T=" << dgp.T << ";rho=" << format_double(dgp.rho)
       << ";sigma_x=" << format_double(dgp.sigma_x) << ";tau=";
    for (double c : dgp.tau) os << format_double(c) << ",";
    os << ";alpha=";
    for (double c : dgp.alpha) os << format_double(c) << ",";
    os << ";load=" << format_double(dgp.load_const) << "," << format_double(dgp.load_lin) << ","
       << format_double(dgp.load_sin) << ";eta=" << format_double(dgp.eta_lo) << ","
       << format_double(dgp.eta_hi) << ";sigma_eps=";
    for (double c : dgp.sigma_eps) os << format_double(c) << ",";
    os << ";retention=" << format_double(dgp.retention) << ";reps=" << reps
       << ";h=" << format_double(h_for(dgp.T)) << ";kernel=" << static_cast<int>(kernel)
       << ";J1=" << J1 << ";grid=" << grid.count << "," << format_double(grid.trim)
       << ";S=" << sim.S << ";alpha=" << format_double(sim.alpha)
       << ";condmean=" << static_cast<int>(condmean) << ";interior=" << n_interior
       << ";fs_points=" << fs_points << ";seed=" << base_seed << ";checks=";
    for (const auto& c : checks) os << c << ",";
    return os.str();
}

std::vector<int> interior_indices(int V, int k) {
    int lo = static_cast<int>(std::lround(0.2 * (V - 1)));
    int hi = static_cast<int>(std::lround(0.8 * (V - 1)));
    if (hi <= lo) {
        lo = 0;
        hi = V - 1;
    }
    std::vector<int> out;
    if (k >= hi - lo + 1) {
        for (int v = lo; v <= hi; ++v) out.push_back(v);
        return out;
    }
    for (int m = 0; m < k; ++m)
        out.push_back(lo + static_cast<int>(std::lround(m * static_cast<double>(hi - lo) / (k - 1))));
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

RepRecord run_replication(const McConfig& cfg, int r) {
    RepRecord rec;
    try {
        const std::uint64_t ur = static_cast<std::uint64_t>(r);
        RngStream rng_f(derive_stream(cfg.base_seed, {kReplicationTag, ur, kFactorTag}));
        RngStream rng_p(derive_stream(cfg.base_seed, {kReplicationTag, ur, kPanelTag}));
        FactorSeries factor = simulate_factor(cfg.dgp, rng_f);
        auto [panel, truth] = simulate_panel(cfg.dgp, factor, rng_p);

        KernelSpec ks;
        ks.kind = cfg.kernel;
        ks.h = cfg.h_for(cfg.dgp.T);
        FitOptions fo;
        fo.kernel = ks;
        fo.J1 = cfg.J1;
        fo.grid = cfg.grid;
        fo.parallel = false;  // replications are the parallel unit
        FitResult fit = fit_curve(panel, factor, fo);
        const MuCurve& curve = fit.curve;
        const int V = curve.n_grid();
        const int R = curve.n_periods();

        // finite-sample target: the average of mu_t over each point's own periods
        Eigen::VectorXd target(V);
        for (int v = 0; v < V; ++v) {
            double acc = 0.0;
            int m = 0;
            for (int row = 0; row < R; ++row) {
                if (curve.bin_index(row, v) < 0) continue;
                acc += truth.mu_t(curve.periods[row], curve.grid[v]);
                ++m;
            }
            target(v) = acc / m;
        }

        {
            double max_err = 0.0, sse = 0.0;
            long cnt = 0;
            for (int t = fit.bp.t_lo; t <= fit.bp.t_hi; ++t)
                for (int i = 0; i < fit.bp.n; ++i) {
                    if (!fit.bp.valid(t, i)) continue;
                    double e = std::abs(fit.bp.beta_hat(t - 1, i) - truth.beta_true(t - 1, i));
                    max_err = std::max(max_err, e);
                    sse += e * e;
                    ++cnt;
                }
            rec.val["beta_max_err"] = max_err;
            rec.val["beta_rmse"] = std::sqrt(sse / cnt);
            double mse = 0.0;
            for (int v = 0; v < V; ++v) {
                double d = curve.values(v) - target(v);
                mse += d * d;
            }
            rec.val["mu_rmse"] = std::sqrt(mse / V);
        }

        GaussianSimSpec sim_r = cfg.sim;
        sim_r.seed = derive_stream(cfg.base_seed, {kReplicationTag, ur, kSimTag});

        if (cfg.checks.count("normality") != 0) {
            RngStream pick(derive_stream(cfg.base_seed, {kReplicationTag, ur, kPickTag}));
            const int win = ks.window(cfg.dgp.T);
            int t_first = fit.bp.t_lo + win;  // full residual window available
            int covered = 0, total = 0;
            if (t_first <= fit.bp.t_hi) {
                for (int s = 0; s < cfg.fs_points; ++s) {
                    int t0 = 0, i = 0;
                    bool found = false;
                    for (int tries = 0; tries < 200 && !found; ++tries) {
                        t0 = t_first +
                             static_cast<int>(pick.uniform() * (fit.bp.t_hi - t_first + 1));
                        i = static_cast<int>(pick.uniform() * fit.bp.n);
                        found = fit.bp.valid(t0, i);
                    }
                    if (!found) continue;
                    try {
                        FirstStageVariance fsv =
                            first_stage_variance(panel, factor, fit.bp, ks, t0);
                        Eigen::Vector2d diff(
                            fit.bp.alpha_hat(t0 - 1, i) - truth.alpha_true(t0 - 1, i),
                            fit.bp.beta_hat(t0 - 1, i) - truth.beta_true(t0 - 1, i));
                        Eigen::Matrix2d root_inv = symmetric_sqrt(fsv.Sigma_b).inverse();
                        Eigen::Vector2d z =
                            std::sqrt(cfg.dgp.T * ks.h) * (root_inv * diff);
                        for (int c = 0; c < 2; ++c) {
                            covered += std::abs(z(c)) <= kZ975 ? 1 : 0;
                            ++total;
                        }
                    } catch (const std::exception&) {
                        // skip points where the variance is not estimable
                    }
                }
            }
            if (total > 0) rec.val["fs_cover_frac"] = static_cast<double>(covered) / total;
        }

        const bool need_var = cfg.checks.count("pointwise") != 0 ||
                              cfg.checks.count("uniform") != 0 || cfg.checks.count("tests") != 0;
        Eigen::MatrixXd fm;
        Eigen::VectorXd plugin;
        if (need_var) {
            CondMeanModel cm = fit_factor_condmean(factor, cfg.condmean);
            fm = fm_covariance(curve);
            plugin = plugin_variance(fit.partitions, fit.bp, factor, cm, curve);
        }

        if (cfg.checks.count("pointwise") != 0) {
            std::vector<int> ii = interior_indices(V, cfg.n_interior);
            for (int v : ii) {
                double teff = curve.effective_T[v];
                double se_pi = std::sqrt(std::max(0.0, plugin(v)) / teff);
                double se_fm = std::sqrt(std::max(0.0, fm(v, v)) / teff);
                double err = std::abs(curve.values(v) - target(v));
                rec.ind_vec["cover_pi"].push_back(err <= kZ975 * se_pi ? 1.0 : 0.0);
                rec.ind_vec["cover_fm"].push_back(err <= kZ975 * se_fm ? 1.0 : 0.0);
                rec.ind_vec["fm_ge_pi"].push_back(fm(v, v) >= plugin(v) ? 1.0 : 0.0);
                rec.val_vec["sig_pi"].push_back(plugin(v));
                rec.val_vec["sig_fm"].push_back(fm(v, v));
            }
        }

        Band band_sharp;
        bool have_sharp = false;
        if (cfg.checks.count("uniform") != 0 || cfg.checks.count("tests") != 0) {
            band_sharp = grand_mean_band(curve, fm, plugin, sim_r, BandTarget::mu_bar_t);
            have_sharp = true;
        }
        if (cfg.checks.count("uniform") != 0) {
            Band band_cons = grand_mean_band(curve, fm, plugin, sim_r, BandTarget::mu_limit);
            rec.ind["cover_band_sharp"] = band_sharp.contains(target) ? 1.0 : 0.0;
            rec.ind["cover_band_cons"] = band_cons.contains(target) ? 1.0 : 0.0;
        }

        if (cfg.checks.count("tests") != 0) {
            (void)have_sharp;
            rec.ind["reject_gm0"] = test_grand_mean_zero(band_sharp).reject ? 1.0 : 0.0;
            rec.ind["reject_hml"] = test_high_minus_low(curve, fm, sim_r).reject ? 1.0 : 0.0;
            ButterflyStats bs =
                butterfly_stats(curve, fit.partitions, fit.sj2, make_triples(curve.grid));
            rec.ind["reject_bfly"] = test_butterfly(bs, sim_r).reject ? 1.0 : 0.0;
        }

        if (cfg.checks.count("fixed_t") != 0) {
            GaussianSimSpec sim_ft = cfg.sim;
            sim_ft.seed = derive_stream(cfg.base_seed, {kReplicationTag, ur, kFixedTTag});
            std::map<int, double> q_by_J;  // quantile depends on J_t only
            std::vector<double> covM(R), covMu(R), absu(R);
            for (int row = 0; row < R; ++row) {
                const PartitionScheme& part = fit.partitions[row];
                auto it = q_by_J.find(part.J);
                if (it == q_by_J.end()) {
                    double q = sup_gaussian_quantile(
                        Eigen::MatrixXd::Identity(part.J, part.J), sim_ft, SupMode::abs_sup);
                    it = q_by_J.emplace(part.J, q).first;
                }
                double q = it->second;
                double rootJn = std::sqrt(static_cast<double>(part.J) / part.n_t);
                bool okM = true, okMu = true;
                int t = part.t;
                for (int v = 0; v < V; ++v) {
                    int j = curve.bin_index(row, v);
                    if (j < 0) continue;
                    double half = std::sqrt(fit.sj2[row][j]) * q * rootJn;
                    double c = fit.means[row].a_hat[j];
                    double Mt = truth.M_t(t, curve.grid[v]);
                    double mut = truth.mu_t(t, curve.grid[v]);
                    if (Mt < c - half || Mt > c + half) okM = false;
                    if (mut < c - half || mut > c + half) okMu = false;
                }
                covM[row] = okM ? 1.0 : 0.0;
                covMu[row] = okMu ? 1.0 : 0.0;
                absu[row] = std::abs(factor.f(t - 1) - factor.cond_mean(t - 1));
            }
            std::vector<double> sorted_u = absu;
            std::sort(sorted_u.begin(), sorted_u.end());
            double thr = sorted_u[static_cast<std::size_t>(std::ceil(0.8 * R)) - 1];
            double mM = 0, mHi = 0, mLo = 0;
            int nHi = 0, nLo = 0;
            for (int row = 0; row < R; ++row) {
                mM += covM[row];
                if (absu[row] > thr) {
                    mHi += covMu[row];
                    ++nHi;
                } else {
                    mLo += covMu[row];
                    ++nLo;
                }
            }
            rec.val["fixedt_M_cover"] = mM / R;
            if (nHi > 0) rec.val["fixedt_mu_cover_high"] = mHi / nHi;
            if (nLo > 0) rec.val["fixedt_mu_cover_low"] = mLo / nLo;
        }
    } catch (const std::exception& e) {
        rec.failed = true;
        rec.error = e.what();
    }
    return rec;
}

std::vector<RepRecord> run_replications(const McConfig& cfg, bool parallel) {
    cfg.validate();
    std::vector<RepRecord> records(cfg.reps);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(max_threads()) if (parallel)
#endif
    for (int r = 0; r < cfg.reps; ++r) records[r] = run_replication(cfg, r);
    return records;
}

namespace {

void aggregate_scalars(const std::vector<RepRecord>& records, bool indicator,
                       McTable* table) {
    std::set<std::string> keys;
    for (const auto& rec : records) {
        if (rec.failed) continue;
        const auto& m = indicator ? rec.ind : rec.val;
        for (const auto& [k, v] : m) {
            (void)v;
            keys.insert(k);
        }
        const auto& mv = indicator ? rec.ind_vec : rec.val_vec;
        for (const auto& [k, v] : mv)
            for (std::size_t idx = 0; idx < v.size(); ++idx)
                keys.insert(k + "[" + std::to_string(idx) + "]");
    }
    auto fetch = [&](const RepRecord& rec, const std::string& key, double* out) {
        const auto& m = indicator ? rec.ind : rec.val;
        auto it = m.find(key);
        if (it != m.end()) {
            *out = it->second;
            return true;
        }
        auto lb = key.find('[');
        if (lb == std::string::npos) return false;
        const auto& mv = indicator ? rec.ind_vec : rec.val_vec;
        auto itv = mv.find(key.substr(0, lb));
        if (itv == mv.end()) return false;
        std::size_t idx = std::stoul(key.substr(lb + 1));
        if (idx >= itv->second.size()) return false;
        *out = itv->second[idx];
        return true;
    };
    for (const auto& key : keys) {
        double sum = 0.0, sum2 = 0.0;
        int m = 0;
        for (const auto& rec : records) {
            if (rec.failed) continue;
            double x;
            if (!fetch(rec, key, &x)) continue;
            sum += x;
            sum2 += x * x;
            ++m;
        }
        double mean = sum / m;
        double se;
        if (indicator) {
            se = std::sqrt(mean * (1.0 - mean) / m);  // binomial
        } else {
            double var = std::max(0.0, sum2 / m - mean * mean);
            se = std::sqrt(var / m);
        }
        table->row_labels.push_back(key);
        table->rows.push_back({mean, se, static_cast<double>(m)});
    }
}

}  // namespace

std::string McTable::to_csv() const {
    std::ostringstream os;
    os << "metric";
    for (const auto& c : columns) os << "," << c;
    os << "\n";
    for (std::size_t r = 0; r < rows.size(); ++r) {
        os << row_labels[r];
        for (double x : rows[r]) os << "," << format_double(x);
        os << "\n";
    }
    return os.str();
}

const std::vector<double>& McTable::row(const std::string& label) const {
    for (std::size_t r = 0; r < row_labels.size(); ++r)
        if (row_labels[r] == label) return rows[r];
    throw ValidationError("mc table: no row labelled '" + label + "'");
}

bool McReport::suite_ok() const {
    return reps > failures && failures <= static_cast<int>(0.05 * reps);
}

double McReport::rate(const std::string& label) const {
    return tables.at("indicators").row(label)[0];
}

double McReport::value(const std::string& label) const {
    return tables.at("values").row(label)[0];
}

std::string McReport::all_tables_csv() const {
    std::ostringstream os;
    for (const auto& [name, table] : tables) os << "# " << name << "\n" << table.to_csv();
    return os.str();
}

McReport aggregate(const std::vector<RepRecord>& records) {
    McReport rep;
    rep.reps = static_cast<int>(records.size());
    for (const auto& r : records)
        if (r.failed) ++rep.failures;
    if (rep.failures == rep.reps) throw EmptySuite("montecarlo: every replication failed");

    McTable ind;
    ind.columns = {"rate", "se", "reps"};
    aggregate_scalars(records, true, &ind);
    McTable val;
    val.columns = {"mean", "se", "reps"};
    aggregate_scalars(records, false, &val);
    McTable meta;
    meta.columns = {"value"};
    meta.row_labels = {"reps", "failures"};
    meta.rows = {{static_cast<double>(rep.reps)}, {static_cast<double>(rep.failures)}};
    rep.tables["indicators"] = std::move(ind);
    rep.tables["values"] = std::move(val);
    rep.tables["meta"] = std::move(meta);
    return rep;
}

McReport run_suite(const McConfig& cfg, bool parallel) {
    auto start = std::chrono::steady_clock::now();
    McReport report = aggregate(run_replications(cfg, parallel));
    report.wall_seconds = std::chrono::duration<double>(
        std::chrono::steady_clock::now() - start).count();
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(cfg.canonical_string())));
    report.config_hash = buf;
    return report;
}

}  // namespace betasort
