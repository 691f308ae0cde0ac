#pragma once

#include "lnn/architecture.hpp"
#include "lnn/bands.hpp"
#include "lnn/binary.hpp"
#include "lnn/config.hpp"
#include "lnn/dataset.hpp"
#include "lnn/errors.hpp"
#include "lnn/kernelbase.hpp"
#include "lnn/parallel.hpp"
#include "lnn/regress.hpp"
#include "lnn/stats.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <locale>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace lnn {

enum class SimModel { reg, bin };

inline std::string_view to_string(SimModel m) { return m == SimModel::reg ? "reg" : "bin"; }

inline SimModel sim_model_from_string(std::string_view s)
{
    if (s == "reg")
        return SimModel::reg;
    if (s == "bin")
        return SimModel::bin;
    throw ArgumentError("unknown model '" + std::string(s) + "' (expected reg or bin)");
}

//! AR(1) errors e_t = phi e_{t-1} + N(0, innov_var), started from the
//! stationary law N(0, innov_var / (1 - phi^2)).
inline VectorXd gen_ar1(std::size_t T, double phi, double innov_var, std::uint64_t seed)
{
    if (!(std::abs(phi) < 1.0))
        throw ArgumentError("gen_ar1: need |phi| < 1");
    if (!(innov_var > 0.0))
        throw ArgumentError("gen_ar1: innovation variance must be positive");
    Rng rng = substream(seed, Stage::errors, 0);
    std::normal_distribution<double> N(0.0, 1.0);
    const double sd = std::sqrt(innov_var);
    VectorXd e(static_cast<Eigen::Index>(T));
    double prev = N(rng) * sd / std::sqrt(1.0 - phi * phi);
    for (std::size_t t = 0; t < T; ++t) {
        if (t > 0)
            prev = phi * prev + sd * N(rng);
        e(static_cast<Eigen::Index>(t)) = prev;
    }
    return e;
}

//! g(x) = 1 + sin(sum(x) / d)
inline double truth_g(const VectorXd& x)
{
    return 1.0 + std::sin(x.sum() / static_cast<double>(x.size()));
}

struct SimData {
    Dataset data;
    std::function<double(const VectorXd&)> truth = truth_g;
};

inline SimData gen_dataset(SimModel model, std::size_t T, int d, double a, std::uint64_t seed,
                           double phi = 0.5, double innov_var = 0.75)
{
    if (d < 1 || !(a > 0.0))
        throw ArgumentError("gen_dataset: need d >= 1 and a > 0");
    SimData out;
    Dataset& ds = out.data;
    ds.X.resize(static_cast<Eigen::Index>(T), d);
    Rng rng = substream(seed, Stage::regressors, 0);
    std::uniform_real_distribution<double> U(-a, a);
    for (Eigen::Index t = 0; t < ds.X.rows(); ++t)
        for (int k = 0; k < d; ++k)
            ds.X(t, k) = U(rng);
    const VectorXd e = gen_ar1(T, phi, innov_var, seed);
    ds.y.resize(static_cast<Eigen::Index>(T));
    for (Eigen::Index t = 0; t < ds.X.rows(); ++t) {
        const double g = truth_g(ds.X.row(t).transpose());
        ds.y(t) = model == SimModel::reg ? g + e(t) : (g - e(t) >= 0.0 ? 1.0 : 0.0);
    }
    for (int k = 0; k < d; ++k)
        ds.x_names.push_back("x" + std::to_string(k + 1));
    return out;
}

//! L^d grid with coordinates -a + 2a (j - 1) / (L - 1); last axis varies fastest.
inline MatrixXd test_grid(double a, int L, int d)
{
    if (L < 2)
        throw ArgumentError("test_grid: need L >= 2");
    if (d < 1)
        throw ArgumentError("test_grid: need d >= 1");
    std::size_t n = 1;
    for (int k = 0; k < d; ++k)
        n *= static_cast<std::size_t>(L);
    MatrixXd G(static_cast<Eigen::Index>(n), d);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t rem = i;
        for (int k = d - 1; k >= 0; --k) {
            const auto j = static_cast<double>(rem % static_cast<std::size_t>(L));
            rem /= static_cast<std::size_t>(L);
            G(static_cast<Eigen::Index>(i), k) = -a + 2.0 * a * j / (L - 1);
        }
    }
    return G;
}

//! 26 points on the main diagonal: (-2.5 + 0.2 (i - 1)) * 1_d.
inline MatrixXd diagonal_points(int d)
{
    MatrixXd P(26, d);
    for (int i = 0; i < 26; ++i)
        P.row(i).setConstant(-2.5 + 0.2 * i);
    return P;
}

struct SimMetrics {
    double rmse = std::numeric_limits<double>::quiet_NaN();
    double rmse_star = std::numeric_limits<double>::quiet_NaN();
    double cr = std::numeric_limits<double>::quiet_NaN();
    std::size_t evaluated = 0; // (replication, point) pairs with a finite estimate
};

//! estimates[i][j] is replication i at point j (NaN = unavailable). A pair
//! counts as covered when its band contains the truth. The trimmed RMSE keeps,
//! per point, the replications whose estimate lies in [Q1, Q3] of that point.
inline SimMetrics metrics(const std::vector<std::vector<double>>& estimates,
                          const std::vector<double>& truths,
                          const std::vector<std::vector<BootstrapBand>>& bands)
{
    SimMetrics m;
    const std::size_t P = truths.size();
    for (const auto& row : estimates)
        if (row.size() != P)
            throw ArgumentError("metrics: estimate row length differs from the number of points");
    const bool have_bands = !bands.empty();
    if (have_bands && bands.size() != estimates.size())
        throw ArgumentError("metrics: band replications differ from estimate replications");

    double sq = 0.0, sq_star = 0.0;
    std::size_t n = 0, n_star = 0, covered = 0;
    std::vector<double> vals;
    for (std::size_t j = 0; j < P; ++j) {
        vals.clear();
        for (std::size_t i = 0; i < estimates.size(); ++i) {
            const double v = estimates[i][j];
            if (std::isnan(v))
                continue;
            vals.push_back(v);
            sq += (v - truths[j]) * (v - truths[j]);
            ++n;
            if (have_bands && bands[i][j].contains(truths[j]))
                ++covered;
        }
        if (vals.empty())
            continue;
        std::sort(vals.begin(), vals.end());
        const double q1 = quantile_sorted(vals, 0.25);
        const double q3 = quantile_sorted(vals, 0.75);
        for (double v : vals)
            if (q1 <= v && v <= q3) {
                sq_star += (v - truths[j]) * (v - truths[j]);
                ++n_star;
            }
    }
    m.evaluated = n;
    if (n > 0) {
        m.rmse = std::sqrt(sq / static_cast<double>(n));
        m.rmse_star = std::sqrt(sq_star / static_cast<double>(n_star));
        if (have_bands)
            m.cr = static_cast<double>(covered) / static_cast<double>(n);
    }
    return m;
}

//! Seed of replication `rep` of the (model, T, d) cell; the data of a
//! replication do not depend on q, u_sigma or the thread count.
inline std::uint64_t replication_seed(std::uint64_t master, SimModel model, std::size_t T, int d,
                                      std::size_t rep)
{
    Rng rng = substream(master, {static_cast<std::uint64_t>(Stage::data),
                                 static_cast<std::uint64_t>(model), T,
                                 static_cast<std::uint64_t>(d), rep});
    return rng();
}

struct ExperimentSpec {
    SimModel model = SimModel::reg;
    std::vector<std::size_t> Ts{800, 1600, 2400};
    std::vector<int> ds{2};
    std::vector<int> qs{3};
    std::vector<double> u_sigmas{-0.5};
    int n = 50;
    std::size_t R = 200;
    double level = 0.95;
    double a = 3.0;
    int L = 20;
    double s = 1.0;
    double phi = 0.5;
    double innov_var = 0.75;
    ActivationKind activation = ActivationKind::squasher;
    LinkKind link = LinkKind::probit;
    BandwidthChoice bandwidth;
    unsigned threads = 1;
    bool timing = false;      // record wall time per row
    bool keep_points = false; // keep per-point summaries for plotting
};

//! Per-point averages over successful replications.
struct PointSummary {
    VectorXd x;
    double truth = 0.0;
    double mean_ghat = std::numeric_limits<double>::quiet_NaN();
    double mean_draw_lo = std::numeric_limits<double>::quiet_NaN();
    double mean_draw_hi = std::numeric_limits<double>::quiet_NaN();
};

struct SimRow {
    SimModel model = SimModel::reg;
    std::size_t T = 0;
    int d = 0;
    int q = 0;
    double u_sigma = 0.0;
    int n_reps = 0;
    int n_failed = 0;         // replications whose fit raised an error
    std::size_t excluded_cubes = 0; // non-converged cubes, summed over replications
    std::size_t R = 0;
    int M = 0;
    double h = 0.0;
    double rmse = 0.0;
    std::optional<double> rmse_star; // binary model only
    double cr = 0.0;
    std::optional<double> wall_time;
    std::vector<PointSummary> points;
};

struct SimReport {
    std::vector<SimRow> rows;
};

struct ReplicationResult {
    bool ok = false;
    std::size_t excluded_cubes = 0;
    std::vector<double> estimates;
    std::vector<BootstrapBand> bands;
};

inline LnnConfig experiment_config(const ExperimentSpec& spec, int d, int q, double u)
{
    LnnConfig cfg;
    cfg.a = spec.a;
    cfg.d = d;
    cfg.q = q;
    cfg.s = spec.s;
    cfg.u_sigma = u;
    cfg.activation = spec.activation;
    cfg.bandwidth = spec.bandwidth;
    cfg.link = spec.link;
    return cfg;
}

//! One replication of one cell: simulate, fit, bootstrap at the points.
inline ReplicationResult run_replication(SimModel model, const Architecture& arch, std::size_t T,
                                         const MatrixXd& points, const ExperimentSpec& spec,
                                         std::uint64_t seed)
{
    ReplicationResult res;
    const SimData sim = gen_dataset(model, T, arch.d(), spec.a, seed, spec.phi, spec.innov_var);
    BootstrapOptions opt;
    opt.R = spec.R;
    opt.seed = seed;
    opt.level = spec.level;
    opt.threads = 1;
    try {
        if (model == SimModel::reg) {
            const FittedRegression fit = fit_regression(sim.data, arch);
            res.bands = wild_bootstrap_reg(fit, sim.data, opt, points);
        } else {
            NewtonOptions nopt;
            const FittedBinary fit = fit_binary(sim.data, arch, arch.config.link, nopt);
            for (std::size_t c = 0; c < fit.records.size(); ++c)
                if (fit.counts[c] > 0 && fit.flagged[c])
                    ++res.excluded_cubes;
            res.bands = score_bootstrap(fit, sim.data, opt, points);
        }
    } catch (const NumericalError&) {
        return res;
    } catch (const DataError&) {
        return res;
    }
    res.estimates.resize(res.bands.size());
    for (std::size_t e = 0; e < res.bands.size(); ++e)
        res.estimates[e] = res.bands[e].status == PointStatus::ok
            ? res.bands[e].ghat
            : std::numeric_limits<double>::quiet_NaN();
    res.ok = true;
    return res;
}

inline SimRow run_cell(const ExperimentSpec& spec, std::size_t T, int d, int q, double u,
                       std::uint64_t seed)
{
    const auto t0 = std::chrono::steady_clock::now();
    const LnnConfig cfg = experiment_config(spec, d, q, u);
    const Architecture arch = build_architecture_for_sample(cfg, T);
    const MatrixXd grid = test_grid(spec.a, spec.L, d);
    std::vector<double> truths(static_cast<std::size_t>(grid.rows()));
    for (std::size_t j = 0; j < truths.size(); ++j)
        truths[j] = truth_g(grid.row(static_cast<Eigen::Index>(j)).transpose());

    std::vector<ReplicationResult> reps(static_cast<std::size_t>(spec.n));
    parallel_for(reps.size(), spec.threads, [&](std::size_t i) {
        reps[i] = run_replication(spec.model, arch, T, grid, spec,
                                  replication_seed(seed, spec.model, T, d, i));
    });

    std::vector<std::vector<double>> est;
    std::vector<std::vector<BootstrapBand>> bands;
    int failed = 0;
    std::size_t excluded = 0;
    for (auto& r : reps) {
        excluded += r.excluded_cubes;
        if (!r.ok) {
            ++failed;
            continue;
        }
        est.push_back(std::move(r.estimates));
        bands.push_back(std::move(r.bands));
    }
    const SimMetrics m = metrics(est, truths, bands);

    SimRow row;
    row.model = spec.model;
    row.T = T;
    row.d = d;
    row.q = q;
    row.u_sigma = u;
    row.n_reps = spec.n;
    row.n_failed = failed;
    row.excluded_cubes = excluded;
    row.R = spec.R;
    row.M = arch.partition.M;
    row.h = arch.partition.h;
    row.rmse = m.rmse;
    row.cr = m.cr;
    if (spec.model == SimModel::bin)
        row.rmse_star = m.rmse_star;
    if (spec.keep_points) {
        row.points.resize(truths.size());
        for (std::size_t j = 0; j < truths.size(); ++j) {
            PointSummary& p = row.points[j];
            p.x = grid.row(static_cast<Eigen::Index>(j)).transpose();
            p.truth = truths[j];
            double sg = 0.0, slo = 0.0, shi = 0.0;
            std::size_t k = 0;
            for (std::size_t i = 0; i < est.size(); ++i) {
                if (std::isnan(est[i][j]))
                    continue;
                sg += est[i][j];
                slo += bands[i][j].draw_lo;
                shi += bands[i][j].draw_hi;
                ++k;
            }
            if (k > 0) {
                p.mean_ghat = sg / static_cast<double>(k);
                p.mean_draw_lo = slo / static_cast<double>(k);
                p.mean_draw_hi = shi / static_cast<double>(k);
            }
        }
    }
    if (spec.timing)
        row.wall_time =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return row;
}

//! Full experiment matrix in the order T, d, q, u_sigma (last fastest).
inline SimReport run_experiment(const ExperimentSpec& spec, std::uint64_t seed)
{
    if (spec.n < 1)
        throw ArgumentError("run_experiment: need n >= 1");
    SimReport rep;
    for (std::size_t T : spec.Ts)
        for (int d : spec.ds)
            for (int q : spec.qs)
                for (double u : spec.u_sigmas)
                    rep.rows.push_back(run_cell(spec, T, d, q, u, seed));
    return rep;
}

namespace detail {

inline std::ostringstream classic_stream()
{
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os.precision(10);
    return os;
}

inline void put_number(std::ostream& os, double v)
{
    if (std::isnan(v))
        os << "";
    else
        os << v;
}

} // namespace detail

inline std::string to_csv(const SimReport& rep)
{
    auto os = detail::classic_stream();
    bool timing = false;
    for (const auto& r : rep.rows)
        timing = timing || r.wall_time.has_value();
    os << "model,T,d,q,u_sigma,n_reps,n_failed,excluded_cubes,R,M,h,RMSE_g,RMSE_g_star,CR_g";
    if (timing)
        os << ",wall_time";
    os << '\n';
    for (const auto& r : rep.rows) {
        os << to_string(r.model) << ',' << r.T << ',' << r.d << ',' << r.q << ',' << r.u_sigma
           << ',' << r.n_reps << ',' << r.n_failed << ',' << r.excluded_cubes << ',' << r.R << ',' << r.M << ',' << r.h
           << ',';
        detail::put_number(os, r.rmse);
        os << ',';
        if (r.rmse_star)
            detail::put_number(os, *r.rmse_star);
        os << ',';
        detail::put_number(os, r.cr);
        if (timing) {
            os << ',';
            if (r.wall_time)
                os << *r.wall_time;
        }
        os << '\n';
    }
    return os.str();
}

//! Plot-ready per-point table: mean estimate and mean 2.5% / 97.5% draws.
inline std::string points_csv(const SimReport& rep)
{
    auto os = detail::classic_stream();
    int dmax = 0;
    for (const auto& r : rep.rows)
        dmax = std::max(dmax, r.d);
    os << "model,T,d,q,u_sigma";
    for (int k = 0; k < dmax; ++k)
        os << ",x" << (k + 1);
    os << ",truth,ghat_mean,draw_lo_mean,draw_hi_mean\n";
    for (const auto& r : rep.rows)
        for (const auto& p : r.points) {
            os << to_string(r.model) << ',' << r.T << ',' << r.d << ',' << r.q << ','
               << r.u_sigma;
            for (int k = 0; k < dmax; ++k) {
                os << ',';
                if (k < r.d)
                    os << p.x(k);
            }
            os << ',' << p.truth << ',';
            detail::put_number(os, p.mean_ghat);
            os << ',';
            detail::put_number(os, p.mean_draw_lo);
            os << ',';
            detail::put_number(os, p.mean_draw_hi);
            os << '\n';
        }
    return os.str();
}

//! Coverage comparison of the LNN band against kernel baselines at the
//! diagonal points, all with the LNN rule bandwidth.
struct KernelBenchSpec {
    std::vector<std::size_t> Ts{2400};
    int d = 3;
    int q = 3;
    double u_sigma = -0.5;
    int n = 30;
    std::size_t R = 200;
    double level = 0.95;
    double a = 3.0;
    double s = 1.0;
    double phi = 0.5;
    double innov_var = 0.75;
    std::vector<KernelKind> kernels{KernelKind::epanechnikov, KernelKind::uniform};
    unsigned threads = 1;
};

struct KernelBenchRow {
    std::string method; // "lnn" or a kernel name
    std::size_t T = 0;
    int d = 0;
    int n_reps = 0;
    int n_failed = 0;
    double h = 0.0;
    double rmse = 0.0;
    double cr = 0.0;
};

inline std::vector<KernelBenchRow> run_kernel_benchmark(const KernelBenchSpec& spec,
                                                        std::uint64_t seed)
{
    if (spec.n < 1)
        throw ArgumentError("run_kernel_benchmark: need n >= 1");
    std::vector<KernelBenchRow> rows;
    const MatrixXd pts = diagonal_points(spec.d);
    std::vector<double> truths(static_cast<std::size_t>(pts.rows()));
    for (std::size_t j = 0; j < truths.size(); ++j)
        truths[j] = truth_g(pts.row(static_cast<Eigen::Index>(j)).transpose());
    const std::size_t methods = 1 + spec.kernels.size();

    for (std::size_t T : spec.Ts) {
        LnnConfig cfg;
        cfg.a = spec.a;
        cfg.d = spec.d;
        cfg.q = spec.q;
        cfg.s = spec.s;
        cfg.u_sigma = spec.u_sigma;
        const Architecture arch = build_architecture_for_sample(cfg, T);
        const double h = arch.partition.h;
        // results[i][method]
        std::vector<std::vector<ReplicationResult>> results(
            static_cast<std::size_t>(spec.n), std::vector<ReplicationResult>(methods));
        parallel_for(results.size(), spec.threads, [&](std::size_t i) {
            const std::uint64_t rs = replication_seed(seed, SimModel::reg, T, spec.d, i);
            const SimData sim = gen_dataset(SimModel::reg, T, spec.d, spec.a, rs, spec.phi,
                                            spec.innov_var);
            BootstrapOptions opt;
            opt.R = spec.R;
            opt.seed = rs;
            opt.level = spec.level;
            for (std::size_t k = 0; k < methods; ++k) {
                ReplicationResult& res = results[i][k];
                try {
                    if (k == 0)
                        res.bands = wild_bootstrap_reg(fit_regression(sim.data, arch), sim.data,
                                                       opt, pts);
                    else
                        res.bands = kernel_bootstrap(sim.data, h, spec.kernels[k - 1], opt, pts);
                } catch (const DataError&) {
                    continue;
                } catch (const NumericalError&) {
                    continue;
                }
                res.estimates.resize(res.bands.size());
                for (std::size_t e = 0; e < res.bands.size(); ++e)
                    res.estimates[e] = res.bands[e].status == PointStatus::ok
                        ? res.bands[e].ghat
                        : std::numeric_limits<double>::quiet_NaN();
                res.ok = true;
            }
        });
        for (std::size_t k = 0; k < methods; ++k) {
            std::vector<std::vector<double>> est;
            std::vector<std::vector<BootstrapBand>> bands;
            int failed = 0;
            for (auto& per : results) {
                if (!per[k].ok) {
                    ++failed;
                    continue;
                }
                est.push_back(per[k].estimates);
                bands.push_back(per[k].bands);
            }
            const SimMetrics m = metrics(est, truths, bands);
            KernelBenchRow row;
            row.method = k == 0 ? "lnn" : std::string(to_string(spec.kernels[k - 1]));
            row.T = T;
            row.d = spec.d;
            row.n_reps = spec.n;
            row.n_failed = failed;
            row.h = h;
            row.rmse = m.rmse;
            row.cr = m.cr;
            rows.push_back(row);
        }
    }
    return rows;
}

inline std::string to_csv(const std::vector<KernelBenchRow>& rows)
{
    auto os = detail::classic_stream();
    os << "method,T,d,n_reps,n_failed,h,RMSE_g,CR_g\n";
    for (const auto& r : rows) {
        os << r.method << ',' << r.T << ',' << r.d << ',' << r.n_reps << ',' << r.n_failed << ','
           << r.h << ',';
        detail::put_number(os, r.rmse);
        os << ',';
        detail::put_number(os, r.cr);
        os << '\n';
    }
    return os.str();
}

} // namespace lnn
