#pragma once

#include "lnn/architecture.hpp"
#include "lnn/bands.hpp"
#include "lnn/basis.hpp"
#include "lnn/dataset.hpp"
#include "lnn/errors.hpp"
#include "lnn/parallel.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <vector>

namespace lnn {

//! Least-squares solution for one cube's design.
struct CubeSolution {
    VectorXd theta;
    bool flagged = false; // fewer rows than columns or rank deficient
};

//! Minimum-norm least squares via a complete orthogonal decomposition.
//! Full-rank systems get the ordinary LS solution.
inline CubeSolution solve_cube(const MatrixXd& F, const VectorXd& y)
{
    CubeSolution s;
    const Eigen::Index p = F.cols();
    if (F.rows() == 0) {
        s.theta = VectorXd::Zero(p);
        s.flagged = true;
        return s;
    }
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(F);
    s.theta = cod.solve(y);
    s.flagged = F.rows() < p || cod.rank() < p;
    return s;
}

//! Observations assigned to one cube and their feature rows.
struct CubeDesign {
    std::vector<std::size_t> rows;
    MatrixXd F;    // n_i x d_q, row t is x_tilde_{i,t}'
    MatrixXd pinv; // d_q x n_i pseudo-inverse of F
    bool flagged = true;

    std::size_t count() const { return rows.size(); }
    bool empty() const { return rows.empty(); }
};

//! Per-cube designs for a dataset. The design does not depend on y, so one
//! instance serves the fit and every bootstrap refit.
struct RegressionDesign {
    std::vector<CubeDesign> cubes;
    std::vector<std::size_t> cube_of; // per observation, or outside_domain
    std::size_t n_inside = 0;
};

inline MatrixXd feature_rows(const MatrixXd& X, const std::vector<std::size_t>& rows,
                             const VectorXd& center, const Network& net)
{
    MatrixXd F(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(net.dq()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        F.row(static_cast<Eigen::Index>(r)) =
            feature_vector(X.row(static_cast<Eigen::Index>(rows[r])).transpose(), center, net)
                .transpose();
    return F;
}

inline RegressionDesign build_design(const MatrixXd& X, const Architecture& arch,
                                     unsigned threads = 1)
{
    if (X.cols() != arch.d())
        throw ArgumentError("regressor dimension does not match the architecture");
    RegressionDesign des;
    des.cubes.resize(arch.num_cubes());
    des.cube_of.resize(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index t = 0; t < X.rows(); ++t) {
        const std::size_t c = cube_index(X.row(t).transpose(), arch.partition);
        des.cube_of[static_cast<std::size_t>(t)] = c;
        if (c != outside_domain) {
            des.cubes[c].rows.push_back(static_cast<std::size_t>(t));
            ++des.n_inside;
        }
    }
    parallel_for(des.cubes.size(), threads, [&](std::size_t c) {
        CubeDesign& cd = des.cubes[c];
        cd.F = feature_rows(X, cd.rows, arch.center(c), arch.net);
        if (cd.empty()) {
            cd.pinv = MatrixXd::Zero(cd.F.cols(), 0);
            cd.flagged = true;
            return;
        }
        Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(cd.F);
        cd.pinv = cod.pseudoInverse();
        cd.flagged = cd.F.rows() < cd.F.cols() || cod.rank() < cd.F.cols();
    });
    return des;
}

inline VectorXd gather(const VectorXd& v, const std::vector<std::size_t>& rows)
{
    VectorXd out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        out(static_cast<Eigen::Index>(r)) = v(static_cast<Eigen::Index>(rows[r]));
    return out;
}

//! Fitted model (1.1): one coefficient vector per cube.
struct FittedRegression {
    Architecture arch;
    MatrixXd thetas;                 // num_cubes x d_q
    std::vector<std::size_t> counts; // observations per cube
    std::vector<bool> flagged;       // empty, underdetermined or rank deficient
    double sigma_eps2 = 0.0;
    std::shared_ptr<const RegressionDesign> design; // absent after deserialization

    VectorXd theta(std::size_t cube) const
    {
        return thetas.row(static_cast<Eigen::Index>(cube)).transpose();
    }
};

namespace detail {

inline double regression_sigma2(const FittedRegression& m, const RegressionDesign& des,
                                const VectorXd& y)
{
    double rss = 0.0;
    std::size_t n = 0, params = 0;
    for (std::size_t c = 0; c < des.cubes.size(); ++c) {
        if (m.flagged[c])
            continue;
        const CubeDesign& cd = des.cubes[c];
        const VectorXd r = gather(y, cd.rows) - cd.F * m.theta(c);
        rss += r.squaredNorm();
        n += cd.count();
        params += m.arch.dq();
    }
    const double dof = n > params ? static_cast<double>(n - params) : 1.0;
    return rss / dof;
}

} // namespace detail

//! Closed-form per-cube least squares on a prebuilt design.
inline FittedRegression fit_regression(const VectorXd& y, const Architecture& arch,
                                       std::shared_ptr<const RegressionDesign> des,
                                       unsigned threads = 1)
{
    if (static_cast<std::size_t>(y.size()) != des->cube_of.size())
        throw ArgumentError("fit_regression: response length does not match the design");
    if (des->n_inside == 0)
        throw DataError("fit_regression: no observations inside [-a, a]^d");
    FittedRegression m;
    m.arch = arch;
    const std::size_t nc = arch.num_cubes();
    m.thetas = MatrixXd::Zero(static_cast<Eigen::Index>(nc), static_cast<Eigen::Index>(arch.dq()));
    m.counts.resize(nc);
    m.flagged.assign(nc, true);
    std::vector<char> flags(nc, 1);
    parallel_for(nc, threads, [&](std::size_t c) {
        const CubeDesign& cd = des->cubes[c];
        const CubeSolution sol = solve_cube(cd.F, gather(y, cd.rows));
        m.thetas.row(static_cast<Eigen::Index>(c)) = sol.theta.transpose();
        flags[c] = sol.flagged ? 1 : 0;
    });
    for (std::size_t c = 0; c < nc; ++c) {
        m.counts[c] = des->cubes[c].count();
        m.flagged[c] = flags[c] != 0;
    }
    m.sigma_eps2 = detail::regression_sigma2(m, *des, y);
    m.design = std::move(des);
    return m;
}

inline FittedRegression fit_regression(const Dataset& data, const Architecture& arch,
                                       unsigned threads = 1)
{
    if (data.d() != arch.d())
        throw ArgumentError("fit_regression: data dimension does not match the architecture");
    auto des = std::make_shared<const RegressionDesign>(build_design(data.X, arch, threads));
    return fit_regression(data.y, arch, std::move(des), threads);
}

//! Linear-in-theta evaluation shared by the regression and binary models.
inline Prediction predict_index(const Architecture& arch, const MatrixXd& thetas,
                                const std::vector<bool>& flagged, const VectorXd& x)
{
    Prediction p;
    const std::size_t c = cube_index(x, arch.partition);
    if (c == outside_domain)
        return p;
    const VectorXd f = feature_vector(x, arch.center(c), arch.net);
    p.value = thetas.row(static_cast<Eigen::Index>(c)).dot(f);
    p.status = flagged[c] ? PointStatus::flagged : PointStatus::ok;
    return p;
}

inline Prediction predict(const FittedRegression& m, const VectorXd& x)
{
    Prediction p = predict_index(m.arch, m.thetas, m.flagged, x);
    const std::size_t c = cube_index(x, m.arch.partition);
    if (c != outside_domain && m.counts[c] == 0)
        p.value = std::numeric_limits<double>::quiet_NaN();
    return p;
}

//! y - ghat(x); NaN marks observations outside the domain or in flagged cubes.
inline VectorXd residuals(const FittedRegression& m, const Dataset& data)
{
    VectorXd r(static_cast<Eigen::Index>(data.T()));
    for (std::size_t t = 0; t < data.T(); ++t) {
        const Prediction p = predict(m, data.x(t));
        r(static_cast<Eigen::Index>(t)) = p.ok()
            ? data.y(static_cast<Eigen::Index>(t)) - p.value
            : std::numeric_limits<double>::quiet_NaN();
    }
    return r;
}

//! Residual wild bootstrap: y*_t = ghat(x_t) + e_t eta_t, refit, evaluate.
//!
//! Least squares is linear in y and ghat(x_t) lies in each cube's column
//! space, so the refit equals theta_hat + F^+ (e * eta); the draws below use
//! that identity with the cached pseudo-inverses.
inline std::vector<BootstrapBand> wild_bootstrap_reg(const FittedRegression& m,
                                                     const Dataset& data,
                                                     const BootstrapOptions& opt,
                                                     const MatrixXd& eval_points)
{
    validate(opt);
    std::shared_ptr<const RegressionDesign> des = m.design;
    if (!des || des->cube_of.size() != data.T())
        des = std::make_shared<const RegressionDesign>(build_design(data.X, m.arch, opt.threads));

    const std::size_t nc = m.arch.num_cubes();
    std::vector<VectorXd> resid(nc);
    for (std::size_t c = 0; c < nc; ++c) {
        const CubeDesign& cd = des->cubes[c];
        if (!m.flagged[c])
            resid[c] = gather(data.y, cd.rows) - cd.F * m.theta(c);
    }

    const auto P = static_cast<std::size_t>(eval_points.rows());
    std::vector<Prediction> ghat(P);
    std::vector<std::size_t> cube(P, outside_domain);
    MatrixXd feats(static_cast<Eigen::Index>(m.arch.dq()), static_cast<Eigen::Index>(P));
    for (std::size_t e = 0; e < P; ++e) {
        const VectorXd x = eval_points.row(static_cast<Eigen::Index>(e)).transpose();
        ghat[e] = predict(m, x);
        if (!ghat[e].ok())
            continue;
        cube[e] = cube_index(x, m.arch.partition);
        feats.col(static_cast<Eigen::Index>(e)) = feature_vector(x, m.arch.center(cube[e]), m.arch.net);
    }

    MatrixXd deltas = MatrixXd::Zero(static_cast<Eigen::Index>(opt.R), static_cast<Eigen::Index>(P));
    parallel_for(opt.R, opt.threads, [&](std::size_t r) {
        const VectorXd eta = draw_multipliers(opt, r, data.T());
        std::vector<VectorXd> dtheta(nc);
        for (std::size_t c = 0; c < nc; ++c) {
            if (m.flagged[c])
                continue;
            const CubeDesign& cd = des->cubes[c];
            dtheta[c] = cd.pinv * resid[c].cwiseProduct(gather(eta, cd.rows));
        }
        for (std::size_t e = 0; e < P; ++e)
            if (ghat[e].ok())
                deltas(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(e)) =
                    feats.col(static_cast<Eigen::Index>(e)).dot(dtheta[cube[e]]);
    });
    return bands_from_deltas(eval_points, ghat, deltas, opt);
}

//! sigma^2 m(x0|x0)' H Sigma^{-1} H m(x0|x0) with
//! Sigma = f(x0) * moment_matrix; m(x0|x0) is the first unit vector.
inline double plugin_variance(double sigma_eps2, const MultiIndexSet& idx, double h,
                              double density_at_x0)
{
    if (!(density_at_x0 > 0.0))
        throw ArgumentError("plugin_variance: density must be positive");
    const MatrixXd Sigma = density_at_x0 * moment_matrix(idx);
    const auto H = scaling_matrix(h, idx);
    VectorXd e1 = VectorXd::Zero(static_cast<Eigen::Index>(idx.size()));
    e1(0) = 1.0;
    const VectorXd v = H * e1;
    return sigma_eps2 * v.dot(Sigma.llt().solve(v));
}

inline double plugin_variance(const FittedRegression& m, const VectorXd& x0,
                              double density_at_x0)
{
    if (x0.size() != m.arch.d())
        throw ArgumentError("plugin_variance: dimension mismatch");
    return plugin_variance(m.sigma_eps2, m.arch.net.idx, m.arch.partition.h, density_at_x0);
}

//! Half-width z * sigma_x0 / sqrt(T h^d) of the normal-approximation interval.
inline double studentized_halfwidth(double variance, std::size_t T, double h, int d, double z)
{
    return z * std::sqrt(variance / (static_cast<double>(T) * std::pow(h, d)));
}

} // namespace lnn
