#pragma once

#include "lnn/architecture.hpp"
#include "lnn/config.hpp"
#include "lnn/dataset.hpp"
#include "lnn/errors.hpp"
#include "lnn/parallel.hpp"
#include "lnn/regress.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <vector>

namespace lnn {

struct LocalFit {
    double ghat = 0.0;
    VectorXd theta;
    std::size_t count = 0;
    bool flagged = false; // fewer window observations than d_q, or rank deficient
};

//! Rows with |x_k - x0_k| <= h for every coordinate.
inline std::vector<std::size_t> window_rows(const MatrixXd& X, const VectorXd& x0, double h)
{
    std::vector<std::size_t> rows;
    for (Eigen::Index t = 0; t < X.rows(); ++t)
        if (((X.row(t).transpose() - x0).cwiseAbs().array() <= h).all())
            rows.push_back(static_cast<std::size_t>(t));
    return rows;
}

//! Least squares over the window of half-width h centred at an arbitrary x0,
//! with the network rebuilt for that window.
inline LocalFit fit_local(const Dataset& data, const VectorXd& x0, double h, const LnnConfig& cfg)
{
    if (!(h > 0.0))
        throw ArgumentError("fit_local: h must be positive");
    if (x0.size() != cfg.d || data.d() != cfg.d)
        throw ArgumentError("fit_local: dimension mismatch");
    const Network net = build_network(cfg, h);
    const std::vector<std::size_t> rows = window_rows(data.X, x0, h);
    if (rows.empty())
        throw DataError("fit_local: no observations in the window around x0");
    const MatrixXd F = feature_rows(data.X, rows, x0, net);
    const CubeSolution sol = solve_cube(F, gather(data.y, rows));
    LocalFit out;
    out.theta = sol.theta;
    out.count = rows.size();
    out.flagged = sol.flagged;
    out.ghat = feature_vector(x0, x0, net).dot(sol.theta);
    return out;
}

//! fit_local at each row of `points`; failures surface as the lowest failing row's error.
inline std::vector<LocalFit> fit_local_many(const Dataset& data, const MatrixXd& points, double h,
                                            const LnnConfig& cfg, unsigned threads = 1)
{
    std::vector<LocalFit> out(static_cast<std::size_t>(points.rows()));
    parallel_for(out.size(), threads, [&](std::size_t e) {
        out[e] = fit_local(data, points.row(static_cast<Eigen::Index>(e)).transpose(), h, cfg);
    });
    return out;
}

} // namespace lnn
