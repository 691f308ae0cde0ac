#pragma once

#include "lnn/bands.hpp"
#include "lnn/dataset.hpp"
#include "lnn/errors.hpp"
#include "lnn/parallel.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace lnn {

enum class KernelKind { uniform, epanechnikov };

inline std::string_view to_string(KernelKind k)
{
    return k == KernelKind::uniform ? "uniform" : "epanechnikov";
}

inline KernelKind kernel_from_string(std::string_view s)
{
    if (s == "uniform")
        return KernelKind::uniform;
    if (s == "epanechnikov" || s == "epa")
        return KernelKind::epanechnikov;
    throw ArgumentError("unknown kernel '" + std::string(s) + "'");
}

inline double kernel_weight(KernelKind k, double u)
{
    if (std::abs(u) > 1.0)
        return 0.0;
    return k == KernelKind::uniform ? 0.5 : 0.75 * (1.0 - u * u);
}

//! Product-kernel weights of every observation for the point x0.
inline Eigen::VectorXd nw_weights(const Eigen::MatrixXd& X, const Eigen::VectorXd& x0, double h,
                                  KernelKind k)
{
    Eigen::VectorXd w(X.rows());
    for (Eigen::Index t = 0; t < X.rows(); ++t) {
        double p = 1.0;
        for (Eigen::Index m = 0; m < X.cols() && p != 0.0; ++m)
            p *= kernel_weight(k, (X(t, m) - x0(m)) / h);
        w(t) = p;
    }
    return w;
}

inline double nw_from_weights(const Eigen::VectorXd& w, const Eigen::VectorXd& y)
{
    const double sw = w.sum();
    if (!(sw > 0.0))
        throw DataError("nw_estimate: no observations in the kernel window");
    return w.dot(y) / sw;
}

//! Local-constant (Nadaraya-Watson) estimate at x0.
inline double nw_estimate(const Dataset& data, const Eigen::VectorXd& x0, double h, KernelKind k)
{
    if (!(h > 0.0))
        throw ArgumentError("nw_estimate: h must be positive");
    if (x0.size() != data.d())
        throw ArgumentError("nw_estimate: dimension mismatch");
    return nw_from_weights(nw_weights(data.X, x0, h, k), data.y);
}

//! Residual wild bootstrap with the kernel smoother: y* = mhat(x_t) + e_t eta_t,
//! re-smoothed at each evaluation point.
inline std::vector<BootstrapBand> kernel_bootstrap(const Dataset& data, double h, KernelKind k,
                                                   const BootstrapOptions& opt,
                                                   const Eigen::MatrixXd& eval_points)
{
    validate(opt);
    if (!(h > 0.0))
        throw ArgumentError("kernel_bootstrap: h must be positive");
    const std::size_t T = data.T();
    Eigen::VectorXd fitted(static_cast<Eigen::Index>(T));
    parallel_for(T, opt.threads, [&](std::size_t t) {
        fitted(static_cast<Eigen::Index>(t)) = nw_estimate(data, data.x(t), h, k);
    });
    const Eigen::VectorXd resid = data.y - fitted;

    const auto P = static_cast<std::size_t>(eval_points.rows());
    std::vector<Eigen::VectorXd> weights(P);
    std::vector<Prediction> ghat(P);
    for (std::size_t e = 0; e < P; ++e) {
        weights[e] = nw_weights(data.X, eval_points.row(static_cast<Eigen::Index>(e)).transpose(), h, k);
        if (weights[e].sum() > 0.0) {
            ghat[e].value = nw_from_weights(weights[e], data.y);
            ghat[e].status = PointStatus::ok;
        }
    }

    Eigen::MatrixXd deltas =
        Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(opt.R), static_cast<Eigen::Index>(P));
    parallel_for(opt.R, opt.threads, [&](std::size_t r) {
        const Eigen::VectorXd eta = draw_multipliers(opt, r, T);
        const Eigen::VectorXd ystar = fitted + resid.cwiseProduct(eta);
        for (std::size_t e = 0; e < P; ++e)
            if (ghat[e].ok())
                deltas(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(e)) =
                    nw_from_weights(weights[e], ystar) - ghat[e].value;
    });
    return bands_from_deltas(eval_points, ghat, deltas, opt);
}

} // namespace lnn
