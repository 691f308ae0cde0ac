#pragma once

#include "lnn/errors.hpp"
#include "lnn/parallel.hpp"
#include "lnn/stats.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string_view>
#include <vector>

namespace lnn {

enum class PointStatus { ok, outside, flagged };

inline std::string_view to_string(PointStatus s)
{
    switch (s) {
    case PointStatus::ok: return "ok";
    case PointStatus::outside: return "outside";
    case PointStatus::flagged: return "flagged";
    }
    return "ok";
}

//! A fitted value, or a marker telling why there is none. `value` is NaN
//! outside the domain and in empty cubes; in flagged (underdetermined or
//! unconverged) cubes it carries the unreliable estimate.
struct Prediction {
    double value = std::numeric_limits<double>::quiet_NaN();
    PointStatus status = PointStatus::outside;

    bool ok() const { return status == PointStatus::ok; }
};

//! Pointwise bootstrap interval for g at one evaluation point:
//! [ghat - Q_{1-a/2}(ghat* - ghat), ghat - Q_{a/2}(ghat* - ghat)].
//! draw_lo / draw_hi are the a/2 and 1-a/2 quantiles of ghat* itself.
struct BootstrapBand {
    Eigen::VectorXd point;
    double ghat = std::numeric_limits<double>::quiet_NaN();
    double lo = std::numeric_limits<double>::quiet_NaN();
    double hi = std::numeric_limits<double>::quiet_NaN();
    double draw_lo = std::numeric_limits<double>::quiet_NaN();
    double draw_hi = std::numeric_limits<double>::quiet_NaN();
    std::size_t R = 0;
    double level = 0.95;
    PointStatus status = PointStatus::outside;

    bool contains(double v) const { return status == PointStatus::ok && lo <= v && v <= hi; }
};

//! Bootstrap multipliers: standard normal draws, or all zeros (degenerate
//! hook used to check that the procedure reproduces the point estimate).
enum class Multiplier { gaussian, zero };

struct BootstrapOptions {
    std::size_t R = 200;
    std::uint64_t seed = 1;
    double level = 0.95;
    unsigned threads = 1;
    Multiplier multiplier = Multiplier::gaussian;
};

inline void validate(const BootstrapOptions& opt)
{
    if (opt.R < 2)
        throw ArgumentError("bootstrap needs R >= 2");
    if (!(opt.level > 0.0 && opt.level < 1.0))
        throw ArgumentError("bootstrap level must lie in (0, 1)");
}

//! Multipliers eta_1..eta_T of replication r; depends only on (seed, r).
inline Eigen::VectorXd draw_multipliers(const BootstrapOptions& opt, std::size_t r,
                                        std::size_t T)
{
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(T));
    if (opt.multiplier == Multiplier::zero)
        return eta;
    Rng rng = substream(opt.seed, Stage::bootstrap, r);
    std::normal_distribution<double> N(0.0, 1.0);
    for (Eigen::Index t = 0; t < eta.size(); ++t)
        eta(t) = N(rng);
    return eta;
}

//! Turns the R x P matrix of centred draws ghat* - ghat into bands.
inline std::vector<BootstrapBand> bands_from_deltas(const Eigen::MatrixXd& points,
                                                    const std::vector<Prediction>& ghat,
                                                    const Eigen::MatrixXd& deltas,
                                                    const BootstrapOptions& opt)
{
    const double a2 = (1.0 - opt.level) / 2.0;
    std::vector<BootstrapBand> out(ghat.size());
    std::vector<double> col(static_cast<std::size_t>(deltas.rows()));
    for (std::size_t e = 0; e < ghat.size(); ++e) {
        BootstrapBand& b = out[e];
        b.point = points.row(static_cast<Eigen::Index>(e)).transpose();
        b.ghat = ghat[e].value;
        b.status = ghat[e].status;
        b.R = opt.R;
        b.level = opt.level;
        if (b.status != PointStatus::ok)
            continue;
        for (Eigen::Index r = 0; r < deltas.rows(); ++r)
            col[static_cast<std::size_t>(r)] = deltas(r, static_cast<Eigen::Index>(e));
        std::sort(col.begin(), col.end());
        const double qlo = quantile_sorted(col, a2);
        const double qhi = quantile_sorted(col, 1.0 - a2);
        b.lo = b.ghat - qhi;
        b.hi = b.ghat - qlo;
        b.draw_lo = b.ghat + qlo;
        b.draw_hi = b.ghat + qhi;
    }
    return out;
}

} // namespace lnn
