#pragma once

#include "lnn/activation.hpp"
#include "lnn/errors.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <string_view>

namespace lnn {

enum class LinkKind { probit, logistic };

inline std::string_view to_string(LinkKind k)
{
    return k == LinkKind::probit ? "probit" : "logistic";
}

inline LinkKind link_from_string(std::string_view s)
{
    if (s == "probit")
        return LinkKind::probit;
    if (s == "logistic" || s == "logit")
        return LinkKind::logistic;
    throw ArgumentError("unknown link '" + std::string(s) + "'");
}

//! How the cube side is chosen: the sample-size rule, an explicit
//! half-width h (rounded to the nearest partition of [-a, a]), or an
//! explicit number of cubes per axis.
struct BandwidthChoice {
    enum class Mode { rule, explicit_h, cubes };
    Mode mode = Mode::rule;
    double value = 0.0;
};

inline std::string_view to_string(BandwidthChoice::Mode m)
{
    switch (m) {
    case BandwidthChoice::Mode::rule: return "rule";
    case BandwidthChoice::Mode::explicit_h: return "explicit";
    case BandwidthChoice::Mode::cubes: return "cubes";
    }
    return "rule";
}

inline BandwidthChoice::Mode bandwidth_mode_from_string(std::string_view s)
{
    if (s == "rule")
        return BandwidthChoice::Mode::rule;
    if (s == "explicit" || s == "h")
        return BandwidthChoice::Mode::explicit_h;
    if (s == "cubes" || s == "M")
        return BandwidthChoice::Mode::cubes;
    throw ArgumentError("unknown bandwidth mode '" + std::string(s) + "'");
}

//! User-facing hyperparameters. The scale constant of the univariate
//! construction is fixed to 1.
struct LnnConfig {
    double a = 3.0;
    int d = 1;
    int q = 3;
    double s = 1.0;
    double u_sigma = -0.5;
    ActivationKind activation = ActivationKind::squasher;
    BandwidthChoice bandwidth;
    std::optional<Eigen::MatrixXd> weight_matrix; // (d+1) x d_q, default when empty
    LinkKind link = LinkKind::probit;

    double p() const { return q + s; }

    ActivationSpec activation_spec() const { return {activation, u_sigma, q}; }
};

} // namespace lnn
