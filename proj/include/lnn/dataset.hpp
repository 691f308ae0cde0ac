#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace lnn {

//! Per-column z-normalization applied at ingestion, kept for inverse
//! transforms. Empty when the data were used as read.
struct Normalization {
    std::vector<double> mean;
    std::vector<double> sd;
    bool empty() const { return mean.empty(); }
};

//! The sample {(y_t, x_t)}: responses and a T x d regressor matrix.
struct Dataset {
    Eigen::VectorXd y;
    Eigen::MatrixXd X;
    std::string y_name = "y";
    std::vector<std::string> x_names;
    Normalization y_norm;
    Normalization x_norm;

    std::size_t T() const { return static_cast<std::size_t>(y.size()); }
    int d() const { return static_cast<int>(X.cols()); }
    Eigen::VectorXd x(std::size_t t) const
    {
        return X.row(static_cast<Eigen::Index>(t)).transpose();
    }
};

} // namespace lnn
