#pragma once

#include "lnn/activation.hpp"
#include "lnn/basis.hpp"
#include "lnn/config.hpp"
#include "lnn/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

namespace lnn {

struct UnivariateCoeffs {
    VectorXd gamma; // q + 1 output weights
    VectorXd beta;  // q + 1 slopes
};

//! Output weights and slopes of the q + 1 neurons whose combination
//! reproduces z^q near zero:
//!   gamma_k = (-1)^{q+k-1} binom(q, k-1) / sigma^(q)(u_sigma),  beta_k = k - 1.
inline UnivariateCoeffs univariate_coeffs(int q, double u_sigma,
                                          ActivationKind activation)
{
    const ActivationSpec spec{activation, u_sigma, q};
    require_valid_u_sigma(spec);
    const double dq = activation_derivative(activation, u_sigma, q);
    UnivariateCoeffs c{VectorXd(q + 1), VectorXd(q + 1)};
    for (int k = 1; k <= q + 1; ++k) {
        const double sign = ((q + k - 1) % 2 == 0) ? 1.0 : -1.0;
        c.gamma(k - 1) = sign * binomial(q, k - 1) / dq;
        c.beta(k - 1) = k - 1;
    }
    return c;
}

//! Column j is sqrt(d+1)/q times the exponent vector (q - |n_j|, n_j) of the
//! j-th term of (1 + x_1 + ... + x_d)^q, aligned with MultiIndexSet order.
inline MatrixXd default_weight_matrix(int d, int q)
{
    if (q < 1)
        throw ArgumentError("default_weight_matrix: q must be >= 1");
    const MultiIndexSet idx = multi_indices(d, q);
    const double scale = std::sqrt(static_cast<double>(d + 1)) / q;
    MatrixXd W(d + 1, idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) {
        W(0, j) = scale * (q - MultiIndexSet::degree(idx[j]));
        for (int k = 0; k < d; ++k)
            W(k + 1, j) = scale * idx[j][k];
    }
    return W;
}

inline void validate_weight_matrix(const MatrixXd& W, int d, std::size_t dq)
{
    if (W.rows() != d + 1 || static_cast<std::size_t>(W.cols()) != dq)
        throw ArgumentError("weight matrix must be (d+1) x d_q");
    const double bound = std::sqrt(static_cast<double>(d + 1)) * (1.0 + 1e-12);
    for (Eigen::Index j = 0; j < W.cols(); ++j) {
        if (W.col(j).norm() > bound)
            throw ArgumentError("weight matrix column norm exceeds sqrt(d+1)");
        for (Eigen::Index k = 0; k < j; ++k)
            if (W.col(j) == W.col(k))
                throw ArgumentError("weight matrix columns must be distinct");
    }
}

//! alpha_j = diag(h, 1, ..., 1) w_j / (d + 1).
inline std::vector<VectorXd> direction_vectors(const MatrixXd& W, double h)
{
    const Eigen::Index d1 = W.rows();
    std::vector<VectorXd> alphas;
    alphas.reserve(W.cols());
    for (Eigen::Index j = 0; j < W.cols(); ++j) {
        VectorXd a = W.col(j) / static_cast<double>(d1);
        a(0) *= h;
        alphas.push_back(std::move(a));
    }
    return alphas;
}

//! Neuron (j, k) sits at position j * (q + 1) + k (0-based) and equals
//! beta_k alpha_j + (u_sigma, 0, ..., 0).
inline std::vector<VectorXd> neuron_affine_params(const std::vector<VectorXd>& alphas,
                                                  const VectorXd& beta, double u_sigma)
{
    std::vector<VectorXd> pis;
    pis.reserve(alphas.size() * beta.size());
    for (const auto& a : alphas) {
        for (Eigen::Index k = 0; k < beta.size(); ++k) {
            VectorXd pi = beta(k) * a;
            pi(0) += u_sigma;
            pis.push_back(std::move(pi));
        }
    }
    return pis;
}

//! Tiling of [-a, a]^d into M^d closed cubes of half-width h = a / M.
struct Partition {
    int d = 1;
    double a = 1.0;
    int M = 1;
    double h = 1.0;
    MatrixXd centers; // M^d x d, row-major cube order (last axis fastest)

    std::size_t num_cubes() const { return static_cast<std::size_t>(centers.rows()); }
};

inline constexpr std::size_t outside_domain = static_cast<std::size_t>(-1);

inline Partition build_partition(double a, int M, int d)
{
    if (M < 1)
        throw ArgumentError("build_partition: M must be >= 1");
    if (!(a > 0.0))
        throw ArgumentError("build_partition: a must be positive");
    if (d < 1)
        throw ArgumentError("build_partition: d must be >= 1");
    Partition p;
    p.d = d;
    p.a = a;
    p.M = M;
    p.h = a / M;
    std::size_t n = 1;
    for (int k = 0; k < d; ++k)
        n *= static_cast<std::size_t>(M);
    p.centers.resize(static_cast<Eigen::Index>(n), d);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t rem = i;
        for (int k = d - 1; k >= 0; --k) {
            const auto bin = static_cast<int>(rem % M);
            rem /= M;
            p.centers(static_cast<Eigen::Index>(i), k) = -a + (2 * bin + 1) * p.h;
        }
    }
    return p;
}

//! Flat cube index of x, or outside_domain. Bins are half-open [lo, hi)
//! except the last one, which also takes x_k = a.
inline std::size_t cube_index(const VectorXd& x, const Partition& part)
{
    if (x.size() != part.d)
        throw ArgumentError("cube_index: dimension mismatch");
    std::size_t flat = 0;
    for (int k = 0; k < part.d; ++k) {
        const double v = x(k);
        if (!(v >= -part.a && v <= part.a))
            return outside_domain;
        auto bin = static_cast<long>(std::floor((v + part.a) / (2.0 * part.h)));
        if (bin < 0)
            bin = 0;
        if (bin > part.M - 1)
            bin = part.M - 1;
        flat = flat * static_cast<std::size_t>(part.M) + static_cast<std::size_t>(bin);
    }
    return flat;
}

//! Predetermined hidden layer for cubes of half-width h: everything except
//! the d_q free coefficients per cube.
struct Network {
    ActivationSpec activation;
    MultiIndexSet idx;
    double h = 1.0;
    VectorXd gamma;
    VectorXd beta;
    MatrixXd W;
    std::vector<VectorXd> alphas;
    std::vector<VectorXd> pis;
    RotationPair rotation;
    Eigen::DiagonalMatrix<double, Eigen::Dynamic> H;

    int d() const { return idx.d(); }
    int q() const { return idx.q(); }
    std::size_t dq() const { return idx.size(); }
    std::size_t neurons_per_cube() const { return pis.size(); }
};

inline void validate_config(const LnnConfig& cfg)
{
    if (!(cfg.a > 0.0))
        throw ArgumentError("config: a must be positive");
    if (cfg.d < 1)
        throw ArgumentError("config: d must be >= 1");
    if (cfg.q < 1)
        throw ArgumentError("config: q must be >= 1");
    if (!(cfg.s > 0.0 && cfg.s <= 1.0))
        throw ArgumentError("config: s must lie in (0, 1]");
    require_valid_u_sigma(cfg.activation_spec());
}

inline Network build_network(const LnnConfig& cfg, double h)
{
    validate_config(cfg);
    if (!(h > 0.0))
        throw ArgumentError("build_network: h must be positive");
    Network net;
    net.activation = cfg.activation_spec();
    net.idx = multi_indices(cfg.d, cfg.q);
    net.h = h;
    auto uc = univariate_coeffs(cfg.q, cfg.u_sigma, cfg.activation);
    net.gamma = std::move(uc.gamma);
    net.beta = std::move(uc.beta);
    if (cfg.weight_matrix) {
        validate_weight_matrix(*cfg.weight_matrix, cfg.d, net.idx.size());
        net.W = *cfg.weight_matrix;
    } else {
        net.W = default_weight_matrix(cfg.d, cfg.q);
    }
    net.alphas = direction_vectors(net.W, h);
    net.pis = neuron_affine_params(net.alphas, net.beta, cfg.u_sigma);
    net.rotation = rotation_matrix(expansion_matrix(net.alphas, cfg.q, net.idx));
    net.H = scaling_matrix(h, net.idx);
    return net;
}

//! x_tilde for a point in the cube centred at `center`:
//!   component j = sum_k gamma_k sigma([1, (x - center)'] pi_{j,k}).
inline VectorXd feature_vector(const VectorXd& x, const VectorXd& center,
                               const Network& net)
{
    const int d = net.d();
    const Eigen::Index q1 = net.beta.size();
    const std::size_t dq = net.dq();
    VectorXd f(dq);
    const bool squash = net.activation.kind == ActivationKind::squasher;
    for (std::size_t j = 0; j < dq; ++j) {
        double acc = 0.0;
        for (Eigen::Index k = 0; k < q1; ++k) {
            const VectorXd& pi = net.pis[j * q1 + k];
            double arg = pi(0);
            for (int m = 0; m < d; ++m)
                arg += pi(m + 1) * (x(m) - center(m));
            acc += net.gamma(k) *
                   (squash ? squasher(arg) : activation_derivative(net.activation.kind, arg, 0));
        }
        f(j) = acc;
    }
    return f;
}

//! Cube count per axis from the sample-size rule
//!   h1 = 2.5 T^{-1/(d + 2p - 0.5)},  M = round(a / h1) (halves up, at least 1).
inline std::pair<double, int> bandwidth_rule(std::size_t T, int d, double p, double a)
{
    if (T < 2)
        throw ArgumentError("bandwidth_rule: need T >= 2");
    if (!(a > 0.0) || d < 1 || !(p > 0.0))
        throw ArgumentError("bandwidth_rule: invalid a, d or p");
    const double h1 = 2.5 * std::pow(static_cast<double>(T), -1.0 / (d + 2.0 * p - 0.5));
    int M = static_cast<int>(std::floor(a / h1 + 0.5));
    if (M < 1)
        M = 1;
    return {a / M, M};
}

//! Number of cubes per axis implied by the configuration for a sample of
//! size T (T only matters for the rule).
inline int resolve_cube_count(const LnnConfig& cfg, std::size_t T)
{
    switch (cfg.bandwidth.mode) {
    case BandwidthChoice::Mode::rule:
        return bandwidth_rule(T, cfg.d, cfg.p(), cfg.a).second;
    case BandwidthChoice::Mode::explicit_h: {
        if (!(cfg.bandwidth.value > 0.0))
            throw ArgumentError("explicit bandwidth must be positive");
        const int M = static_cast<int>(std::floor(cfg.a / cfg.bandwidth.value + 0.5));
        return M < 1 ? 1 : M;
    }
    case BandwidthChoice::Mode::cubes: {
        const double v = cfg.bandwidth.value;
        if (!(v >= 1.0) || v != std::floor(v))
            throw ArgumentError("cube count must be a positive integer");
        return static_cast<int>(v);
    }
    }
    throw ArgumentError("unknown bandwidth mode");
}

//! The complete localized network: hidden layer plus cube partition.
struct Architecture {
    LnnConfig config;
    Network net;
    Partition partition;

    int d() const { return config.d; }
    std::size_t dq() const { return net.dq(); }
    std::size_t num_cubes() const { return partition.num_cubes(); }
    std::size_t neuron_count() const { return num_cubes() * net.neurons_per_cube(); }

    VectorXd center(std::size_t cube) const
    {
        return partition.centers.row(static_cast<Eigen::Index>(cube)).transpose();
    }
};

inline Architecture build_architecture(const LnnConfig& cfg, int M)
{
    Architecture arch;
    arch.config = cfg;
    arch.partition = build_partition(cfg.a, M, cfg.d);
    arch.net = build_network(cfg, arch.partition.h);
    return arch;
}

inline Architecture build_architecture_for_sample(const LnnConfig& cfg, std::size_t T)
{
    return build_architecture(cfg, resolve_cube_count(cfg, T));
}

} // namespace lnn
