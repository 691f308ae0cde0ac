#pragma once

#include "lnn/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <vector>

namespace lnn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

using MultiIndex = std::vector<int>;

//! Exponent tuples of the monomials spanning polynomials of total degree
//! <= q in d variables, in graded lexicographic order: ascending total
//! degree, and within a degree x1 before x2 before ... (so for d = 2,
//! q = 1 the order is 1, x1, x2).
class MultiIndexSet {
public:
    MultiIndexSet() = default;
    MultiIndexSet(int d, int q) : d_(d), q_(q)
    {
        for (int deg = 0; deg <= q; ++deg) {
            MultiIndex cur(d, 0);
            fill(cur, 0, deg);
        }
        for (std::size_t j = 0; j < indices_.size(); ++j)
            lookup_.emplace(indices_[j], j);
    }

    int d() const { return d_; }
    int q() const { return q_; }
    std::size_t size() const { return indices_.size(); }
    const MultiIndex& operator[](std::size_t j) const { return indices_[j]; }
    const std::vector<MultiIndex>& indices() const { return indices_; }

    static int degree(const MultiIndex& n)
    {
        int s = 0;
        for (int v : n)
            s += v;
        return s;
    }

    //! Position of a tuple, or size() when it is not part of the set.
    std::size_t position(const MultiIndex& n) const
    {
        auto it = lookup_.find(n);
        return it == lookup_.end() ? size() : it->second;
    }

private:
    void fill(MultiIndex& cur, int k, int remaining)
    {
        if (k == d_ - 1) {
            cur[k] = remaining;
            indices_.push_back(cur);
            return;
        }
        for (int v = remaining; v >= 0; --v) {
            cur[k] = v;
            fill(cur, k + 1, remaining - v);
        }
        cur[k] = 0;
    }

    int d_ = 0;
    int q_ = 0;
    std::vector<MultiIndex> indices_;
    std::map<MultiIndex, std::size_t> lookup_;
};

inline double binomial(int n, int k)
{
    if (k < 0 || k > n)
        return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i)
        r = r * (n - k + i) / i;
    return std::round(r);
}

inline MultiIndexSet multi_indices(int d, int q)
{
    if (d < 1 || d > 16)
        throw ArgumentError("multi_indices: d must lie in [1, 16]");
    if (q < 0 || q > 12)
        throw ArgumentError("multi_indices: q must lie in [0, 12]");
    return MultiIndexSet(d, q);
}

//! Centred monomials m(x | x0).
inline VectorXd eval_monomials(const VectorXd& x, const VectorXd& x0,
                               const MultiIndexSet& idx)
{
    const int d = idx.d();
    if (x.size() != d || x0.size() != d)
        throw ArgumentError("eval_monomials: dimension mismatch");
    const int q = idx.q();
    MatrixXd pw(d, q + 1);
    for (int k = 0; k < d; ++k) {
        const double z = x(k) - x0(k);
        pw(k, 0) = 1.0;
        for (int e = 1; e <= q; ++e)
            pw(k, e) = pw(k, e - 1) * z;
    }
    VectorXd m(idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) {
        double v = 1.0;
        for (int k = 0; k < d; ++k)
            v *= pw(k, idx[j][k]);
        m(j) = v;
    }
    return m;
}

//! H = diag(h^{-|n_j|}).
inline Eigen::DiagonalMatrix<double, Eigen::Dynamic>
scaling_matrix(double h, const MultiIndexSet& idx)
{
    if (!(h > 0.0))
        throw ArgumentError("scaling_matrix: h must be positive");
    VectorXd diag(idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j)
        diag(j) = std::pow(h, -MultiIndexSet::degree(idx[j]));
    return Eigen::DiagonalMatrix<double, Eigen::Dynamic>(diag);
}

//! Row j holds the coefficients, over the monomial ordering of idx, of the
//! multinomial expansion of [(1, z') alpha_j]^q. Consequently
//! A(x | x0) = B m(x | x0) with A_j = [(1, (x - x0)') alpha_j]^q.
inline MatrixXd expansion_matrix(const std::vector<VectorXd>& alphas, int q,
                                 const MultiIndexSet& idx)
{
    const std::size_t dq = idx.size();
    const int d = idx.d();
    if (alphas.size() != dq)
        throw ArgumentError("expansion_matrix: need exactly d_q direction vectors");
    std::vector<double> fact(q + 1, 1.0);
    for (int i = 1; i <= q; ++i)
        fact[i] = fact[i - 1] * i;

    MatrixXd B(dq, dq);
    for (std::size_t j = 0; j < dq; ++j) {
        const VectorXd& a = alphas[j];
        if (a.size() != d + 1)
            throw ArgumentError("expansion_matrix: direction vectors need d + 1 entries");
        for (std::size_t c = 0; c < dq; ++c) {
            const MultiIndex& n = idx[c];
            const int r0 = q - MultiIndexSet::degree(n);
            double coef = fact[q] / fact[r0];
            double v = std::pow(a(0), r0);
            for (int k = 0; k < d; ++k) {
                coef /= fact[n[k]];
                v *= std::pow(a(k + 1), n[k]);
            }
            B(j, c) = coef * v;
        }
    }
    return B;
}

//! Expansion matrix B and its inverse D (so that m = D A).
struct RotationPair {
    MatrixXd B;
    MatrixXd D;
    double cond = 0.0;
};

inline constexpr double max_basis_condition = 1e12;

inline RotationPair rotation_matrix(const MatrixXd& B)
{
    if (B.rows() != B.cols())
        throw ArgumentError("rotation_matrix: B must be square");
    Eigen::JacobiSVD<MatrixXd> svd(B);
    const auto& sv = svd.singularValues();
    const double smax = sv.size() ? sv(0) : 0.0;
    const double smin = sv.size() ? sv(sv.size() - 1) : 0.0;
    const double cond =
        smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
    if (!(cond <= max_basis_condition))
        throw NumericalError("rotation_matrix: singular basis (condition " +
                             std::to_string(cond) + ")");
    RotationPair rp;
    rp.B = B;
    rp.D = B.colPivHouseholderQr().solve(MatrixXd::Identity(B.rows(), B.cols()));
    rp.cond = cond;
    const double err =
        (rp.D * B - MatrixXd::Identity(B.rows(), B.cols())).cwiseAbs().maxCoeff();
    if (!(err < 1e-8))
        throw NumericalError("rotation_matrix: inverse check failed");
    return rp;
}

//! Integral of m(x | 0) m(x | 0)' over [-1, 1]^d, in closed form.
inline MatrixXd moment_matrix(const MultiIndexSet& idx)
{
    const std::size_t dq = idx.size();
    MatrixXd S(dq, dq);
    for (std::size_t j = 0; j < dq; ++j) {
        for (std::size_t k = 0; k < dq; ++k) {
            double v = 1.0;
            for (int m = 0; m < idx.d(); ++m) {
                const int e = idx[j][m] + idx[k][m];
                v *= (e % 2 == 0) ? 2.0 / (e + 1) : 0.0;
            }
            S(j, k) = v;
        }
    }
    return S;
}

} // namespace lnn
