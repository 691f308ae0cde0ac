#pragma once

#include "lnn/architecture.hpp"
#include "lnn/bands.hpp"
#include "lnn/config.hpp"
#include "lnn/dataset.hpp"
#include "lnn/errors.hpp"
#include "lnn/parallel.hpp"
#include "lnn/regress.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

namespace lnn {

//! Known CDF of the latent error with its density and density derivative.
struct LinkSpec {
    LinkKind kind = LinkKind::probit;

    double cdf(double s) const
    {
        if (kind == LinkKind::probit)
            return 0.5 * std::erfc(-s / std::numbers::sqrt2);
        return s >= 0.0 ? 1.0 / (1.0 + std::exp(-s)) : std::exp(s) / (1.0 + std::exp(s));
    }

    double pdf(double s) const
    {
        if (kind == LinkKind::probit)
            return std::exp(-0.5 * s * s) / std::sqrt(2.0 * std::numbers::pi);
        const double e = std::exp(-std::abs(s));
        return e / ((1.0 + e) * (1.0 + e));
    }

    double pdf_derivative(double s) const
    {
        if (kind == LinkKind::probit)
            return -s * pdf(s);
        return pdf(s) * (1.0 - 2.0 * cdf(s));
    }
};

inline constexpr double link_check_tol = 1e-6;

//! Builds a link and checks pdf = cdf' and pdf' = pdf'' numerically on a probe grid.
inline LinkSpec make_link(LinkKind kind)
{
    LinkSpec link{kind};
    const double step = 1e-5;
    for (double s = -6.0; s <= 6.0; s += 0.25) {
        const double dc = (link.cdf(s + step) - link.cdf(s - step)) / (2.0 * step);
        const double dp = (link.pdf(s + step) - link.pdf(s - step)) / (2.0 * step);
        if (std::abs(dc - link.pdf(s)) > link_check_tol ||
            std::abs(dp - link.pdf_derivative(s)) > link_check_tol)
            throw NumericalError("link " + std::string(to_string(kind)) +
                                 ": density does not match the CDF derivative");
        if (link.cdf(s + 0.25) <= link.cdf(s))
            throw NumericalError("link CDF is not increasing");
    }
    return link;
}

inline constexpr double prob_clamp = 1e-12;

namespace detail {

inline double clamp_prob(double p)
{
    return std::clamp(p, prob_clamp, 1.0 - prob_clamp);
}

//! d log l_t / ds and d^2 log l_t / ds^2 at index value s.
struct IndexDerivs {
    double loglik;
    double d1;
    double d2;
    bool clamped;
};

inline IndexDerivs index_derivs(double y, double s, const LinkSpec& link)
{
    const double raw = link.cdf(s);
    const double P = clamp_prob(raw);
    const double phi = link.pdf(s);
    const double dphi = link.pdf_derivative(s);
    const double v = P * (1.0 - P);
    const double r = y - P;
    IndexDerivs out;
    out.loglik = y * std::log(P) + (1.0 - y) * std::log(1.0 - P);
    out.d1 = r * phi / v;
    out.d2 = -phi * phi / v + r * dphi / v - r * phi * phi * (1.0 - 2.0 * P) / (v * v);
    out.clamped = raw != P;
    return out;
}

inline void require_binary(const VectorXd& y)
{
    for (Eigen::Index t = 0; t < y.size(); ++t)
        if (y(t) != 0.0 && y(t) != 1.0)
            throw DataError("binary response must be 0 or 1 (row " + std::to_string(t + 1) + ")");
}

} // namespace detail

//! Cube-local log-likelihood for feature rows F and labels y.
inline double cube_log_likelihood(const VectorXd& theta, const MatrixXd& F, const VectorXd& y,
                                  const LinkSpec& link)
{
    const VectorXd s = F * theta;
    double ll = 0.0;
    for (Eigen::Index t = 0; t < s.size(); ++t)
        ll += detail::index_derivs(y(t), s(t), link).loglik;
    return ll;
}

//! Per-observation score terms, one row per observation.
inline MatrixXd cube_score_terms(const VectorXd& theta, const MatrixXd& F, const VectorXd& y,
                                 const LinkSpec& link)
{
    const VectorXd s = F * theta;
    MatrixXd S(F.rows(), F.cols());
    for (Eigen::Index t = 0; t < s.size(); ++t)
        S.row(t) = detail::index_derivs(y(t), s(t), link).d1 * F.row(t);
    return S;
}

inline VectorXd cube_score(const VectorXd& theta, const MatrixXd& F, const VectorXd& y,
                           const LinkSpec& link)
{
    return cube_score_terms(theta, F, y, link).colwise().sum().transpose();
}

inline MatrixXd cube_hessian(const VectorXd& theta, const MatrixXd& F, const VectorXd& y,
                             const LinkSpec& link)
{
    const VectorXd s = F * theta;
    VectorXd w(s.size());
    for (Eigen::Index t = 0; t < s.size(); ++t)
        w(t) = detail::index_derivs(y(t), s(t), link).d2;
    MatrixXd Hs = F.transpose() * w.asDiagonal() * F;
    return 0.5 * (Hs + Hs.transpose());
}

//! Total log-likelihood over in-domain observations.
inline double log_likelihood(const MatrixXd& thetas, const Dataset& data, const Architecture& arch,
                             const LinkSpec& link)
{
    detail::require_binary(data.y);
    const RegressionDesign des = build_design(data.X, arch);
    double ll = 0.0;
    for (std::size_t c = 0; c < des.cubes.size(); ++c) {
        const CubeDesign& cd = des.cubes[c];
        ll += cube_log_likelihood(thetas.row(static_cast<Eigen::Index>(c)).transpose(), cd.F,
                                  gather(data.y, cd.rows), link);
    }
    return ll;
}

namespace detail {

inline CubeDesign single_cube(const Dataset& data, std::size_t cube, const Architecture& arch)
{
    if (cube >= arch.num_cubes())
        throw ArgumentError("cube index out of range");
    CubeDesign cd;
    for (std::size_t t = 0; t < data.T(); ++t)
        if (cube_index(data.x(t), arch.partition) == cube)
            cd.rows.push_back(t);
    cd.F = feature_rows(data.X, cd.rows, arch.center(cube), arch.net);
    return cd;
}

} // namespace detail

inline VectorXd score(const VectorXd& theta, const Dataset& data, std::size_t cube,
                      const Architecture& arch, const LinkSpec& link)
{
    const CubeDesign cd = detail::single_cube(data, cube, arch);
    return cube_score(theta, cd.F, gather(data.y, cd.rows), link);
}

inline MatrixXd hessian(const VectorXd& theta, const Dataset& data, std::size_t cube,
                        const Architecture& arch, const LinkSpec& link)
{
    const CubeDesign cd = detail::single_cube(data, cube, arch);
    return cube_hessian(theta, cd.F, gather(data.y, cd.rows), link);
}

enum class FitStatus { converged, max_iter, separated, empty };

inline std::string_view to_string(FitStatus s)
{
    switch (s) {
    case FitStatus::converged: return "converged";
    case FitStatus::max_iter: return "max-iter";
    case FitStatus::separated: return "separated";
    case FitStatus::empty: return "empty";
    }
    return "empty";
}

inline FitStatus fit_status_from_string(std::string_view s)
{
    if (s == "converged") return FitStatus::converged;
    if (s == "max-iter") return FitStatus::max_iter;
    if (s == "separated") return FitStatus::separated;
    if (s == "empty") return FitStatus::empty;
    throw ArgumentError("unknown fit status '" + std::string(s) + "'");
}

struct ConvergenceRecord {
    FitStatus status = FitStatus::empty;
    int iterations = 0;
    double grad_norm = 0.0;      // ||score||_2 / n_i at the final theta
    std::size_t clamped = 0;     // observations whose CDF value hit the clamp
    std::vector<double> loglik;  // accepted iterates, warm start first
};

struct NewtonOptions {
    int max_iter = 100;
    int max_halvings = 30;
    double grad_tol = 1e-8;
    double step_tol = 1e-12;
    double theta_cap = 1e3;
    unsigned threads = 1;
};

namespace detail {

inline void cap_norm(VectorXd& theta, double cap)
{
    const double n = theta.norm();
    if (n > cap)
        theta *= cap / n;
}

//! Solves (-Hs + mu I) delta = g, raising mu until the shifted matrix is
//! positive definite.
inline VectorXd newton_direction(const MatrixXd& Hs, const VectorXd& g)
{
    const MatrixXd A = -Hs;
    Eigen::LLT<MatrixXd> llt(A);
    if (llt.info() == Eigen::Success)
        return llt.solve(g);
    const double scale = std::max(1.0, A.trace() / static_cast<double>(A.rows()));
    double mu = 1e-6 * scale;
    const MatrixXd I = MatrixXd::Identity(A.rows(), A.cols());
    for (int k = 0; k < 40; ++k, mu *= 10.0) {
        llt.compute(A + mu * I);
        if (llt.info() == Eigen::Success)
            return llt.solve(g);
    }
    throw NumericalError("Newton step: shifted Hessian never became positive definite");
}

} // namespace detail

//! Damped Newton ascent on one cube's likelihood from a warm start.
inline ConvergenceRecord newton_cube(VectorXd& theta, const MatrixXd& F, const VectorXd& y,
                                     const LinkSpec& link, const NewtonOptions& opt)
{
    ConvergenceRecord rec;
    const auto n = static_cast<double>(F.rows());
    if (F.rows() == 0) {
        theta.setZero();
        rec.status = FitStatus::empty;
        return rec;
    }
    const double ones = y.sum();
    const bool single_label = ones == 0.0 || ones == n;
    detail::cap_norm(theta, opt.theta_cap);

    double ll = cube_log_likelihood(theta, F, y, link);
    rec.loglik.push_back(ll);
    rec.status = FitStatus::max_iter;
    bool hit_cap = false;
    for (int it = 0; it < opt.max_iter; ++it) {
        const VectorXd g = cube_score(theta, F, y, link);
        rec.grad_norm = g.norm() / n;
        if (rec.grad_norm < opt.grad_tol) {
            rec.status = FitStatus::converged;
            break;
        }
        const VectorXd dir = detail::newton_direction(cube_hessian(theta, F, y, link), g);
        double t = 1.0;
        VectorXd cand = theta + dir;
        detail::cap_norm(cand, opt.theta_cap);
        double ll_new = cube_log_likelihood(cand, F, y, link);
        int halvings = 0;
        while (!(ll_new >= ll) && halvings < opt.max_halvings) {
            t *= 0.5;
            cand = theta + t * dir;
            detail::cap_norm(cand, opt.theta_cap);
            ll_new = cube_log_likelihood(cand, F, y, link);
            ++halvings;
        }
        rec.iterations = it + 1;
        if (!(ll_new >= ll))
            break; // no ascent along the damped direction
        const double step = (cand - theta).norm();
        theta = cand;
        ll = ll_new;
        rec.loglik.push_back(ll);
        hit_cap = theta.norm() >= opt.theta_cap * (1.0 - 1e-12);
        if (step < opt.step_tol || hit_cap)
            break;
    }
    const VectorXd g = cube_score(theta, F, y, link);
    rec.grad_norm = g.norm() / n;
    if (rec.grad_norm < opt.grad_tol)
        rec.status = FitStatus::converged;
    if (single_label || hit_cap)
        rec.status = FitStatus::separated;
    const VectorXd s = F * theta;
    for (Eigen::Index k = 0; k < s.size(); ++k) {
        const double p = link.cdf(s(k));
        rec.clamped += (p < prob_clamp || p > 1.0 - prob_clamp) ? 1 : 0;
    }
    return rec;
}

//! Fitted model (1.2): per-cube index coefficients with convergence records.
struct FittedBinary {
    Architecture arch;
    LinkSpec link;
    MatrixXd thetas;
    std::vector<std::size_t> counts;
    std::vector<bool> flagged; // any status other than converged
    std::vector<ConvergenceRecord> records;
    std::shared_ptr<const RegressionDesign> design;

    VectorXd theta(std::size_t cube) const
    {
        return thetas.row(static_cast<Eigen::Index>(cube)).transpose();
    }
    bool all_converged() const
    {
        for (std::size_t c = 0; c < records.size(); ++c)
            if (counts[c] > 0 && records[c].status != FitStatus::converged)
                return false;
        return true;
    }
};

//! Per-cube maximum likelihood: OLS on the raw labels, then damped Newton.
inline FittedBinary fit_binary(const Dataset& data, const Architecture& arch, LinkKind link_kind,
                               const NewtonOptions& opt = {})
{
    if (data.d() != arch.d())
        throw ArgumentError("fit_binary: data dimension does not match the architecture");
    detail::require_binary(data.y);
    FittedBinary m;
    m.arch = arch;
    m.link = make_link(link_kind);
    auto des = std::make_shared<const RegressionDesign>(build_design(data.X, arch, opt.threads));
    if (des->n_inside == 0)
        throw DataError("fit_binary: no observations inside [-a, a]^d");
    bool mixed = false;
    for (const CubeDesign& cd : des->cubes) {
        const double ones = gather(data.y, cd.rows).sum();
        mixed = mixed || (ones > 0.0 && ones < static_cast<double>(cd.count()));
    }
    if (!mixed)
        throw DataError("fit_binary: no cube contains both outcomes");

    const FittedRegression warm = fit_regression(data.y, arch, des, opt.threads);
    const std::size_t nc = arch.num_cubes();
    m.thetas = warm.thetas;
    m.counts = warm.counts;
    m.records.resize(nc);
    parallel_for(nc, opt.threads, [&](std::size_t c) {
        const CubeDesign& cd = des->cubes[c];
        VectorXd theta = warm.theta(c);
        m.records[c] = newton_cube(theta, cd.F, gather(data.y, cd.rows), m.link, opt);
        m.thetas.row(static_cast<Eigen::Index>(c)) = theta.transpose();
    });
    m.flagged.resize(nc);
    for (std::size_t c = 0; c < nc; ++c)
        m.flagged[c] = m.records[c].status != FitStatus::converged;
    m.design = std::move(des);
    return m;
}

//! Index value ghat(x) = theta_i' x_tilde(x).
inline Prediction predict_index(const FittedBinary& m, const VectorXd& x)
{
    Prediction p = predict_index(m.arch, m.thetas, m.flagged, x);
    const std::size_t c = cube_index(x, m.arch.partition);
    if (c != outside_domain && m.counts[c] == 0)
        p.value = std::numeric_limits<double>::quiet_NaN();
    return p;
}

inline Prediction predict_prob(const FittedBinary& m, const VectorXd& x)
{
    Prediction p = predict_index(m, x);
    if (!std::isnan(p.value))
        p.value = m.link.cdf(p.value);
    return p;
}

//! Score wild bootstrap: theta*_i = theta_i + Hs_i^{-1} sum_t s_t eta_t in closed form.
inline std::vector<BootstrapBand> score_bootstrap(const FittedBinary& m, const Dataset& data,
                                                  const BootstrapOptions& opt,
                                                  const MatrixXd& eval_points)
{
    validate(opt);
    detail::require_binary(data.y);
    std::shared_ptr<const RegressionDesign> des = m.design;
    if (!des || des->cube_of.size() != data.T())
        des = std::make_shared<const RegressionDesign>(build_design(data.X, m.arch, opt.threads));

    const std::size_t nc = m.arch.num_cubes();
    std::vector<MatrixXd> K(nc); // Hs^{-1} S', d_q x n_i
    std::vector<bool> usable(nc, false);
    for (std::size_t c = 0; c < nc; ++c) {
        if (m.flagged[c])
            continue;
        const CubeDesign& cd = des->cubes[c];
        const VectorXd y = gather(data.y, cd.rows);
        const MatrixXd Hs = cube_hessian(m.theta(c), cd.F, y, m.link);
        Eigen::FullPivLU<MatrixXd> lu(Hs);
        if (!lu.isInvertible())
            continue;
        K[c] = lu.solve(cube_score_terms(m.theta(c), cd.F, y, m.link).transpose());
        usable[c] = true;
    }

    const auto P = static_cast<std::size_t>(eval_points.rows());
    std::vector<Prediction> ghat(P);
    std::vector<std::size_t> cube(P, outside_domain);
    MatrixXd feats(static_cast<Eigen::Index>(m.arch.dq()), static_cast<Eigen::Index>(P));
    for (std::size_t e = 0; e < P; ++e) {
        const VectorXd x = eval_points.row(static_cast<Eigen::Index>(e)).transpose();
        ghat[e] = predict_index(m, x);
        if (!ghat[e].ok())
            continue;
        cube[e] = cube_index(x, m.arch.partition);
        if (!usable[cube[e]]) {
            ghat[e].status = PointStatus::flagged;
            continue;
        }
        feats.col(static_cast<Eigen::Index>(e)) = feature_vector(x, m.arch.center(cube[e]), m.arch.net);
    }

    MatrixXd deltas = MatrixXd::Zero(static_cast<Eigen::Index>(opt.R), static_cast<Eigen::Index>(P));
    parallel_for(opt.R, opt.threads, [&](std::size_t r) {
        const VectorXd eta = draw_multipliers(opt, r, data.T());
        std::vector<VectorXd> dtheta(nc);
        for (std::size_t c = 0; c < nc; ++c)
            if (usable[c])
                dtheta[c] = K[c] * gather(eta, des->cubes[c].rows);
        for (std::size_t e = 0; e < P; ++e)
            if (ghat[e].ok())
                deltas(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(e)) =
                    feats.col(static_cast<Eigen::Index>(e)).dot(dtheta[cube[e]]);
    });
    return bands_from_deltas(eval_points, ghat, deltas, opt);
}

} // namespace lnn
