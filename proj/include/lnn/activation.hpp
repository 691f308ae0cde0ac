#pragma once

#include "lnn/errors.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

namespace lnn {

using BigUInt = boost::multiprecision::uint256_t;

enum class ActivationKind { squasher, erf };

inline std::string_view to_string(ActivationKind k)
{
    return k == ActivationKind::squasher ? "squasher" : "erf";
}

inline ActivationKind activation_from_string(std::string_view s)
{
    if (s == "squasher" || s == "sigmoid" || s == "logistic")
        return ActivationKind::squasher;
    if (s == "erf" || s == "error-function")
        return ActivationKind::erf;
    throw ArgumentError("unknown activation '" + std::string(s) + "'");
}

//! Activation choice together with its expansion point and the highest
//! derivative order the network needs.
struct ActivationSpec {
    ActivationKind kind = ActivationKind::squasher;
    double u_sigma = 0.5;
    int q = 1;
};

inline constexpr int max_stirling_n = 64;

namespace detail {

// Table of S(n, k) for 0 <= k <= n <= 64, filled once by the recursion
// S(n+1, k) = k S(n, k) + S(n, k-1).
inline const std::vector<std::vector<BigUInt>>& stirling_table()
{
    static const auto table = [] {
        std::vector<std::vector<BigUInt>> s(max_stirling_n + 1);
        s[0] = {BigUInt(1)};
        for (int n = 1; n <= max_stirling_n; ++n) {
            s[n].assign(n + 1, BigUInt(0));
            for (int k = 1; k <= n; ++k) {
                BigUInt above = k < n ? s[n - 1][k] : BigUInt(0);
                s[n][k] = BigUInt(k) * above + s[n - 1][k - 1];
            }
        }
        return s;
    }();
    return table;
}

} // namespace detail

//! Stirling number of the second kind S(n, k), exact.
inline BigUInt stirling2(int n, int k)
{
    if (n < 0 || k < 0 || n > max_stirling_n)
        throw ArgumentError("stirling2: arguments out of range");
    if (k > n)
        return BigUInt(0);
    return detail::stirling_table()[n][k];
}

inline double squasher(double x)
{
    // evaluated on the side where exp() cannot overflow
    if (x >= 0.0)
        return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

//! Value of the activation (n = 0) or its n-th derivative at x.
//!
//! The squasher uses the Stirling-number polynomial in sigma(x); the error
//! function activation is the CDF-scaled version (1 + erf(x)) / 2, whose
//! derivatives are Hermite polynomials times a Gaussian bump.
inline double activation_derivative(ActivationKind kind, double x, int n)
{
    if (n < 0)
        throw ArgumentError("derivative order must be non-negative");
    if (kind == ActivationKind::squasher) {
        const double s = squasher(x);
        if (n == 0)
            return s;
        if (n + 1 > max_stirling_n)
            throw ArgumentError("derivative order too large");
        double sum = 0.0;
        double fact = 1.0; // (k-1)!
        double power = s;  // s^k
        for (int k = 1; k <= n + 1; ++k) {
            const double term =
                fact * stirling2(n + 1, k).convert_to<double>() * power;
            sum += (k % 2 == 1) ? term : -term;
            fact *= k;
            power *= s;
        }
        return sum;
    }
    if (n == 0)
        return 0.5 * (1.0 + std::erf(x));
    // physicists' Hermite H_{n-1}(x)
    double h_prev = 1.0, h = 2.0 * x;
    if (n - 1 == 0)
        h = 1.0;
    for (int j = 1; j < n - 1; ++j) {
        const double next = 2.0 * x * h - 2.0 * j * h_prev;
        h_prev = h;
        h = next;
    }
    const double sign = ((n - 1) % 2 == 0) ? 1.0 : -1.0;
    return sign * h * std::exp(-x * x) / std::sqrt(std::numbers::pi);
}

inline double sigmoid(const ActivationSpec& spec, double x)
{
    return activation_derivative(spec.kind, x, 0);
}

inline double sigmoid_derivative(double x, int n, const ActivationSpec& spec)
{
    if (n > spec.q + 1)
        throw ArgumentError("sigmoid_derivative: order exceeds q + 1");
    return activation_derivative(spec.kind, x, n);
}

//! Outcome of checking that sigma^(k)(u_sigma) != 0 for k = 1..q.
struct UsigmaReport {
    bool ok = true;
    std::vector<double> derivatives; // index k-1 holds sigma^(k)(u_sigma)
    std::vector<int> offending;      // orders whose derivative vanishes
};

inline constexpr double derivative_zero_tol = 1e-10;

inline UsigmaReport validate_u_sigma(const ActivationSpec& spec)
{
    UsigmaReport rep;
    for (int k = 1; k <= spec.q; ++k) {
        const double v = activation_derivative(spec.kind, spec.u_sigma, k);
        rep.derivatives.push_back(v);
        if (!(std::abs(v) > derivative_zero_tol)) {
            rep.ok = false;
            rep.offending.push_back(k);
        }
    }
    return rep;
}

inline void require_valid_u_sigma(const ActivationSpec& spec)
{
    const auto rep = validate_u_sigma(spec);
    if (rep.ok)
        return;
    std::string msg = "u_sigma = " + std::to_string(spec.u_sigma) +
                      " has vanishing derivative(s) of order";
    for (int k : rep.offending)
        msg += " " + std::to_string(k);
    throw ArgumentError(msg);
}

} // namespace lnn
