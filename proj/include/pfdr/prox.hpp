#pragma once
/*=============================================================================
 * Closed-form proximity operators in diagonal metrics.
 *
 * For metric weights m_j > 0, the prox of g at x minimizes
 *
 *     sum_j 1/2 m_j (x_j - p_j)^2 + g(p).
 *
 * Scalar kernels come first; span overloads write into caller storage and are
 * what the solvers call in their inner loops.
 *===========================================================================*/

#include <algorithm>
#include <numeric>
#include <utility>

#include "common.hpp"

namespace pfdr {

/* the metric weights of a prox; strictly positive */
struct MetricWeights {
    Vector values;

    explicit MetricWeights(Vector v) : values(std::move(v))
    {
        for (double m : values) {
            detail::require(m > 0.0 && std::isfinite(m), ErrorCode::invalid_input,
                "metric weights must be strictly positive");
        }
    }
    std::span<const double> view() const noexcept { return values; }
};

/**  scalar kernels  **/

inline double soft_threshold(double x, double tau, double m)
{
    const double t = tau / m;
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

inline double prox_l1_positive(double x, double tau, double m)
{
    return std::max(x - tau / m, 0.0);
}

/* minimizer of 1/2 ma (a - p)^2 + 1/2 mb (b - q)^2 + lambda |p - q| */
inline std::pair<double, double> prox_pair_abs_diff(double a, double b, double lambda,
    double ma, double mb)
{
    const double d = a - b;
    if (lambda * (ma + mb) >= std::abs(d) * ma * mb) {
        const double mean = (ma * a + mb * b) / (ma + mb);
        return {mean, mean};
    }
    const double s = d > 0.0 ? 1.0 : -1.0;
    return {a - s * lambda / ma, b + s * lambda / mb};
}

/* minimizer over p of 1/2 m (p0 - p)^2 - r log(c + (1 - beta) p), the larger
 * root of m s^2 - m (c + (1 - beta) p0) s - r (1 - beta)^2 = 0 in the log
 * argument s = c + (1 - beta) p */
inline double prox_kl(double p0, double r, double c, double beta, double m)
{
    const double a = 1.0 - beta;
    if (a == 0.0) return p0;
    const double b = m * (c + a * p0);
    const double four_mr = 4.0 * m * r * a * a;
    const double sqrt_disc = std::sqrt(std::max(b * b + four_mr, 0.0));
    double s;
    if (b >= 0.0) {
        s = (b + sqrt_disc) / (2.0 * m);
    } else {
        // avoids cancellation in b + sqrt_disc
        const double denom = sqrt_disc - b;
        s = denom > 0.0 ? 2.0 * r * a * a / denom : 0.0;
    }
    return (s - c) / a;
}

/**  vector forms  **/

inline void soft_threshold(std::span<const double> x, std::span<const double> tau,
    std::span<const double> metric, std::span<double> out)
{
    for (std::size_t j = 0; j < x.size(); ++j) out[j] = soft_threshold(x[j], tau[j], metric[j]);
}

inline Vector soft_threshold(std::span<const double> x, std::span<const double> tau,
    const MetricWeights& metric)
{
    detail::require_same_size(x.size(), tau.size(), "soft_threshold");
    detail::require_same_size(x.size(), metric.values.size(), "soft_threshold");
    Vector out(x.size());
    soft_threshold(x, tau, metric.view(), out);
    return out;
}

inline void prox_l1_positive(std::span<const double> x, std::span<const double> tau,
    std::span<const double> metric, std::span<double> out)
{
    for (std::size_t j = 0; j < x.size(); ++j) {
        out[j] = prox_l1_positive(x[j], tau[j], metric[j]);
    }
}

inline Vector prox_l1_positive(std::span<const double> x, std::span<const double> tau,
    const MetricWeights& metric)
{
    detail::require_same_size(x.size(), tau.size(), "prox_l1_positive");
    detail::require_same_size(x.size(), metric.values.size(), "prox_l1_positive");
    Vector out(x.size());
    prox_l1_positive(x, tau, metric.view(), out);
    return out;
}

/* projection onto the simplex in the metric diag(m): q_k = max(p_k - mu/m_k, 0)
 * with mu found by an exact search over the sorted breakpoints m_k p_k */
inline void project_simplex(std::span<const double> p, std::span<const double> m,
    std::span<double> out)
{
    const std::size_t K = p.size();
    detail::require(K >= 1, ErrorCode::invalid_input, "project_simplex: empty input");
    if (K == 1) {
        out[0] = 1.0;
        return;
    }
    std::vector<std::size_t> order(K);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
        [&](std::size_t i, std::size_t j) { return m[i] * p[i] > m[j] * p[j]; });

    double sum_p = 0.0, sum_inv_m = 0.0, mu = 0.0;
    for (std::size_t t = 0; t < K; ++t) {
        const std::size_t k = order[t];
        sum_p += p[k];
        sum_inv_m += 1.0 / m[k];
        mu = (sum_p - 1.0) / sum_inv_m;
        const bool last = t + 1 == K;
        if (last || mu >= m[order[t + 1]] * p[order[t + 1]]) break;
    }
    for (std::size_t k = 0; k < K; ++k) out[k] = std::max(p[k] - mu / m[k], 0.0);
}

inline Vector project_simplex(std::span<const double> p, const MetricWeights& metric)
{
    detail::require_same_size(p.size(), metric.values.size(), "project_simplex");
    Vector out(p.size());
    project_simplex(p, metric.view(), out);
    return out;
}

/* p0, q and the metric hold the K coordinates of one distribution */
inline Vector prox_kl(std::span<const double> p0, std::span<const double> q, double beta,
    const MetricWeights& metric)
{
    detail::require(beta >= 0.0 && beta <= 1.0, ErrorCode::invalid_input,
        "prox_kl: beta must lie in (0, 1]");
    detail::require_same_size(p0.size(), q.size(), "prox_kl");
    detail::require_same_size(p0.size(), metric.values.size(), "prox_kl");
    const double c = beta / static_cast<double>(p0.size());
    Vector out(p0.size());
    for (std::size_t k = 0; k < p0.size(); ++k) {
        const double r = c + (1.0 - beta) * q[k];
        out[k] = prox_kl(p0[k], r, c, beta, metric.values[k]);
    }
    return out;
}

/* prox of the convex conjugate g* in the metric diag(1/sigma), through the
 * diagonal Moreau identity
 *     prox_{g*}(x) = x - sigma * prox_g^{sigma}(x / sigma);
 * prox_g is called as prox_g(point, metric) and returns a Vector */
template <class ProxG>
Vector prox_conjugate(ProxG&& prox_g, std::span<const double> x, std::span<const double> sigma)
{
    detail::require_same_size(x.size(), sigma.size(), "prox_conjugate");
    Vector scaled(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        detail::require(sigma[j] > 0.0, ErrorCode::invalid_input,
            "prox_conjugate: sigma must be positive");
        scaled[j] = x[j] / sigma[j];
    }
    const Vector inner = prox_g(std::span<const double>(scaled), std::span<const double>(sigma));
    detail::require_same_size(inner.size(), x.size(), "prox_conjugate inner prox");
    Vector out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) out[j] = x[j] - sigma[j] * inner[j];
    return out;
}

} // namespace pfdr
