#pragma once
/*=============================================================================
 * Smooth terms f: gradients and diagonal curvature bounds L with
 *     <grad f(x) - grad f(y) | x - y> >= ||grad f(x) - grad f(y)||^2_{L^-1}
 *
 * - least squares 1/2 ||y - Phi x||^2, with Jacobi diagonal and power method
 * - smoothed Kullback-Leibler data term over per-vertex distributions
 *===========================================================================*/

#include <Eigen/Dense>
#include <functional>
#include <random>

#include "common.hpp"

namespace pfdr {

/* dense N-by-V real matrix, row-major in storage order of the files */
class DenseOperator {
public:
    DenseOperator() = default;
    explicit DenseOperator(Eigen::MatrixXd m) : m_(std::move(m))
    {
        detail::require(m_.allFinite(), ErrorCode::invalid_input, "matrix has non-finite entries");
    }
    DenseOperator(index_t rows, index_t cols, std::span<const double> row_major)
        : m_(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols))
    {
        detail::require_same_size(row_major.size(), rows * cols, "dense operator entries");
        for (index_t i = 0; i < rows; ++i) {
            for (index_t j = 0; j < cols; ++j) m_(Eigen::Index(i), Eigen::Index(j)) = row_major[i * cols + j];
        }
        detail::require(m_.allFinite(), ErrorCode::invalid_input, "matrix has non-finite entries");
    }

    static DenseOperator identity(index_t n)
    {
        return DenseOperator(Eigen::MatrixXd::Identity(Eigen::Index(n), Eigen::Index(n)));
    }

    index_t rows() const noexcept { return index_t(m_.rows()); }
    index_t cols() const noexcept { return index_t(m_.cols()); }
    double operator()(index_t i, index_t j) const { return m_(Eigen::Index(i), Eigen::Index(j)); }
    const Eigen::MatrixXd& matrix() const noexcept { return m_; }

    void apply(std::span<const double> x, std::span<double> out) const
    {
        Eigen::Map<const Eigen::VectorXd> xm(x.data(), Eigen::Index(x.size()));
        Eigen::Map<Eigen::VectorXd> om(out.data(), Eigen::Index(out.size()));
        om.noalias() = m_ * xm;
    }

    void apply_adjoint(std::span<const double> y, std::span<double> out) const
    {
        Eigen::Map<const Eigen::VectorXd> ym(y.data(), Eigen::Index(y.size()));
        Eigen::Map<Eigen::VectorXd> om(out.data(), Eigen::Index(out.size()));
        om.noalias() = m_.transpose() * ym;
    }

    Vector apply(std::span<const double> x) const
    {
        detail::require_same_size(x.size(), cols(), "operator application");
        Vector out(rows());
        apply(x, out);
        return out;
    }

    Vector apply_adjoint(std::span<const double> y) const
    {
        detail::require_same_size(y.size(), rows(), "adjoint application");
        Vector out(cols());
        apply_adjoint(y, out);
        return out;
    }

private:
    Eigen::MatrixXd m_;
};

/* the forward operator B = grad f together with its curvature bound L */
struct SmoothTerm {
    /* writes grad f(x) into the output; throws domain_violation outside dom f */
    std::function<void(std::span<const double>, std::span<double>)> gradient;
    DiagonalOperator curvature;
    /* L = l Id with l an upper bound of the Lipschitz constant; false when L
     * holds per-coordinate values */
    bool scalar_bound = false;
    /* L not proven to satisfy the cocoercivity inequality (Jacobi mode) */
    bool heuristic = false;
};

/**  least squares  **/

inline Vector grad_least_squares(std::span<const double> x, const DenseOperator& phi,
    std::span<const double> y)
{
    detail::require_same_size(x.size(), phi.cols(), "grad_least_squares x");
    detail::require_same_size(y.size(), phi.rows(), "grad_least_squares y");
    Vector r = phi.apply(x);
    for (index_t i = 0; i < r.size(); ++i) r[i] -= y[i];
    return phi.apply_adjoint(r);
}

/* diag(Phi^* Phi), the squared column norms */
inline DiagonalOperator jacobi_diag(const DenseOperator& phi)
{
    Vector d(phi.cols());
    for (index_t j = 0; j < phi.cols(); ++j) d[j] = phi.matrix().col(Eigen::Index(j)).squaredNorm();
    return DiagonalOperator(std::move(d));
}

inline constexpr double jacobi_floor_ratio = 1e-12;

/* entries below 1e-12 of the largest are raised to that floor */
inline DiagonalOperator floor_diagonal(DiagonalOperator d, double ratio = jacobi_floor_ratio)
{
    double floor = ratio * d.max();
    if (!(floor > 0.0)) floor = ratio;
    for (double& v : d.values) v = std::max(v, floor);
    return d;
}

struct PowerEstimate {
    double value = 0.0;       // raw estimate times the safety factor
    double raw = 0.0;         // last Rayleigh quotient
    index_t iterations = 0;
    bool converged = false;   // false: max_iters exhausted, best estimate returned
};

/* power iteration on a symmetric positive semidefinite operator given by its
 * action; stops when the Rayleigh quotient changes relatively by < tol */
inline PowerEstimate power_iteration(index_t dim,
    const std::function<void(std::span<const double>, std::span<double>)>& apply_gram,
    double tol, index_t max_iters, double safety = 1.0, std::uint64_t seed = 0)
{
    detail::require(tol > 0.0, ErrorCode::invalid_input, "power iteration: tol must be positive");
    PowerEstimate est;
    if (dim == 0) {
        est.converged = true;
        return est;
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.5, 1.5);
    Vector v(dim), w(dim);
    for (double& c : v) c = unif(rng);
    double nv = detail::norm2(v);
    for (double& c : v) c /= nv;

    double previous = 0.0;
    for (index_t it = 1; it <= max_iters; ++it) {
        apply_gram(v, w);
        const double rq = detail::dot(v, w);
        est.raw = std::max(est.raw, rq);
        est.iterations = it;
        const double nw = detail::norm2(w);
        if (!(nw > 0.0)) {
            est.raw = 0.0;
            est.converged = true;
            break;
        }
        if (it > 1 && std::abs(rq - previous) < tol * std::abs(rq)) {
            est.converged = true;
            break;
        }
        previous = rq;
        for (index_t j = 0; j < dim; ++j) v[j] = w[j] / nw;
    }
    est.value = safety * est.raw;
    return est;
}

inline constexpr double power_method_safety = 1.01;

/* estimate of ||Phi||^2 = ||Phi^* Phi||, inflated by the safety factor so that
 * it bounds the Lipschitz constant from above */
inline PowerEstimate power_method_sqnorm(const DenseOperator& phi, double tol = 1e-9,
    index_t max_iters = 10000)
{
    Vector tmp(phi.rows());
    auto gram = [&](std::span<const double> x, std::span<double> out) {
        phi.apply(x, tmp);
        phi.apply_adjoint(tmp, out);
    };
    return power_iteration(phi.cols(), gram, tol, max_iters, power_method_safety, 0);
}

/**  smoothed Kullback-Leibler  **/

/* log arguments beta/K + (1 - beta) p must remain positive */
inline void grad_smoothed_kl(std::span<const double> p, std::span<const double> q, double beta,
    index_t K, std::span<double> grad)
{
    const double c = beta / static_cast<double>(K);
    const double a = 1.0 - beta;
    for (index_t j = 0; j < p.size(); ++j) {
        const double s = c + a * p[j];
        if (!(s > 0.0)) {
            throw Error(ErrorCode::domain_violation,
                "smoothed KL gradient: nonpositive log argument at coordinate " +
                    std::to_string(j));
        }
        grad[j] = -a * (c + a * q[j]) / s;
    }
}

inline Vector grad_smoothed_kl(std::span<const double> p, std::span<const double> q, double beta,
    index_t K)
{
    detail::require(beta >= 0.0 && beta <= 1.0, ErrorCode::invalid_input,
        "smoothed KL: beta must lie in [0, 1]");
    detail::require_same_size(p.size(), q.size(), "grad_smoothed_kl");
    detail::require(K >= 1 && p.size() % K == 0, ErrorCode::invalid_input,
        "grad_smoothed_kl: size not a multiple of K");
    Vector g(p.size());
    grad_smoothed_kl(p, q, beta, K, g);
    return g;
}

inline DiagonalOperator kl_curvature_diag(std::span<const double> q, double beta, index_t K)
{
    detail::require(beta > 0.0 && beta < 1.0, ErrorCode::invalid_input,
        "KL curvature: beta must lie in (0, 1)");
    detail::require(K >= 1 && q.size() % K == 0, ErrorCode::invalid_input,
        "KL curvature: size not a multiple of K");
    const double c = beta / static_cast<double>(K);
    const double a = 1.0 - beta;
    Vector l(q.size());
    for (index_t j = 0; j < q.size(); ++j) l[j] = a * a * (c + a * q[j]) / (c * c);
    return DiagonalOperator(std::move(l));
}

} // namespace pfdr
