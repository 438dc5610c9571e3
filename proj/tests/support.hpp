#pragma once
// Seeded generators shared by the property tests.

#include <random>

#include "pfdr/pfdr.hpp"

namespace pfdr::testing {

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    index_t integer(index_t lo, index_t hi) { return std::uniform_int_distribution<index_t>(lo, hi)(rng_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }

    Vector vec(index_t n, double lo, double hi)
    {
        Vector v(n);
        for (double& c : v) c = uniform(lo, hi);
        return v;
    }

    /* V rows of K entries on the simplex, all entries positive */
    Vector simplex_rows(index_t V, index_t K)
    {
        Vector q(V * K);
        for (index_t v = 0; v < V; ++v) {
            double s = 0.0;
            for (index_t k = 0; k < K; ++k) s += (q[v * K + k] = uniform(0.05, 1.0));
            for (index_t k = 0; k < K; ++k) q[v * K + k] /= s;
        }
        return q;
    }

    DenseOperator matrix(index_t rows, index_t cols)
    {
        Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = uniform(-1, 1);
        }
        return DenseOperator(std::move(m));
    }

    /* connected random graph: a spanning chain plus extra random edges */
    Graph graph(index_t n, index_t extra, double wlo, double whi)
    {
        std::vector<std::pair<index_t, index_t>> pairs;
        for (index_t v = 0; v + 1 < n; ++v) pairs.emplace_back(v, v + 1);
        for (index_t t = 0; t < extra && n > 2; ++t) {
            const index_t u = integer(0, n - 1), v = integer(0, n - 1);
            if (u == v) continue;
            const auto e = std::make_pair(std::min(u, v), std::max(u, v));
            if (std::find(pairs.begin(), pairs.end(), e) == pairs.end()) pairs.push_back(e);
        }
        Vector w(pairs.size());
        for (double& x : w) x = uniform(wlo, whi);
        return make_graph(n, std::move(pairs), std::move(w));
    }

private:
    std::mt19937_64 rng_;
};

inline double max_abs_diff(std::span<const double> a, std::span<const double> b)
{
    double d = 0.0;
    for (index_t j = 0; j < a.size(); ++j) d = std::max(d, std::abs(a[j] - b[j]));
    return d;
}

inline MetricWeights metric(Vector v) { return MetricWeights(std::move(v)); }

} // namespace pfdr::testing
