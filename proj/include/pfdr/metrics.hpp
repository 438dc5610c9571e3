#pragma once
/*=============================================================================
 * Evaluation metrics: Dice score over supports, approximate support by 1-D
 * 2-means, average per-class F1, argmax labeling and prediction entropy.
 *===========================================================================*/

#include <algorithm>
#include <numeric>

#include "common.hpp"

namespace pfdr {

/* 2 |supp x inter supp xhat| / (|supp x| + |supp xhat|), supp = nonzeros;
 * two empty supports score 1 */
inline double dice_score(std::span<const double> x, std::span<const double> xhat)
{
    detail::require_same_size(x.size(), xhat.size(), "dice_score");
    index_t nx = 0, nh = 0, both = 0;
    for (index_t v = 0; v < x.size(); ++v) {
        const bool a = x[v] != 0.0, b = xhat[v] != 0.0;
        nx += a;
        nh += b;
        both += a && b;
    }
    if (nx + nh == 0) return 1.0;
    return 2.0 * double(both) / double(nx + nh);
}

struct SupportSet {
    std::vector<index_t> members;   // increasing vertex ids with |x_v| > threshold
    double threshold = 0.0;
};

inline SupportSet support_above(std::span<const double> x, double threshold)
{
    SupportSet s;
    s.threshold = threshold;
    for (index_t v = 0; v < x.size(); ++v) {
        if (std::abs(x[v]) > threshold) s.members.push_back(v);
    }
    return s;
}

/* Support {v : |x_v| > a} with a the midpoint of the two centers of the
 * optimal 1-D 2-means clustering of {|x_v|}. In one dimension the optimal
 * clusters are contiguous in sorted order, so all n - 1 splits are scanned
 * with prefix sums; the first minimal split wins. Identical values give the
 * degenerate threshold a = 0. */
inline SupportSet approx_support_2means(std::span<const double> x)
{
    detail::require(!x.empty(), ErrorCode::invalid_input, "2-means: empty input");
    Vector a(x.size());
    for (index_t v = 0; v < x.size(); ++v) a[v] = std::abs(x[v]);
    std::sort(a.begin(), a.end());
    const index_t n = a.size();
    if (a.front() == a.back()) return support_above(x, 0.0);

    Vector prefix(n + 1, 0.0), prefix_sq(n + 1, 0.0);
    for (index_t i = 0; i < n; ++i) {
        prefix[i + 1] = prefix[i] + a[i];
        prefix_sq[i + 1] = prefix_sq[i] + a[i] * a[i];
    }
    auto sse = [&](index_t lo, index_t hi) {   // [lo, hi)
        const double cnt = double(hi - lo), s = prefix[hi] - prefix[lo];
        return std::max(prefix_sq[hi] - prefix_sq[lo] - s * s / cnt, 0.0);
    };
    double best = infinity;
    index_t split = 1;
    for (index_t i = 1; i < n; ++i) {
        if (a[i] == a[i - 1]) continue;   // equal values stay together
        const double cost = sse(0, i) + sse(i, n);
        if (cost < best) {
            best = cost;
            split = i;
        }
    }
    const double low = prefix[split] / double(split);
    const double high = (prefix[n] - prefix[split]) / double(n - split);
    return support_above(x, 0.5 * (low + high));
}

/* mean over the K classes of 2 |pred = gt = k| / (|pred = k| + |gt = k|) on
 * the subset; classes absent from both contribute 0 */
inline double avg_f1(std::span<const int> labels, std::span<const int> gt,
    std::span<const index_t> subset, index_t num_classes)
{
    detail::require(!subset.empty(), ErrorCode::invalid_input, "avg_f1: empty subset");
    detail::require(num_classes >= 1, ErrorCode::invalid_input, "avg_f1: no classes");
    detail::require_same_size(labels.size(), gt.size(), "avg_f1");
    std::vector<index_t> tp(num_classes, 0), pred(num_classes, 0), truth(num_classes, 0);
    for (index_t v : subset) {
        detail::require(v < labels.size(), ErrorCode::invalid_input, "avg_f1: subset out of range");
        const int l = labels[v], g = gt[v];
        detail::require(l >= 0 && index_t(l) < num_classes && g >= 0 && index_t(g) < num_classes,
            ErrorCode::invalid_input, "avg_f1: label out of range");
        ++pred[index_t(l)];
        ++truth[index_t(g)];
        if (l == g) ++tp[index_t(l)];
    }
    double sum = 0.0;
    for (index_t k = 0; k < num_classes; ++k) {
        const index_t denom = pred[k] + truth[k];
        if (denom > 0) sum += 2.0 * double(tp[k]) / double(denom);
    }
    return sum / double(num_classes);
}

/* per-vertex argmax of rows of K values, ties to the smallest index */
inline std::vector<int> argmax_labels(std::span<const double> p, index_t K)
{
    detail::require(K >= 1 && p.size() % K == 0, ErrorCode::invalid_input,
        "argmax_labels: size not a multiple of K");
    std::vector<int> labels(p.size() / K);
    for (index_t v = 0; v < labels.size(); ++v) {
        index_t best = 0;
        for (index_t k = 1; k < K; ++k) {
            if (p[v * K + k] > p[v * K + best]) best = k;
        }
        labels[v] = int(best);
    }
    return labels;
}

/* -sum_k q_k log q_k per row (natural log, 0 log 0 = 0) */
inline Vector entropy_uncertainty(std::span<const double> q, index_t K)
{
    detail::require(K >= 1 && q.size() % K == 0, ErrorCode::invalid_input,
        "entropy: size not a multiple of K");
    Vector h(q.size() / K, 0.0);
    for (index_t v = 0; v < h.size(); ++v) {
        double s = 0.0;
        for (index_t k = 0; k < K; ++k) {
            const double qk = q[v * K + k];
            if (qk > 0.0) s -= qk * std::log(qk);
        }
        h[v] = s;
    }
    return h;
}

} // namespace pfdr
