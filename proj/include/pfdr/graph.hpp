#pragma once
/*=============================================================================
 * Undirected weighted graph G = (V, E) with per-edge total variation weights,
 * k-nearest-neighbors construction and the plain text edge list format
 *
 *     # comment
 *     V <number of vertices>        (optional header)
 *     u v lambda                    (one edge per line, 0-based ids)
 *===========================================================================*/

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <utility>

#include "common.hpp"

namespace pfdr {

struct Edge {
    index_t u;
    index_t v;

    friend bool operator==(const Edge&, const Edge&) = default;
};

struct Graph {
    index_t num_vertices = 0;
    std::vector<Edge> edges;    // canonical orientation u < v
    Vector edge_weight;         // lambda of each edge, >= 0

    index_t num_edges() const noexcept { return edges.size(); }

    /* for each vertex, the indices of its incident edges in increasing order */
    std::vector<std::vector<index_t>> incident_edges() const
    {
        std::vector<std::vector<index_t>> inc(num_vertices);
        for (index_t e = 0; e < edges.size(); ++e) {
            inc[edges[e].u].push_back(e);
            inc[edges[e].v].push_back(e);
        }
        return inc;
    }

    void validate() const
    {
        detail::require_same_size(edges.size(), edge_weight.size(), "graph edge weights");
        std::set<std::pair<index_t, index_t>> seen;
        for (index_t e = 0; e < edges.size(); ++e) {
            const auto [u, v] = edges[e];
            detail::require(u < v, ErrorCode::invalid_input,
                "edge " + std::to_string(e) + " not in canonical orientation u < v");
            detail::require(v < num_vertices, ErrorCode::invalid_input,
                "edge " + std::to_string(e) + " references vertex out of range");
            detail::require(seen.emplace(u, v).second, ErrorCode::invalid_input,
                "duplicate edge (" + std::to_string(u) + ", " + std::to_string(v) + ")");
            detail::require(edge_weight[e] >= 0.0 && std::isfinite(edge_weight[e]),
                ErrorCode::invalid_input, "edge " + std::to_string(e) + " has invalid weight");
        }
    }
};

/* builds a graph, swapping endpoints into canonical orientation; rejects
 * self-loops and duplicates */
inline Graph make_graph(index_t num_vertices, std::vector<std::pair<index_t, index_t>> pairs,
    Vector weights)
{
    Graph g;
    g.num_vertices = num_vertices;
    g.edges.reserve(pairs.size());
    for (auto [u, v] : pairs) {
        detail::require(u != v, ErrorCode::invalid_input,
            "self-loop on vertex " + std::to_string(u));
        if (u > v) std::swap(u, v);
        g.edges.push_back({u, v});
    }
    g.edge_weight = std::move(weights);
    g.validate();
    return g;
}

inline Graph chain_graph(index_t num_vertices, double weight)
{
    Graph g;
    g.num_vertices = num_vertices;
    for (index_t v = 0; v + 1 < num_vertices; ++v) g.edges.push_back({v, v + 1});
    g.edge_weight.assign(g.edges.size(), weight);
    return g;
}

/* 4-connected grid, vertex id = row * cols + col */
inline Graph grid_graph(index_t rows, index_t cols, double weight)
{
    Graph g;
    g.num_vertices = rows * cols;
    for (index_t r = 0; r < rows; ++r) {
        for (index_t c = 0; c < cols; ++c) {
            const index_t v = r * cols + c;
            if (c + 1 < cols) g.edges.push_back({v, v + 1});
            if (r + 1 < rows) g.edges.push_back({v, v + cols});
        }
    }
    g.edge_weight.assign(g.edges.size(), weight);
    return g;
}

/* symmetrized k-nearest-neighbors graph (edge if either endpoint selects the
 * other) over points stored row-major with dim coordinates each; distance
 * ties go to the lower vertex index; edges listed in lexicographic order */
inline Graph build_knn_graph(std::span<const double> coords, index_t dim, index_t k,
    double weight = 1.0)
{
    detail::require(dim >= 1, ErrorCode::invalid_input, "knn: dimension must be positive");
    detail::require(coords.size() % dim == 0, ErrorCode::invalid_input,
        "knn: coordinate count not a multiple of the dimension");
    const index_t n = coords.size() / dim;
    detail::require(n >= 2, ErrorCode::invalid_input, "knn: fewer than 2 points");
    detail::require(k >= 1 && k < n, ErrorCode::invalid_input, "knn: need 1 <= k < number of points");
    for (double c : coords) {
        detail::require(std::isfinite(c), ErrorCode::invalid_input, "knn: non-finite coordinate");
    }

    std::set<std::pair<index_t, index_t>> pairs;
    std::vector<std::pair<double, index_t>> dist(n - 1);
    for (index_t u = 0; u < n; ++u) {
        index_t m = 0;
        for (index_t v = 0; v < n; ++v) {
            if (v == u) continue;
            double d2 = 0.0;
            for (index_t d = 0; d < dim; ++d) {
                const double diff = coords[u * dim + d] - coords[v * dim + d];
                d2 += diff * diff;
            }
            dist[m++] = {d2, v};
        }
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
        for (index_t i = 0; i < k; ++i) {
            const index_t v = dist[i].second;
            pairs.emplace(std::min(u, v), std::max(u, v));
        }
    }

    Graph g;
    g.num_vertices = n;
    for (auto [u, v] : pairs) g.edges.push_back({u, v});
    g.edge_weight.assign(g.edges.size(), weight);
    return g;
}

inline Graph read_graph(std::istream& in)
{
    Graph g;
    bool has_header = false;
    index_t max_id = 0;
    bool any_edge = false;
    std::vector<std::pair<index_t, index_t>> pairs;
    Vector weights;
    std::string line;
    index_t line_no = 0;
    auto fail = [&](const std::string& msg) {
        throw Error(ErrorCode::invalid_input, "graph line " + std::to_string(line_no) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ls(line);
        if (line[first] == 'V') {
            std::string tag;
            long long n = -1;
            ls >> tag >> n;
            if (tag != "V" || ls.fail() || n < 0) fail("malformed header, expected 'V <n>'");
            g.num_vertices = static_cast<index_t>(n);
            has_header = true;
            continue;
        }
        long long u = -1, v = -1;
        double w = 0.0;
        ls >> u >> v >> w;
        if (ls.fail()) fail("expected 'u v lambda'");
        std::string rest;
        if (ls >> rest) fail("trailing field '" + rest + "'");
        if (u < 0 || v < 0) fail("negative vertex id");
        if (u == v) fail("self-loop");
        if (!(w >= 0.0) || !std::isfinite(w)) fail("lambda must be a finite nonnegative real");
        pairs.emplace_back(static_cast<index_t>(u), static_cast<index_t>(v));
        weights.push_back(w);
        max_id = std::max<index_t>(max_id, static_cast<index_t>(std::max(u, v)));
        any_edge = true;
    }
    if (!has_header) g.num_vertices = any_edge ? max_id + 1 : 0;
    if (any_edge && max_id >= g.num_vertices) {
        throw Error(ErrorCode::invalid_input, "graph: vertex id exceeds declared count");
    }
    return make_graph(g.num_vertices, std::move(pairs), std::move(weights));
}

inline void write_graph(std::ostream& out, const Graph& g)
{
    out << "V " << g.num_vertices << '\n';
    const auto precision = out.precision(17);
    for (index_t e = 0; e < g.edges.size(); ++e) {
        out << g.edges[e].u << ' ' << g.edges[e].v << ' ' << g.edge_weight[e] << '\n';
    }
    out.precision(precision);
}

} // namespace pfdr
