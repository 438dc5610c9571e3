#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pfdr {

using index_t = std::size_t;
using Vector = std::vector<double>;

inline constexpr double infinity = std::numeric_limits<double>::infinity();
inline constexpr index_t npos = static_cast<index_t>(-1);

enum class ErrorCode {
    invalid_input,
    layout_infeasible,
    degenerate_weights,
    hypothesis_violation,
    domain_violation,
    no_feasible_point,
    io_error,
};

inline const char* to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::invalid_input: return "invalid-input";
    case ErrorCode::layout_infeasible: return "layout-infeasible";
    case ErrorCode::degenerate_weights: return "degenerate-weights";
    case ErrorCode::hypothesis_violation: return "hypothesis-violation";
    case ErrorCode::domain_violation: return "domain-violation";
    case ErrorCode::no_feasible_point: return "no-feasible-point";
    case ErrorCode::io_error: return "io-error";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/* per-coordinate positive weights; houses step sizes, curvature bounds and
 * metrics, which are all diagonal in this library */
struct DiagonalOperator {
    Vector values;

    DiagonalOperator() = default;
    explicit DiagonalOperator(Vector v) : values(std::move(v)) {}
    DiagonalOperator(index_t n, double constant) : values(n, constant) {}

    index_t size() const noexcept { return values.size(); }
    double operator[](index_t j) const { return values[j]; }
    double& operator[](index_t j) { return values[j]; }
    std::span<const double> view() const noexcept { return values; }

    bool strictly_positive() const
    {
        for (double v : values) {
            if (!(v > 0.0) || !std::isfinite(v)) return false;
        }
        return true;
    }

    double max() const
    {
        double m = 0.0;
        for (double v : values) m = std::max(m, v);
        return m;
    }
};

namespace detail {

inline void require(bool condition, ErrorCode code, const std::string& message)
{
    if (!condition) throw Error(code, message);
}

inline void require_same_size(std::size_t a, std::size_t b, const char* what)
{
    if (a != b) {
        throw Error(ErrorCode::invalid_input,
            std::string(what) + ": dimension mismatch (" + std::to_string(a) + " vs " +
                std::to_string(b) + ")");
    }
}

inline double norm2(std::span<const double> x)
{
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

inline double norm_inf(std::span<const double> x)
{
    double s = 0.0;
    for (double v : x) s = std::max(s, std::abs(v));
    return s;
}

inline double dot(std::span<const double> x, std::span<const double> y)
{
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

} // namespace detail

} // namespace pfdr
