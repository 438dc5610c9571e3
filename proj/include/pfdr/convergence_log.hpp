#pragma once

#include <array>
#include <iomanip>
#include <optional>
#include <ostream>

#include "common.hpp"

namespace pfdr {

struct LogRecord {
    index_t iter = 0;
    double time_s = 0.0;
    double objective = 0.0;
    double rel_evol = 0.0;
    double max_evol = 0.0;
    double fp_residual = 0.0;
};

struct ConvergenceLog {
    std::vector<LogRecord> records;
    /* Euclidean norms of the injected errors (b_k, c_k, sum of a_{i,k}) per
     * iteration, filled only when error injection is enabled */
    std::vector<std::array<double, 3>> injected;

    void add(const LogRecord& r) { records.push_back(r); }
    bool empty() const noexcept { return records.empty(); }
    const LogRecord& back() const { return records.back(); }
};

inline constexpr const char* log_csv_header = "iter,time_s,objective,rel_evol,max_evol,fp_residual";

/* one row per record; the optional F_inf adds the F_minus_Finf column */
inline void write_log_csv(std::ostream& out, const ConvergenceLog& log,
    std::optional<double> f_inf = std::nullopt)
{
    const auto flags = out.flags();
    const auto precision = out.precision();
    out << log_csv_header;
    if (f_inf) out << ",F_minus_Finf";
    out << '\n';
    out << std::setprecision(17);
    for (const auto& r : log.records) {
        out << r.iter << ',' << r.time_s << ',' << r.objective << ',' << r.rel_evol << ','
            << r.max_evol << ',' << r.fp_residual;
        if (f_inf) out << ',' << (r.objective - *f_inf);
        out << '\n';
    }
    out.flags(flags);
    out.precision(precision);
}

} // namespace pfdr
