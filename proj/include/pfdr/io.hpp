#pragma once
/*=============================================================================
 * Plain-text and binary file formats: vectors (one value per line), dense
 * matrices (CSV, or a "rows cols" text line followed by little-endian
 * doubles), flat key = value configs, and instance bundles on disk.
 *===========================================================================*/

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "problems.hpp"

namespace pfdr::io {

namespace fs = std::filesystem;

namespace detail {

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& token, const std::string& where)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorCode::invalid_input, where + ": cannot parse '" + token + "' as a real");
    }
}

inline std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in)
{
    std::ifstream in(path, mode);
    if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
    return in;
}

inline std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out)
{
    std::ofstream out(path, mode);
    if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
    out.precision(17);
    return out;
}

} // namespace detail

/**  vectors  **/

inline Vector read_vector(std::istream& in, const std::string& name = "vector")
{
    Vector v;
    std::string line;
    for (index_t lineno = 1; std::getline(in, line); ++lineno) {
        line = detail::trim(line);
        if (line.empty() || line[0] == '#') continue;
        v.push_back(detail::parse_real(line, name + " line " + std::to_string(lineno)));
    }
    return v;
}

inline Vector read_vector(const fs::path& path)
{
    auto in = detail::open_in(path);
    return read_vector(in, path.filename().string());
}

template <class T>
void write_vector(std::ostream& out, std::span<const T> v)
{
    out.precision(17);
    for (const auto& x : v) out << x << '\n';
}

inline void write_vector(const fs::path& path, std::span<const double> v)
{
    auto out = detail::open_out(path);
    write_vector<double>(out, v);
}

inline std::vector<index_t> read_indices(const fs::path& path)
{
    std::vector<index_t> v;
    for (double x : read_vector(path)) {
        if (!(x >= 0.0) || x != std::floor(x)) {
            throw Error(ErrorCode::invalid_input, path.filename().string() + ": expected nonnegative integers");
        }
        v.push_back(index_t(x));
    }
    return v;
}

/**  matrices  **/

struct RowMajor {
    index_t rows = 0;
    index_t cols = 0;
    Vector values;
};

inline RowMajor read_csv_matrix(std::istream& in, const std::string& name = "matrix")
{
    RowMajor m;
    std::string line;
    for (index_t lineno = 1; std::getline(in, line); ++lineno) {
        line = detail::trim(line);
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string field;
        index_t cols = 0;
        while (std::getline(ss, field, ',')) {
            const std::string where = name + " line " + std::to_string(lineno) + " field " + std::to_string(cols + 1);
            m.values.push_back(detail::parse_real(detail::trim(field), where));
            ++cols;
        }
        if (m.rows == 0) m.cols = cols;
        if (cols != m.cols) {
            throw Error(ErrorCode::invalid_input, name + " line " + std::to_string(lineno) + ": expected " +
                    std::to_string(m.cols) + " fields, found " + std::to_string(cols));
        }
        ++m.rows;
    }
    return m;
}

inline void write_csv_matrix(std::ostream& out, const RowMajor& m)
{
    out.precision(17);
    for (index_t i = 0; i < m.rows; ++i) {
        for (index_t j = 0; j < m.cols; ++j) {
            if (j) out << ',';
            out << m.values[i * m.cols + j];
        }
        out << '\n';
    }
}

inline double from_little_endian(const unsigned char* b)
{
    std::uint64_t u = 0;
    for (int k = 7; k >= 0; --k) u = (u << 8) | b[k];
    return std::bit_cast<double>(u);
}

inline void to_little_endian(double v, unsigned char* b)
{
    auto u = std::bit_cast<std::uint64_t>(v);
    for (int k = 0; k < 8; ++k) {
        b[k] = static_cast<unsigned char>(u & 0xff);
        u >>= 8;
    }
}

inline RowMajor read_binary_matrix(std::istream& in, const std::string& name = "matrix")
{
    std::string header;
    if (!std::getline(in, header)) throw Error(ErrorCode::invalid_input, name + ": missing header");
    std::stringstream hs(header);
    long long r = -1, c = -1;
    if (!(hs >> r >> c) || r < 0 || c < 0) {
        throw Error(ErrorCode::invalid_input, name + " line 1: expected 'rows cols'");
    }
    RowMajor m;
    m.rows = index_t(r);
    m.cols = index_t(c);
    m.values.resize(m.rows * m.cols);
    unsigned char b[8];
    for (index_t t = 0; t < m.values.size(); ++t) {
        if (!in.read(reinterpret_cast<char*>(b), 8)) {
            throw Error(ErrorCode::invalid_input, name + ": truncated after " + std::to_string(t) + " values");
        }
        m.values[t] = from_little_endian(b);
    }
    return m;
}

inline void write_binary_matrix(std::ostream& out, const RowMajor& m)
{
    out << m.rows << ' ' << m.cols << '\n';
    unsigned char b[8];
    for (double v : m.values) {
        to_little_endian(v, b);
        out.write(reinterpret_cast<const char*>(b), 8);
    }
}

/* CSV unless the extension is .bin */
inline RowMajor read_matrix(const fs::path& path)
{
    if (path.extension() == ".bin") {
        auto in = detail::open_in(path, std::ios::in | std::ios::binary);
        return read_binary_matrix(in, path.filename().string());
    }
    auto in = detail::open_in(path);
    return read_csv_matrix(in, path.filename().string());
}

inline void write_matrix(const fs::path& path, const RowMajor& m)
{
    if (path.extension() == ".bin") {
        auto out = detail::open_out(path, std::ios::out | std::ios::binary);
        write_binary_matrix(out, m);
    } else {
        auto out = detail::open_out(path);
        write_csv_matrix(out, m);
    }
}

inline RowMajor to_row_major(const DenseOperator& a)
{
    RowMajor m{a.rows(), a.cols(), Vector(a.rows() * a.cols())};
    for (index_t i = 0; i < m.rows; ++i) {
        for (index_t j = 0; j < m.cols; ++j) m.values[i * m.cols + j] = a(i, j);
    }
    return m;
}

/**  key = value configs  **/

using Config = std::map<std::string, std::string>;

inline Config read_config(std::istream& in, const std::string& name = "config")
{
    Config c;
    std::string line;
    for (index_t lineno = 1; std::getline(in, line); ++lineno) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorCode::invalid_input, name + " line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = detail::trim(line.substr(0, eq));
        if (key.empty()) {
            throw Error(ErrorCode::invalid_input, name + " line " + std::to_string(lineno) + ": empty key");
        }
        c[key] = detail::trim(line.substr(eq + 1));
    }
    return c;
}

inline Config read_config(const fs::path& path)
{
    auto in = detail::open_in(path);
    return read_config(in, path.filename().string());
}

inline void write_config(std::ostream& out, const Config& c)
{
    for (const auto& [k, v] : c) out << k << " = " << v << '\n';
}

/**  instance bundles  **/

/* A bundle is a directory with meta.txt (key = value, "family" is "eeg" or
 * "labeling") and
 *   eeg:      graph.txt, phi.csv or phi.bin, y.txt, lambda_l1.txt, [x_true.txt]
 *   labeling: graph.txt, q.csv, [labels.txt], [train.txt]               */

enum class Family { eeg, labeling };

struct Bundle {
    Family family = Family::eeg;
    EEGInstance eeg;
    LabelingInstance labeling;
};

inline Bundle read_bundle(const fs::path& dir)
{
    if (!fs::is_directory(dir)) throw Error(ErrorCode::io_error, "instance directory " + dir.string() + " not found");
    const auto meta = read_config(dir / "meta.txt");
    const auto family = meta.count("family") ? meta.at("family") : std::string();
    Bundle b;
    Graph g;
    {
        auto in = detail::open_in(dir / "graph.txt");
        try {
            g = read_graph(in);
        } catch (const Error& e) {
            throw Error(e.code(), std::string("graph.txt: ") + e.what());
        }
    }
    if (family == "eeg") {
        b.family = Family::eeg;
        const auto phi_path = fs::exists(dir / "phi.bin") ? dir / "phi.bin" : dir / "phi.csv";
        const auto m = read_matrix(phi_path);
        b.eeg.phi = DenseOperator(m.rows, m.cols, m.values);
        b.eeg.y = read_vector(dir / "y.txt");
        b.eeg.lambda_l1 = read_vector(dir / "lambda_l1.txt");
        if (fs::exists(dir / "x_true.txt")) b.eeg.x_true = read_vector(dir / "x_true.txt");
        // isolated trailing vertices are implied by Phi's width
        if (g.num_vertices < m.cols) g.num_vertices = m.cols;
        b.eeg.graph = std::move(g);
        b.eeg.validate();
    } else if (family == "labeling") {
        b.family = Family::labeling;
        const auto q = read_matrix(dir / "q.csv");
        b.labeling.K = q.cols;
        b.labeling.q = q.values;
        if (meta.count("beta")) b.labeling.beta = detail::parse_real(meta.at("beta"), "meta.txt beta");
        if (fs::exists(dir / "labels.txt")) {
            for (double l : read_vector(dir / "labels.txt")) b.labeling.labels_true.push_back(int(l));
        }
        if (fs::exists(dir / "train.txt")) b.labeling.training = read_indices(dir / "train.txt");
        if (g.num_vertices < q.rows) g.num_vertices = q.rows;
        b.labeling.graph = std::move(g);
        b.labeling.validate();
    } else {
        throw Error(ErrorCode::invalid_input, "meta.txt: family must be 'eeg' or 'labeling'");
    }
    return b;
}

inline void write_graph_file(const fs::path& path, const Graph& g)
{
    auto out = detail::open_out(path);
    write_graph(out, g);
}

inline void write_bundle(const fs::path& dir, const EEGInstance& inst)
{
    fs::create_directories(dir);
    {
        auto out = detail::open_out(dir / "meta.txt");
        write_config(out, {{"family", "eeg"}});
    }
    write_graph_file(dir / "graph.txt", inst.graph);
    write_matrix(dir / "phi.csv", to_row_major(inst.phi));
    write_vector(dir / "y.txt", inst.y);
    write_vector(dir / "lambda_l1.txt", inst.lambda_l1);
    if (!inst.x_true.empty()) write_vector(dir / "x_true.txt", inst.x_true);
}

inline void write_bundle(const fs::path& dir, const LabelingInstance& inst)
{
    fs::create_directories(dir);
    {
        auto out = detail::open_out(dir / "meta.txt");
        write_config(out, {{"family", "labeling"}, {"beta", pfdr::format_real(inst.beta)}});
    }
    write_graph_file(dir / "graph.txt", inst.graph);
    write_matrix(dir / "q.csv", RowMajor{inst.num_vertices(), inst.K, inst.q});
    if (!inst.labels_true.empty()) {
        auto out = detail::open_out(dir / "labels.txt");
        write_vector<int>(out, inst.labels_true);
    }
    if (!inst.training.empty()) {
        auto out = detail::open_out(dir / "train.txt");
        write_vector<index_t>(out, inst.training);
    }
}

} // namespace pfdr::io
