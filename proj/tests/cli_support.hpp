#pragma once
// Runs the command-line driver and reads back what it wrote.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace pfdr::testing {

struct CliResult {
    int status = -1;
    std::string output;   // stdout and stderr
};

inline std::string slurp(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

/* args are passed through the shell unquoted */
inline CliResult run_cli(const std::string& args, const std::filesystem::path& scratch)
{
    std::filesystem::create_directories(scratch);
    const auto capture = scratch / "cli_output.txt";
    const std::string cmd = std::string(PFDR_CLI) + " " + args + " > " + capture.string() + " 2>&1";
    const int raw = std::system(cmd.c_str());
    CliResult r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.output = slurp(capture);
    return r;
}

inline std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, sep)) fields.push_back(f);
    return fields;
}

/* CSV text with the named column removed */
inline std::string drop_column(const std::string& csv, const std::string& column)
{
    std::stringstream in(csv);
    std::string line, out;
    long skip = -1;
    bool header = true;
    while (std::getline(in, line)) {
        auto fields = split(line, ',');
        if (header) {
            for (std::size_t i = 0; i < fields.size(); ++i) {
                if (fields[i] == column) skip = long(i);
            }
            header = false;
        }
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (long(i) == skip) continue;
            out += fields[i];
            out += ',';
        }
        out += '\n';
    }
    return out;
}

} // namespace pfdr::testing
