#include "lsctl/taillard.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include "lsctl/error.hpp"

#ifndef LSCTL_DEFAULT_DATA_DIR
#define LSCTL_DEFAULT_DATA_DIR "data"
#endif

namespace lsctl {

namespace {

struct Row {
    int line_no;
    std::vector<long long> values;
};

/// Data rows; the first comment seen before any data is returned in `title`.
std::vector<Row> read_rows(std::istream& in, std::string& title) {
    std::vector<Row> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto start = line.find_first_not_of(" \t\r");
        if (start == std::string::npos) continue;
        if (line[start] == '#') {
            if (rows.empty() && title.empty()) {
                const auto body = line.find_first_not_of(" \t#", start);
                if (body != std::string::npos) title = line.substr(body, line.find_last_not_of(" \t\r") + 1 - body);
            }
            continue;
        }
        std::istringstream ss(line);
        std::string tok;
        Row row{line_no, {}};
        while (ss >> tok) {
            std::size_t used = 0;
            long long v = 0;
            try {
                v = std::stoll(tok, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != tok.size())
                throw Error(ErrorCode::ParseError,
                            "line " + std::to_string(line_no) + ": non-integer token '" + tok + "'");
            row.values.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

Instance parse_taillard(std::istream& in, std::string name) {
    std::string title;
    const auto rows = read_rows(in, title);
    if (name.empty()) name = std::move(title);
    if (rows.empty()) throw Error(ErrorCode::ParseError, "empty input: missing 'J M' header");
    const Row& header = rows[0];
    if (header.values.size() != 2 || header.values[0] < 1 || header.values[1] < 1)
        throw Error(ErrorCode::ParseError, "line " + std::to_string(header.line_no) + ": expected 'J M' header");
    const int J = static_cast<int>(header.values[0]);
    const int M = static_cast<int>(header.values[1]);
    const std::size_t expected = 1 + 2 * static_cast<std::size_t>(J);
    std::vector<Time> proc;
    std::vector<int> mach;
    proc.reserve(static_cast<std::size_t>(J) * M);
    mach.reserve(static_cast<std::size_t>(J) * M);
    for (std::size_t r = 1; r < expected; ++r) {
        const bool times = r <= static_cast<std::size_t>(J);
        const int job = static_cast<int>(times ? r - 1 : r - 1 - J);
        const std::string what = std::string(times ? "processing-time" : "machine") + " row " +
                                 std::to_string(job + 1);
        if (r >= rows.size())
            throw Error(ErrorCode::ParseError, "dimension mismatch: " + what + " of " + std::to_string(J) + " missing");
        const Row& row = rows[r];
        if (static_cast<int>(row.values.size()) != M)
            throw Error(ErrorCode::ParseError, "dimension mismatch: " + what + " (line " +
                                                   std::to_string(row.line_no) + ") has " +
                                                   std::to_string(row.values.size()) + " values, expected " +
                                                   std::to_string(M));
        if (times) {
            for (long long v : row.values) {
                if (v < 0) throw Error(ErrorCode::ParseError, what + ": negative processing time");
                proc.push_back(static_cast<Time>(v));
            }
        } else {
            std::vector<char> seen(M, 0);
            for (long long v : row.values) {
                if (v < 1 || v > M || seen[v - 1])
                    throw Error(ErrorCode::ParseError, what + " (line " + std::to_string(row.line_no) +
                                                           ") is not a permutation of 1.." + std::to_string(M));
                seen[v - 1] = 1;
                mach.push_back(static_cast<int>(v - 1));
            }
        }
    }
    if (rows.size() > expected)
        throw Error(ErrorCode::ParseError,
                    "dimension mismatch: unexpected extra row at line " + std::to_string(rows[expected].line_no));
    return Instance(J, M, std::move(proc), std::move(mach), std::move(name));
}

Instance load_taillard(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + file.string());
    return parse_taillard(in, file.stem().string());
}

std::string emit_taillard(const Instance& inst) {
    std::ostringstream os;
    if (!inst.name().empty()) os << "# " << inst.name() << '\n';
    os << inst.num_jobs() << ' ' << inst.num_machines() << '\n';
    for (int j = 0; j < inst.num_jobs(); ++j)
        for (int k = 0; k < inst.num_machines(); ++k)
            os << inst.proc(j, k) << (k + 1 == inst.num_machines() ? '\n' : ' ');
    for (int j = 0; j < inst.num_jobs(); ++j)
        for (int k = 0; k < inst.num_machines(); ++k)
            os << inst.machine(j, k) + 1 << (k + 1 == inst.num_machines() ? '\n' : ' ');
    return os.str();
}

Instance generate_instance(int num_jobs, int num_machines, std::uint64_t seed) {
    if (num_jobs < 1 || num_machines < 1) throw Error(ErrorCode::InvalidConfig, "J and M must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> time(1, 99);
    std::vector<Time> proc;
    std::vector<int> mach;
    std::vector<int> perm(num_machines);
    for (int j = 0; j < num_jobs; ++j) {
        for (int k = 0; k < num_machines; ++k) proc.push_back(time(rng));
        std::iota(perm.begin(), perm.end(), 0);
        // Fisher-Yates with an explicit distribution so the order is reproducible.
        for (int i = num_machines - 1; i > 0; --i)
            std::swap(perm[i], perm[std::uniform_int_distribution<int>(0, i)(rng)]);
        mach.insert(mach.end(), perm.begin(), perm.end());
    }
    return Instance(num_jobs, num_machines, std::move(proc), std::move(mach),
                    "gen" + std::to_string(num_jobs) + "x" + std::to_string(num_machines) + "_" +
                        std::to_string(seed));
}

std::map<std::string, Time> load_bks_table(const std::filesystem::path& csv) {
    std::ifstream in(csv);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + csv.string());
    std::map<std::string, Time> out;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (header) {
            header = false;
            continue;
        }
        std::istringstream ss(line);
        std::string name, bks;
        if (!std::getline(ss, name, ',') || !std::getline(ss, bks, ','))
            throw Error(ErrorCode::ParseError, "bad BKS line '" + line + "'");
        out[name] = std::stoll(bks);
    }
    return out;
}

std::filesystem::path bundled_data_dir() {
    if (const char* env = std::getenv("LSCTL_DATA_DIR")) return env;
    return LSCTL_DEFAULT_DATA_DIR;
}

}  // namespace lsctl
