#include "lsctl/config.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include "lsctl/error.hpp"

namespace lsctl {

namespace {
std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}
}  // namespace

KeyValues parse_key_values(std::istream& in, const std::string& source) {
    KeyValues kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = source + ":" + std::to_string(lineno);
        if (eq == std::string::npos) throw Error(ErrorCode::ParseError, where + ": expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw Error(ErrorCode::ParseError, where + ": empty key");
        if (!kv.emplace(key, value).second) throw Error(ErrorCode::ParseError, where + ": duplicate key '" + key + "'");
    }
    return kv;
}

KeyValues load_key_values(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw Error(ErrorCode::IoError, "cannot open config " + path.string());
    return parse_key_values(f, path.string());
}

void write_key_values(std::ostream& out, const KeyValues& kv) {
    for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
}

double kv_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidConfig, "bad number for " + key + ": '" + v + "'");
    }
}

int kv_int(const std::string& key, const std::string& v) {
    const double d = kv_double(key, v);
    if (d != std::floor(d)) throw Error(ErrorCode::InvalidConfig, "expected integer for " + key);
    return static_cast<int>(d);
}

bool kv_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw Error(ErrorCode::InvalidConfig, "bad boolean for " + key + ": '" + v + "'");
}

}  // namespace lsctl
