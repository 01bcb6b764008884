#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <string>

namespace lsctl {

using KeyValues = std::map<std::string, std::string>;

/// "key = value" lines; '#' starts a comment; blank lines ignored. Duplicate
/// keys and lines without '=' raise Error(ParseError) naming the line.
KeyValues parse_key_values(std::istream& in, const std::string& source = "<stream>");
KeyValues load_key_values(const std::filesystem::path& path);
void write_key_values(std::ostream& out, const KeyValues& kv);

double kv_double(const std::string& key, const std::string& value);
int kv_int(const std::string& key, const std::string& value);
bool kv_bool(const std::string& key, const std::string& value);

}  // namespace lsctl
