#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>

#include "lsctl/instance.hpp"

namespace lsctl {

/// Taillard layout: "J M", then J rows of M processing times, then J rows of M
/// 1-based machine indices. Whitespace-flexible; lines starting with '#' are
/// ignored. Throws Error(ParseError) naming the offending row.
Instance parse_taillard(std::istream& in, std::string name = {});
Instance load_taillard(const std::filesystem::path& file);

/// Inverse of parse_taillard (writes a '#' name line when the instance has one).
std::string emit_taillard(const Instance& instance);

/// Uniform integer times on [1, 99] and a uniformly random machine order per job.
Instance generate_instance(int num_jobs, int num_machines, std::uint64_t seed);

/// Best-known makespans keyed by instance name, read from a CSV whose first two
/// columns are `instance,bks` (header line required).
std::map<std::string, Time> load_bks_table(const std::filesystem::path& csv);

/// Directory of the bundled Taillard files (compile-time default, overridable by
/// the LSCTL_DATA_DIR environment variable).
std::filesystem::path bundled_data_dir();

}  // namespace lsctl
