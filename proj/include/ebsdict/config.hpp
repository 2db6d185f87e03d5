#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace ebsdict {

/// Reads `key = value` lines; blank lines and `#` comments are skipped.
/// Throws IoError if the file cannot be opened, ConfigError on malformed lines.
[[nodiscard]] std::vector<std::pair<std::string, std::string>> read_key_value_file(const std::string& path);

[[nodiscard]] double parse_double(const std::string& text, const std::string& key);
[[nodiscard]] long long parse_int(const std::string& text, const std::string& key);
[[nodiscard]] std::uint64_t parse_u64(const std::string& text, const std::string& key);

}  // namespace ebsdict
