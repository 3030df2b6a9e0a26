#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace cptd::text {

/// Fixed-precision decimal with 6 significant digits ("%.6g" shape);
/// infinities print as "inf"/"-inf" so interval files stay parseable.
std::string fmt_g6(double value);

/// Shortest decimal that round-trips exactly (std::to_chars). Used for
/// lossless serialization (panels, model files).
std::string fmt_shortest(double value);

/// Fixed number of decimals ("%.2f" shape).
std::string fmt_fixed(double value, int decimals);

/// Strict double parse; accepts "inf"/"-inf"/"nan". Returns false on
/// malformed input (callers raise their own error codes).
bool try_parse_double(const std::string& token, double& out);

bool try_parse_u64(const std::string& token, std::uint64_t& out);

/// Splits one CSV line on commas (no quoting; identifiers must not contain
/// commas) and trims surrounding whitespace from each field.
std::vector<std::string> split_csv_line(const std::string& line);

std::string trim(const std::string& value);

/// Flat "key = value" config file. '#' starts a comment, blank lines are
/// skipped. Later keys overwrite earlier ones.
std::map<std::string, std::string> parse_kv_file(const std::filesystem::path& path);
std::map<std::string, std::string> parse_kv_text(const std::string& content, const std::string& origin);

/// FNV-1a 64-bit digest of a file, as 16 lowercase hex digits.
std::string fnv1a_hex(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace cptd::text
