#include "cptd/text.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "cptd/error.hpp"

namespace cptd::text {

std::string fmt_g6(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::isnan(value)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", value);
  return buf;
}

std::string fmt_shortest(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::isnan(value)) return "nan";
  char buf[40];
  auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

std::string fmt_fixed(double value, int decimals) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::isnan(value)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  return buf;
}

bool try_parse_double(const std::string& token, double& out) {
  std::string t = trim(token);
  if (t.empty()) return false;
  if (t == "inf" || t == "+inf") {
    out = std::numeric_limits<double>::infinity();
    return true;
  }
  if (t == "-inf") {
    out = -std::numeric_limits<double>::infinity();
    return true;
  }
  if (t == "nan") {
    out = std::numeric_limits<double>::quiet_NaN();
    return true;
  }
  const char* begin = t.c_str();
  char* end = nullptr;
  errno = 0;
  double value = std::strtod(begin, &end);
  if (end != begin + t.size() || errno == ERANGE) return false;
  out = value;
  return true;
}

bool try_parse_u64(const std::string& token, std::uint64_t& out) {
  std::string t = trim(token);
  if (t.empty()) return false;
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc{} || ptr != t.data() + t.size()) return false;
  out = value;
  return true;
}

std::string trim(const std::string& value) {
  std::size_t first = value.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  std::size_t last = value.find_last_not_of(" \t\r\n");
  return value.substr(first, last - first + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(trim(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(trim(current));
  return fields;
}

std::map<std::string, std::string> parse_kv_text(const std::string& content, const std::string& origin) {
  std::map<std::string, std::string> out;
  std::istringstream in(content);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      raise(ErrorCode::ConfigError,
            origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key = trim(stripped.substr(0, eq));
    std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) {
      raise(ErrorCode::ConfigError, origin + ":" + std::to_string(lineno) + ": empty key");
    }
    out[key] = value;
  }
  return out;
}

std::map<std::string, std::string> parse_kv_file(const std::filesystem::path& path) {
  return parse_kv_text(read_file(path), path.string());
}

std::string fnv1a_hex(const std::filesystem::path& path) {
  std::string bytes = read_file(path);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::IoError, "cannot write " + path.string());
  out << content;
  if (!out) raise(ErrorCode::IoError, "short write to " + path.string());
}

}  // namespace cptd::text
