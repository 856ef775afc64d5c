#pragma once

#include <charconv>
#include <string>
#include <vector>

#include "preflight/error.hpp"

namespace preflight {

// Minimal RFC-ish CSV: comma-delimited, optional double-quoting, CRLF
// tolerated. Empty fields stand for missing cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (size_t j = 0; j < header.size(); ++j)
      if (header[j] == name) return static_cast<int>(j);
    return -1;
  }
};

CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text);
void write_file(const std::string& path, const std::string& text);
std::string read_file(const std::string& path);

// Shortest round-trip decimal form of a double (std::to_chars), so numbers
// written to CSV reparse bit-exactly.
std::string format_double(double v);

// Strict numeric parse; returns false on any trailing garbage.
bool parse_double(const std::string& s, double& out);

// FNV-1a 64-bit over raw bytes; used for cohort fingerprints.
uint64_t fnv1a64(const std::string& bytes);
std::string to_hex(uint64_t v);

}  // namespace preflight
