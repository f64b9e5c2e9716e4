#pragma once

// Output plumbing for the experiment harness: shortest round-trip number
// formatting, CSV assembly and atomic file replacement.

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <vector>

namespace cmdp {

// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  CsvTable& cell(const std::string& s);
  CsvTable& cell(double v);
  CsvTable& cell(std::int64_t v);
  CsvTable& cell(std::uint64_t v);
  CsvTable& cell(int v) { return cell(static_cast<std::int64_t>(v)); }
  // Throws UsageError if the row width does not match the header.
  void end_row();

  std::string str() const;

 private:
  std::size_t width_;
  std::vector<std::string> row_;
  std::string text_;
};

// Writes to a sibling temp file then renames over `path`. Creates parent
// directories.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& content);

std::string read_file(const std::filesystem::path& path);

}  // namespace cmdp
