#include "cmdp/io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include "cmdp/errors.hpp"

namespace cmdp {

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw Error("number formatting failed");
  return std::string(buf.data(), end);
}

CsvTable::CsvTable(std::vector<std::string> header) : width_(header.size()) {
  for (auto& h : header) cell(h);
  end_row();
}

CsvTable& CsvTable::cell(const std::string& s) {
  row_.push_back(s);
  return *this;
}

CsvTable& CsvTable::cell(double v) { return cell(format_double(v)); }

CsvTable& CsvTable::cell(std::int64_t v) { return cell(std::to_string(v)); }

CsvTable& CsvTable::cell(std::uint64_t v) { return cell(std::to_string(v)); }

void CsvTable::end_row() {
  if (row_.size() != width_) {
    throw UsageError("CSV row has " + std::to_string(row_.size()) +
                     " cells, header has " + std::to_string(width_));
  }
  for (std::size_t i = 0; i < row_.size(); ++i) {
    if (i > 0) text_ += ',';
    text_ += row_[i];
  }
  text_ += '\n';
  row_.clear();
}

std::string CsvTable::str() const { return text_; }

void write_file_atomic(const std::filesystem::path& path,
                       const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw UsageError("cannot write " + tmp.string());
    os << content;
    os.flush();
    if (!os) throw UsageError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw UsageError("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace cmdp
