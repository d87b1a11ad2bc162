#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace balance {

/// Shortest round-trip decimal form; identical bits always give identical text.
std::string format_double(double v);

/// RFC-4180 field quoting (only when the field needs it).
std::string csv_escape(std::string_view field);

/// Split one CSV record, honouring double-quoted fields.
std::vector<std::string> csv_split(std::string_view line);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a named column; throws std::out_of_range when absent.
  std::size_t column(std::string_view name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

/// Writes a header row once, then records. LF line endings, '.' decimals.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> header);

  void row(const std::vector<std::string>& fields);
  void row(const std::vector<double>& values);
  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
  std::size_t width_;
};

}  // namespace balance
