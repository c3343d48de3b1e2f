#pragma once

#include <filesystem>
#include <initializer_list>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

namespace lasersim {

/// CSV with a header row, '.' decimal separator and 17 significant digits,
/// which round-trips every double.
class CsvWriter {
 public:
  CsvWriter(std::ostream& os, std::vector<std::string> header);
  void row(std::initializer_list<double> values);
  void row(const std::vector<double>& values);
  /// Mixed row: string cells are written verbatim.
  void row_text(const std::vector<std::string>& cells);

  static std::string format(double v);

 private:
  std::ostream& os_;
  std::size_t columns_;
};

/// Collects every file written below an output directory so that the run
/// manifest can list them. Writes are serialized through this object.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path path(const std::string& name) const { return dir_ / name; }

  void write_text(const std::string& name, const std::string& content);
  void write_json(const std::string& name, const nlohmann::json& j);
  const std::vector<std::string>& files() const { return files_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> files_;
};

nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace lasersim
