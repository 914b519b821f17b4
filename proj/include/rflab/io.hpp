#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace rflab::io {

/// %.17g
std::string format_double(double v);

/// One CSV cell; numbers are formatted on construction.
struct Cell {
  std::string text;
  Cell(double v) : text(format_double(v)) {}
  Cell(int v) : text(std::to_string(v)) {}
  Cell(long v) : text(std::to_string(v)) {}
  Cell(long long v) : text(std::to_string(v)) {}
  Cell(unsigned long v) : text(std::to_string(v)) {}
  Cell(unsigned long long v) : text(std::to_string(v)) {}
  Cell(bool v) : text(v ? "1" : "0") {}
  Cell(std::string v) : text(std::move(v)) {}
  Cell(const char* v) : text(v) {}
};

/// Fixed column order; throws std::invalid_argument on a row of the wrong width.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns);

  void add_row(std::vector<Cell> row);
  const std::vector<std::string>& columns() const noexcept { return columns_; }
  std::size_t rows() const noexcept { return rows_.size(); }
  std::string to_string() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

std::string sha256_hex(std::string_view data);
/// Throws std::runtime_error when the file cannot be read.
std::string sha256_file(const std::filesystem::path& path);
/// SHA-1 of "blob <size>\0" + content, as git computes object ids.
std::string git_blob_sha1(std::string_view content);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

struct OutputRecord {
  std::string file;  // relative to the manifest directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunManifest {
  std::string subcommand;
  std::string tool_version;
  std::string config_json;  // canonical config echo
  std::uint64_t seed = 0;
  std::string started;      // ISO 8601 UTC
  std::string finished;
  std::vector<OutputRecord> outputs;
  std::string status;       // "ok" or "invariant_violation"

  /// Hashes each file in `dir` and records it.
  void add_output(const std::filesystem::path& dir, const std::string& file);
  std::string to_json() const;
};

std::string utc_timestamp();

}  // namespace rflab::io
