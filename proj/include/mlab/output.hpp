#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace mlab {

/// File-system failures, carrying the offending path.
class IoError : public std::runtime_error {
 public:
  IoError(const std::string& path, const std::string& what) : std::runtime_error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

using CsvValue = std::variant<double, std::int64_t, std::uint64_t, std::string>;
using CsvRow = std::vector<CsvValue>;

/// %.17g, with nan / inf / -inf spelled literally.
std::string format_double(double v);
std::string format_csv_value(const CsvValue& v);

/// Header row plus one line per row. Throws std::invalid_argument when a row
/// does not match the schema width and IoError on write failures.
void emit_csv(const std::vector<CsvRow>& rows, const std::vector<std::string>& schema, const std::string& path);
std::string render_csv(const std::vector<CsvRow>& rows, const std::vector<std::string>& schema);

void emit_json(const nlohmann::json& summary, const std::string& path);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
CsvTable read_csv(const std::string& path);
/// Inverse of format_double, accepting nan and inf.
double parse_csv_double(const std::string& field);

/// 64-bit FNV-1a over the file bytes, as 16 lowercase hex digits.
std::string file_digest(const std::string& path);

}  // namespace mlab
