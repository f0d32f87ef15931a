#pragma once

// Locale-independent CSV output: '.' decimal, shortest round-trip doubles,
// LF line endings, '#'-prefixed comment lines for config echo.

#include <initializer_list>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace mflab {

/// Shortest representation that parses back to the same double.
std::string format_double(double value);

/// Quotes a field when it contains a comma, quote or newline.
std::string csv_escape(std::string_view field);

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  /// Writes each line of `text` prefixed with "# ".
  void comment(std::string_view text);
  void header(std::initializer_list<std::string_view> names);
  void row(const std::vector<std::string>& fields);

 private:
  std::ostream& out_;
};

}  // namespace mflab
