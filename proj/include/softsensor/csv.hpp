#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace softsensor::csv {

// RFC 4180-style record reader: comma-delimited, double-quoted fields with
// "" escapes, CRLF or LF line endings. Fields are trimmed of surrounding
// spaces when unquoted.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}
  bool next(std::vector<std::string>& fields);

 private:
  std::istream& in_;
};

// Quotes a field when it contains a delimiter, quote, or newline.
std::string escape(std::string_view field);

}  // namespace softsensor::csv
