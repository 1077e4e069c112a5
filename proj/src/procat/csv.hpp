#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace procat {

// Minimal RFC-4180 reader: quoted fields, doubled quotes, CRLF.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  bool next(std::vector<std::string>& fields);
  // 1-based number of the record last returned.
  std::size_t record_number() const noexcept { return record_; }

 private:
  std::istream& in_;
  std::size_t record_ = 0;
};

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace procat
