#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace overlap {

/// Streaming reader for RFC 4180 style delimited text: quoted fields may contain the
/// delimiter, doubled quotes and line breaks. CRLF and LF line endings are accepted.
class CsvReader {
public:
    CsvReader(std::istream& in, char delimiter) : in_(in), delimiter_(delimiter) {}

    /// Next record, or nullopt at end of input. Throws RowError on an unterminated quote.
    std::optional<std::vector<std::string>> next();

    /// 1-based number of the record most recently returned by next().
    std::size_t record_number() const noexcept { return record_; }

private:
    std::istream& in_;
    char delimiter_;
    std::size_t record_ = 0;
};

void write_csv_record(std::ostream& out, const std::vector<std::string>& fields, char delimiter = ',');

}  // namespace overlap
