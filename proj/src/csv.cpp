#include "overlap/csv.hpp"

#include <ostream>

#include "overlap/errors.hpp"

namespace overlap {

std::optional<std::vector<std::string>> CsvReader::next() {
    std::vector<std::string> fields;
    std::string field;
    bool in_quotes = false;
    bool any = false;
    bool field_was_quoted = false;

    for (;;) {
        const int ci = in_.get();
        if (ci == std::char_traits<char>::eof()) {
            if (in_quotes) {
                throw RowError(record_ + 1, "unterminated quoted field");
            }
            if (!any) {
                return std::nullopt;
            }
            fields.push_back(std::move(field));
            ++record_;
            return fields;
        }
        any = true;
        const char c = static_cast<char>(ci);

        if (in_quotes) {
            if (c == '"') {
                if (in_.peek() == '"') {
                    in_.get();
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }

        if (c == '"' && field.empty() && !field_was_quoted) {
            in_quotes = true;
            field_was_quoted = true;
        } else if (c == delimiter_) {
            fields.push_back(std::move(field));
            field.clear();
            field_was_quoted = false;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && in_.peek() == '\n') {
                in_.get();
            }
            fields.push_back(std::move(field));
            ++record_;
            return fields;
        } else {
            field.push_back(c);
        }
    }
}

void write_csv_record(std::ostream& out, const std::vector<std::string>& fields, char delimiter) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) {
            out.put(delimiter);
        }
        const std::string& f = fields[i];
        const bool quote = f.find_first_of(std::string{delimiter, '"', '\n', '\r'}) != std::string::npos;
        if (!quote) {
            out << f;
            continue;
        }
        out.put('"');
        for (char c : f) {
            if (c == '"') {
                out.put('"');
            }
            out.put(c);
        }
        out.put('"');
    }
    out.put('\n');
}

}  // namespace overlap
