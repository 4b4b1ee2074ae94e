#include "dvoi/csv.h"
#include "dvoi/errors.h"

#include <fmt/core.h>

#include <charconv>
#include <cmath>

namespace dvoi::csv {

namespace {

std::vector<std::string> split_record(std::istream &in, bool &ok) {
    std::vector<std::string> fields;
    std::string field;
    bool in_quotes = false;
    bool any = false;
    ok = false;
    int c;
    while ((c = in.get()) != EOF) {
        any = true;
        char ch = static_cast<char>(c);
        if (in_quotes) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    field.push_back('"');
                    in.get();
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(ch);
            }
            continue;
        }
        if (ch == '"') {
            in_quotes = true;
        } else if (ch == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (ch == '\r') {
            // tolerated before '\n'
        } else if (ch == '\n') {
            fields.push_back(std::move(field));
            ok = true;
            return fields;
        } else {
            field.push_back(ch);
        }
    }
    if (any) {
        fields.push_back(std::move(field));
        ok = true;
    }
    return fields;
}

} // namespace

std::size_t Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) {
            return i;
        }
    }
    throw SchemaError(fmt::format("missing CSV column '{}'", name));
}

Table read(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError(fmt::format("cannot open '{}'", path.string()));
    }
    Table table;
    bool ok = false;
    table.header = split_record(in, ok);
    if (!ok || table.header.empty()) {
        throw SchemaError(fmt::format("'{}' has no header row", path.string()));
    }
    for (;;) {
        auto rec = split_record(in, ok);
        if (!ok) {
            break;
        }
        if (rec.size() == 1 && rec[0].empty()) {
            continue;
        }
        if (rec.size() != table.header.size()) {
            throw SchemaError(fmt::format("'{}' row {} has {} fields, expected {}", path.string(),
                                          table.rows.size() + 1, rec.size(), table.header.size()));
        }
        table.rows.push_back(std::move(rec));
    }
    return table;
}

double to_double(const std::string &field, std::size_t row, std::string_view column) {
    double value = 0.0;
    const char *first = field.data();
    const char *last = field.data() + field.size();
    while (first < last && *first == ' ') {
        ++first;
    }
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || !std::isfinite(value)) {
        throw SchemaError(fmt::format("row {}: column '{}' is not a number: '{}'", row + 1, column, field));
    }
    return value;
}

long long to_integer(const std::string &field, std::size_t row, std::string_view column) {
    long long value = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw SchemaError(fmt::format("row {}: column '{}' is not an integer: '{}'", row + 1, column, field));
    }
    return value;
}

std::string format_number(double value) { return fmt::format("{}", value); }

Writer::Writer(const std::filesystem::path &path) : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) {
        throw IoError(fmt::format("cannot write '{}'", path.string()));
    }
}

Writer &Writer::field(std::string_view value) {
    if (!first_in_row_) {
        out_.put(',');
    }
    first_in_row_ = false;
    bool quote = value.find_first_of(",\"\n\r") != std::string_view::npos;
    if (!quote) {
        out_ << value;
        return *this;
    }
    out_.put('"');
    for (char ch : value) {
        if (ch == '"') {
            out_.put('"');
        }
        out_.put(ch);
    }
    out_.put('"');
    return *this;
}

Writer &Writer::field(double value) { return field(std::string_view{format_number(value)}); }

Writer &Writer::field(long long value) { return field(std::string_view{fmt::format("{}", value)}); }

void Writer::end_row() {
    out_.put('\n');
    first_in_row_ = true;
    if (!out_) {
        throw IoError("CSV write failed");
    }
}

void Writer::row(const std::vector<std::string> &fields) {
    for (const auto &f : fields) {
        field(std::string_view{f});
    }
    end_row();
}

} // namespace dvoi::csv
