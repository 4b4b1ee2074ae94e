#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace dvoi::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index by name; throws SchemaError when absent.
    std::size_t column(std::string_view name) const;
};

/// Reads an RFC-4180 style CSV file with a header row.
Table read(const std::filesystem::path &path);

/// Parses a numeric field; throws SchemaError naming the row/column on failure.
double to_double(const std::string &field, std::size_t row, std::string_view column);
long long to_integer(const std::string &field, std::size_t row, std::string_view column);

/// Streaming RFC-4180 writer. Numbers are written in shortest round-trip form.
class Writer {
  public:
    explicit Writer(const std::filesystem::path &path);

    Writer &field(std::string_view value);
    Writer &field(double value);
    Writer &field(long long value);
    Writer &field(std::size_t value) { return field(static_cast<long long>(value)); }
    Writer &field(int value) { return field(static_cast<long long>(value)); }
    void end_row();

    void row(const std::vector<std::string> &fields);

  private:
    std::ofstream out_;
    bool first_in_row_{true};
};

std::string format_number(double value);

} // namespace dvoi::csv
