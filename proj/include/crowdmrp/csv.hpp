#pragma once
// Minimal RFC-4180 style CSV reading/writing with schema (header) checks.

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace crowdmrp {

class SchemaError : public std::runtime_error {
public:
    SchemaError(const std::string& file, std::size_t line, const std::string& column,
                const std::string& what);
    const std::string& file() const { return file_; }
    std::size_t line() const { return line_; }
    const std::string& column() const { return column_; }

private:
    std::string file_;
    std::size_t line_;
    std::string column_;
};

struct CsvRow {
    std::size_t line = 0;  // 1-based physical line of the record
    std::vector<std::string> fields;
};

class CsvTable {
public:
    // Reads `path`, requiring the header to contain exactly `required` plus any of
    // `optional`; unknown columns are rejected.
    static CsvTable read(const std::string& path, const std::vector<std::string>& required,
                         const std::vector<std::string>& optional = {});
    static CsvTable parse(std::istream& in, const std::string& name,
                          const std::vector<std::string>& required,
                          const std::vector<std::string>& optional = {});

    const std::string& name() const { return name_; }
    const std::vector<CsvRow>& rows() const { return rows_; }
    bool has_column(std::string_view col) const;
    // Field of `row` under `col`; empty string when the column is absent.
    const std::string& get(const CsvRow& row, std::string_view col) const;

    double get_double(const CsvRow& row, std::string_view col) const;
    long long get_int(const CsvRow& row, std::string_view col) const;
    [[noreturn]] void fail(const CsvRow& row, std::string_view col, const std::string& what) const;

private:
    std::string name_;
    std::vector<std::string> header_;
    std::vector<CsvRow> rows_;
};

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}
    void row(const std::vector<std::string>& fields);

private:
    std::ostream& out_;
};

// Shortest round-trippable decimal representation.
std::string format_double(double v);
// Fixed number of significant digits, for human-facing report columns.
std::string format_double(double v, int precision);

}  // namespace crowdmrp
