#include "crowdmrp/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace crowdmrp {

SchemaError::SchemaError(const std::string& file, std::size_t line, const std::string& column,
                         const std::string& what)
    : std::runtime_error(file + ":" + std::to_string(line) +
                         (column.empty() ? std::string() : " column '" + column + "'") + ": " +
                         what),
      file_(file), line_(line), column_(column) {}

namespace {

// Splits one logical record; handles quoted fields spanning lines.
bool read_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line) {
    fields.clear();
    std::string field;
    bool in_quotes = false;
    bool any = false;
    char c;
    while (in.get(c)) {
        any = true;
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field += '"';
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
            continue;
        }
        if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\r') {
            continue;
        } else if (c == '\n') {
            ++line;
            fields.push_back(std::move(field));
            return true;
        } else {
            field += c;
        }
    }
    if (!any) return false;
    fields.push_back(std::move(field));
    return true;
}

}  // namespace

CsvTable CsvTable::read(const std::string& path, const std::vector<std::string>& required,
                        const std::vector<std::string>& optional) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError(path, 0, "", "cannot open file");
    return parse(in, path, required, optional);
}

CsvTable CsvTable::parse(std::istream& in, const std::string& name,
                         const std::vector<std::string>& required,
                         const std::vector<std::string>& optional) {
    CsvTable t;
    t.name_ = name;
    std::size_t line = 0;
    std::vector<std::string> fields;
    if (!read_record(in, fields, line)) throw SchemaError(name, 1, "", "missing header row");
    if (!fields.empty() && fields[0].starts_with("\xEF\xBB\xBF")) fields[0].erase(0, 3);
    t.header_ = fields;
    for (const auto& col : t.header_) {
        const bool known = std::find(required.begin(), required.end(), col) != required.end() ||
                           std::find(optional.begin(), optional.end(), col) != optional.end();
        if (!known) throw SchemaError(name, 1, col, "unknown column");
        if (std::count(t.header_.begin(), t.header_.end(), col) > 1)
            throw SchemaError(name, 1, col, "duplicate column");
    }
    for (const auto& col : required)
        if (!t.has_column(col)) throw SchemaError(name, 1, col, "missing required column");

    std::size_t start = line + 1;
    while (read_record(in, fields, line)) {
        if (fields.size() == 1 && fields[0].empty()) {
            start = line + 1;
            continue;
        }
        if (fields.size() != t.header_.size())
            throw SchemaError(name, start, "",
                              "expected " + std::to_string(t.header_.size()) + " fields, got " +
                                  std::to_string(fields.size()));
        t.rows_.push_back({start, fields});
        start = line + 1;
    }
    return t;
}

bool CsvTable::has_column(std::string_view col) const {
    return std::find(header_.begin(), header_.end(), col) != header_.end();
}

const std::string& CsvTable::get(const CsvRow& row, std::string_view col) const {
    static const std::string empty;
    auto it = std::find(header_.begin(), header_.end(), col);
    if (it == header_.end()) return empty;
    return row.fields[static_cast<std::size_t>(it - header_.begin())];
}

double CsvTable::get_double(const CsvRow& row, std::string_view col) const {
    const std::string& s = get(row, col);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
        fail(row, col, "expected a real number, got '" + s + "'");
    return v;
}

long long CsvTable::get_int(const CsvRow& row, std::string_view col) const {
    const std::string& s = get(row, col);
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
        fail(row, col, "expected an integer, got '" + s + "'");
    return v;
}

void CsvTable::fail(const CsvRow& row, std::string_view col, const std::string& what) const {
    throw SchemaError(name_, row.line, std::string(col), what);
}

void CsvWriter::row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out_ << ',';
        const std::string& f = fields[i];
        if (f.find_first_of(",\"\n\r") != std::string::npos) {
            out_ << '"';
            for (char c : f) {
                if (c == '"') out_ << '"';
                out_ << c;
            }
            out_ << '"';
        } else {
            out_ << f;
        }
    }
    out_ << '\n';
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

std::string format_double(double v, int precision) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, precision);
    return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

}  // namespace crowdmrp
