#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace cfet::harness
{

/// 17 significant digits, "nan" and "inf" spelled out.
inline std::string format_double(double x)
{
    if (std::isnan(x))
        return "nan";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// Quotes a field when it holds a comma, quote or line break.
inline std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n\r") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + '"';
}

using Cell = std::variant<double, long long, std::string>;

/// Comma-separated rows with a header, LF line endings. The column count of
/// every row must match the header.
class CsvWriter
{
public:
    CsvWriter(std::ostream& out, std::vector<std::string> columns) : out_(out), n_(columns.size())
    {
        write_line(columns);
    }

    void row(const std::vector<Cell>& cells)
    {
        if (cells.size() != n_)
            throw std::logic_error("CsvWriter: row has " + std::to_string(cells.size()) + " cells, header has " +
                                   std::to_string(n_));
        std::vector<std::string> text;
        text.reserve(cells.size());
        for (const auto& c : cells) {
            if (auto d = std::get_if<double>(&c))
                text.push_back(format_double(*d));
            else if (auto i = std::get_if<long long>(&c))
                text.push_back(std::to_string(*i));
            else
                text.push_back(std::get<std::string>(c));
        }
        write_line(text);
    }

    void flush() { out_.flush(); }

private:
    void write_line(const std::vector<std::string>& fields)
    {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i)
                out_ << ',';
            out_ << csv_field(fields[i]);
        }
        out_ << '\n';
    }

    std::ostream& out_;
    std::size_t n_;
};

} // namespace cfet::harness
