// csv.cpp — CSV writer/reader for numeric tables.

#include "specdiff/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace specdiff {

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value,
                                   std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& field) {
    double value = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    const auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc())
        throw std::invalid_argument("csv: cannot parse numeric field '" + field + "'");
    return value;
}

std::string to_csv(const Table& table) {
    std::ostringstream out;
    for (const auto& line : table.meta) out << "# " << line << "\n";
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        if (c) out << ",";
        out << table.columns[c];
    }
    out << "\n";
    for (const auto& row : table.rows) {
        if (row.size() != table.columns.size())
            throw std::invalid_argument("csv: row width does not match the column count");
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out << ",";
            out << format_double(row[c]);
        }
        out << "\n";
    }
    return out.str();
}

void emit_csv(const Table& table, const std::string& path) {
    std::ofstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("csv: cannot open '" + path + "' for writing");
    file << to_csv(table);
    if (!file) throw std::runtime_error("csv: write failed for '" + path + "'");
}

Table read_csv(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("csv: cannot open '" + path + "' for reading");
    Table table;
    std::string line;
    bool have_header = false;
    while (std::getline(file, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::size_t start = 1;
            if (start < line.size() && line[start] == ' ') ++start;
            table.meta.push_back(line.substr(start));
            continue;
        }
        std::vector<std::string> fields;
        std::size_t pos = 0;
        while (true) {
            const std::size_t comma = line.find(',', pos);
            fields.push_back(line.substr(pos, comma == std::string::npos ? comma : comma - pos));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (!have_header) {
            table.columns = std::move(fields);
            have_header = true;
        } else {
            std::vector<double> row;
            row.reserve(fields.size());
            for (const auto& f : fields) row.push_back(parse_double(f));
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

}  // namespace specdiff
