// csv.hpp — CSV emission with metadata header lines.
//
// Files carry '#'-prefixed metadata lines, then an RFC-4180 header row and
// numeric records. Floating point is serialized with 17 significant digits
// through std::to_chars, so the numeric payload is locale-independent and
// round-trips exactly.

#pragma once

#include <string>
#include <vector>

namespace specdiff {

struct Table {
    std::vector<std::string> meta;     // emitted as "# <line>"
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

std::string format_double(double value);
double parse_double(const std::string& field);

std::string to_csv(const Table& table);
void emit_csv(const Table& table, const std::string& path);
Table read_csv(const std::string& path);

}  // namespace specdiff
