#pragma once

#include <string>
#include <vector>

namespace a4nt::plot {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const;
    /// Numeric values of a column; empty cells become NaN.
    std::vector<double> numbers(std::size_t column) const;
};

Table read_csv(const std::string& path);

struct ChartSpec {
    std::string title;
    std::string x;
    std::vector<std::string> y;
    bool bars = false;
};

/// Line (or bar) chart of the y columns against x as a standalone SVG.
std::string render_svg(const Table& table, const ChartSpec& spec);

}  // namespace a4nt::plot
