#include "svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace a4nt::plot {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '&') out += "&amp;";
        else out += c;
    }
    return out;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

}  // namespace

std::size_t Table::column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::invalid_argument("column '" + name + "' not in CSV");
    return std::size_t(it - header.begin());
}

std::vector<double> Table::numbers(std::size_t c) const {
    std::vector<double> out;
    for (const auto& r : rows) {
        if (c >= r.size() || r[c].empty()) {
            out.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        try {
            out.push_back(std::stod(r[c]));
        } catch (const std::exception&) {
            out.push_back(std::numeric_limits<double>::quiet_NaN());
        }
    }
    return out;
}

Table read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read CSV " + path);
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("CSV " + path + " is empty");
    t.header = split_line(line);
    while (std::getline(in, line))
        if (!line.empty()) t.rows.push_back(split_line(line));
    return t;
}

std::string render_svg(const Table& table, const ChartSpec& spec) {
    const double W = 640, H = 400, left = 60, right = 20, top = 40, bottom = 50;
    const auto xs = table.numbers(table.column(spec.x));
    std::vector<std::vector<double>> ys;
    for (const auto& name : spec.y) ys.push_back(table.numbers(table.column(name)));

    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (double x : xs)
        if (std::isfinite(x)) x0 = std::min(x0, x), x1 = std::max(x1, x);
    for (const auto& col : ys)
        for (double y : col)
            if (std::isfinite(y)) y0 = std::min(y0, y), y1 = std::max(y1, y);
    if (!std::isfinite(x0) || !std::isfinite(y0)) throw std::runtime_error("no numeric data to plot");
    if (spec.bars) y0 = std::min(y0, 0.0);
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * (W - left - right); };
    auto py = [&](double y) { return H - bottom - (y - y0) / (y1 - y0) * (H - top - bottom); };

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(spec.title)
      << "</text>\n";
    s << "<line x1=\"" << left << "\" y1=\"" << H - bottom << "\" x2=\"" << W - right << "\" y2=\"" << H - bottom
      << "\" stroke=\"black\"/>\n";
    s << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << H - bottom
      << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = x0 + (x1 - x0) * i / 4, yv = y0 + (y1 - y0) * i / 4;
        s << "<text x=\"" << px(xv) << "\" y=\"" << H - bottom + 16 << "\" text-anchor=\"middle\">" << num(xv)
          << "</text>\n";
        s << "<text x=\"" << left - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << num(yv)
          << "</text>\n";
    }
    s << "<text x=\"" << (left + W - right) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">"
      << escape(spec.x) << "</text>\n";

    for (std::size_t k = 0; k < ys.size(); ++k) {
        const char* color = kColors[k % 6];
        if (spec.bars) {
            const double width = (W - left - right) / std::max<std::size_t>(xs.size(), 1) / double(ys.size()) * 0.9;
            for (std::size_t i = 0; i < xs.size(); ++i) {
                if (!std::isfinite(xs[i]) || !std::isfinite(ys[k][i])) continue;
                const double top_y = py(std::max(ys[k][i], 0.0)), base = py(std::min(ys[k][i], 0.0));
                s << "<rect x=\"" << px(xs[i]) - width / 2 + double(k) * width << "\" y=\"" << top_y
                  << "\" width=\"" << width << "\" height=\"" << base - top_y << "\" fill=\"" << color << "\"/>\n";
            }
        } else {
            s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
            for (std::size_t i = 0; i < xs.size(); ++i)
                if (std::isfinite(xs[i]) && std::isfinite(ys[k][i])) s << px(xs[i]) << ',' << py(ys[k][i]) << ' ';
            s << "\"/>\n";
        }
        s << "<text x=\"" << W - right - 4 << "\" y=\"" << top + 14 * double(k + 1) << "\" text-anchor=\"end\" fill=\""
          << color << "\">" << escape(spec.y[k]) << "</text>\n";
    }
    s << "</svg>\n";
    return s.str();
}

}  // namespace a4nt::plot
