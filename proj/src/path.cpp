#include "microvol/path.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "microvol/error.hpp"

namespace microvol {

std::vector<double> uniform_times(std::size_t points, double start, double end) {
    if (points < 2) throw Error("a uniform grid needs at least two points");
    std::vector<double> t(points);
    const double h = (end - start) / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) t[i] = start + h * static_cast<double>(i);
    t.back() = end;
    return t;
}

double uniform_step(const std::vector<double>& times, double rel_tol) {
    if (times.size() < 2) throw Error("grid has fewer than two points");
    const double h = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    if (!(h > 0.0)) throw Error("grid times must be increasing");
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (std::abs((times[i] - times[i - 1]) - h) > rel_tol * h + 1e-14) {
            throw Error("grid is not uniform");
        }
    }
    return h;
}

double value_at(const PathGrid& p, double t, double before_first) {
    auto it = std::upper_bound(p.times.begin(), p.times.end(), t);
    if (it == p.times.begin()) return before_first;
    return p.values[static_cast<std::size_t>(it - p.times.begin()) - 1];
}

namespace {

template <class V>
void check_impl(const SampledPath<V>& p) {
    if (p.times.size() != p.values.size()) throw Error("path times and values differ in length");
    if (!std::is_sorted(p.times.begin(), p.times.end())) throw Error("path times are not sorted");
}

}  // namespace

void check_path(const PathGrid& p) { check_impl(p); }
void check_path(const VectorPathGrid& p) { check_impl(p); }

PathGrid component(const VectorPathGrid& p, int i) {
    PathGrid out;
    out.times = p.times;
    out.values.reserve(p.values.size());
    for (const auto& v : p.values) out.values.push_back(v[static_cast<std::size_t>(i)]);
    return out;
}

void write_csv(std::ostream& os, const PathGrid& p, const std::string& value_name) {
    write_csv(os, p.times, {&p.values}, {value_name});
}

void write_csv(std::ostream& os, const VectorPathGrid& p, const std::string& first, const std::string& second) {
    os << "t," << first << ',' << second << '\n';
    os << std::setprecision(17);
    for (std::size_t i = 0; i < p.size(); ++i) {
        os << p.times[i] << ',' << p.values[i][0] << ',' << p.values[i][1] << '\n';
    }
}

void write_csv(std::ostream& os, const std::vector<double>& times, const std::vector<const std::vector<double>*>& columns,
               const std::vector<std::string>& names) {
    if (columns.size() != names.size()) throw Error("column/name count mismatch");
    for (const auto* c : columns) {
        if (c->size() != times.size()) throw Error("column length differs from time axis");
    }
    os << 't';
    for (const auto& n : names) os << ',' << n;
    os << '\n' << std::setprecision(17);
    for (std::size_t i = 0; i < times.size(); ++i) {
        os << times[i];
        for (const auto* c : columns) os << ',' << (*c)[i];
        os << '\n';
    }
}

PathGrid read_path_csv(std::istream& is, std::size_t column) {
    if (column == 0) throw Error("value column must be >= 1");
    std::string line;
    if (!std::getline(is, line)) throw Error("empty CSV input");
    PathGrid p;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> cells;
        while (std::getline(ss, cell, ',')) {
            try {
                cells.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw Error("non-numeric CSV cell on line " + std::to_string(lineno));
            }
        }
        if (cells.size() <= column) throw Error("CSV line " + std::to_string(lineno) + " has too few columns");
        p.times.push_back(cells[0]);
        p.values.push_back(cells[column]);
    }
    check_path(p);
    return p;
}

PathGrid read_path_csv(const std::string& filename, std::size_t column) {
    std::ifstream in(filename);
    if (!in) throw Error("cannot open '" + filename + "'");
    return read_path_csv(in, column);
}

}  // namespace microvol
