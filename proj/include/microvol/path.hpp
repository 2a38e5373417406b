#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace microvol {

/// A path sampled at increasing times. Between samples the path is read as
/// piecewise constant and right-continuous.
template <class Value>
struct SampledPath {
    std::vector<double> times;
    std::vector<Value> values;

    std::size_t size() const noexcept { return times.size(); }
    bool empty() const noexcept { return times.empty(); }
};

using PathGrid = SampledPath<double>;
using VectorPathGrid = SampledPath<std::array<double, 2>>;

/// `points` equally spaced times on [start, end], both ends included.
std::vector<double> uniform_times(std::size_t points, double start = 0.0, double end = 1.0);

/// Step of a uniform grid; throws if the spacing is not uniform to `rel_tol`.
double uniform_step(const std::vector<double>& times, double rel_tol = 1e-9);

/// Last value at or before t; `before_first` when t precedes every sample.
double value_at(const PathGrid& p, double t, double before_first = 0.0);

/// Checks matching lengths and sorted times.
void check_path(const PathGrid& p);
void check_path(const VectorPathGrid& p);

/// Component i of a vector path.
PathGrid component(const VectorPathGrid& p, int i);

/// CSV with header `t,<name>` (or one column per name).
void write_csv(std::ostream& os, const PathGrid& p, const std::string& value_name = "value");
void write_csv(std::ostream& os, const VectorPathGrid& p, const std::string& first = "plus",
               const std::string& second = "minus");
/// Several scalar paths sharing one time axis.
void write_csv(std::ostream& os, const std::vector<double>& times, const std::vector<const std::vector<double>*>& columns,
               const std::vector<std::string>& names);

/// Reads the first two columns (time, value) of a CSV with a header row;
/// `column` selects a value column other than the first.
PathGrid read_path_csv(std::istream& is, std::size_t column = 1);
PathGrid read_path_csv(const std::string& filename, std::size_t column = 1);

}  // namespace microvol
