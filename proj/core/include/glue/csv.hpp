#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace glue {

// Declares how the columns of a delimited file map onto the toolkit's notion
// of a multivariate series. Columns not captured by any role are an error
// only when listed explicitly; with an empty `sensor_columns` every column
// that is not the time/label/trajectory column becomes a sensor, in file
// order.
struct CsvSchema {
    std::optional<std::string> time_column;
    std::optional<std::string> label_column;
    std::optional<std::string> trajectory_column;
    std::vector<std::string> sensor_columns;
};

// A parsed file before preprocessing. Missing sensor cells are marked with
// quiet NaN. Labels, when present, are collapsed to {0,1} (any nonzero class
// counts as anomalous). Rows are grouped into trajectories by consecutive
// runs of the trajectory column; without one the whole table is a single
// trajectory.
struct RawTable {
    std::vector<std::string> sensor_names;
    std::size_t n_rows = 0;
    std::vector<double> values;                  // row-major n_rows x n_sensors
    std::vector<int> labels;                     // empty when no label column
    std::vector<std::size_t> trajectory_starts;  // {0, ...} when n_rows > 0

    std::size_t n_sensors() const { return sensor_names.size(); }
    double& at(std::size_t r, std::size_t c) { return values[r * n_sensors() + c]; }
    const double& at(std::size_t r, std::size_t c) const { return values[r * n_sensors() + c]; }
    std::size_t missing_count() const;
    // [begin, end) row ranges, one per trajectory
    std::vector<std::pair<std::size_t, std::size_t>> trajectories() const;
};

// Reads a comma-separated file with a header row. Blank sensor cells become
// missing markers; a non-numeric, non-blank sensor cell raises ParseError
// with the 1-based file line number. Quoted fields (RFC 4180 style) are
// supported.
RawTable load_csv(const std::string& path, const CsvSchema& schema = {});

}  // namespace glue
