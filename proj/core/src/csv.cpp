#include "glue/csv.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <unordered_map>
#include <utility>

#include "glue/error.hpp"

namespace glue {

namespace {

std::string trim(const std::string& s) {
    const std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line, const std::string& path,
                                    std::size_t line_no) {
    std::vector<std::string> out;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && !field_started) {
            in_quotes = true;
            field_started = true;
        } else if (c == ',') {
            out.push_back(std::move(field));
            field.clear();
            field_started = false;
        } else {
            field += c;
            field_started = true;
        }
    }
    if (in_quotes) throw ParseError(path, static_cast<long>(line_no), "unterminated quoted field");
    out.push_back(std::move(field));
    return out;
}

double parse_number(const std::string& raw, const std::string& path, std::size_t line_no,
                    const std::string& column) {
    const std::string s = trim(raw);
    if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
    const char* begin = s.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end != begin + s.size())
        throw ParseError(path, static_cast<long>(line_no),
                         "non-numeric value '" + s + "' in column '" + column + "'");
    return v;
}

}  // namespace

std::size_t RawTable::missing_count() const {
    std::size_t n = 0;
    for (double v : values)
        if (std::isnan(v)) ++n;
    return n;
}

std::vector<std::pair<std::size_t, std::size_t>> RawTable::trajectories() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < trajectory_starts.size(); ++i) {
        const std::size_t begin = trajectory_starts[i];
        const std::size_t end =
            i + 1 < trajectory_starts.size() ? trajectory_starts[i + 1] : n_rows;
        out.emplace_back(begin, end);
    }
    return out;
}

RawTable load_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");

    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(std::move(line));
    if (in.bad()) throw IoError("read failure on '" + path + "'");
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    if (lines.empty()) throw ParseError(path, 0, "file has no header row");

    const std::vector<std::string> header_raw = split_line(lines[0], path, 1);
    std::vector<std::string> header;
    header.reserve(header_raw.size());
    for (const std::string& h : header_raw) header.push_back(trim(h));

    std::unordered_map<std::string, std::size_t> col_index;
    for (std::size_t i = 0; i < header.size(); ++i) col_index.emplace(header[i], i);

    auto resolve = [&](const std::string& name) {
        auto it = col_index.find(name);
        if (it == col_index.end())
            throw ParseError(path, 1, "declared column '" + name + "' not found in header");
        return it->second;
    };

    constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    const std::size_t time_col = schema.time_column ? resolve(*schema.time_column) : kNone;
    const std::size_t label_col = schema.label_column ? resolve(*schema.label_column) : kNone;
    const std::size_t traj_col =
        schema.trajectory_column ? resolve(*schema.trajectory_column) : kNone;

    RawTable table;
    std::vector<std::size_t> sensor_cols;
    if (schema.sensor_columns.empty()) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i == time_col || i == label_col || i == traj_col) continue;
            sensor_cols.push_back(i);
            table.sensor_names.push_back(header[i]);
        }
    } else {
        for (const std::string& name : schema.sensor_columns) {
            sensor_cols.push_back(resolve(name));
            table.sensor_names.push_back(name);
        }
    }
    if (sensor_cols.empty()) throw ParseError(path, 1, "no sensor columns in header");

    const std::size_t n_sensors = sensor_cols.size();
    table.n_rows = lines.size() - 1;
    table.values.resize(table.n_rows * n_sensors);
    if (label_col != kNone) table.labels.resize(table.n_rows);

    std::string prev_traj;
    for (std::size_t r = 0; r < table.n_rows; ++r) {
        const std::size_t line_no = r + 2;  // 1-based, after the header
        const std::vector<std::string> fields = split_line(lines[r + 1], path, line_no);
        if (fields.size() != header.size())
            throw ParseError(path, static_cast<long>(line_no),
                             "expected " + std::to_string(header.size()) + " fields, got " +
                                 std::to_string(fields.size()));
        for (std::size_t j = 0; j < n_sensors; ++j)
            table.values[r * n_sensors + j] =
                parse_number(fields[sensor_cols[j]], path, line_no, table.sensor_names[j]);
        if (label_col != kNone) {
            const double v = parse_number(fields[label_col], path, line_no, header[label_col]);
            if (std::isnan(v))
                throw ParseError(path, static_cast<long>(line_no),
                                 "blank label cell in column '" + header[label_col] + "'");
            table.labels[r] = v != 0.0 ? 1 : 0;
        }
        if (traj_col != kNone) {
            const std::string id = trim(fields[traj_col]);
            if (r == 0 || id != prev_traj) table.trajectory_starts.push_back(r);
            prev_traj = id;
        }
    }
    if (table.n_rows > 0 && table.trajectory_starts.empty()) table.trajectory_starts.push_back(0);
    return table;
}

}  // namespace glue
