#pragma once

#include "thinlimit/geometry.hpp"
#include "thinlimit/report.hpp"

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace thinlimit {

/// Shortest decimal string that parses back to the same double.
/// Non-finite values print as inf, -inf, nan.
std::string format_double(double v);

/// Comma-separated table with a fixed header. Fields containing commas,
/// quotes or newlines are quoted.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);
    void add_row(std::vector<std::string> fields);
    void write(std::ostream& out) const;
    void write(const std::filesystem::path& path) const;
    std::size_t rows() const { return rows_.size(); }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/// Wavefront-style vertex list: one "v x y z" line per column of `points`,
/// then "f a b c" triangles (1-based) for two-dimensional meshes or "l a b"
/// segments for curves.
void write_mesh(std::ostream& out, const SurfaceMesh& mesh, const Eigen::MatrixXd& points);
void write_mesh(const std::filesystem::path& path, const SurfaceMesh& mesh, const Eigen::MatrixXd& points);

/// One JSON object per line: {"iter":..,"energy":..,"grad_norm":..,"violation":..}.
std::string trace_line(const TraceRecord& record);
void write_trace(const std::filesystem::path& path, const std::vector<TraceRecord>& trace);

}  // namespace thinlimit
