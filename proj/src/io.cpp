#include "thinlimit/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

namespace thinlimit {

std::string format_double(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvWriter::add_row(std::vector<std::string> fields)
{
    if (fields.size() != header_.size()) throw ConfigError("CsvWriter: row width does not match header");
    rows_.push_back(std::move(fields));
}

namespace {

void write_field(std::ostream& out, const std::string& f)
{
    if (f.find_first_of(",\"\n") == std::string::npos) {
        out << f;
        return;
    }
    out << '"';
    for (char c : f) {
        if (c == '"') out << '"';
        out << c;
    }
    out << '"';
}

void write_line(std::ostream& out, const std::vector<std::string>& fields)
{
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        write_field(out, fields[i]);
    }
    out << '\n';
}

std::ofstream open_out(const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    return out;
}

}  // namespace

void CsvWriter::write(std::ostream& out) const
{
    write_line(out, header_);
    for (const auto& r : rows_) write_line(out, r);
}

void CsvWriter::write(const std::filesystem::path& path) const
{
    auto out = open_out(path);
    write(out);
}

void write_mesh(std::ostream& out, const SurfaceMesh& mesh, const Eigen::MatrixXd& points)
{
    if (points.cols() != mesh.size()) throw ConfigError("write_mesh: point count does not match mesh");
    for (Eigen::Index i = 0; i < points.cols(); ++i) {
        out << 'v';
        for (Eigen::Index r = 0; r < points.rows(); ++r) out << ' ' << format_double(points(r, i));
        out << '\n';
    }
    if (mesh.chart_dim == 1) {
        for (int i = 0; i + 1 < mesh.size(); ++i) out << "l " << i + 1 << ' ' << i + 2 << '\n';
    } else if (mesh.chart_dim == 2) {
        for (int j = 0; j + 1 < mesh.counts[1]; ++j)
            for (int i = 0; i + 1 < mesh.counts[0]; ++i) {
                const int a = mesh.index({i, j}) + 1, b = mesh.index({i + 1, j}) + 1;
                const int c = mesh.index({i + 1, j + 1}) + 1, d = mesh.index({i, j + 1}) + 1;
                out << "f " << a << ' ' << b << ' ' << c << '\n';
                out << "f " << a << ' ' << c << ' ' << d << '\n';
            }
    }
}

void write_mesh(const std::filesystem::path& path, const SurfaceMesh& mesh, const Eigen::MatrixXd& points)
{
    auto out = open_out(path);
    write_mesh(out, mesh, points);
}

namespace {

std::string json_number(double v)
{
    return std::isfinite(v) ? format_double(v) : "null";
}

}  // namespace

std::string trace_line(const TraceRecord& r)
{
    return "{\"iter\":" + std::to_string(r.iter) + ",\"energy\":" + json_number(r.energy) +
           ",\"grad_norm\":" + json_number(r.grad_norm) + ",\"violation\":" + json_number(r.violation) + "}";
}

void write_trace(const std::filesystem::path& path, const std::vector<TraceRecord>& trace)
{
    auto out = open_out(path);
    for (const auto& r : trace) out << trace_line(r) << '\n';
}

}  // namespace thinlimit
