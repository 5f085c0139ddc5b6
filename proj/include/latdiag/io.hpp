#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "latdiag/error.hpp"
#include "latdiag/matrix.hpp"

namespace latdiag::io {

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split_line(const std::string& line, char delim = ',') {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(delim, start);
        if (pos == std::string::npos) {
            out.push_back(trim(std::string_view(line).substr(start)));
            break;
        }
        out.push_back(trim(std::string_view(line).substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

inline double parse_double(const std::string& cell, std::size_t row,
                           const std::string& col_name) {
    double v = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end || cell.empty()) {
        throw DataError("non-numeric cell \"" + cell + "\" at row " +
                        std::to_string(row) + ", column \"" + col_name + "\"");
    }
    return v;
}

// 17 significant digits round-trips any IEEE-754 double exactly.
inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void put_u32_le(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
    out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

inline std::uint32_t get_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) |
           (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void put_f64_le(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
    }
}

inline double get_f64_le(const unsigned char* p) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
        bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    }
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return std::move(buf).str();
}

inline void write_file(const std::string& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open file for writing: " + path);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw DataError("write failed: " + path);
}

} // namespace detail

// Parses a header+rows CSV of decimal floats. Data rows are numbered from 1
// in error messages (the header is row 0).
inline std::pair<std::vector<std::string>, Matrix> load_csv_matrix(
    const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty file");
    const std::vector<std::string> header = detail::split_line(line);
    if (header.empty() || (header.size() == 1 && header[0].empty())) {
        throw DataError(path + ": empty header");
    }
    const std::size_t cols = header.size();

    std::vector<double> values;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        const std::vector<std::string> cells = detail::split_line(line);
        ++rows;
        if (cells.size() != cols) {
            throw DataError(path + ": row " + std::to_string(rows) + " has " +
                            std::to_string(cells.size()) + " cells, header has " +
                            std::to_string(cols));
        }
        for (std::size_t c = 0; c < cols; ++c) {
            values.push_back(detail::parse_double(cells[c], rows, header[c]));
        }
    }
    if (rows == 0) throw DataError(path + ": empty body");
    Matrix m;
    m.rows = rows;
    m.cols = cols;
    m.values = std::move(values);
    return {header, std::move(m)};
}

inline RepresentationSet load_repr_csv(const std::string& path) {
    auto [names, m] = load_csv_matrix(path);
    return RepresentationSet{std::move(m), std::move(names)};
}

inline FactorSet load_factors_csv(const std::string& path) {
    auto [names, m] = load_csv_matrix(path);
    return FactorSet{std::move(m), std::move(names)};
}

inline void save_csv_matrix(const std::string& path,
                            const std::vector<std::string>& header,
                            const Matrix& m) {
    if (header.size() != m.cols) {
        throw DataError("save_csv: header size does not match column count");
    }
    std::string out;
    for (std::size_t c = 0; c < m.cols; ++c) {
        if (c > 0) out.push_back(',');
        out += header[c];
    }
    out.push_back('\n');
    for (std::size_t r = 0; r < m.rows; ++r) {
        for (std::size_t c = 0; c < m.cols; ++c) {
            if (c > 0) out.push_back(',');
            out += detail::format_double(m.at(r, c));
        }
        out.push_back('\n');
    }
    detail::write_file(path, out);
}

// Binary matrix format: magic "LDM1", u32 LE row count, u32 LE column count,
// then rows*cols doubles, little-endian IEEE-754, row-major.
inline constexpr char kBinMagic[4] = {'L', 'D', 'M', '1'};

inline void save_bin(const Matrix& m, const std::string& path) {
    if (m.rows == 0 || m.cols == 0) {
        throw DataError("save_bin: matrix must be non-empty");
    }
    if (m.rows > 0xFFFFFFFFull || m.cols > 0xFFFFFFFFull) {
        throw DataError("save_bin: shape exceeds format limits");
    }
    std::string out;
    out.reserve(12 + 8 * m.values.size());
    out.append(kBinMagic, 4);
    detail::put_u32_le(out, static_cast<std::uint32_t>(m.rows));
    detail::put_u32_le(out, static_cast<std::uint32_t>(m.cols));
    for (double v : m.values) detail::put_f64_le(out, v);
    detail::write_file(path, out);
}

inline Matrix load_bin(const std::string& path) {
    const std::string data = detail::read_file(path);
    if (data.size() < 12) throw DataError(path + ": truncated header");
    if (std::memcmp(data.data(), kBinMagic, 4) != 0) {
        throw DataError(path + ": bad magic");
    }
    const auto* p = reinterpret_cast<const unsigned char*>(data.data());
    const std::uint32_t rows = detail::get_u32_le(p + 4);
    const std::uint32_t cols = detail::get_u32_le(p + 8);
    if (rows == 0 || cols == 0) {
        throw DataError(path + ": zero row or column count");
    }
    const std::size_t expect = 12 + 8ull * rows * cols;
    if (data.size() < expect) {
        throw DataError(path + ": truncated payload (expected " +
                        std::to_string(expect) + " bytes, got " +
                        std::to_string(data.size()) + ")");
    }
    if (data.size() > expect) {
        throw DataError(path + ": trailing data after payload");
    }
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.values.size(); ++i) {
        m.values[i] = detail::get_f64_le(p + 12 + 8 * i);
    }
    return m;
}

// Partition config: one "name,start,end_exclusive" line per factor.
// Blank lines and lines starting with '#' are ignored.
inline FactorPartition load_partition(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    FactorPartition p;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        const std::vector<std::string> parts = detail::split_line(t);
        if (parts.size() != 3) {
            throw DataError(path + ": line " + std::to_string(line_no) +
                            ": expected \"name,start,end_exclusive\"");
        }
        PartitionEntry e;
        e.factor_name = parts[0];
        try {
            e.dim_start = std::stoul(parts[1]);
            e.dim_end = std::stoul(parts[2]);
        } catch (const std::exception&) {
            throw DataError(path + ": line " + std::to_string(line_no) +
                            ": non-integer dimension index");
        }
        p.entries.push_back(std::move(e));
    }
    check_partition(p);
    return p;
}

} // namespace latdiag::io
