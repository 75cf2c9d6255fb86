#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "softdtw/types.hpp"

namespace softdtw {

class IoError : public Error {
  public:
    using Error::Error;
};

// Text series format: one timestep per row, D comma-separated values, '#'
// comment lines allowed, no header row.

template <class T>
SeriesBatch<T> read_series_csv(const std::string &path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<T> values;
    std::size_t dim = 0, rows = 0, lineno = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t start = line.find_first_not_of(" \t\r");
        if (start == std::string::npos || line[start] == '#') continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t cols = 0;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                const double v = std::stod(cell, &used);
                while (used < cell.size() &&
                       (cell[used] == ' ' || cell[used] == '\t' ||
                        cell[used] == '\r'))
                    ++used;
                if (used != cell.size()) throw std::invalid_argument(cell);
                values.push_back(static_cast<T>(v));
            } catch (const std::exception &) {
                throw IoError(path + ":" + std::to_string(lineno) +
                              ": cannot parse value '" + cell + "'");
            }
            ++cols;
        }
        if (dim == 0)
            dim = cols;
        else if (cols != dim)
            throw IoError(path + ":" + std::to_string(lineno) + ": expected " +
                          std::to_string(dim) + " columns, got " +
                          std::to_string(cols));
        ++rows;
    }
    if (rows == 0) throw IoError(path + ": no data rows");
    return SeriesBatch<T>(std::move(values), 1, rows, dim);
}

template <class T>
void write_series_csv(const std::string &path, const SeriesBatch<T> &s,
                      std::size_t b = 0)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.precision(17);
    for (std::size_t t = 0; t < s.length(); ++t) {
        for (std::size_t k = 0; k < s.feature_dim(); ++k) {
            if (k) out << ',';
            out << s.at(b, t, k);
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

// Binary series format, bit-exact: magic "SDTW", version byte 1, then three
// little-endian uint32 (L, D, scalar width in bytes: 4 or 8), then L*D
// scalars little-endian row-major.

namespace detail {

inline void put_u32_le(std::ostream &out, std::uint32_t v)
{
    std::array<unsigned char, 4> b{
        static_cast<unsigned char>(v & 0xff),
        static_cast<unsigned char>((v >> 8) & 0xff),
        static_cast<unsigned char>((v >> 16) & 0xff),
        static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char *>(b.data()), 4);
}

inline std::uint32_t get_u32_le(std::istream &in, const std::string &path)
{
    std::array<unsigned char, 4> b{};
    in.read(reinterpret_cast<char *>(b.data()), 4);
    if (!in) throw IoError(path + ": truncated header");
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) |
           (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
}

}  // namespace detail

template <class T>
void write_series_binary(const std::string &path, const SeriesBatch<T> &s,
                         std::size_t b = 0)
{
    static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write("SDTW", 4);
    out.put(char(1));
    detail::put_u32_le(out, static_cast<std::uint32_t>(s.length()));
    detail::put_u32_le(out, static_cast<std::uint32_t>(s.feature_dim()));
    detail::put_u32_le(out, static_cast<std::uint32_t>(sizeof(T)));
    const T *base = s.element(b, 0);
    // Scalars are IEEE and the writer targets little-endian hosts.
    out.write(reinterpret_cast<const char *>(base),
              static_cast<std::streamsize>(s.length() * s.feature_dim() *
                                           sizeof(T)));
    if (!out) throw IoError("write failed: " + path);
}

template <class T>
SeriesBatch<T> read_series_binary(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "SDTW", 4) != 0)
        throw IoError(path + ": bad magic");
    const int version = in.get();
    if (version != 1)
        throw IoError(path + ": unsupported format version " +
                      std::to_string(version));
    const std::uint32_t l = detail::get_u32_le(in, path);
    const std::uint32_t d = detail::get_u32_le(in, path);
    const std::uint32_t width = detail::get_u32_le(in, path);
    if (width != 4 && width != 8)
        throw IoError(path + ": scalar width must be 4 or 8");
    const std::size_t count = std::size_t(l) * d;
    std::vector<T> values(count);
    if (width == sizeof(T)) {
        in.read(reinterpret_cast<char *>(values.data()),
                static_cast<std::streamsize>(count * sizeof(T)));
    } else if (width == 4) {
        std::vector<float> tmp(count);
        in.read(reinterpret_cast<char *>(tmp.data()),
                static_cast<std::streamsize>(count * 4));
        for (std::size_t i = 0; i < count; ++i)
            values[i] = static_cast<T>(tmp[i]);
    } else {
        std::vector<double> tmp(count);
        in.read(reinterpret_cast<char *>(tmp.data()),
                static_cast<std::streamsize>(count * 8));
        for (std::size_t i = 0; i < count; ++i)
            values[i] = static_cast<T>(tmp[i]);
    }
    if (!in) throw IoError(path + ": truncated payload");
    return SeriesBatch<T>(std::move(values), 1, l, d);
}

/// Reads a series file, trying the binary magic first and falling back to
/// text.
template <class T>
SeriesBatch<T> read_series(const std::string &path)
{
    {
        std::ifstream probe(path, std::ios::binary);
        if (!probe) throw IoError("cannot open " + path);
        char magic[4] = {};
        probe.read(magic, 4);
        if (probe && std::memcmp(magic, "SDTW", 4) == 0)
            return read_series_binary<T>(path);
    }
    return read_series_csv<T>(path);
}

/// Batch manifest: one "x_path,y_path" pair per line; '#' comments allowed.
inline std::vector<std::pair<std::string, std::string>>
read_manifest(const std::string &path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::pair<std::string, std::string>> pairs;
    std::string line;
    std::size_t lineno = 0;
    auto trim = [](std::string s) {
        const char *ws = " \t\r";
        const auto a = s.find_first_not_of(ws);
        if (a == std::string::npos) return std::string();
        const auto b = s.find_last_not_of(ws);
        return s.substr(a, b - a + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto comma = t.find(',');
        if (comma == std::string::npos)
            throw IoError(path + ":" + std::to_string(lineno) +
                          ": expected 'x_path,y_path'");
        pairs.emplace_back(trim(t.substr(0, comma)), trim(t.substr(comma + 1)));
    }
    return pairs;
}

}  // namespace softdtw
