#pragma once

/**
 * @file mgd_file.hpp
 * @brief The MGD text raster format.
 *
 * Layout:
 *
 *     MGD 1 <rows> <cols> <channels>\n
 *     <rows * cols * channels decimal reals, whitespace separated>
 *
 * Values are row-major over pixels with channels varying fastest. The writer
 * emits one pixel per line with 17 significant digits, which reproduces every
 * 64-bit value exactly on read. The reader accepts any whitespace between
 * payload tokens but rejects anything that is not a finite real, and rejects
 * a payload with too few or too many tokens.
 */

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "mgd/error.hpp"
#include "mgd/gaussian.hpp"

namespace mgd {

/// Largest payload accepted by the reader (values, not bytes).
inline constexpr std::uint64_t kMaxMgdValues = std::uint64_t{1} << 27;

struct MgdFile {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t channels = 0;
    std::vector<double> values;

    std::size_t pixels() const { return rows * cols; }
    double at(std::size_t pixel, std::size_t channel) const { return values[pixel * channels + channel]; }
};

namespace detail {

inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

inline std::size_t parse_dimension(std::string_view token, const char* name) {
    if (token.empty() || token.front() == '0' || token.front() == '+' || token.front() == '-') {
        throw ParseError(std::string("MGD header: invalid ") + name + " '" + std::string(token) + "'");
    }
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
        throw ParseError(std::string("MGD header: invalid ") + name + " '" + std::string(token) + "'");
    }
    if (value > kMaxMgdValues) throw ParseError(std::string("MGD header: ") + name + " too large");
    return static_cast<std::size_t>(value);
}

inline double parse_real(std::string_view token, std::size_t index) {
    double value = 0.0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
        throw ParseError("MGD payload: value " + std::to_string(index) + " '" + std::string(token) +
                         "' is not a finite real");
    }
    return value;
}

inline std::string format_real(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    if (ec != std::errc()) throw NumericError("MGD writer: cannot format value");
    return std::string(buf, ptr);
}

}  // namespace detail

inline MgdFile parse_mgd(std::string_view text) {
    const auto eol = text.find('\n');
    if (eol == std::string_view::npos) throw ParseError("MGD: missing header line");
    const std::string_view header = text.substr(0, eol);

    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (pos <= header.size()) {
        const auto next = header.find(' ', pos);
        const auto end = next == std::string_view::npos ? header.size() : next;
        fields.push_back(header.substr(pos, end - pos));
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    if (fields.size() != 5 || fields[0] != "MGD") {
        throw ParseError("MGD: header must be exactly 'MGD 1 <rows> <cols> <channels>'");
    }
    if (fields[1] != "1") throw ParseError("MGD: unsupported version '" + std::string(fields[1]) + "'");

    MgdFile file;
    file.rows = detail::parse_dimension(fields[2], "rows");
    file.cols = detail::parse_dimension(fields[3], "cols");
    file.channels = detail::parse_dimension(fields[4], "channels");
    const std::uint64_t expected = std::uint64_t{file.rows} * file.cols;
    if (expected > kMaxMgdValues || expected * file.channels > kMaxMgdValues) {
        throw ParseError("MGD: payload too large");
    }
    const auto count = static_cast<std::size_t>(expected * file.channels);
    file.values.reserve(count);

    const std::string_view payload = text.substr(eol + 1);
    std::size_t i = 0;
    while (i < payload.size()) {
        while (i < payload.size() && detail::is_space(payload[i])) ++i;
        if (i == payload.size()) break;
        std::size_t j = i;
        while (j < payload.size() && !detail::is_space(payload[j])) ++j;
        if (file.values.size() == count) throw ParseError("MGD payload: more than " + std::to_string(count) + " values");
        file.values.push_back(detail::parse_real(payload.substr(i, j - i), file.values.size()));
        i = j;
    }
    if (file.values.size() != count) {
        throw ParseError("MGD payload: expected " + std::to_string(count) + " values, found " +
                         std::to_string(file.values.size()));
    }
    return file;
}

inline MgdFile read_mgd(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    try {
        return parse_mgd(buffer.str());
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

inline std::string format_mgd(const MgdFile& file) {
    if (file.rows == 0 || file.cols == 0 || file.channels == 0) {
        throw DimensionError("MGD writer: dimensions must be positive");
    }
    if (file.values.size() != file.rows * file.cols * file.channels) {
        throw DimensionError("MGD writer: value count does not match dimensions");
    }
    std::string out = "MGD 1 " + std::to_string(file.rows) + " " + std::to_string(file.cols) + " " +
                      std::to_string(file.channels) + "\n";
    for (std::size_t p = 0; p < file.pixels(); ++p) {
        for (std::size_t c = 0; c < file.channels; ++c) {
            if (c) out += ' ';
            const double v = file.at(p, c);
            if (!std::isfinite(v)) throw NumericError("MGD writer: non-finite value");
            out += detail::format_real(v);
        }
        out += '\n';
    }
    return out;
}

inline void write_mgd(const std::string& path, const MgdFile& file) {
    const std::string text = format_mgd(file);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError("cannot write '" + path + "'");
    out << text;
    if (!out) throw ParseError("write failed for '" + path + "'");
}

/// Single-channel raster -> length rows*cols vector.
inline Vector mgd_to_vector(const MgdFile& file) {
    if (file.channels != 1) {
        throw DimensionError("expected a single-channel raster, got " + std::to_string(file.channels) + " channels");
    }
    return Eigen::Map<const Vector>(file.values.data(), static_cast<Index>(file.values.size()));
}

/// Multi-channel raster -> (rows*cols) x channels matrix, one row per pixel.
inline Matrix mgd_to_factor(const MgdFile& file) {
    const auto n = static_cast<Index>(file.pixels());
    const auto m = static_cast<Index>(file.channels);
    Matrix out(n, m);
    for (Index p = 0; p < n; ++p)
        for (Index c = 0; c < m; ++c) out(p, c) = file.at(static_cast<std::size_t>(p), static_cast<std::size_t>(c));
    return out;
}

inline MgdFile factor_to_mgd(std::size_t rows, std::size_t cols, const Eigen::Ref<const Matrix>& a) {
    if (static_cast<std::size_t>(a.rows()) != rows * cols) {
        throw DimensionError("MGD: matrix has " + std::to_string(a.rows()) + " rows for a " +
                             std::to_string(rows) + "x" + std::to_string(cols) + " raster");
    }
    MgdFile file{rows, cols, static_cast<std::size_t>(a.cols()), {}};
    file.values.resize(rows * cols * file.channels);
    for (Index p = 0; p < a.rows(); ++p)
        for (Index c = 0; c < a.cols(); ++c)
            file.values[static_cast<std::size_t>(p) * file.channels + static_cast<std::size_t>(c)] = a(p, c);
    return file;
}

inline MgdFile vector_to_mgd(std::size_t rows, std::size_t cols, const Eigen::Ref<const Vector>& v) {
    return factor_to_mgd(rows, cols, v);
}

}  // namespace mgd
