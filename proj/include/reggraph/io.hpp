#pragma once

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "reggraph/linop.hpp"

namespace reggraph::io {

/// One CSV row from doubles, full precision (round-trip exact).
inline std::string csv_row(const std::vector<double>& values) {
    std::ostringstream os;
    os << std::setprecision(17);
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) os << ',';
        os << values[i];
    }
    os << '\n';
    return os.str();
}

inline void write_csv(const std::string& path, const std::string& header,
                      const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_csv: cannot open " + path);
    if (!header.empty()) out << header << '\n';
    for (const auto& r : rows) out << csv_row(r);
}

/// Column vector as one-value-per-line CSV.
inline void write_signal_csv(const std::string& path, const vec& v) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_signal_csv: cannot open " + path);
    out << std::setprecision(17);
    for (long i = 0; i < v.size(); ++i) out << v[i] << '\n';
}

/// Reads a 1-D signal: one value per line, or comma separated; '#' comments.
inline vec read_signal_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_signal_csv: cannot open " + path);
    std::vector<double> values;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            if (!cell.empty()) values.push_back(std::stod(cell));
        }
    }
    vec v(static_cast<long>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) v[i] = values[i];
    return v;
}

/// Binary PGM (P5), maxval 65535, row-major, most significant byte first.
/// Values are clamped to [0, 1] and quantized as round(v * 65535).
inline void write_pgm(const std::string& path, const vec& v, int rows, int cols) {
    if (static_cast<long>(rows) * cols != v.size()) throw std::invalid_argument("write_pgm: shape mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_pgm: cannot open " + path);
    out << "P5\n" << cols << " " << rows << "\n65535\n";
    for (long i = 0; i < v.size(); ++i) {
        double x = v[i];
        x = x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x);
        const auto q = static_cast<std::uint16_t>(std::lround(x * 65535.0));
        const unsigned char hi = static_cast<unsigned char>(q >> 8);
        const unsigned char lo = static_cast<unsigned char>(q & 0xFF);
        out.put(static_cast<char>(hi));
        out.put(static_cast<char>(lo));
    }
}

struct pgm_image {
    vec data;  // values in [0, 1], row-major
    int rows = 0;
    int cols = 0;
};

inline pgm_image read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_pgm: cannot open " + path);
    std::string magic;
    in >> magic;
    if (magic != "P5") throw std::runtime_error("read_pgm: not a P5 file: " + path);
    auto next_token = [&in]() {
        std::string tok;
        while (in >> tok) {
            if (tok[0] == '#') {
                std::string rest;
                std::getline(in, rest);
                continue;
            }
            return tok;
        }
        throw std::runtime_error("read_pgm: truncated header");
    };
    const int cols = std::stoi(next_token());
    const int rows = std::stoi(next_token());
    const int maxval = std::stoi(next_token());
    in.get();  // single whitespace after maxval
    pgm_image img;
    img.rows = rows;
    img.cols = cols;
    img.data.resize(static_cast<long>(rows) * cols);
    for (long i = 0; i < img.data.size(); ++i) {
        int value;
        if (maxval > 255) {
            const int hi = in.get(), lo = in.get();
            value = hi * 256 + lo;
        } else {
            value = in.get();
        }
        if (!in) throw std::runtime_error("read_pgm: truncated data");
        img.data[i] = static_cast<double>(value) / maxval;
    }
    return img;
}

}  // namespace reggraph::io
