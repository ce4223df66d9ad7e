#include "ivegan/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ivegan {

void write_samples_csv(const std::string& path, const Tensor& samples) {
    if (samples.rank() != 2) throw ShapeError("write_samples_csv: rank-2 tensor required");
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (std::size_t c = 0; c < samples.cols(); ++c) out << (c ? ",x" : "x") << c;
    out << "\n";
    char buf[40];
    for (std::size_t r = 0; r < samples.rows(); ++r) {
        for (std::size_t c = 0; c < samples.cols(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", samples(r, c));
            out << (c ? "," : "") << buf;
        }
        out << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

Tensor read_samples_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty CSV (missing header): " + path);
    std::size_t cols = 1;
    for (char c : line) {
        if (c == ',') ++cols;
    }
    std::vector<double> data;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t got = 0;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t pos = 0;
                const double v = std::stod(cell, &pos);
                if (pos != cell.size()) throw std::invalid_argument(cell);
                data.push_back(v);
            } catch (const std::exception&) {
                throw IoError("malformed CSV value '" + cell + "' at " + path + ":" +
                              std::to_string(lineno));
            }
            ++got;
        }
        if (got != cols) {
            throw IoError("malformed CSV row (expected " + std::to_string(cols) + " cells, got " +
                          std::to_string(got) + ") at " + path + ":" + std::to_string(lineno));
        }
    }
    const std::size_t rows = data.size() / cols;
    return Tensor::matrix(rows, cols, std::move(data));
}

void write_pgm(const std::string& path, const DensityGrid& grid) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    const std::size_t b = grid.bins;
    out << "P5\n" << b << " " << b << "\n255\n";
    std::uint64_t maxc = 0;
    for (std::uint64_t c : grid.counts) maxc = std::max(maxc, c);
    const double denom = maxc > 0 ? std::log1p(static_cast<double>(maxc)) : 1.0;
    std::vector<unsigned char> row(b);
    for (std::size_t r = b; r-- > 0;) {  // flip: y increases upward in the image
        for (std::size_t c = 0; c < b; ++c) {
            const std::uint64_t cnt = grid.counts[r * b + c];
            row[c] = cnt == 0 ? 0
                              : static_cast<unsigned char>(std::lround(
                                    255.0 * std::log1p(static_cast<double>(cnt)) / denom));
        }
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(b));
    }
    if (!out) throw IoError("write failed: " + path);
}

namespace {
constexpr char kB64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string base64_encode(const unsigned char* data, std::size_t len) {
    std::string out;
    out.reserve((len + 2) / 3 * 4);
    for (std::size_t i = 0; i < len; i += 3) {
        const unsigned b0 = data[i];
        const unsigned b1 = i + 1 < len ? data[i + 1] : 0;
        const unsigned b2 = i + 2 < len ? data[i + 2] : 0;
        out.push_back(kB64[b0 >> 2]);
        out.push_back(kB64[((b0 & 0x3) << 4) | (b1 >> 4)]);
        out.push_back(i + 1 < len ? kB64[((b1 & 0xf) << 2) | (b2 >> 6)] : '=');
        out.push_back(i + 2 < len ? kB64[b2 & 0x3f] : '=');
    }
    return out;
}

std::vector<unsigned char> base64_decode(const std::string& s) {
    if (s.size() % 4 != 0) throw IoError("base64: length not a multiple of 4");
    auto val = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    std::vector<unsigned char> out;
    out.reserve(s.size() / 4 * 3);
    for (std::size_t i = 0; i < s.size(); i += 4) {
        int v[4];
        int pads = 0;
        for (int j = 0; j < 4; ++j) {
            const char c = s[i + j];
            if (c == '=' && i + 4 == s.size() && j >= 2) {
                v[j] = 0;
                ++pads;
            } else {
                v[j] = val(c);
                if (v[j] < 0) throw IoError("base64: invalid character");
            }
        }
        out.push_back(static_cast<unsigned char>((v[0] << 2) | (v[1] >> 4)));
        if (pads < 2) out.push_back(static_cast<unsigned char>(((v[1] & 0xf) << 4) | (v[2] >> 2)));
        if (pads < 1) out.push_back(static_cast<unsigned char>(((v[2] & 0x3) << 6) | v[3]));
    }
    return out;
}

}  // namespace ivegan
