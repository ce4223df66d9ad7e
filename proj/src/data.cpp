#include "ivegan/data.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace ivegan {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::uint32_t read_be32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw IoError("truncated IDX file: " + path);
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
           std::uint32_t{b[3]};
}

void write_be32(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

void RingSpec::validate() const {
    if (n_modes < 1) throw ValueError("RingSpec: n_modes must be >= 1");
    if (!(radius > 0.0)) throw ValueError("RingSpec: radius must be positive");
    if (!(sigma > 0.0)) throw ValueError("RingSpec: sigma must be positive");
}

std::vector<std::array<double, 2>> ring_means(const RingSpec& spec) {
    spec.validate();
    const double tau = 2.0 * std::acos(-1.0);
    std::vector<std::array<double, 2>> means(spec.n_modes);
    for (std::size_t k = 0; k < spec.n_modes; ++k) {
        const double a = tau * static_cast<double>(k) / static_cast<double>(spec.n_modes);
        means[k] = {spec.radius * std::cos(a), spec.radius * std::sin(a)};
    }
    return means;
}

Tensor sample_ring(const RingSpec& spec, std::size_t n, Rng& rng) {
    spec.validate();
    if (n < 1) throw ValueError("sample_ring: n must be >= 1");
    const auto means = ring_means(spec);
    std::vector<double> out(n * 2);
    for (std::size_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(spec.n_modes) - 1));
        out[2 * i + 0] = means[k][0] + spec.sigma * rng.normal();
        out[2 * i + 1] = means[k][1] + spec.sigma * rng.normal();
    }
    return Tensor::matrix(n, 2, std::move(out));
}

LabeledImages load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream imf(images_path, std::ios::binary);
    if (!imf) throw IoError("cannot open IDX images file: " + images_path);
    std::ifstream lbf(labels_path, std::ios::binary);
    if (!lbf) throw IoError("cannot open IDX labels file: " + labels_path);

    const std::uint32_t im_magic = read_be32(imf, images_path);
    if (im_magic != kImagesMagic) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "0x%08x", im_magic);
        throw IoError("bad IDX images magic " + std::string(buf) + " in " + images_path);
    }
    const std::uint32_t n_images = read_be32(imf, images_path);
    const std::uint32_t rows = read_be32(imf, images_path);
    const std::uint32_t cols = read_be32(imf, images_path);

    const std::uint32_t lb_magic = read_be32(lbf, labels_path);
    if (lb_magic != kLabelsMagic) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "0x%08x", lb_magic);
        throw IoError("bad IDX labels magic " + std::string(buf) + " in " + labels_path);
    }
    const std::uint32_t n_labels = read_be32(lbf, labels_path);
    if (n_labels != n_images) {
        throw IoError("IDX count mismatch: " + std::to_string(n_images) + " images vs " +
                      std::to_string(n_labels) + " labels");
    }

    const std::size_t npix = static_cast<std::size_t>(n_images) * rows * cols;
    std::vector<unsigned char> raw(npix);
    if (!imf.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(npix))) {
        throw IoError("truncated IDX file: " + images_path);
    }
    std::vector<unsigned char> rawlb(n_labels);
    if (!lbf.read(reinterpret_cast<char*>(rawlb.data()), static_cast<std::streamsize>(n_labels))) {
        throw IoError("truncated IDX file: " + labels_path);
    }

    std::vector<double> pix(npix);
    for (std::size_t i = 0; i < npix; ++i) pix[i] = static_cast<double>(raw[i]) / 255.0;
    LabeledImages out;
    out.height = rows;
    out.width = cols;
    out.pixels = Tensor::matrix(n_images, static_cast<std::size_t>(rows) * cols, std::move(pix));
    out.labels.assign(rawlb.begin(), rawlb.end());
    return out;
}

void write_idx(const LabeledImages& imgs, const std::string& images_path,
               const std::string& labels_path) {
    std::ofstream imf(images_path, std::ios::binary);
    if (!imf) throw IoError("cannot write IDX images file: " + images_path);
    write_be32(imf, kImagesMagic);
    write_be32(imf, static_cast<std::uint32_t>(imgs.count()));
    write_be32(imf, static_cast<std::uint32_t>(imgs.height));
    write_be32(imf, static_cast<std::uint32_t>(imgs.width));
    std::vector<unsigned char> raw(imgs.pixels.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        raw[i] = static_cast<unsigned char>(std::lround(imgs.pixels[i] * 255.0));
    }
    imf.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!imf) throw IoError("write failed: " + images_path);

    std::ofstream lbf(labels_path, std::ios::binary);
    if (!lbf) throw IoError("cannot write IDX labels file: " + labels_path);
    write_be32(lbf, kLabelsMagic);
    write_be32(lbf, static_cast<std::uint32_t>(imgs.count()));
    for (int l : imgs.labels) {
        const char c = static_cast<char>(l);
        lbf.write(&c, 1);
    }
    if (!lbf) throw IoError("write failed: " + labels_path);
}

LabeledImages downscale(const LabeledImages& imgs, std::size_t factor) {
    if (factor < 1) throw ValueError("downscale: factor must be >= 1");
    if (imgs.height % factor != 0 || imgs.width % factor != 0) {
        throw ShapeError("downscale: dimensions " + std::to_string(imgs.height) + "x" +
                         std::to_string(imgs.width) + " not divisible by " +
                         std::to_string(factor));
    }
    const std::size_t nh = imgs.height / factor, nw = imgs.width / factor;
    const std::size_t n = imgs.count();
    std::vector<double> out(n * nh * nw, 0.0);
    const double inv = 1.0 / static_cast<double>(factor * factor);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t r = 0; r < imgs.height; ++r) {
            for (std::size_t c = 0; c < imgs.width; ++c) {
                out[i * nh * nw + (r / factor) * nw + c / factor] +=
                    imgs.pixels(i, r * imgs.width + c) * inv;
            }
        }
    }
    LabeledImages res;
    res.height = nh;
    res.width = nw;
    res.pixels = Tensor::matrix(n, nh * nw, std::move(out));
    res.labels = imgs.labels;
    return res;
}

}  // namespace ivegan
