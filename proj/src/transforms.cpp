#include "ivegan/transforms.hpp"

#include <algorithm>
#include <cmath>

namespace ivegan {

Cov2 cholesky2(const Cov2& m) {
    const double a = m[0], b = m[1], b2 = m[2], c = m[3];
    const double scale = std::max({std::abs(a), std::abs(b), std::abs(c), 1.0});
    const double tol = 1e-12 * scale;
    if (std::abs(b - b2) > tol) throw ValueError("cholesky2: matrix not symmetric");
    if (a < -tol || c < -tol || a * c - b * b < -tol * scale) {
        throw ValueError("cholesky2: matrix not positive semidefinite");
    }
    if (a <= tol) {
        // First row/column is (numerically) zero.
        if (std::abs(b) > tol) throw ValueError("cholesky2: matrix not positive semidefinite");
        return {0.0, 0.0, 0.0, std::sqrt(std::max(c, 0.0))};
    }
    const double l00 = std::sqrt(a);
    const double l10 = b / l00;
    const double l11 = std::sqrt(std::max(c - l10 * l10, 0.0));
    return {l00, 0.0, l10, l11};
}

Tensor gaussian_shift(const Tensor& x, const Cov2& sigma, Rng& rng) {
    if (x.rank() != 2 || x.cols() != 2) {
        throw ShapeError("gaussian_shift: expected batch x 2, got " + x.shape_str());
    }
    const Cov2 half{sigma[0] / 2.0, sigma[1] / 2.0, sigma[2] / 2.0, sigma[3] / 2.0};
    const Cov2 chol = cholesky2(half);
    std::vector<double> out(x.size());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const double u = rng.normal();
        const double v = rng.normal();
        out[2 * r + 0] = x(r, 0) + chol[0] * u;
        out[2 * r + 1] = x(r, 1) + chol[2] * u + chol[3] * v;
    }
    return Tensor(x.shape(), std::move(out));
}

Tensor image_affine(const Tensor& img, double dx, double dy, double theta_deg) {
    if (img.rank() != 2) throw ShapeError("image_affine: rank-2 image required");
    const std::size_t h = img.rows(), w = img.cols();
    const double min_dim = static_cast<double>(std::min(h, w));
    if (std::abs(theta_deg) > 45.0) {
        throw ValueError("image_affine: |theta| must be <= 45 degrees");
    }
    if (std::abs(dx) >= min_dim || std::abs(dy) >= min_dim) {
        throw ValueError("image_affine: shift exceeds image size");
    }
    if (dx == 0.0 && dy == 0.0 && theta_deg == 0.0) return img;  // bit-exact identity

    const double theta = theta_deg * std::acos(-1.0) / 180.0;
    const double cs = std::cos(theta), sn = std::sin(theta);
    const double cy = (static_cast<double>(h) - 1.0) / 2.0;
    const double cx = (static_cast<double>(w) - 1.0) / 2.0;

    std::vector<double> out(h * w, 0.0);
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            // Invert: forward maps source p to R(p-cen)+cen+(dx,dy).
            const double yr = static_cast<double>(r) - dy - cy;
            const double xr = static_cast<double>(c) - dx - cx;
            const double sy = cs * yr + sn * xr + cy;
            const double sx = -sn * yr + cs * xr + cx;
            const double fy = std::floor(sy), fx = std::floor(sx);
            const long r0 = static_cast<long>(fy), c0 = static_cast<long>(fx);
            const double wy = sy - fy, wx = sx - fx;
            double acc = 0.0;
            for (int oy = 0; oy <= 1; ++oy) {
                for (int ox = 0; ox <= 1; ++ox) {
                    const long rr = r0 + oy, cc = c0 + ox;
                    if (rr < 0 || cc < 0 || rr >= static_cast<long>(h) ||
                        cc >= static_cast<long>(w)) {
                        continue;  // zero fill
                    }
                    const double wgt = (oy ? wy : 1.0 - wy) * (ox ? wx : 1.0 - wx);
                    acc += wgt * img(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc));
                }
            }
            out[r * w + c] = acc;
        }
    }
    return Tensor::matrix(h, w, std::move(out));
}

Tensor sample_transform(const TransformSpec& spec, const Tensor& batch, Rng& rng) {
    if (const auto* g = std::get_if<GaussianShiftSpec>(&spec)) {
        return gaussian_shift(batch, g->sigma, rng);
    }
    const auto& a = std::get<ImageAffineSpec>(spec);
    if (batch.rank() != 2 || batch.cols() != a.height * a.width) {
        throw ShapeError("sample_transform: batch width " + batch.shape_str() +
                         " does not match image " + std::to_string(a.height) + "x" +
                         std::to_string(a.width));
    }
    std::vector<double> out(batch.size());
    for (std::size_t r = 0; r < batch.rows(); ++r) {
        const double dx = static_cast<double>(rng.uniform_int(-a.max_shift_px, a.max_shift_px));
        const double dy = static_cast<double>(rng.uniform_int(-a.max_shift_px, a.max_shift_px));
        const double th = a.max_rot_deg > 0.0 ? rng.uniform(-a.max_rot_deg, a.max_rot_deg) : 0.0;
        std::vector<double> row(batch.data().begin() + r * batch.cols(),
                                batch.data().begin() + (r + 1) * batch.cols());
        const Tensor t = image_affine(Tensor::matrix(a.height, a.width, std::move(row)), dx, dy, th);
        std::copy(t.data().begin(), t.data().end(), out.begin() + r * batch.cols());
    }
    return Tensor(batch.shape(), std::move(out));
}

}  // namespace ivegan
