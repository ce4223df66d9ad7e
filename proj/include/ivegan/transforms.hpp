#pragma once

#include <array>
#include <variant>

#include "ivegan/rng.hpp"
#include "ivegan/tensor.hpp"

namespace ivegan {

// 2x2 covariance, row-major {a, b, b, c}.
using Cov2 = std::array<double, 4>;

struct GaussianShiftSpec {
    Cov2 sigma{0.0, 0.0, 0.0, 0.0};  // the data covariance Sigma; shifts use Sigma/2
};

struct ImageAffineSpec {
    std::size_t height = 0;
    std::size_t width = 0;
    int max_shift_px = 0;
    double max_rot_deg = 0.0;
};

using TransformSpec = std::variant<GaussianShiftSpec, ImageAffineSpec>;

// x + t with t ~ N(0, Sigma/2) drawn i.i.d. per row. `sigma` is Sigma itself.
Tensor gaussian_shift(const Tensor& x, const Cov2& sigma, Rng& rng);

// Rotation about the image center followed by translation, bilinear
// interpolation, zero fill outside the source.
Tensor image_affine(const Tensor& img, double dx, double dy, double theta_deg);

// Fresh random transform parameters per batch row: integer shifts uniform in
// +-max_shift_px, rotation uniform in +-max_rot_deg.
Tensor sample_transform(const TransformSpec& spec, const Tensor& batch, Rng& rng);

// Lower-triangular Cholesky factor of a PSD 2x2 matrix; throws on non-PSD.
Cov2 cholesky2(const Cov2& m);

}  // namespace ivegan
