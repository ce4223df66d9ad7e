#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ivegan/rng.hpp"
#include "ivegan/tensor.hpp"

namespace ivegan {

// 2D mixture of n_modes isotropic Gaussians with means on a ring.
struct RingSpec {
    std::size_t n_modes = 8;
    double radius = 0.9;
    double sigma = 0.06;  // per-mode std, Sigma = sigma^2 I
    std::uint64_t seed = 0;

    void validate() const;
};

std::vector<std::array<double, 2>> ring_means(const RingSpec& spec);

// Uniform mode choice, then N(mu_k, sigma^2 I). Returns n x 2.
Tensor sample_ring(const RingSpec& spec, std::size_t n, Rng& rng);

struct LabeledImages {
    std::size_t height = 0;
    std::size_t width = 0;
    Tensor pixels;  // n x (height*width), values in [0,1]
    std::vector<int> labels;

    std::size_t count() const { return labels.size(); }
};

// Standard IDX pair (big-endian headers, raw byte payload); pixels scaled
// to [0,1] by /255.
LabeledImages load_idx(const std::string& images_path, const std::string& labels_path);

// Inverse of load_idx for round-trip tests and tooling. Pixel doubles are
// quantized back with round(v*255).
void write_idx(const LabeledImages& imgs, const std::string& images_path,
               const std::string& labels_path);

// Non-overlapping factor x factor average pooling.
LabeledImages downscale(const LabeledImages& imgs, std::size_t factor);

}  // namespace ivegan
