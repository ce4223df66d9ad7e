#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "ivegan/data.hpp"
#include "ivegan/model.hpp"
#include "ivegan/tensor.hpp"

namespace ivegan {

// Quantitative mode-coverage summary of a 2D sample set against a ring spec.
struct CoverageReport {
    std::vector<std::size_t> per_mode_counts;
    double assigned_fraction = 0.0;
    std::size_t covered_modes = 0;
    double jsd = 0.0;
    std::size_t n_samples = 0;
};

// Nearest mean within k*sigma, ties broken by lowest index.
std::optional<std::size_t> assign_mode(const std::array<double, 2>& p,
                                       const std::vector<std::array<double, 2>>& means,
                                       double sigma, double k);

CoverageReport coverage(const Tensor& samples, const RingSpec& spec, double k = 3.0,
                        double min_share = 0.02);

struct DensityGrid {
    std::size_t bins = 0;
    double lo = 0.0, hi = 0.0;
    std::vector<std::uint64_t> counts;  // row-major, row = second coordinate bin
    std::uint64_t dropped = 0;
};

DensityGrid density_grid(const Tensor& samples, std::size_t bins, double lo, double hi);

// Jensen-Shannon divergence (natural log) between normalized 2D histograms
// over [lo,hi]^2; in [0, ln 2].
double jsd_histogram(const Tensor& a, const Tensor& b, std::size_t bins = 64, double lo = -1.2,
                     double hi = 1.2);

struct ReconstructionReport {
    std::vector<double> per_sample;  // matched L2 errors
    double mean_matched = 0.0;
    double mean_shuffled = 0.0;  // against reconstructions of shuffled partners
};

ReconstructionReport reconstruction_error(const IveGanModel& m, const Tensor& xs, Rng& rng);
// Test-double entry point: caller supplies the reconstructions.
ReconstructionReport reconstruction_error_from(const Tensor& xs, const Tensor& recons, Rng& rng);

// Fraction of points whose majority label among the k nearest neighbours
// (self excluded, label ties to the smallest label) matches their own.
double latent_knn_agreement(const Tensor& latents, const std::vector<int>& labels,
                            std::size_t k = 5);

}  // namespace ivegan
