#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "ivegan/data.hpp"
#include "ivegan/model.hpp"
#include "ivegan/transforms.hpp"

namespace ivegan {

// Validated run configuration (JSON file). Unknown keys are rejected.
struct RunConfig {
    std::string experiment;            // "ring" | "mnist_lite"
    std::string algorithm = "ivegan";  // "ivegan" | "vanilla"
    std::uint64_t seed = 1;
    std::size_t iterations = 0;   // defaulted per experiment
    std::size_t batch_size = 0;
    std::size_t snapshot_every = 0;
    std::size_t snapshot_samples = 10000;
    std::size_t checkpoint_every = 0;  // 0: only final
    std::string generator_loss_mode = "non_saturating";
    std::string novel_term = "prior";
    std::size_t z_dim = 0;
    std::size_t zprime_dim = 4;
    std::size_t hidden = 512;  // image model width
    double lr_ge = 2e-4, lr_d = 1e-4, lr_dprime = 1e-4;
    double beta1 = 0.7, beta2 = 0.999, epsilon = 1e-8;
    std::string output_dir = "out";

    RingSpec ring;
    std::optional<Cov2> transform_sigma;  // ring; default sigma^2 I

    struct MnistCfg {
        std::string images_path;
        std::string labels_path;
        std::size_t n_images = 10000;
        std::size_t downscale = 2;
        int max_shift_px = 2;
        double max_rot_deg = 20.0;
    } mnist;

    TrainConfig train_config() const;
    GenLossMode gen_loss_mode() const;
    NovelTerm novel_term_mode() const;
    Cov2 ring_transform_sigma() const;
    std::string canonical_json() const;
    std::uint64_t hash() const;  // FNV-1a over canonical_json()
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

}  // namespace ivegan
