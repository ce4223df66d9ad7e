#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "ivegan/data.hpp"
#include "ivegan/nn.hpp"
#include "ivegan/rng.hpp"
#include "ivegan/tensor.hpp"
#include "ivegan/transforms.hpp"

namespace ivegan {

enum class GenLossMode { NonSaturating, Minimax };

// Which latent feeds the novel-sample term of the objective: the prior z
// (default) or the printed variant reusing E(x).
enum class NovelTerm { Prior, PrintedEncoding };

struct TrainConfig {
    std::size_t iterations = 50000;
    std::size_t batch_size = 1024;
    std::uint64_t seed = 1;
    GenLossMode gen_loss = GenLossMode::NonSaturating;
    NovelTerm novel_term = NovelTerm::Prior;
    AdamConfig adam_ge{2e-4, 0.7, 0.999, 1e-8};
    AdamConfig adam_d{1e-4, 0.7, 0.999, 1e-8};
    AdamConfig adam_dprime{1e-4, 0.7, 0.999, 1e-8};
    std::size_t snapshot_every = 10000;
    std::size_t snapshot_samples = 10000;

    void validate() const;
};

// Encoder E, generator G, pairwise discriminator D, novel-sample
// discriminator D', with per-player optimizer state. z ~ U(-1,1)^z_dim,
// z' ~ N(0, I)^zprime_dim.
struct IveGanModel {
    Network E, G, D, Dprime;
    std::size_t data_dim = 0;
    std::size_t z_dim = 0;
    std::size_t zprime_dim = 0;
    AdamState adam_E, adam_G, adam_D, adam_Dprime;

    void validate() const;
};

IveGanModel make_ring_model(std::size_t z_dim, std::size_t zprime_dim, const TrainConfig& cfg,
                            Rng& rng);
IveGanModel make_image_model(std::size_t data_dim, std::size_t z_dim, std::size_t zprime_dim,
                             std::size_t hidden, const TrainConfig& cfg, Rng& rng);

struct StepReport {
    std::size_t iteration = 0;
    double loss_d = 0.0;
    double loss_dprime = 0.0;
    double loss_ge = 0.0;
    // Mean logits of the four objective terms: D on (T(x),x), D' on x,
    // D on (G(z',E(x)),x), D' on the novel generation.
    std::array<double, 4> mean_logits{};
};

struct DataSource {
    std::size_t data_dim = 0;
    TransformSpec transform;
    std::function<Tensor(std::size_t, Rng&)> sample_batch;
};

DataSource ring_source(const RingSpec& spec, const Cov2& transform_sigma);
DataSource image_batch_source(const Tensor& pixels, const ImageAffineSpec& transform);

// Inference-path model surfaces (no tape).
Tensor encode(const IveGanModel& m, const Tensor& x);
// Shared discriminator features: D's first layer on the pair (y, 0), i.e.
// only the candidate-slot weights. D' consumes these features, not raw points.
Tensor denc(const IveGanModel& m, const Tensor& y);
Tensor generate(const IveGanModel& m, const Tensor& zprime, const Tensor& z);
Tensor reconstruct(const IveGanModel& m, const Tensor& x, Rng& rng);
Tensor sample_novel(const IveGanModel& m, std::size_t n, Rng& rng);
std::vector<Tensor> interpolate(const IveGanModel& m, const Tensor& x_a, const Tensor& x_b,
                                std::size_t steps, Rng& rng);

// Randomness consumed by one loss evaluation, drawn up front so tests can
// supply the exact same inputs to independent recomputations.
struct LossDraws {
    Tensor tx;      // T(x), batch x d
    Tensor zprime_rec;  // batch x z'
    Tensor z_novel;     // batch x z
    Tensor zprime_nov;  // batch x z'
};

LossDraws draw_loss_inputs(const IveGanModel& m, const Tensor& x, const TransformSpec& transform,
                           Rng& rng);

struct LossValues {
    double loss_d = 0.0;
    double loss_dprime = 0.0;
    double loss_ge = 0.0;
    std::array<double, 4> terms{};       // the four expectation terms of the objective
    std::array<double, 4> mean_logits{};
};

LossValues ivegan_losses(const IveGanModel& m, const Tensor& x, const LossDraws& draws,
                         GenLossMode mode, NovelTerm novel);
LossValues ivegan_losses(const IveGanModel& m, const Tensor& x, const TransformSpec& transform,
                         const TrainConfig& cfg, Rng& rng);

// One alternating-update trainer: per step, one Adam update of D and D' on
// their losses, then one joint Adam update of G and E, fresh draws per phase.
class Trainer {
public:
    Trainer(TrainConfig cfg, DataSource source, IveGanModel model);

    void step();
    // Individual phases, exposed for targeted tests.
    StepReport step_discriminators(const Tensor& x);
    StepReport step_generator(const Tensor& x);

    Tensor draw_batch();

    const IveGanModel& model() const { return model_; }
    IveGanModel& model() { return model_; }
    std::size_t iteration() const { return iter_; }
    const std::vector<StepReport>& history() const { return history_; }
    Rng& rng() { return rng_; }
    const TrainConfig& config() const { return cfg_; }

    // Checkpoint resume: overwrite progress counters and rng state.
    void restore(std::size_t iteration, const std::string& rng_state);

private:
    TrainConfig cfg_;
    DataSource source_;
    IveGanModel model_;
    Rng rng_;
    std::size_t iter_ = 0;
    std::vector<StepReport> history_;
};

struct Snapshot {
    std::size_t iteration = 0;
    Tensor samples;
};

struct TrainResult {
    IveGanModel model;
    std::vector<StepReport> history;
    std::vector<Snapshot> snapshots;
};

// Full run with snapshots of novel samples at iteration 0 and every
// snapshot_every iterations (inclusive of the final iteration).
TrainResult train(const TrainConfig& cfg, const DataSource& source, IveGanModel model);

Tensor snapshot_samples(const IveGanModel& m, std::size_t n, std::uint64_t seed,
                        std::size_t iteration);

// ---- classical GAN baseline ----

struct VanillaModel {
    Network G, D;
    std::size_t data_dim = 0;
    std::size_t noise_dim = 0;  // z ~ N(0, I)
    AdamState adam_G, adam_D;
};

VanillaModel make_ring_vanilla(std::size_t noise_dim, const TrainConfig& cfg, Rng& rng);

Tensor vanilla_sample(const VanillaModel& m, std::size_t n, Rng& rng);

struct VanillaLossValues {
    double loss_d = 0.0;
    double loss_g = 0.0;
    std::array<double, 2> terms{};  // E log D(x), E log(1 - D(G(z)))
};

VanillaLossValues vanilla_losses(const VanillaModel& m, const Tensor& x, const Tensor& z,
                                 GenLossMode mode);

class VanillaTrainer {
public:
    VanillaTrainer(TrainConfig cfg, DataSource source, VanillaModel model);

    void step();
    Tensor draw_batch();

    const VanillaModel& model() const { return model_; }
    VanillaModel& model() { return model_; }
    std::size_t iteration() const { return iter_; }
    const std::vector<StepReport>& history() const { return history_; }
    Rng& rng() { return rng_; }

    void restore(std::size_t iteration, const std::string& rng_state);

private:
    TrainConfig cfg_;
    DataSource source_;
    VanillaModel model_;
    Rng rng_;
    std::size_t iter_ = 0;
    std::vector<StepReport> history_;
};

struct VanillaTrainResult {
    VanillaModel model;
    std::vector<StepReport> history;
    std::vector<Snapshot> snapshots;
};

VanillaTrainResult train_vanilla(const TrainConfig& cfg, const DataSource& source,
                                 VanillaModel model);

}  // namespace ivegan
