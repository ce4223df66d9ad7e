#include "ivegan/model.hpp"

#include <cmath>

#include "ivegan/autodiff.hpp"

namespace ivegan {

namespace {

constexpr std::uint64_t kSnapshotStream = 0x736e617073ULL;  // distinct rng substream tag

Tensor draw_normal(std::size_t rows, std::size_t cols, Rng& rng) {
    std::vector<double> v(rows * cols);
    for (double& x : v) x = rng.normal();
    return Tensor::matrix(rows, cols, std::move(v));
}

Tensor draw_uniform_pm1(std::size_t rows, std::size_t cols, Rng& rng) {
    std::vector<double> v(rows * cols);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return Tensor::matrix(rows, cols, std::move(v));
}

// mean softplus(s) and mean softplus(-s) as tape nodes.
NodeId mean_sp(Tape& t, NodeId s) { return t.mean_all(t.softplus(s)); }
NodeId mean_sp_neg(Tape& t, NodeId s) { return t.mean_all(t.softplus(t.scale(s, -1.0))); }

struct LossNodes {
    NodeId loss_d, loss_dprime, loss_ge;
    std::array<double, 4> terms;
    std::array<double, 4> mean_logits;
};

NodeId layer_node(Tape& tape, const Layer& l, NodeId w, NodeId b, NodeId in) {
    NodeId x = tape.add_bias(tape.matmul(in, w), b);
    switch (l.act) {
        case Act::Tanh: x = tape.tanh_act(x); break;
        case Act::LRelu: x = tape.lrelu(x, l.slope); break;
        case Act::Sigmoid: x = tape.sigmoid(x); break;
        case Act::Linear: break;
    }
    return x;
}

// D's pair forward on the tape. Low-dimensional models score the raw
// concatenated pair (candidate, x) per the printed synthetic layer table.
// Wide (image) models instead run a weight-shared feature layer over each
// image separately and score the feature difference phi(y) - phi(x): a
// raw-pair MLP wins the game on candidate-slot realism alone (features that
// ignore x), which starves G and E of any correspondence pressure. On the
// feature difference, realism is invisible by construction — D can only win
// by comparing the candidate against its reference, so even a saturated D
// keeps pulling G's output toward the reference in feature space. The layout
// is inferred from D's input width, so checkpoints stay self-describing.
NodeId d_pair_forward(Tape& tape, const IveGanModel& m, const TapeBinding& bd, NodeId y,
                      NodeId x) {
    if (m.D.in_dim() == 2 * m.data_dim) return forward(m.D, bd, tape, tape.concat(y, x));
    const Layer& phi = m.D.layers.front();
    NodeId h = tape.add(layer_node(tape, phi, bd.params[0], bd.params[1], y),
                        tape.scale(layer_node(tape, phi, bd.params[0], bd.params[1], x), -1.0));
    for (std::size_t i = 1; i < m.D.layers.size(); ++i) {
        h = layer_node(tape, m.D.layers[i], bd.params[2 * i], bd.params[2 * i + 1], h);
    }
    return h;
}

// Shared discriminator features on the tape: D's first layer evaluated on the
// candidate alone (raw-pair layout: candidate slot with a zeroed reference;
// per-slot layout: the shared feature layer applied to y). D' scores these
// features instead of raw points, so its signal rides on the representation
// the pair task keeps sharpening.
NodeId denc_node(Tape& tape, const IveGanModel& m, const TapeBinding& bd, NodeId y) {
    const std::size_t rows = tape.value(y).rows();
    NodeId in = y;
    if (m.D.in_dim() == 2 * m.data_dim) {
        const NodeId zero = tape.leaf(Tensor::zeros({rows, m.data_dim}));
        in = tape.concat(y, zero);
    }
    NodeId x = tape.add_bias(tape.matmul(in, bd.params[0]), bd.params[1]);
    const Layer& l0 = m.D.layers.front();
    switch (l0.act) {
        case Act::Tanh: x = tape.tanh_act(x); break;
        case Act::LRelu: x = tape.lrelu(x, l0.slope); break;
        case Act::Sigmoid: x = tape.sigmoid(x); break;
        case Act::Linear: break;
    }
    return x;
}

// The four objective terms on one tape, all log-likelihoods expressed via
// softplus on raw logits:
//   term1 = E log D(T(x),x)        = -mean softplus(-s1)
//   term2 = E log D'(x)            = -mean softplus(-s2)
//   term3 = E log(1-D(G(z',E(x)),x)) = -mean softplus(s3)
//   term4 = E log(1-D'(G_novel))     = -mean softplus(s4)
LossNodes build_ivegan_losses(Tape& tape, const IveGanModel& m, const TapeBinding& be,
                              const TapeBinding& bg, const TapeBinding& bd,
                              const TapeBinding& bdp, const Tensor& x, const LossDraws& draws,
                              GenLossMode mode, NovelTerm novel) {
    const NodeId nx = tape.leaf(x);
    const NodeId ntx = tape.leaf(draws.tx);
    const NodeId nzp_rec = tape.leaf(draws.zprime_rec);
    const NodeId nz = tape.leaf(draws.z_novel);
    const NodeId nzp_nov = tape.leaf(draws.zprime_nov);

    NodeId z_enc = forward(m.E, be, tape, nx);
    NodeId z_nov = novel == NovelTerm::Prior ? nz : z_enc;
    if (m.D.in_dim() == m.data_dim) {
        // Image models mean-center the content code across the batch before G
        // consumes it. Without this, a uniform shift of every encoding changes
        // G's output and therefore the realism terms, and that shared
        // direction accumulates under Adam's magnitude-normalized steps until
        // every encoding saturates the same tanh corner — after which the
        // code carries no information and the pair game cannot revive it
        // (the conv stacks this task descends from get the same protection
        // from their normalization layers). Centering makes uniform shifts
        // invisible to the loss while leaving per-sample structure intact.
        const std::size_t n = x.rows();
        std::vector<double> cd(n * n, -1.0 / static_cast<double>(n));
        for (std::size_t i = 0; i < n; ++i) cd[i * n + i] += 1.0;
        const NodeId center = tape.leaf(Tensor::matrix(n, n, std::move(cd)));
        // Rescaling to unit per-dimension spread closes the second collapse
        // channel: without it E can still neutralize the code by shrinking
        // its variance toward zero (all, not just uniform, code influence
        // vanishes). The scale is computed from the current batch and treated
        // as a constant, so a shrinking spread amplifies E's effective
        // gradient by the same factor — the collapse direction is self-
        // defeating.
        const auto unit_scale = [&](NodeId zc, std::size_t dims) {
            const Tensor& zv = tape.value(zc);
            std::vector<double> sd(dims * dims, 0.0);
            for (std::size_t d = 0; d < dims; ++d) {
                double v = 0.0;
                for (std::size_t r = 0; r < n; ++r) v += zv(r, d) * zv(r, d);
                sd[d * dims + d] = 1.0 / std::max(std::sqrt(v / static_cast<double>(n)), 1e-3);
            }
            return tape.matmul(zc, tape.leaf(Tensor::matrix(dims, dims, std::move(sd))));
        };
        z_enc = unit_scale(tape.matmul(center, z_enc), m.z_dim);
        z_nov = novel == NovelTerm::Prior ? unit_scale(tape.matmul(center, nz), m.z_dim) : z_enc;
    }
    const NodeId g_rec = forward(m.G, bg, tape, tape.concat(nzp_rec, z_enc));
    const NodeId g_nov = forward(m.G, bg, tape, tape.concat(nzp_nov, z_nov));

    // D' reads either shared discriminator features (denc_node) or, when its
    // input width says so, the raw candidate. The raw form is deliberately
    // weak for image models: the generator can silence it by matching feature
    // means, which leaves the pair game as the dominant training signal — the
    // signal reconstruction and the encoding actually need.
    const bool raw_dprime = m.Dprime.in_dim() == m.data_dim;
    const NodeId s1 = d_pair_forward(tape, m, bd, ntx, nx);
    const NodeId s2 =
        forward(m.Dprime, bdp, tape, raw_dprime ? nx : denc_node(tape, m, bd, nx));
    const NodeId s3 = d_pair_forward(tape, m, bd, g_rec, nx);
    const NodeId s4 =
        forward(m.Dprime, bdp, tape, raw_dprime ? g_nov : denc_node(tape, m, bd, g_nov));

    const NodeId sp_n1 = mean_sp_neg(tape, s1);
    const NodeId sp_n2 = mean_sp_neg(tape, s2);
    const NodeId sp_p3 = mean_sp(tape, s3);
    const NodeId sp_p4 = mean_sp(tape, s4);

    LossNodes out{};
    out.loss_d = tape.add(sp_n1, sp_p3);
    out.loss_dprime = tape.add(sp_n2, sp_p4);
    if (mode == GenLossMode::NonSaturating) {
        out.loss_ge = tape.add(mean_sp_neg(tape, s3), mean_sp_neg(tape, s4));
    } else {
        out.loss_ge = tape.scale(tape.add(sp_p3, sp_p4), -1.0);
    }
    out.terms = {-tape.value(sp_n1)[0], -tape.value(sp_n2)[0], -tape.value(sp_p3)[0],
                 -tape.value(sp_p4)[0]};
    out.mean_logits = {mean_all_val(tape.value(s1)), mean_all_val(tape.value(s2)),
                       mean_all_val(tape.value(s3)), mean_all_val(tape.value(s4))};
    return out;
}

std::vector<Tensor> collect_grads(const Gradients& g, const TapeBinding& b) {
    std::vector<Tensor> out;
    out.reserve(b.params.size());
    for (NodeId id : b.params) out.push_back(g.at(id));
    return out;
}

}  // namespace

void TrainConfig::validate() const {
    if (iterations < 1) throw ConfigError("TrainConfig: iterations must be >= 1");
    if (batch_size < 2) throw ConfigError("TrainConfig: batch_size must be >= 2");
    if (snapshot_every == 0 || iterations % snapshot_every != 0) {
        throw ConfigError("TrainConfig: snapshot_every must divide iterations");
    }
}

void IveGanModel::validate() const {
    if (G.in_dim() != z_dim + zprime_dim) {
        throw ShapeError("IveGanModel: G input width must be z_dim + zprime_dim");
    }
    if (E.out_dim() != z_dim) throw ShapeError("IveGanModel: E output width must be z_dim");
    if (E.in_dim() != data_dim || G.out_dim() != data_dim) {
        throw ShapeError("IveGanModel: E/G data widths must match data_dim");
    }
    if (D.in_dim() != 2 * data_dim && D.in_dim() != data_dim) {
        throw ShapeError(
            "IveGanModel: D input width must be 2*data_dim (raw pair) or data_dim (per-slot "
            "shared features)");
    }
    if (D.in_dim() == data_dim &&
        (D.layers.size() < 2 ||
         D.layers[1].weight.rows() != D.layers[0].weight.cols())) {
        throw ShapeError(
            "IveGanModel: per-slot D needs a tail reading the shared feature difference");
    }
    if (D.layers.empty() || (Dprime.in_dim() != D.layers.front().weight.cols() &&
                             Dprime.in_dim() != data_dim)) {
        throw ShapeError(
            "IveGanModel: D' input width must match D's first-layer feature width or data_dim");
    }
    if (D.out_dim() != 1 || Dprime.out_dim() != 1) {
        throw ShapeError("IveGanModel: discriminators must emit one logit");
    }
    if (E.layers.back().act != Act::Tanh) {
        throw ShapeError("IveGanModel: E must end with Tanh");
    }
}

namespace {

// Zero G's first-layer weights on the content slot z (input layout is
// concat(z', z)). With a random init, z has a systematic effect on the
// realism terms from step one; the resulting pull on E has a consistent sign
// across the whole batch, and Adam's magnitude-normalized steps on E's wide
// output layer then drive every encoding into the same tanh corner within a
// few dozen iterations, which destroys the encoding before the pair game can
// use it. Starting the slot at zero removes that drift: E receives gradient
// only once the pair game has grown z-weights along directions where the
// encoding actually helps match the reference.
void zero_content_slot(Network& g, std::size_t zprime_dim, std::size_t z_dim) {
    Layer& l0 = g.layers.front();
    std::vector<double> w(l0.weight.data().begin(), l0.weight.data().end());
    const std::size_t cols = l0.weight.cols();
    for (std::size_t r = zprime_dim; r < zprime_dim + z_dim; ++r) {
        for (std::size_t c = 0; c < cols; ++c) w[r * cols + c] = 0.0;
    }
    l0.weight = Tensor(l0.weight.shape(), std::move(w));
}

}  // namespace

IveGanModel make_ring_model(std::size_t z_dim, std::size_t zprime_dim, const TrainConfig& cfg,
                            Rng& rng) {
    IveGanModel m;
    m.data_dim = 2;
    m.z_dim = z_dim;
    m.zprime_dim = zprime_dim;
    const std::vector<LayerSpec> e{{2, 128, Act::Tanh}, {128, z_dim, Act::Tanh}};
    const std::vector<LayerSpec> g{{z_dim + zprime_dim, 128, Act::Tanh}, {128, 2, Act::Tanh}};
    const std::vector<LayerSpec> d{{4, 128, Act::Tanh}, {128, 1, Act::Linear}};
    const std::vector<LayerSpec> dp{{128, 128, Act::Tanh}, {128, 1, Act::Linear}};
    m.E = init_network(e, rng);
    m.G = init_network(g, rng);
    m.D = init_network(d, rng);
    m.Dprime = init_network(dp, rng);
    m.adam_E = AdamState::init(m.E, cfg.adam_ge);
    m.adam_G = AdamState::init(m.G, cfg.adam_ge);
    m.adam_D = AdamState::init(m.D, cfg.adam_d);
    m.adam_Dprime = AdamState::init(m.Dprime, cfg.adam_dprime);
    m.validate();
    return m;
}

IveGanModel make_image_model(std::size_t data_dim, std::size_t z_dim, std::size_t zprime_dim,
                             std::size_t hidden, const TrainConfig& cfg, Rng& rng) {
    IveGanModel m;
    m.data_dim = data_dim;
    m.z_dim = z_dim;
    m.zprime_dim = zprime_dim;
    // E narrows sharply before the tanh bottleneck: the output layer's drift
    // per Adam step scales with the width of its input, and a wide trunk lets
    // any systematic pull on the encoding saturate the tanh within tens of
    // iterations (see zero_content_slot).
    const std::vector<LayerSpec> e{
        {data_dim, hidden, Act::LRelu}, {hidden, 32, Act::LRelu}, {32, z_dim, Act::Tanh}};
    const std::vector<LayerSpec> g{{z_dim + zprime_dim, hidden, Act::LRelu},
                                   {hidden, hidden, Act::LRelu},
                                   {hidden, data_dim, Act::Sigmoid}};
    // The image discriminator runs a weight-shared feature layer over each
    // image of the pair separately and scores the feature difference (see
    // d_pair_forward).
    const std::vector<LayerSpec> d{
        {data_dim, 64, Act::Linear}, {64, 32, Act::LRelu}, {32, 1, Act::Linear}};
    const std::vector<LayerSpec> dp{{data_dim, 16, Act::LRelu}, {16, 1, Act::Linear}};
    m.E = init_network(e, rng);
    m.G = init_network(g, rng);
    zero_content_slot(m.G, zprime_dim, z_dim);
    m.D = init_network(d, rng);
    // Start D's tail as a residual-magnitude detector: pair each hidden unit
    // with a sign-flipped twin and give both the same negative output weight,
    // so the initial score is b - sum_j a_j * |u_j| (a_j > 0) over random
    // projections u of the feature difference. Real pairs have small residuals
    // and score high; independent pairs score low. This is already a separating
    // solution of the pair game, so from the first iteration the generator's
    // gradient through D points toward its paired target instead of toward
    // whatever incidental features a random discriminator happens to carry.
    {
        Tensor& w1 = m.D.layers[1].weight;  // 64 x 32
        Tensor& w2 = m.D.layers[2].weight;  // 32 x 1
        const std::size_t half = w1.cols() / 2;
        std::vector<double> w1d(w1.data().begin(), w1.data().end());
        for (std::size_t r = 0; r < w1.rows(); ++r)
            for (std::size_t j = 0; j < half; ++j)
                w1d[r * w1.cols() + half + j] = -w1d[r * w1.cols() + j];
        w1 = Tensor(w1.shape(), std::move(w1d));
        std::vector<double> w2d(w2.data().begin(), w2.data().end());
        for (std::size_t j = 0; j < half; ++j) {
            w2d[j] = -std::abs(w2d[j]);
            w2d[half + j] = w2d[j];
        }
        w2 = Tensor(w2.shape(), std::move(w2d));
    }
    m.Dprime = init_network(dp, rng);
    m.adam_E = AdamState::init(m.E, cfg.adam_ge);
    m.adam_G = AdamState::init(m.G, cfg.adam_ge);
    m.adam_D = AdamState::init(m.D, cfg.adam_d);
    m.adam_Dprime = AdamState::init(m.Dprime, cfg.adam_dprime);
    m.validate();
    return m;
}

DataSource ring_source(const RingSpec& spec, const Cov2& transform_sigma) {
    spec.validate();
    DataSource src;
    src.data_dim = 2;
    src.transform = GaussianShiftSpec{transform_sigma};
    src.sample_batch = [spec](std::size_t n, Rng& rng) { return sample_ring(spec, n, rng); };
    return src;
}

DataSource image_batch_source(const Tensor& pixels, const ImageAffineSpec& transform) {
    if (pixels.rank() != 2 || pixels.rows() == 0) {
        throw ShapeError("image_batch_source: nonempty rank-2 pixel matrix required");
    }
    if (pixels.cols() != transform.height * transform.width) {
        throw ShapeError("image_batch_source: pixel width does not match transform geometry");
    }
    DataSource src;
    src.data_dim = pixels.cols();
    src.transform = transform;
    src.sample_batch = [pixels](std::size_t n, Rng& rng) {
        const std::size_t d = pixels.cols();
        std::vector<double> out(n * d);
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(pixels.rows()) - 1));
            for (std::size_t c = 0; c < d; ++c) out[i * d + c] = pixels(row, c);
        }
        return Tensor::matrix(n, d, std::move(out));
    };
    return src;
}

Tensor encode(const IveGanModel& m, const Tensor& x) {
    if (x.cols() != m.data_dim) {
        throw ShapeError("encode: input width " + x.shape_str() + " does not match data_dim " +
                         std::to_string(m.data_dim));
    }
    return forward(m.E, x);
}

Tensor denc(const IveGanModel& m, const Tensor& y) {
    if (y.cols() != m.data_dim) {
        throw ShapeError("denc: input width " + y.shape_str() + " does not match data_dim " +
                         std::to_string(m.data_dim));
    }
    const Network first{{m.D.layers.front()}};
    if (m.D.in_dim() == m.data_dim) return forward(first, y);
    return forward(first, concat_cols(y, Tensor::zeros({y.rows(), m.data_dim})));
}

Tensor generate(const IveGanModel& m, const Tensor& zprime, const Tensor& z) {
    if (zprime.cols() != m.zprime_dim || z.cols() != m.z_dim || zprime.rows() != z.rows()) {
        throw ShapeError("generate: latent shapes " + zprime.shape_str() + ", " + z.shape_str() +
                         " do not match model dims");
    }
    Tensor zc = z;
    if (m.D.in_dim() == m.data_dim && z.rows() > 1) {
        // Image models train G on batch-normalized content codes (see
        // build_ivegan_losses); inference mirrors that.
        std::vector<double> zd(z.data().begin(), z.data().end());
        for (std::size_t c = 0; c < z.cols(); ++c) {
            double mu = 0;
            for (std::size_t r = 0; r < z.rows(); ++r) mu += z(r, c);
            mu /= static_cast<double>(z.rows());
            double v = 0;
            for (std::size_t r = 0; r < z.rows(); ++r) {
                const double t = z(r, c) - mu;
                v += t * t;
            }
            const double inv = 1.0 / std::max(std::sqrt(v / static_cast<double>(z.rows())), 1e-3);
            for (std::size_t r = 0; r < z.rows(); ++r) {
                zd[r * z.cols() + c] = (z(r, c) - mu) * inv;
            }
        }
        zc = Tensor(z.shape(), std::move(zd));
    }
    return forward(m.G, concat_cols(zprime, zc));
}

Tensor reconstruct(const IveGanModel& m, const Tensor& x, Rng& rng) {
    return generate(m, draw_normal(x.rows(), m.zprime_dim, rng), encode(m, x));
}

Tensor sample_novel(const IveGanModel& m, std::size_t n, Rng& rng) {
    const Tensor zprime = draw_normal(n, m.zprime_dim, rng);
    const Tensor z = draw_uniform_pm1(n, m.z_dim, rng);
    if (n == 0) return Tensor::matrix(0, m.data_dim, {});
    return generate(m, zprime, z);
}

std::vector<Tensor> interpolate(const IveGanModel& m, const Tensor& x_a, const Tensor& x_b,
                                std::size_t steps, Rng& rng) {
    if (steps < 2) throw ValueError("interpolate: steps must be >= 2");
    const Tensor za = encode(m, x_a);
    const Tensor zb = encode(m, x_b);
    if (za.rows() != 1 || zb.rows() != 1) {
        throw ShapeError("interpolate: endpoints must be single samples");
    }
    const Tensor zprime = draw_normal(1, m.zprime_dim, rng);
    std::vector<Tensor> out;
    out.reserve(steps);
    for (std::size_t i = 0; i < steps; ++i) {
        const double lam = static_cast<double>(i) / static_cast<double>(steps - 1);
        std::vector<double> z(m.z_dim);
        for (std::size_t c = 0; c < m.z_dim; ++c) z[c] = (1.0 - lam) * za[c] + lam * zb[c];
        out.push_back(generate(m, zprime, Tensor::matrix(1, m.z_dim, std::move(z))));
    }
    return out;
}

LossDraws draw_loss_inputs(const IveGanModel& m, const Tensor& x, const TransformSpec& transform,
                           Rng& rng) {
    LossDraws d;
    d.tx = sample_transform(transform, x, rng);
    d.zprime_rec = draw_normal(x.rows(), m.zprime_dim, rng);
    d.z_novel = draw_uniform_pm1(x.rows(), m.z_dim, rng);
    d.zprime_nov = draw_normal(x.rows(), m.zprime_dim, rng);
    return d;
}

LossValues ivegan_losses(const IveGanModel& m, const Tensor& x, const LossDraws& draws,
                         GenLossMode mode, NovelTerm novel) {
    if (x.rows() == 0) throw ShapeError("ivegan_losses: empty batch");
    Tape tape;
    const TapeBinding be = bind_params(m.E, tape, false);
    const TapeBinding bg = bind_params(m.G, tape, false);
    const TapeBinding bd = bind_params(m.D, tape, false);
    const TapeBinding bdp = bind_params(m.Dprime, tape, false);
    const LossNodes n = build_ivegan_losses(tape, m, be, bg, bd, bdp, x, draws, mode, novel);
    LossValues v;
    v.loss_d = tape.value(n.loss_d)[0];
    v.loss_dprime = tape.value(n.loss_dprime)[0];
    v.loss_ge = tape.value(n.loss_ge)[0];
    v.terms = n.terms;
    v.mean_logits = n.mean_logits;
    return v;
}

LossValues ivegan_losses(const IveGanModel& m, const Tensor& x, const TransformSpec& transform,
                         const TrainConfig& cfg, Rng& rng) {
    return ivegan_losses(m, x, draw_loss_inputs(m, x, transform, rng), cfg.gen_loss,
                         cfg.novel_term);
}

Trainer::Trainer(TrainConfig cfg, DataSource source, IveGanModel model)
    : cfg_(cfg), source_(std::move(source)), model_(std::move(model)), rng_(cfg.seed) {
    cfg_.validate();
    model_.validate();
    if (source_.data_dim != model_.data_dim) {
        throw ShapeError("Trainer: data source dimension does not match model");
    }
}

Tensor Trainer::draw_batch() { return source_.sample_batch(cfg_.batch_size, rng_); }

StepReport Trainer::step_discriminators(const Tensor& x) {
    const LossDraws draws = draw_loss_inputs(model_, x, source_.transform, rng_);
    Tape tape;
    const TapeBinding be = bind_params(model_.E, tape, false);
    const TapeBinding bg = bind_params(model_.G, tape, false);
    const TapeBinding bd = bind_params(model_.D, tape, true);
    const TapeBinding bdp = bind_params(model_.Dprime, tape, true);
    const LossNodes n = build_ivegan_losses(tape, model_, be, bg, bd, bdp, x, draws,
                                            cfg_.gen_loss, cfg_.novel_term);
    const Gradients g = tape.backward(tape.add(n.loss_d, n.loss_dprime));
    adam_step(model_.D, collect_grads(g, bd), model_.adam_D);
    adam_step(model_.Dprime, collect_grads(g, bdp), model_.adam_Dprime);
    StepReport r;
    r.iteration = iter_;
    r.loss_d = tape.value(n.loss_d)[0];
    r.loss_dprime = tape.value(n.loss_dprime)[0];
    r.loss_ge = tape.value(n.loss_ge)[0];
    r.mean_logits = n.mean_logits;
    return r;
}

StepReport Trainer::step_generator(const Tensor& x) {
    const LossDraws draws = draw_loss_inputs(model_, x, source_.transform, rng_);
    Tape tape;
    const TapeBinding be = bind_params(model_.E, tape, true);
    const TapeBinding bg = bind_params(model_.G, tape, true);
    const TapeBinding bd = bind_params(model_.D, tape, false);
    const TapeBinding bdp = bind_params(model_.Dprime, tape, false);
    const LossNodes n = build_ivegan_losses(tape, model_, be, bg, bd, bdp, x, draws,
                                            cfg_.gen_loss, cfg_.novel_term);
    const Gradients g = tape.backward(n.loss_ge);
    adam_step(model_.E, collect_grads(g, be), model_.adam_E);
    adam_step(model_.G, collect_grads(g, bg), model_.adam_G);
    StepReport r;
    r.iteration = iter_;
    r.loss_d = tape.value(n.loss_d)[0];
    r.loss_dprime = tape.value(n.loss_dprime)[0];
    r.loss_ge = tape.value(n.loss_ge)[0];
    r.mean_logits = n.mean_logits;
    return r;
}

void Trainer::step() {
    try {
        const Tensor x = draw_batch();
        const StepReport rd = step_discriminators(x);
        const StepReport rg = step_generator(x);
        StepReport r;
        r.iteration = iter_;
        r.loss_d = rd.loss_d;
        r.loss_dprime = rd.loss_dprime;
        r.loss_ge = rg.loss_ge;
        r.mean_logits = rd.mean_logits;
        history_.push_back(r);
        iter_ += 1;
    } catch (const ValueError& e) {
        throw ValueError("training aborted at iteration " + std::to_string(iter_) + ": " +
                         e.what());
    }
}

void Trainer::restore(std::size_t iteration, const std::string& rng_state) {
    iter_ = iteration;
    rng_.restore_state(rng_state);
    history_.clear();
}

Tensor snapshot_samples(const IveGanModel& m, std::size_t n, std::uint64_t seed,
                        std::size_t iteration) {
    Rng rng = Rng::derive(seed ^ kSnapshotStream, iteration);
    return sample_novel(m, n, rng);
}

TrainResult train(const TrainConfig& cfg, const DataSource& source, IveGanModel model) {
    Trainer tr(cfg, source, std::move(model));
    TrainResult res;
    for (std::size_t it = 0; it <= cfg.iterations; ++it) {
        if (it % cfg.snapshot_every == 0) {
            res.snapshots.push_back(
                {it, snapshot_samples(tr.model(), cfg.snapshot_samples, cfg.seed, it)});
        }
        if (it < cfg.iterations) tr.step();
    }
    res.history = tr.history();
    res.model = tr.model();
    return res;
}

// ---- classical GAN baseline ----

VanillaModel make_ring_vanilla(std::size_t noise_dim, const TrainConfig& cfg, Rng& rng) {
    VanillaModel m;
    m.data_dim = 2;
    m.noise_dim = noise_dim;
    const std::vector<LayerSpec> g{{noise_dim, 128, Act::Tanh}, {128, 2, Act::Tanh}};
    const std::vector<LayerSpec> d{{2, 128, Act::Tanh}, {128, 1, Act::Linear}};
    m.G = init_network(g, rng);
    m.D = init_network(d, rng);
    m.adam_G = AdamState::init(m.G, cfg.adam_ge);
    m.adam_D = AdamState::init(m.D, cfg.adam_d);
    return m;
}

Tensor vanilla_sample(const VanillaModel& m, std::size_t n, Rng& rng) {
    const Tensor z = draw_normal(n, m.noise_dim, rng);
    if (n == 0) return Tensor::matrix(0, m.data_dim, {});
    return forward(m.G, z);
}

VanillaLossValues vanilla_losses(const VanillaModel& m, const Tensor& x, const Tensor& z,
                                 GenLossMode mode) {
    Tape tape;
    const TapeBinding bg = bind_params(m.G, tape, false);
    const TapeBinding bd = bind_params(m.D, tape, false);
    const NodeId nx = tape.leaf(x);
    const NodeId nz = tape.leaf(z);
    const NodeId sr = forward(m.D, bd, tape, nx);
    const NodeId sf = forward(m.D, bd, tape, forward(m.G, bg, tape, nz));
    const NodeId spn_r = mean_sp_neg(tape, sr);
    const NodeId spp_f = mean_sp(tape, sf);
    VanillaLossValues v;
    v.terms = {-tape.value(spn_r)[0], -tape.value(spp_f)[0]};
    v.loss_d = tape.value(spn_r)[0] + tape.value(spp_f)[0];
    v.loss_g = mode == GenLossMode::NonSaturating
                   ? tape.value(mean_sp_neg(tape, sf))[0]
                   : -tape.value(spp_f)[0];
    return v;
}

VanillaTrainer::VanillaTrainer(TrainConfig cfg, DataSource source, VanillaModel model)
    : cfg_(cfg), source_(std::move(source)), model_(std::move(model)), rng_(cfg.seed) {
    cfg_.validate();
    if (source_.data_dim != model_.data_dim) {
        throw ShapeError("VanillaTrainer: data source dimension does not match model");
    }
}

Tensor VanillaTrainer::draw_batch() { return source_.sample_batch(cfg_.batch_size, rng_); }

void VanillaTrainer::step() {
    try {
        const Tensor x = draw_batch();
        StepReport r;
        r.iteration = iter_;
        {
            // D phase
            Tape tape;
            const TapeBinding bg = bind_params(model_.G, tape, false);
            const TapeBinding bd = bind_params(model_.D, tape, true);
            const NodeId nx = tape.leaf(x);
            const NodeId nz = tape.leaf(draw_normal(x.rows(), model_.noise_dim, rng_));
            const NodeId sr = forward(model_.D, bd, tape, nx);
            const NodeId sf = forward(model_.D, bd, tape, forward(model_.G, bg, tape, nz));
            const NodeId loss_d = tape.add(mean_sp_neg(tape, sr), mean_sp(tape, sf));
            const Gradients g = tape.backward(loss_d);
            adam_step(model_.D, collect_grads(g, bd), model_.adam_D);
            r.loss_d = tape.value(loss_d)[0];
            r.mean_logits[0] = mean_all_val(tape.value(sr));
            r.mean_logits[2] = mean_all_val(tape.value(sf));
        }
        {
            // G phase, fresh z
            Tape tape;
            const TapeBinding bg = bind_params(model_.G, tape, true);
            const TapeBinding bd = bind_params(model_.D, tape, false);
            const NodeId nz = tape.leaf(draw_normal(x.rows(), model_.noise_dim, rng_));
            const NodeId sf = forward(model_.D, bd, tape, forward(model_.G, bg, tape, nz));
            const NodeId loss_g = cfg_.gen_loss == GenLossMode::NonSaturating
                                      ? mean_sp_neg(tape, sf)
                                      : tape.scale(tape.mean_all(tape.softplus(sf)), -1.0);
            const Gradients g = tape.backward(loss_g);
            adam_step(model_.G, collect_grads(g, bg), model_.adam_G);
            r.loss_ge = tape.value(loss_g)[0];
        }
        history_.push_back(r);
        iter_ += 1;
    } catch (const ValueError& e) {
        throw ValueError("vanilla training aborted at iteration " + std::to_string(iter_) + ": " +
                         e.what());
    }
}

void VanillaTrainer::restore(std::size_t iteration, const std::string& rng_state) {
    iter_ = iteration;
    rng_.restore_state(rng_state);
    history_.clear();
}

VanillaTrainResult train_vanilla(const TrainConfig& cfg, const DataSource& source,
                                 VanillaModel model) {
    VanillaTrainer tr(cfg, source, std::move(model));
    VanillaTrainResult res;
    for (std::size_t it = 0; it <= cfg.iterations; ++it) {
        if (it % cfg.snapshot_every == 0) {
            Rng rng = Rng::derive(cfg.seed ^ kSnapshotStream, it);
            res.snapshots.push_back({it, vanilla_sample(tr.model(), cfg.snapshot_samples, rng)});
        }
        if (it < cfg.iterations) tr.step();
    }
    res.history = tr.history();
    res.model = tr.model();
    return res;
}

}  // namespace ivegan
