#include "ivegan/runner.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "ivegan/eval.hpp"
#include "ivegan/io.hpp"

namespace ivegan {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kInitStream = 0x696e6974ULL;
constexpr std::uint64_t kEvalStream = 0x6576616cULL;

std::string iter_name(const char* prefix, std::size_t it, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%06zu.%s", prefix, it, ext);
    return buf;
}

void write_history_line(std::ofstream& out, const StepReport& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.iteration,
                  r.loss_d, r.loss_dprime, r.loss_ge, r.mean_logits[0], r.mean_logits[1],
                  r.mean_logits[2], r.mean_logits[3]);
    out << buf;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << text;
    if (!out) throw IoError("write failed: " + path);
}

Checkpoint make_ckpt(const RunConfig& cfg, const std::string& rng_state, std::size_t iteration) {
    Checkpoint c;
    c.kind = cfg.algorithm;
    c.experiment = cfg.experiment;
    c.config_hash = cfg.hash();
    c.iteration = iteration;
    c.rng_state = rng_state;
    return c;
}

void write_mnist_report(const std::string& path, const RunConfig& cfg, const IveGanModel& model,
                        const LabeledImages& data) {
    Rng rng = Rng::derive(cfg.seed ^ kEvalStream, 1);
    const Tensor latents = encode(model, data.pixels);
    const double knn = latent_knn_agreement(latents, data.labels, 5);

    // Reconstruction fidelity on a prefix; the shuffled-partner mean is the
    // mismatch baseline.
    const std::size_t n_rec = std::min<std::size_t>(1000, data.count());
    std::vector<double> sub(data.pixels.data().begin(),
                            data.pixels.data().begin() + n_rec * data.pixels.cols());
    const Tensor xs = Tensor::matrix(n_rec, data.pixels.cols(), std::move(sub));
    const ReconstructionReport rec = reconstruction_error(model, xs, rng);

    json j;
    j["experiment"] = "mnist_lite";
    j["n_images"] = data.count();
    j["z_dim"] = model.z_dim;
    j["knn_agreement"] = knn;
    j["knn_k"] = 5;
    j["reconstruction"] = {{"n", n_rec},
                           {"mean_matched_l2", rec.mean_matched},
                           {"mean_shuffled_l2", rec.mean_shuffled},
                           {"matched_over_shuffled",
                            rec.mean_matched / std::max(rec.mean_shuffled, 1e-300)}};
    write_text_file(path, j.dump(2) + "\n");
}

}  // namespace

int log_level() {
    const char* v = std::getenv("IVEGAN_LOG");
    if (!v) return 1;
    return std::atoi(v);
}

void log_line(int level, const std::string& msg) {
    if (log_level() >= level) std::cerr << "[ivegan] " << msg << "\n";
}

IveGanModel build_model(const RunConfig& cfg) {
    Rng rng = Rng::derive(cfg.seed, kInitStream);
    const TrainConfig tc = cfg.train_config();
    if (cfg.experiment == "ring") {
        return make_ring_model(cfg.z_dim, cfg.zprime_dim, tc, rng);
    }
    const std::size_t side = 28 / cfg.mnist.downscale;
    return make_image_model(side * side, cfg.z_dim, cfg.zprime_dim, cfg.hidden, tc, rng);
}

LabeledImages load_mnist_lite(const RunConfig& cfg) {
    LabeledImages all = load_idx(cfg.mnist.images_path, cfg.mnist.labels_path);
    const std::size_t n = std::min(cfg.mnist.n_images, all.count());
    std::vector<double> pix(all.pixels.data().begin(),
                            all.pixels.data().begin() + n * all.pixels.cols());
    LabeledImages subset;
    subset.height = all.height;
    subset.width = all.width;
    subset.pixels = Tensor::matrix(n, all.pixels.cols(), std::move(pix));
    subset.labels.assign(all.labels.begin(), all.labels.begin() + static_cast<std::ptrdiff_t>(n));
    return downscale(subset, cfg.mnist.downscale);
}

DataSource build_source(const RunConfig& cfg) {
    if (cfg.experiment == "ring") {
        return ring_source(cfg.ring, cfg.ring_transform_sigma());
    }
    const LabeledImages data = load_mnist_lite(cfg);
    ImageAffineSpec t;
    t.height = data.height;
    t.width = data.width;
    t.max_shift_px = cfg.mnist.max_shift_px;
    t.max_rot_deg = cfg.mnist.max_rot_deg;
    return image_batch_source(data.pixels, t);
}

std::string coverage_report_json(const CoverageReport& rep, const RingSpec& spec) {
    json j;
    j["n_samples"] = rep.n_samples;
    j["n_modes"] = spec.n_modes;
    j["per_mode_counts"] = rep.per_mode_counts;
    j["assigned_fraction"] = rep.assigned_fraction;
    j["covered_modes"] = rep.covered_modes;
    j["jsd"] = rep.jsd;
    return j.dump(2) + "\n";
}

std::string coverage_report_text(const CoverageReport& rep) {
    std::ostringstream os;
    os << "samples:           " << rep.n_samples << "\n";
    os << "covered modes:     " << rep.covered_modes << " / " << rep.per_mode_counts.size()
       << "\n";
    os << "assigned fraction: " << rep.assigned_fraction << "\n";
    os << "JSD vs truth:      " << rep.jsd << "\n";
    os << "per-mode counts:  ";
    for (std::size_t c : rep.per_mode_counts) os << " " << c;
    os << "\n";
    return os.str();
}

void run_train(const RunConfig& cfg, const std::string& resume_path) {
    if (cfg.algorithm == "vanilla" && cfg.experiment != "ring") {
        throw ConfigError("the vanilla baseline is only wired up for the ring experiment");
    }
    const TrainConfig tcfg = cfg.train_config();
    const DataSource src = build_source(cfg);

    fs::create_directories(cfg.output_dir);
    const std::string history_path = cfg.output_dir + "/history.csv";

    std::optional<Checkpoint> resume;
    if (!resume_path.empty()) {
        resume = load_checkpoint(resume_path);
        if (resume->config_hash != cfg.hash()) {
            throw ConfigError("checkpoint was produced by a different configuration");
        }
        if (resume->kind != cfg.algorithm || resume->experiment != cfg.experiment) {
            throw ConfigError("checkpoint kind/experiment does not match config");
        }
    }

    std::ofstream history(history_path,
                          resume ? std::ios::app : std::ios::trunc);
    if (!history) throw IoError("cannot open for writing: " + history_path);
    if (!resume) {
        history << "iteration,loss_d,loss_dprime,loss_ge,logit_real_pair,logit_real_novel,"
                   "logit_fake_pair,logit_fake_novel\n";
    }

    auto emit_snapshot = [&](std::size_t it, const Tensor& samples) {
        write_samples_csv(cfg.output_dir + "/" + iter_name("snapshot", it, "csv"), samples);
        log_line(2, "snapshot at iteration " + std::to_string(it));
    };

    if (cfg.algorithm == "ivegan") {
        Trainer tr(tcfg, src, resume ? *resume->model : build_model(cfg));
        if (resume) tr.restore(resume->iteration, resume->rng_state);
        std::size_t done = tr.iteration();
        while (true) {
            const std::size_t it = tr.iteration();
            if (it % cfg.snapshot_every == 0 && (!resume || it > resume->iteration || it == 0)) {
                emit_snapshot(it, snapshot_samples(tr.model(), cfg.snapshot_samples, cfg.seed, it));
            }
            if (cfg.checkpoint_every > 0 && it > done && it % cfg.checkpoint_every == 0) {
                Checkpoint c = make_ckpt(cfg, tr.rng().save_state(), it);
                c.model = tr.model();
                save_checkpoint(cfg.output_dir + "/" + iter_name("checkpoint", it, "json"), c);
            }
            if (it == cfg.iterations) break;
            tr.step();
            write_history_line(history, tr.history().back());
            if (tr.iteration() % 1000 == 0) {
                history.flush();
                log_line(1, "iteration " + std::to_string(tr.iteration()) + "/" +
                                std::to_string(cfg.iterations) +
                                " loss_d=" + std::to_string(tr.history().back().loss_d) +
                                " loss_ge=" + std::to_string(tr.history().back().loss_ge));
            }
        }
        Checkpoint c = make_ckpt(cfg, tr.rng().save_state(), tr.iteration());
        c.model = tr.model();
        save_checkpoint(cfg.output_dir + "/checkpoint.json", c);

        if (cfg.experiment == "ring") {
            Rng erng = Rng::derive(cfg.seed ^ kEvalStream, 0);
            const Tensor samples = sample_novel(tr.model(), 10000, erng);
            const CoverageReport rep = coverage(samples, cfg.ring);
            write_text_file(cfg.output_dir + "/coverage.json",
                            coverage_report_json(rep, cfg.ring));
            write_text_file(cfg.output_dir + "/coverage.txt", coverage_report_text(rep));
        } else {
            write_mnist_report(cfg.output_dir + "/representation.json", cfg, tr.model(),
                               load_mnist_lite(cfg));
        }
    } else {
        Rng init_rng = Rng::derive(cfg.seed, kInitStream);
        VanillaModel fresh = make_ring_vanilla(cfg.z_dim + cfg.zprime_dim, tcfg, init_rng);
        VanillaTrainer tr(tcfg, src, resume ? *resume->vanilla : fresh);
        if (resume) tr.restore(resume->iteration, resume->rng_state);
        const std::size_t done = tr.iteration();
        while (true) {
            const std::size_t it = tr.iteration();
            if (it % cfg.snapshot_every == 0 && (!resume || it > resume->iteration || it == 0)) {
                Rng srng = Rng::derive(cfg.seed ^ 0x736e617073ULL, it);
                emit_snapshot(it, vanilla_sample(tr.model(), cfg.snapshot_samples, srng));
            }
            if (cfg.checkpoint_every > 0 && it > done && it % cfg.checkpoint_every == 0) {
                Checkpoint c = make_ckpt(cfg, tr.rng().save_state(), it);
                c.vanilla = tr.model();
                save_checkpoint(cfg.output_dir + "/" + iter_name("checkpoint", it, "json"), c);
            }
            if (it == cfg.iterations) break;
            tr.step();
            write_history_line(history, tr.history().back());
            if (tr.iteration() % 1000 == 0) history.flush();
        }
        Checkpoint c = make_ckpt(cfg, tr.rng().save_state(), tr.iteration());
        c.vanilla = tr.model();
        save_checkpoint(cfg.output_dir + "/checkpoint.json", c);

        Rng erng = Rng::derive(cfg.seed ^ kEvalStream, 0);
        const Tensor samples = vanilla_sample(tr.model(), 10000, erng);
        const CoverageReport rep = coverage(samples, cfg.ring);
        write_text_file(cfg.output_dir + "/coverage.json", coverage_report_json(rep, cfg.ring));
        write_text_file(cfg.output_dir + "/coverage.txt", coverage_report_text(rep));
    }
    log_line(1, "training complete; artifacts in " + cfg.output_dir);
}

void run_eval(const std::string& ckpt_path, const RunConfig& cfg, const std::string& out_path) {
    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    if (ckpt.experiment != cfg.experiment) {
        throw ConfigError("checkpoint experiment \"" + ckpt.experiment +
                          "\" does not match config \"" + cfg.experiment + "\"");
    }
    if (cfg.experiment == "ring") {
        Rng erng = Rng::derive(cfg.seed ^ kEvalStream, 0);
        const Tensor samples = ckpt.kind == "ivegan"
                                   ? sample_novel(*ckpt.model, 10000, erng)
                                   : vanilla_sample(*ckpt.vanilla, 10000, erng);
        const CoverageReport rep = coverage(samples, cfg.ring);
        write_text_file(out_path, coverage_report_json(rep, cfg.ring));
        std::cout << coverage_report_text(rep);
    } else {
        if (ckpt.kind != "ivegan") throw ConfigError("mnist_lite eval needs an ivegan checkpoint");
        write_mnist_report(out_path, cfg, *ckpt.model, load_mnist_lite(cfg));
        std::ifstream in(out_path);
        std::cout << in.rdbuf();
    }
}

void run_sample(const std::string& ckpt_path, std::size_t n, std::uint64_t seed,
                const std::string& out_path) {
    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    Rng rng(seed);
    const Tensor samples = ckpt.kind == "ivegan" ? sample_novel(*ckpt.model, n, rng)
                                                 : vanilla_sample(*ckpt.vanilla, n, rng);
    write_samples_csv(out_path, samples);
}

void run_encode(const std::string& ckpt_path, const std::string& in_path,
                const std::string& out_path) {
    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    if (ckpt.kind != "ivegan") throw ConfigError("encode needs an ivegan checkpoint");
    const Tensor xs = read_samples_csv(in_path);
    if (xs.cols() != ckpt.model->data_dim) {
        throw ConfigError("input width " + std::to_string(xs.cols()) +
                          " does not match checkpoint data_dim " +
                          std::to_string(ckpt.model->data_dim));
    }
    write_samples_csv(out_path, encode(*ckpt.model, xs));
}

void run_reconstruct(const std::string& ckpt_path, const std::string& in_path, std::uint64_t seed,
                     const std::string& out_path) {
    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    if (ckpt.kind != "ivegan") throw ConfigError("reconstruct needs an ivegan checkpoint");
    const Tensor xs = read_samples_csv(in_path);
    if (xs.cols() != ckpt.model->data_dim) {
        throw ConfigError("input width " + std::to_string(xs.cols()) +
                          " does not match checkpoint data_dim " +
                          std::to_string(ckpt.model->data_dim));
    }
    Rng rng(seed);
    write_samples_csv(out_path, reconstruct(*ckpt.model, xs, rng));
}

void run_plot(const std::string& in_path, const std::string& out_path, std::size_t bins) {
    const Tensor samples = read_samples_csv(in_path);
    if (samples.rows() > 0 && samples.cols() != 2) {
        throw ConfigError("plot expects 2-column sample CSVs, got " +
                          std::to_string(samples.cols()) + " columns");
    }
    const Tensor pts = samples.rows() == 0 ? Tensor::matrix(0, 2, {}) : samples;
    write_pgm(out_path, density_grid(pts, bins, -1.2, 1.2));
}

}  // namespace ivegan
