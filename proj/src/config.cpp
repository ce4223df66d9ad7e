#include "ivegan/config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

namespace ivegan {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.contains(key)) {
            throw ConfigError("unknown config key \"" + key + "\" in " + where);
        }
    }
}

template <typename T>
void get_to(const json& obj, const char* key, T& out, const std::string& where) {
    if (!obj.contains(key)) return;
    try {
        obj.at(key).get_to(out);
    } catch (const json::exception& e) {
        throw ConfigError("bad value for \"" + std::string(key) + "\" in " + where + ": " +
                          e.what());
    }
}

}  // namespace

TrainConfig RunConfig::train_config() const {
    TrainConfig t;
    t.iterations = iterations;
    t.batch_size = batch_size;
    t.seed = seed;
    t.gen_loss = gen_loss_mode();
    t.novel_term = novel_term_mode();
    t.adam_ge = {lr_ge, beta1, beta2, epsilon};
    t.adam_d = {lr_d, beta1, beta2, epsilon};
    t.adam_dprime = {lr_dprime, beta1, beta2, epsilon};
    t.snapshot_every = snapshot_every;
    t.snapshot_samples = snapshot_samples;
    return t;
}

GenLossMode RunConfig::gen_loss_mode() const {
    if (generator_loss_mode == "non_saturating") return GenLossMode::NonSaturating;
    if (generator_loss_mode == "minimax") return GenLossMode::Minimax;
    throw ConfigError("generator_loss_mode must be non_saturating or minimax, got \"" +
                      generator_loss_mode + "\"");
}

NovelTerm RunConfig::novel_term_mode() const {
    if (novel_term == "prior") return NovelTerm::Prior;
    if (novel_term == "printed") return NovelTerm::PrintedEncoding;
    throw ConfigError("novel_term must be prior or printed, got \"" + novel_term + "\"");
}

Cov2 RunConfig::ring_transform_sigma() const {
    if (transform_sigma) return *transform_sigma;
    const double s2 = ring.sigma * ring.sigma;
    return {s2, 0.0, 0.0, s2};
}

std::string RunConfig::canonical_json() const {
    json j;
    j["experiment"] = experiment;
    j["algorithm"] = algorithm;
    j["seed"] = seed;
    j["iterations"] = iterations;
    j["batch_size"] = batch_size;
    j["snapshot_every"] = snapshot_every;
    j["snapshot_samples"] = snapshot_samples;
    j["checkpoint_every"] = checkpoint_every;
    j["generator_loss_mode"] = generator_loss_mode;
    j["novel_term"] = novel_term;
    j["z_dim"] = z_dim;
    j["zprime_dim"] = zprime_dim;
    j["hidden"] = hidden;
    j["lr_ge"] = lr_ge;
    j["lr_d"] = lr_d;
    j["lr_dprime"] = lr_dprime;
    j["beta1"] = beta1;
    j["beta2"] = beta2;
    j["epsilon"] = epsilon;
    if (experiment == "ring") {
        j["ring"] = {{"n_modes", ring.n_modes}, {"radius", ring.radius}, {"sigma", ring.sigma}};
        const Cov2 t = ring_transform_sigma();
        j["transform_sigma"] = {t[0], t[1], t[2], t[3]};
    } else {
        j["mnist"] = {{"n_images", mnist.n_images},
                      {"downscale", mnist.downscale},
                      {"max_shift_px", mnist.max_shift_px},
                      {"max_rot_deg", mnist.max_rot_deg}};
    }
    return j.dump();
}

std::uint64_t RunConfig::hash() const {
    const std::string s = canonical_json();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

RunConfig parse_run_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");

    reject_unknown(j, {"experiment", "algorithm", "seed", "iterations", "batch_size",
                       "snapshot_every", "snapshot_samples", "checkpoint_every",
                       "generator_loss_mode", "novel_term", "z_dim", "zprime_dim", "hidden",
                       "lr_ge", "lr_d", "lr_dprime", "beta1", "beta2", "epsilon", "output_dir",
                       "ring", "transform_sigma", "mnist"},
                   "config root");

    RunConfig c;
    get_to(j, "experiment", c.experiment, "config root");
    if (c.experiment != "ring" && c.experiment != "mnist_lite") {
        throw ConfigError("experiment must be \"ring\" or \"mnist_lite\", got \"" + c.experiment +
                          "\"");
    }
    // Per-experiment defaults before reading overrides.
    if (c.experiment == "ring") {
        c.iterations = 50000;
        c.batch_size = 1024;
        c.snapshot_every = 10000;
        c.z_dim = 3;
    } else {
        c.iterations = 2000;
        c.batch_size = 256;
        c.snapshot_every = 500;
        c.snapshot_samples = 64;
        c.z_dim = 3;
    }

    get_to(j, "algorithm", c.algorithm, "config root");
    if (c.algorithm != "ivegan" && c.algorithm != "vanilla") {
        throw ConfigError("algorithm must be \"ivegan\" or \"vanilla\", got \"" + c.algorithm +
                          "\"");
    }
    get_to(j, "seed", c.seed, "config root");
    get_to(j, "iterations", c.iterations, "config root");
    get_to(j, "batch_size", c.batch_size, "config root");
    get_to(j, "snapshot_every", c.snapshot_every, "config root");
    get_to(j, "snapshot_samples", c.snapshot_samples, "config root");
    get_to(j, "checkpoint_every", c.checkpoint_every, "config root");
    get_to(j, "generator_loss_mode", c.generator_loss_mode, "config root");
    get_to(j, "novel_term", c.novel_term, "config root");
    get_to(j, "z_dim", c.z_dim, "config root");
    get_to(j, "zprime_dim", c.zprime_dim, "config root");
    get_to(j, "hidden", c.hidden, "config root");
    get_to(j, "lr_ge", c.lr_ge, "config root");
    get_to(j, "lr_d", c.lr_d, "config root");
    get_to(j, "lr_dprime", c.lr_dprime, "config root");
    get_to(j, "beta1", c.beta1, "config root");
    get_to(j, "beta2", c.beta2, "config root");
    get_to(j, "epsilon", c.epsilon, "config root");
    get_to(j, "output_dir", c.output_dir, "config root");

    if (j.contains("ring")) {
        if (c.experiment != "ring") throw ConfigError("\"ring\" block requires experiment=ring");
        const json& r = j["ring"];
        reject_unknown(r, {"n_modes", "radius", "sigma", "seed"}, "ring");
        get_to(r, "n_modes", c.ring.n_modes, "ring");
        get_to(r, "radius", c.ring.radius, "ring");
        get_to(r, "sigma", c.ring.sigma, "ring");
    }
    c.ring.seed = c.seed;
    if (j.contains("transform_sigma")) {
        if (c.experiment != "ring") {
            throw ConfigError("\"transform_sigma\" requires experiment=ring");
        }
        std::vector<double> t;
        get_to(j, "transform_sigma", t, "config root");
        if (t.size() != 4) throw ConfigError("transform_sigma must be 4 numbers (row-major 2x2)");
        c.transform_sigma = Cov2{t[0], t[1], t[2], t[3]};
    }
    if (j.contains("mnist")) {
        if (c.experiment != "mnist_lite") {
            throw ConfigError("\"mnist\" block requires experiment=mnist_lite");
        }
        const json& m = j["mnist"];
        reject_unknown(m, {"images_path", "labels_path", "n_images", "downscale", "max_shift_px",
                           "max_rot_deg"},
                       "mnist");
        get_to(m, "images_path", c.mnist.images_path, "mnist");
        get_to(m, "labels_path", c.mnist.labels_path, "mnist");
        get_to(m, "n_images", c.mnist.n_images, "mnist");
        get_to(m, "downscale", c.mnist.downscale, "mnist");
        get_to(m, "max_shift_px", c.mnist.max_shift_px, "mnist");
        get_to(m, "max_rot_deg", c.mnist.max_rot_deg, "mnist");
    }
    if (c.experiment == "mnist_lite" &&
        (c.mnist.images_path.empty() || c.mnist.labels_path.empty())) {
        throw ConfigError("mnist_lite requires mnist.images_path and mnist.labels_path");
    }

    if (c.iterations < 1) throw ConfigError("iterations must be >= 1");
    if (c.batch_size < 2) throw ConfigError("batch_size must be >= 2");
    if (c.snapshot_every == 0 || c.iterations % c.snapshot_every != 0) {
        throw ConfigError("snapshot_every must divide iterations");
    }
    if (c.z_dim < 1 || c.zprime_dim < 1) throw ConfigError("latent dims must be >= 1");
    try {
        c.ring.validate();
    } catch (const ValueError& e) {
        throw ConfigError(e.what());
    }
    return c;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_run_config(text);
}

}  // namespace ivegan
