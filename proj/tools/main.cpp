#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ivegan/config.hpp"
#include "ivegan/runner.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

int guarded(const std::function<void()>& fn) {
    try {
        fn();
        return kExitOk;
    } catch (const ivegan::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ivegan::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const ivegan::ValueError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const ivegan::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"IVE-GAN trainer and tooling"};
    app.require_subcommand(1);

    std::string config_path, resume_path, ckpt_path, in_path, out_path;
    std::size_t n = 1000, bins = 64;
    std::uint64_t seed = 1;

    auto* train = app.add_subcommand("train", "train a model from a config file");
    train->add_option("--config", config_path, "run config JSON")->required();
    train->add_option("--resume", resume_path, "checkpoint to resume from");

    auto* sample = app.add_subcommand("sample", "draw novel samples from a checkpoint");
    sample->add_option("--ckpt", ckpt_path)->required();
    sample->add_option("--n", n);
    sample->add_option("--seed", seed);
    sample->add_option("--out", out_path)->required();

    auto* enc = app.add_subcommand("encode", "encode CSV samples to latents");
    enc->add_option("--ckpt", ckpt_path)->required();
    enc->add_option("--in", in_path)->required();
    enc->add_option("--out", out_path)->required();

    auto* rec = app.add_subcommand("reconstruct", "reconstruct CSV samples through G(E(x))");
    rec->add_option("--ckpt", ckpt_path)->required();
    rec->add_option("--in", in_path)->required();
    rec->add_option("--seed", seed);
    rec->add_option("--out", out_path)->required();

    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint against its experiment");
    ev->add_option("--ckpt", ckpt_path)->required();
    ev->add_option("--config", config_path)->required();
    ev->add_option("--out", out_path)->required();

    auto* plot = app.add_subcommand("plot", "render a sample CSV as a density PGM");
    plot->add_option("--in", in_path)->required();
    plot->add_option("--out", out_path)->required();
    plot->add_option("--bins", bins);

    CLI11_PARSE(app, argc, argv);

    if (train->parsed()) {
        return guarded([&] { ivegan::run_train(ivegan::load_run_config(config_path), resume_path); });
    }
    if (sample->parsed()) {
        return guarded([&] { ivegan::run_sample(ckpt_path, n, seed, out_path); });
    }
    if (enc->parsed()) {
        return guarded([&] { ivegan::run_encode(ckpt_path, in_path, out_path); });
    }
    if (rec->parsed()) {
        return guarded([&] { ivegan::run_reconstruct(ckpt_path, in_path, seed, out_path); });
    }
    if (ev->parsed()) {
        return guarded([&] { ivegan::run_eval(ckpt_path, ivegan::load_run_config(config_path), out_path); });
    }
    return guarded([&] { ivegan::run_plot(in_path, out_path, bins); });
}
