#pragma once

#include <cstdint>
#include <string>

#include "ivegan/checkpoint.hpp"
#include "ivegan/config.hpp"
#include "ivegan/data.hpp"
#include "ivegan/eval.hpp"
#include "ivegan/model.hpp"

namespace ivegan {

// Verbosity from the IVEGAN_LOG environment variable (0 quiet, 1 progress,
// 2 debug; default 1).
int log_level();
void log_line(int level, const std::string& msg);

IveGanModel build_model(const RunConfig& cfg);
DataSource build_source(const RunConfig& cfg);
// MNIST-lite dataset as configured (first n_images, downscaled).
LabeledImages load_mnist_lite(const RunConfig& cfg);

// Full training command: history, snapshots, checkpoints, final report.
// Writes into cfg.output_dir. `resume_path` empty for a fresh run.
void run_train(const RunConfig& cfg, const std::string& resume_path);

void run_eval(const std::string& ckpt_path, const RunConfig& cfg, const std::string& out_path);
void run_sample(const std::string& ckpt_path, std::size_t n, std::uint64_t seed,
                const std::string& out_path);
void run_encode(const std::string& ckpt_path, const std::string& in_path,
                const std::string& out_path);
void run_reconstruct(const std::string& ckpt_path, const std::string& in_path, std::uint64_t seed,
                     const std::string& out_path);
void run_plot(const std::string& in_path, const std::string& out_path, std::size_t bins);

// Report serialization shared by run_train and run_eval.
std::string coverage_report_json(const CoverageReport& rep, const RingSpec& spec);
std::string coverage_report_text(const CoverageReport& rep);

}  // namespace ivegan
