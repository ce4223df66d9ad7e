#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include <json.hpp>

#include "ivegan/io.hpp"

using namespace ivegan;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("ivegan_cli_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

int run_cli(const std::string& args) {
    const std::string cmd =
        "IVEGAN_LOG=0 " + std::string(IVEGAN_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    REQUIRE(bool(out));
    out << text;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(bool(in));
    return std::string((std::istreambuf_iterator<char>(in)), {});
}

std::string ring_config(const std::string& out_dir, int checkpoint_every = 0,
                        const std::string& algorithm = "ivegan") {
    nlohmann::json j;
    j["experiment"] = "ring";
    j["algorithm"] = algorithm;
    j["seed"] = 11;
    j["iterations"] = 6;
    j["batch_size"] = 16;
    j["snapshot_every"] = 3;
    j["snapshot_samples"] = 8;
    j["checkpoint_every"] = checkpoint_every;
    j["output_dir"] = out_dir;
    return j.dump();
}

std::size_t count_lines(const std::string& text) {
    std::size_t n = 0;
    for (char c : text) n += (c == '\n');
    return n;
}

}  // namespace

TEST_CASE("train produces the full artifact set") {
    TempDir tmp;
    write_file(tmp.file("cfg.json"), ring_config(tmp.file("out")));
    CHECK(run_cli("train --config " + tmp.file("cfg.json")) == 0);

    CHECK(fs::exists(tmp.file("out/history.csv")));
    CHECK(fs::exists(tmp.file("out/checkpoint.json")));
    CHECK(fs::exists(tmp.file("out/coverage.json")));
    CHECK(fs::exists(tmp.file("out/coverage.txt")));
    CHECK(fs::exists(tmp.file("out/snapshot_000000.csv")));
    CHECK(fs::exists(tmp.file("out/snapshot_000003.csv")));
    CHECK(fs::exists(tmp.file("out/snapshot_000006.csv")));

    const std::string hist = slurp(tmp.file("out/history.csv"));
    CHECK(hist.rfind("iteration,loss_d,loss_dprime,loss_ge,", 0) == 0);
    CHECK(count_lines(hist) == 7);  // header + 6 iterations

    const auto cov = nlohmann::json::parse(slurp(tmp.file("out/coverage.json")));
    CHECK(cov.at("n_samples") == 10000);
    CHECK(cov.at("per_mode_counts").size() == 8);
    CHECK(cov.at("jsd").get<double>() >= 0.0);
}

TEST_CASE("sample / encode / reconstruct / eval / plot pipeline") {
    TempDir tmp;
    write_file(tmp.file("cfg.json"), ring_config(tmp.file("out")));
    REQUIRE(run_cli("train --config " + tmp.file("cfg.json")) == 0);
    const std::string ckpt = tmp.file("out/checkpoint.json");

    CHECK(run_cli("sample --ckpt " + ckpt + " --n 40 --seed 3 --out " + tmp.file("s.csv")) == 0);
    const Tensor s = read_samples_csv(tmp.file("s.csv"));
    CHECK(s.rows() == 40);
    CHECK(s.cols() == 2);

    // same seed, same samples
    CHECK(run_cli("sample --ckpt " + ckpt + " --n 40 --seed 3 --out " + tmp.file("s2.csv")) == 0);
    CHECK(slurp(tmp.file("s.csv")) == slurp(tmp.file("s2.csv")));

    CHECK(run_cli("encode --ckpt " + ckpt + " --in " + tmp.file("s.csv") + " --out " +
                  tmp.file("z.csv")) == 0);
    const Tensor z = read_samples_csv(tmp.file("z.csv"));
    CHECK(z.rows() == 40);
    CHECK(z.cols() == 3);

    CHECK(run_cli("reconstruct --ckpt " + ckpt + " --in " + tmp.file("s.csv") +
                  " --seed 5 --out " + tmp.file("r.csv")) == 0);
    CHECK(read_samples_csv(tmp.file("r.csv")).rows() == 40);

    CHECK(run_cli("eval --ckpt " + ckpt + " --config " + tmp.file("cfg.json") + " --out " +
                  tmp.file("cov.json")) == 0);
    const auto cov = nlohmann::json::parse(slurp(tmp.file("cov.json")));
    CHECK(cov.contains("covered_modes"));
    // eval re-derives its sampling stream, so it agrees with the train report
    CHECK(slurp(tmp.file("cov.json")) == slurp(tmp.file("out/coverage.json")));

    CHECK(run_cli("plot --in " + tmp.file("s.csv") + " --out " + tmp.file("d.pgm") +
                  " --bins 32") == 0);
    CHECK(slurp(tmp.file("d.pgm")).rfind("P5\n32 32\n255\n", 0) == 0);
}

TEST_CASE("checkpoint/resume through the CLI reproduces the uninterrupted run") {
    TempDir tmp;
    write_file(tmp.file("a.json"), ring_config(tmp.file("outA"), 3));
    REQUIRE(run_cli("train --config " + tmp.file("a.json")) == 0);
    REQUIRE(fs::exists(tmp.file("outA/checkpoint_000003.json")));

    write_file(tmp.file("b.json"), ring_config(tmp.file("outB"), 3));
    REQUIRE(run_cli("train --config " + tmp.file("b.json") + " --resume " +
                    tmp.file("outA/checkpoint_000003.json")) == 0);

    CHECK(slurp(tmp.file("outA/checkpoint.json")) == slurp(tmp.file("outB/checkpoint.json")));
    CHECK(slurp(tmp.file("outA/snapshot_000006.csv")) == slurp(tmp.file("outB/snapshot_000006.csv")));
    // resumed history holds only the tail iterations, no header
    CHECK(count_lines(slurp(tmp.file("outB/history.csv"))) == 3);

    // a config with different hyperparameters must refuse the checkpoint
    nlohmann::json other = nlohmann::json::parse(ring_config(tmp.file("outC"), 3));
    other["seed"] = 12;
    write_file(tmp.file("c.json"), other.dump());
    CHECK(run_cli("train --config " + tmp.file("c.json") + " --resume " +
                  tmp.file("outA/checkpoint_000003.json")) == 2);
}

TEST_CASE("vanilla baseline trains through the CLI") {
    TempDir tmp;
    write_file(tmp.file("cfg.json"), ring_config(tmp.file("out"), 0, "vanilla"));
    CHECK(run_cli("train --config " + tmp.file("cfg.json")) == 0);
    CHECK(fs::exists(tmp.file("out/coverage.json")));
    const auto ckpt = nlohmann::json::parse(slurp(tmp.file("out/checkpoint.json")));
    CHECK(ckpt.at("kind") == "vanilla");

    // vanilla checkpoints cannot feed encode
    CHECK(run_cli("encode --ckpt " + tmp.file("out/checkpoint.json") + " --in " +
                  tmp.file("out/snapshot_000006.csv") + " --out " + tmp.file("z.csv")) == 2);
}

TEST_CASE("exit codes: 2 config, 3 io, 4 numeric") {
    TempDir tmp;

    // 2: unknown key, bad value, missing config file
    write_file(tmp.file("bad.json"), R"({"experiment": "ring", "whoops": 1})");
    CHECK(run_cli("train --config " + tmp.file("bad.json")) == 2);
    write_file(tmp.file("bad2.json"), R"({"experiment": "nope"})");
    CHECK(run_cli("train --config " + tmp.file("bad2.json")) == 2);
    CHECK(run_cli("train --config " + tmp.file("missing.json")) == 2);

    // 3: missing/corrupt checkpoint or data files
    CHECK(run_cli("sample --ckpt " + tmp.file("no.json") + " --out " + tmp.file("s.csv")) == 3);
    write_file(tmp.file("junk.json"), "{ not json");
    CHECK(run_cli("sample --ckpt " + tmp.file("junk.json") + " --out " + tmp.file("s.csv")) == 3);
    CHECK(run_cli("plot --in " + tmp.file("no.csv") + " --out " + tmp.file("d.pgm")) == 3);
    write_file(tmp.file("ragged.csv"), "x0,x1\n1\n");
    CHECK(run_cli("plot --in " + tmp.file("ragged.csv") + " --out " + tmp.file("d.pgm")) == 3);

    // 4: numeric failure - resuming with a corrupted rng state
    write_file(tmp.file("cfg.json"), ring_config(tmp.file("out")));
    REQUIRE(run_cli("train --config " + tmp.file("cfg.json")) == 0);
    auto ckpt = nlohmann::json::parse(slurp(tmp.file("out/checkpoint.json")));
    ckpt["rng_state"] = "definitely not an rng state";
    ckpt["iteration"] = 3;
    write_file(tmp.file("corrupt.json"), ckpt.dump(2) + "\n");
    CHECK(run_cli("train --config " + tmp.file("cfg.json") + " --resume " +
                  tmp.file("corrupt.json")) == 4);

    // CLI parse failures are nonzero without being shell errors
    CHECK(run_cli("definitely-not-a-subcommand") != 0);
    CHECK(run_cli("train") != 0);  // --config is required
}
