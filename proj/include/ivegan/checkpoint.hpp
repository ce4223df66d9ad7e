#pragma once

#include <optional>
#include <string>

#include "ivegan/model.hpp"

namespace ivegan {

// Versioned structured-text envelope; parameter arrays stored as
// little-endian IEEE-754 doubles, base64-encoded. save -> load -> save is
// byte-identical.
struct Checkpoint {
    int format_version = 1;
    std::string kind;        // "ivegan" | "vanilla"
    std::string experiment;  // "ring" | "mnist_lite"
    std::uint64_t config_hash = 0;
    std::size_t iteration = 0;
    std::string rng_state;
    std::optional<IveGanModel> model;
    std::optional<VanillaModel> vanilla;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace ivegan
