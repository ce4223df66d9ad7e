#pragma once

#include <string>

#include "ivegan/eval.hpp"
#include "ivegan/tensor.hpp"

namespace ivegan {

// Sample CSV: header "x0,x1,...", one row per sample, 17-significant-digit
// decimals (round-trip exact for doubles).
void write_samples_csv(const std::string& path, const Tensor& samples);
Tensor read_samples_csv(const std::string& path);

// Binary PGM (P5, maxval 255); counts log-scaled, zero count maps to 0.
// Rows are flipped so the second coordinate increases upward.
void write_pgm(const std::string& path, const DensityGrid& grid);

std::string base64_encode(const unsigned char* data, std::size_t len);
std::vector<unsigned char> base64_decode(const std::string& s);

}  // namespace ivegan
