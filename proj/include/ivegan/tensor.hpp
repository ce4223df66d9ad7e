#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "ivegan/common.hpp"

namespace ivegan {

// Dense rank-1 or rank-2 array of doubles, row-major. Immutable by
// convention: operations return new tensors. Construction rejects NaN/Inf.
class Tensor {
public:
    Tensor() = default;  // empty rank-1

    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor scalar(double v);
    static Tensor vector(std::vector<double> data);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor full(std::vector<std::size_t> shape, double v);

    std::size_t rank() const { return shape_.size(); }
    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    bool is_scalar() const { return data_.size() == 1; }

    // rows()/cols() view a rank-1 tensor of length n as n x 1.
    std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
    std::size_t cols() const { return shape_.size() == 2 ? shape_[1] : 1; }

    double operator[](std::size_t i) const { return data_[i]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

    std::span<const double> data() const { return data_; }
    const double* raw() const { return data_.data(); }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
    std::string shape_str() const;

    bool operator==(const Tensor& o) const { return shape_ == o.shape_ && data_ == o.data_; }

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

// Kernels shared by the tape forward/backward passes. All return freshly
// validated tensors.
Tensor matmul_vals(const Tensor& a, const Tensor& b, bool transpose_a = false,
                   bool transpose_b = false);
Tensor add_vals(const Tensor& a, const Tensor& b);
Tensor scale_vals(const Tensor& a, double s);
Tensor add_bias_vals(const Tensor& a, const Tensor& bias);
Tensor col_sum(const Tensor& a);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor map_vals(const Tensor& a, double (*f)(double));
Tensor hadamard(const Tensor& a, const Tensor& b);
double mean_all_val(const Tensor& a);

// tanh via a rational approximation of exp (near machine precision), written
// branch-free with no libm call so element-wise loops stay cheap. Training
// spends most of its time here; libm tanh is several times slower.
inline double fast_tanh(double x) {
    const double a = std::min(std::abs(x), 19.0);  // tanh(19) == 1 - O(1e-17)
    // exp(-2a) = 2^n * exp(r) with |r| <= ln2 / 2
    const double t = -2.0 * a;
    const double pf = std::floor(1.4426950408889634074 * t + 0.5);
    double r = t - pf * 6.93145751953125e-1;
    r -= pf * 1.42860682030941723212e-6;
    const double rr = r * r;
    double p = 1.26177193074810590878e-4;
    p = p * rr + 3.02994407707441961300e-2;
    p = p * rr + 9.99999999999999999910e-1;
    p *= r;
    double q = 3.00198505138664455042e-6;
    q = q * rr + 2.52448340349684104192e-3;
    q = q * rr + 2.27265548208155028766e-1;
    q = q * rr + 2.0;
    double e = 1.0 + 2.0 * (p / (q - p));
    const auto bits = static_cast<std::uint64_t>(1023 + static_cast<int>(pf)) << 52;
    double s;
    std::memcpy(&s, &bits, sizeof s);
    e *= s;  // e = exp(-2a) in (0, 1]
    return std::copysign((1.0 - e) / (1.0 + e), x);
}

}  // namespace ivegan
