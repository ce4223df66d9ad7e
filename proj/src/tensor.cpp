#include "ivegan/tensor.hpp"

#include <cblas.h>
#include <malloc.h>

#include <cmath>
#include <mutex>
#include <numeric>
#include <sstream>

namespace ivegan {

namespace {

void pin_blas_threads() {
    static std::once_flag once;
    std::call_once(once, [] {
        openblas_set_num_threads(1);
#ifdef __GLIBC__
        // Batch-sized temporaries (~1 MB) otherwise round-trip through mmap
        // on every allocation, dominating training time in kernel work.
        mallopt(M_MMAP_THRESHOLD, 64 * 1024 * 1024);
        mallopt(M_TRIM_THRESHOLD, 128 * 1024 * 1024);
#endif
    });
}

void check_finite(const std::vector<double>& data) {
    // Fast vectorizable scan: the sum of |x| is finite iff every element is.
    double acc = 0.0;
    for (const double v : data) acc += std::abs(v);
    if (std::isfinite(acc)) return;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!std::isfinite(data[i])) {
            throw ValueError("Tensor: non-finite value " + std::to_string(data[i]) +
                             " at flat index " + std::to_string(i));
        }
    }
    // all elements finite; the |x| sum itself overflowed, which is fine
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_.empty() || shape_.size() > 2) {
        throw ShapeError("Tensor: rank must be 1 or 2, got " + std::to_string(shape_.size()));
    }
    const std::size_t want = std::accumulate(shape_.begin(), shape_.end(), std::size_t{1},
                                             std::multiplies<>());
    if (want != data_.size()) {
        throw ShapeError("Tensor: shape " + shape_str() + " needs " + std::to_string(want) +
                         " values, got " + std::to_string(data_.size()));
    }
    check_finite(data_);
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::vector(std::vector<double> data) {
    const std::size_t n = data.size();
    return Tensor({n}, std::move(data));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data) {
    return Tensor({rows, cols}, std::move(data));
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
    const std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                                          std::multiplies<>());
    return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::full(std::vector<std::size_t> shape, double v) {
    const std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                                          std::multiplies<>());
    return Tensor(std::move(shape), std::vector<double>(n, v));
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape_.size(); ++i) os << (i ? "x" : "") << shape_[i];
    os << "]";
    return os.str();
}

Tensor matmul_vals(const Tensor& a, const Tensor& b, bool transpose_a, bool transpose_b) {
    pin_blas_threads();
    if (a.rank() != 2 || b.rank() != 2) {
        throw ShapeError("matmul: rank-2 tensors required, got " + a.shape_str() + " and " +
                         b.shape_str());
    }
    const std::size_t m = transpose_a ? a.cols() : a.rows();
    const std::size_t k = transpose_a ? a.rows() : a.cols();
    const std::size_t kb = transpose_b ? b.cols() : b.rows();
    const std::size_t n = transpose_b ? b.rows() : b.cols();
    if (k != kb) {
        throw ShapeError("matmul: inner dimensions disagree: " + a.shape_str() +
                         (transpose_a ? "^T" : "") + " vs " + b.shape_str() +
                         (transpose_b ? "^T" : ""));
    }
    std::vector<double> out(m * n, 0.0);
    if (m > 0 && n > 0 && k > 0) {
        cblas_dgemm(CblasRowMajor, transpose_a ? CblasTrans : CblasNoTrans,
                    transpose_b ? CblasTrans : CblasNoTrans, static_cast<int>(m),
                    static_cast<int>(n), static_cast<int>(k), 1.0, a.raw(),
                    static_cast<int>(a.cols()), b.raw(), static_cast<int>(b.cols()), 0.0,
                    out.data(), static_cast<int>(n));
    }
    return Tensor::matrix(m, n, std::move(out));
}

Tensor add_vals(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) {
        throw ShapeError("add: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    }
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
    return Tensor(a.shape(), std::move(out));
}

Tensor scale_vals(const Tensor& a, double s) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * s;
    return Tensor(a.shape(), std::move(out));
}

Tensor add_bias_vals(const Tensor& a, const Tensor& bias) {
    if (a.rank() != 2 || bias.rank() != 1 || a.cols() != bias.rows()) {
        throw ShapeError("add_bias: shapes " + a.shape_str() + " and " + bias.shape_str() +
                         " do not broadcast");
    }
    std::vector<double> out(a.size());
    const std::size_t n = a.cols();
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < n; ++c) out[r * n + c] = a(r, c) + bias[c];
    return Tensor(a.shape(), std::move(out));
}

Tensor col_sum(const Tensor& a) {
    if (a.rank() != 2) throw ShapeError("col_sum: rank-2 required");
    std::vector<double> out(a.cols(), 0.0);
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c) out[c] += a(r, c);
    return Tensor::vector(std::move(out));
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.rows() != b.rows()) {
        throw ShapeError("concat: leading dimensions disagree: " + a.shape_str() + " vs " +
                         b.shape_str());
    }
    const std::size_t p = a.cols(), q = b.cols();
    std::vector<double> out(a.rows() * (p + q));
    for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t c = 0; c < p; ++c) out[r * (p + q) + c] = a(r, c);
        for (std::size_t c = 0; c < q; ++c) out[r * (p + q) + p + c] = b(r, c);
    }
    return Tensor::matrix(a.rows(), p + q, std::move(out));
}

Tensor map_vals(const Tensor& a, double (*f)(double)) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a[i]);
    return Tensor(a.shape(), std::move(out));
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) {
        throw ShapeError("hadamard: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    }
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
    return Tensor(a.shape(), std::move(out));
}

double mean_all_val(const Tensor& a) {
    if (a.size() == 0) throw ShapeError("mean_all: empty tensor");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i];
    return s / static_cast<double>(a.size());
}

}  // namespace ivegan
