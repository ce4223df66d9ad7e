#pragma once

#include <functional>

#include "ivegan/tensor.hpp"

namespace ivegan {

// Central-difference gradient of a tensor-to-scalar function, the independent
// oracle used to check tape gradients.
inline Tensor finite_difference_grad(const std::function<double(const Tensor&)>& f,
                                     const Tensor& at, double h) {
    if (!(h > 0.0)) throw ValueError("finite_difference_grad: h must be positive");
    std::vector<double> base(at.data().begin(), at.data().end());
    std::vector<double> grad(at.size());
    for (std::size_t i = 0; i < at.size(); ++i) {
        std::vector<double> plus = base, minus = base;
        plus[i] += h;
        minus[i] -= h;
        grad[i] = (f(Tensor(at.shape(), std::move(plus))) -
                   f(Tensor(at.shape(), std::move(minus)))) /
                  (2.0 * h);
    }
    return Tensor(at.shape(), std::move(grad));
}

}  // namespace ivegan
