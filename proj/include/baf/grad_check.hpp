#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "baf/tensor.hpp"

namespace baf {

// Central-difference gradient of a scalar function, evaluated in f64.
inline std::vector<double> finite_diff_grad(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> params, double eps) {
    if (!(eps > 0.0)) throw ContractError("finite_diff_grad: eps must be positive");
    std::vector<double> grad(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double p0 = params[i];
        params[i] = p0 + eps;
        const double fp = f(params);
        params[i] = p0 - eps;
        const double fm = f(params);
        params[i] = p0;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw Error("finite_diff_grad: non-finite function value");
        grad[i] = (fp - fm) / (2.0 * eps);
    }
    return grad;
}

}  // namespace baf
