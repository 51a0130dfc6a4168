#pragma once

// Small unconstrained minimizers used by the GARCH estimator.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace btcg::optim {

using Objective = std::function<double(std::span<const double>)>;
/// Returns f(x) and writes the gradient into `grad`.
using ObjectiveWithGradient = std::function<double(std::span<const double>, std::span<double>)>;

struct SimplexOptions {
    std::size_t max_evaluations = 2000;
    double f_tolerance = 1e-10;  // on max |f_i - f_best| over the simplex
    double x_tolerance = 1e-8;
    std::vector<double> initial_step;  // per coordinate; default 0.1
};

struct QuasiNewtonOptions {
    std::size_t max_iterations = 500;
    double gradient_tolerance = 1e-9;   // max-norm stop
    double f_tolerance = 1e-15;          // relative change stop
};

struct MinimizeResult {
    std::vector<double> x;
    double f = 0.0;
    double last_change = 0.0;  // |f_k - f_{k-1}| at the final accepted step
    std::vector<double> gradient;  // quasi-Newton only
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
};

/// Nelder-Mead with the dimension-adaptive coefficients of Gao and Han.
MinimizeResult nelder_mead(const Objective& f, std::vector<double> x0, const SimplexOptions& opts);

/// BFGS with a backtracking Armijo line search.
MinimizeResult bfgs(const ObjectiveWithGradient& f, std::vector<double> x0, const QuasiNewtonOptions& opts);

}  // namespace btcg::optim
