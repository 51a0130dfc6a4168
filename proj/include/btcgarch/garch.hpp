#pragma once

// AR(1)-X conditional mean with GARCH(p,q)-X conditional variance, estimated
// by Gaussian quasi-maximum likelihood.
//
//   r_t       = b0 + b1 r_{t-1} + g' x_{t-1} + e_t
//   sigma2_t  = omega + sum_i a_i e_{t-i}^2 + sum_j b_j sigma2_{t-j} + d' z_{t-1}
//
// The optimizer works on an unconstrained vector theta whose image is exactly
// the admissible set (omega > 0, a_i > 0, b_j > 0, sum a + sum b < 1, |b1| < 1).

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "btcgarch/series.hpp"

namespace btcg {

inline constexpr const char* kReturnColumn = "r";
inline constexpr double kVarianceFloor = 1e-12;

struct GarchSpec {
    std::vector<std::string> mean_regressors;
    std::vector<std::string> variance_regressors;
    std::size_t p = 1;  // ARCH order
    std::size_t q = 1;  // GARCH order
    bool include_ar1 = true;

    void validate() const;
    [[nodiscard]] std::size_t parameter_count() const;
};

struct ParamVector {
    double beta0 = 0.0;
    double beta1 = 0.0;
    std::vector<double> gamma;
    double omega = 0.0;
    std::vector<double> alpha;
    std::vector<double> beta;
    std::vector<double> delta;

    /// Correctly sized, all zero.
    static ParamVector zeros(const GarchSpec& spec);
    static ParamVector unflatten(const GarchSpec& spec, std::span<const double> flat);

    /// Layout: b0, [b1], gamma..., omega, alpha..., beta..., delta...
    [[nodiscard]] std::vector<double> flatten(const GarchSpec& spec) const;
    [[nodiscard]] bool shape_matches(const GarchSpec& spec) const;
    /// Positivity, stationarity and |b1| < 1.
    [[nodiscard]] bool is_admissible(const GarchSpec& spec) const;
    [[nodiscard]] double persistence() const;
};

/// Names aligned with ParamVector::flatten, e.g. "mean:const", "var:arch1".
std::vector<std::string> parameter_names(const GarchSpec& spec);

/// Dense row-major matrix of lagged regressors, one row per effective
/// observation.
struct RegressorMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    [[nodiscard]] double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// Per-column affine standardization, (x - center) / scale.
struct RegressorScaling {
    std::vector<double> mean_center;
    std::vector<double> mean_scale;
    std::vector<double> var_center;
    std::vector<double> var_scale;
};

/// The effective sample: masked hours t with r_t, r_{t-1} and the regressors
/// taken at t-1.
struct EstimationData {
    std::vector<std::size_t> grid_index;
    std::vector<double> r;
    std::vector<double> r_lag;
    RegressorMatrix x;  // mean regressors
    RegressorMatrix z;  // variance regressors

    [[nodiscard]] std::size_t size() const noexcept { return r.size(); }
};

/// Collects the effective sample. With `scaling`, regressors are standardized.
EstimationData build_estimation_data(const HourlyPanel& panel, const GarchSpec& spec,
                                     const RegressorScaling* scaling = nullptr);

/// Mean and population standard deviation of each regressor over the sample.
RegressorScaling compute_scaling(const EstimationData& raw, const GarchSpec& spec);

/// e_t = r_t - b0 - b1 r_{t-1} - g' x_{t-1} over the masked grid, raw regressors.
std::vector<double> mean_residuals(const HourlyPanel& panel, const GarchSpec& spec, const ParamVector& params);
std::vector<double> mean_residuals(const EstimationData& data, const GarchSpec& spec, const ParamVector& params);

struct VarianceSeries {
    std::vector<double> values;
    std::size_t clamp_events = 0;
};

/// One step of the variance recursion. `e2_lags` and `h_lags` hold e^2_{t-i}
/// and sigma^2_{t-j}, most recent first; `z` holds the variance regressors
/// entering at t. Sets `clamped` when the floor binds.
double variance_step(const ParamVector& params, std::span<const double> e2_lags, std::span<const double> h_lags,
                     std::span<const double> z, bool& clamped);

/// Conditional variance recursion. Pre-sample e^2 and sigma^2 are `init`.
/// `exog` (variance regressors) may be empty when the spec has none.
VarianceSeries variance_recursion(std::span<const double> residuals, const GarchSpec& spec,
                                  const ParamVector& params, double init, const RegressorMatrix& exog = {});

/// Gaussian log-likelihood sum.
double log_likelihood(std::span<const double> residuals, std::span<const double> variances);

/// Population variance of the residuals, the recursion's pre-sample value.
double residual_variance_init(std::span<const double> residuals);

std::vector<double> to_unconstrained(const GarchSpec& spec, const ParamVector& params);
ParamVector from_unconstrained(const GarchSpec& spec, std::span<const double> theta);

/// d params / d theta (k x k, row-major; rows follow ParamVector::flatten).
std::vector<double> reparameterization_jacobian(const GarchSpec& spec, std::span<const double> theta);

struct InformationCriteria {
    double aic = 0.0;
    double bic = 0.0;
};

InformationCriteria information_criteria(double log_likelihood, std::size_t k, std::size_t n);

/// Log-likelihood as a function of theta over a fixed sample, with an
/// analytic gradient.
class LikelihoodModel {
public:
    LikelihoodModel(EstimationData data, GarchSpec spec);

    [[nodiscard]] std::size_t dimension() const noexcept { return spec_.parameter_count(); }
    [[nodiscard]] std::size_t nobs() const noexcept { return data_.size(); }
    [[nodiscard]] const GarchSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] const EstimationData& data() const noexcept { return data_; }

    [[nodiscard]] double log_likelihood(std::span<const double> theta) const;
    [[nodiscard]] double log_likelihood(const ParamVector& params) const;
    /// Log-likelihood and its theta-gradient.
    double log_likelihood_and_gradient(std::span<const double> theta, std::span<double> grad) const;
    /// Per-observation theta-scores, row-major n x k.
    [[nodiscard]] std::vector<double> scores(std::span<const double> theta) const;

private:
    double evaluate(std::span<const double> theta, std::span<double> grad, std::vector<double>* scores) const;

    EstimationData data_;
    GarchSpec spec_;
};

enum class StdErrorKind { hessian, sandwich };

struct FitOptions {
    double tol = 1e-8;             // on the change in mean log-likelihood
    double gradient_tol = 1e-4;    // max-norm of the mean log-likelihood gradient
    std::size_t min_obs = 500;
    std::size_t max_simplex_evaluations = 0;  // 0: 150 per parameter
    std::size_t max_quasi_newton_iterations = 500;
    double hessian_step = 1e-4;    // relative step, h_i = step (1 + |theta_i|)
    StdErrorKind std_errors = StdErrorKind::hessian;
    /// Called with every parameter set the optimizer evaluates (reporting scale).
    std::function<void(const ParamVector&)> observer;
};

struct FitResult {
    GarchSpec spec;
    std::vector<std::string> names;
    // Estimates on the return scale with standardized regressors.
    ParamVector params;
    std::vector<double> estimates;
    std::vector<double> std_errors;
    std::vector<double> z_stats;
    std::vector<double> p_values;
    // Same coefficients mapped back to the raw regressor scale.
    std::vector<double> raw_estimates;
    std::vector<double> raw_std_errors;
    RegressorScaling scaling;

    double log_likelihood = 0.0;
    double start_log_likelihood = 0.0;
    double aic = 0.0;
    double bic = 0.0;
    std::size_t k = 0;
    std::size_t n = 0;
    double variance_init = 0.0;

    HourlySeries residuals;
    HourlySeries conditional_variance;

    bool converged = false;
    bool std_errors_available = false;  // false when the Hessian is not PD
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    std::size_t clamp_events = 0;
    double final_gradient_norm = 0.0;
    double final_change = 0.0;
    StdErrorKind std_error_kind = StdErrorKind::hessian;
};

FitResult fit(const HourlyPanel& panel, const GarchSpec& spec, const FitOptions& options = {});

}  // namespace btcg
