#pragma once

// Pre-estimation specification tests: ADF unit root, Engle ARCH-LM, moments.

#include <cstddef>
#include <span>
#include <string>

namespace btcg {

enum class Verdict { reject, fail_to_reject };

const char* verdict_name(Verdict v) noexcept;

struct TestReport {
    std::string test_name;
    double statistic = 0.0;
    int lags = 0;
    std::size_t nobs = 0;
    double alpha = 0.05;
    // ARCH-LM reports an exact p-value; ADF reports a critical value and a
    // band ("0.01 < p < 0.05") and leaves p_value NaN.
    double p_value = 0.0;
    double critical_value = 0.0;
    std::string p_band;
    Verdict verdict = Verdict::fail_to_reject;
};

struct MomentSummary {
    double mean = 0.0;
    double variance = 0.0;  // unbiased (n - 1)
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
    std::size_t n = 0;
};

/// Asymptotic ADF critical values, intercept-only regression (MacKinnon).
struct AdfCriticalValues {
    static constexpr double one_percent = -3.43;
    static constexpr double five_percent = -2.86;
    static constexpr double ten_percent = -2.57;
    /// Critical value for alpha in {0.01, 0.05, 0.10}.
    static double at(double alpha);
};

/// Regresses dy_t on a constant, y_{t-1} and `lags` lagged differences and
/// reports the t-ratio on y_{t-1}. A negative `lags` selects the order by AIC
/// over 0..floor(12 (n/100)^{1/4}) on a common sample.
TestReport adf_test(std::span<const double> series, int lags, double alpha = 0.05);

/// Largest lag considered by automatic ADF selection for a series of length n.
int adf_max_lag(std::size_t n);

/// n R^2 from regressing e_t^2 on a constant and q of its own lags.
TestReport arch_lm_test(std::span<const double> residuals, int q = 5, double alpha = 0.05);

MomentSummary moments(std::span<const double> series);

}  // namespace btcg
