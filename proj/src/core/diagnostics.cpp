#include "btcgarch/diagnostics.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "btcgarch/error.hpp"
#include "btcgarch/stats.hpp"
#include "ols.hpp"

namespace btcg {

namespace {

void require_finite(std::span<const double> x, const char* what) {
    for (double v : x) {
        if (!std::isfinite(v)) fail(Errc::InvalidArgument, std::string(what) + " contains missing or non-finite values");
    }
}

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) fail(Errc::InvalidArgument, "alpha must lie in (0, 1)");
}

// Rows t = first..n-1 of the ADF design with k lagged differences.
void adf_design(std::span<const double> y, std::size_t k, std::size_t first, Eigen::MatrixXd& x,
                Eigen::VectorXd& dy) {
    const std::size_t n = y.size();
    const auto rows = static_cast<Eigen::Index>(n - first);
    x.resize(rows, static_cast<Eigen::Index>(k + 2));
    dy.resize(rows);
    for (std::size_t t = first; t < n; ++t) {
        const auto r = static_cast<Eigen::Index>(t - first);
        dy(r) = y[t] - y[t - 1];
        x(r, 0) = 1.0;
        x(r, 1) = y[t - 1];
        for (std::size_t i = 1; i <= k; ++i) {
            x(r, static_cast<Eigen::Index>(i + 1)) = y[t - i] - y[t - i - 1];
        }
    }
}

// AIC over 0..kmax on the common sample t = kmax+1..n-1 via normal equations
// on the largest design (each smaller model is a leading sub-block).
std::size_t select_adf_lag(std::span<const double> y, std::size_t kmax) {
    Eigen::MatrixXd x;
    Eigen::VectorXd dy;
    adf_design(y, kmax, kmax + 1, x, dy);
    const double nobs = static_cast<double>(x.rows());
    const Eigen::MatrixXd xtx = x.transpose() * x;
    const Eigen::VectorXd xty = x.transpose() * dy;
    const double yty = dy.squaredNorm();

    std::size_t best = 0;
    double best_aic = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k <= kmax; ++k) {
        const auto m = static_cast<Eigen::Index>(k + 2);
        const Eigen::MatrixXd a = xtx.topLeftCorner(m, m);
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
        if (ldlt.info() != Eigen::Success) continue;
        const Eigen::VectorXd b = ldlt.solve(xty.head(m));
        const double rss = yty - 2.0 * b.dot(xty.head(m)) + b.dot(a * b);
        if (!(rss > 0.0) || !std::isfinite(rss)) continue;
        const double aic = nobs * std::log(rss / nobs) + 2.0 * static_cast<double>(m);
        if (aic < best_aic) {
            best_aic = aic;
            best = k;
        }
    }
    return best;
}

}  // namespace

const char* verdict_name(Verdict v) noexcept {
    return v == Verdict::reject ? "reject" : "fail_to_reject";
}

double AdfCriticalValues::at(double alpha) {
    if (std::fabs(alpha - 0.01) < 1e-12) return one_percent;
    if (std::fabs(alpha - 0.05) < 1e-12) return five_percent;
    if (std::fabs(alpha - 0.10) < 1e-12) return ten_percent;
    fail(Errc::InvalidArgument, "ADF critical values exist only for alpha in {0.01, 0.05, 0.10}");
}

int adf_max_lag(std::size_t n) {
    return static_cast<int>(std::floor(12.0 * std::pow(static_cast<double>(n) / 100.0, 0.25)));
}

TestReport adf_test(std::span<const double> series, int lags, double alpha) {
    const double crit = AdfCriticalValues::at(alpha);
    require_finite(series, "ADF input");
    const std::size_t n = series.size();

    std::size_t k = 0;
    if (lags < 0) {
        const auto kmax = static_cast<std::size_t>(adf_max_lag(n));
        if (n <= kmax + 10) fail(Errc::TooShort, "series too short for automatic ADF lag selection");
        k = select_adf_lag(series, kmax);
    } else {
        k = static_cast<std::size_t>(lags);
        if (n <= k + 10) fail(Errc::TooShort, "ADF needs length > lags + 10");
    }

    Eigen::MatrixXd x;
    Eigen::VectorXd dy;
    adf_design(series, k, k + 1, x, dy);
    const auto fit = detail::ols(x, dy);
    if (!(fit.se(1) > 0.0)) fail(Errc::SingularRegression, "zero standard error on the lagged level");

    TestReport rep;
    rep.test_name = "ADF (constant)";
    rep.statistic = fit.coef(1) / fit.se(1);
    rep.lags = static_cast<int>(k);
    rep.nobs = fit.nobs;
    rep.alpha = alpha;
    rep.critical_value = crit;
    rep.p_value = std::numeric_limits<double>::quiet_NaN();
    if (rep.statistic < AdfCriticalValues::one_percent) {
        rep.p_band = "p < 0.01";
    } else if (rep.statistic < AdfCriticalValues::five_percent) {
        rep.p_band = "0.01 < p < 0.05";
    } else if (rep.statistic < AdfCriticalValues::ten_percent) {
        rep.p_band = "0.05 < p < 0.10";
    } else {
        rep.p_band = "p > 0.10";
    }
    rep.verdict = rep.statistic < crit ? Verdict::reject : Verdict::fail_to_reject;
    return rep;
}

TestReport arch_lm_test(std::span<const double> residuals, int q, double alpha) {
    check_alpha(alpha);
    if (q < 1) fail(Errc::InvalidArgument, "ARCH-LM needs q >= 1");
    require_finite(residuals, "ARCH-LM input");
    const std::size_t n = residuals.size();
    const auto lags = static_cast<std::size_t>(q);
    if (n <= lags + 10) fail(Errc::TooShort, "ARCH-LM needs length > q + 10");

    std::vector<double> sq(n);
    for (std::size_t t = 0; t < n; ++t) sq[t] = residuals[t] * residuals[t];

    const auto rows = static_cast<Eigen::Index>(n - lags);
    Eigen::MatrixXd x(rows, static_cast<Eigen::Index>(lags + 1));
    Eigen::VectorXd y(rows);
    for (std::size_t t = lags; t < n; ++t) {
        const auto r = static_cast<Eigen::Index>(t - lags);
        y(r) = sq[t];
        x(r, 0) = 1.0;
        for (std::size_t i = 1; i <= lags; ++i) x(r, static_cast<Eigen::Index>(i)) = sq[t - i];
    }
    const auto fit = detail::ols(x, y);
    if (!(fit.tss > 0.0)) fail(Errc::SingularRegression, "squared residuals are constant");

    TestReport rep;
    rep.test_name = "ARCH-LM";
    rep.statistic = std::max(0.0, static_cast<double>(fit.nobs) * fit.r2);
    rep.lags = q;
    rep.nobs = fit.nobs;
    rep.alpha = alpha;
    rep.p_value = stats::chi_square_sf(rep.statistic, static_cast<double>(q));
    rep.critical_value = std::numeric_limits<double>::quiet_NaN();
    rep.verdict = rep.p_value < alpha ? Verdict::reject : Verdict::fail_to_reject;
    return rep;
}

MomentSummary moments(std::span<const double> series) {
    require_finite(series, "moment input");
    const std::size_t n = series.size();
    if (n < 4) fail(Errc::TooShort, "moments need n >= 4");
    bool constant = true;
    for (double v : series) constant = constant && v == series.front();
    if (constant) fail(Errc::ZeroVariance, "constant series");

    const double m = stats::mean(series);
    double m2 = 0.0;
    double m3 = 0.0;
    double m4 = 0.0;
    for (double v : series) {
        const double d = v - m;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    const double dn = static_cast<double>(n);
    m2 /= dn;
    m3 /= dn;
    m4 /= dn;
    if (!(m2 > 0.0)) fail(Errc::ZeroVariance, "zero second central moment");

    MomentSummary s;
    s.n = n;
    s.mean = m;
    s.variance = m2 * dn / (dn - 1.0);
    s.skewness = m3 / std::pow(m2, 1.5);
    s.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    return s;
}

}  // namespace btcg
