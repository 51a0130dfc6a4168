#include "btcgarch/garch.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "btcgarch/error.hpp"
#include "btcgarch/optimizer.hpp"
#include "btcgarch/stats.hpp"

namespace btcg {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Bounds on the unconstrained coordinates. Inside them the map is a
// bijection; outside, the coordinate saturates so that rounding can never
// produce omega = 0, a zero coefficient, persistence 1 or |b1| = 1.
constexpr double kLogOmegaBound = 60.0;
constexpr double kLogitBound = 30.0;
constexpr double kArBound = 15.0;

// Offsets of each block inside the flattened parameter / theta vector.
struct Layout {
    std::size_t b0 = 0;
    std::size_t ar = 0;  // valid only with include_ar1
    std::size_t gamma = 0;
    std::size_t omega = 0;
    std::size_t alpha = 0;  // theta: persistence logit
    std::size_t beta = 0;   // theta: first share logit sits at alpha + 1
    std::size_t delta = 0;
    std::size_t size = 0;
    std::size_t m = 0, p = 0, q = 0, v = 0;
    bool ar1 = false;

    explicit Layout(const GarchSpec& s)
        : m(s.mean_regressors.size()), p(s.p), q(s.q), v(s.variance_regressors.size()), ar1(s.include_ar1) {
        std::size_t i = 0;
        b0 = i++;
        if (ar1) ar = i++;
        gamma = i;
        i += m;
        omega = i++;
        alpha = i;
        i += p;
        beta = i;
        i += q;
        delta = i;
        i += v;
        size = i;
    }
};

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

bool inside(double x, double bound) { return x > -bound && x < bound; }

// Shares of the persistence across the p + q coefficients; the last logit is
// pinned at zero so the map stays one-to-one.
std::vector<double> softmax_shares(std::span<const double> free_logits) {
    const std::size_t n = free_logits.size() + 1;
    std::vector<double> l(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) l[i] = std::clamp(free_logits[i], -kLogitBound, kLogitBound);
    const double mx = *std::max_element(l.begin(), l.end());
    double total = 0.0;
    for (auto& x : l) {
        x = std::exp(x - mx);
        total += x;
    }
    for (auto& x : l) x /= total;
    return l;
}

void check_shape(const GarchSpec& spec, const ParamVector& params) {
    if (!params.shape_matches(spec)) fail(Errc::InvalidArgument, "parameter vector does not match the spec");
}

double column_mean(const RegressorMatrix& m, std::size_t c) {
    double s = 0.0;
    for (std::size_t r = 0; r < m.rows; ++r) s += m(r, c);
    return s / static_cast<double>(m.rows);
}

double column_sd(const RegressorMatrix& m, std::size_t c, double mean) {
    double s = 0.0;
    for (std::size_t r = 0; r < m.rows; ++r) {
        const double d = m(r, c) - mean;
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(m.rows));
}

}  // namespace

// ---------------------------------------------------------------------------
// spec and parameters

void GarchSpec::validate() const {
    if (p < 1 || q < 1) fail(Errc::InvalidArgument, "GARCH orders p and q must be >= 1");
    auto distinct = [](const std::vector<std::string>& names, const char* which) {
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (names[i] == kReturnColumn) fail(Errc::InvalidArgument, std::string(which) + " regressors may not include r");
            for (std::size_t j = 0; j < i; ++j) {
                if (names[i] == names[j]) {
                    fail(Errc::InvalidArgument, std::string("duplicate ") + which + " regressor '" + names[i] + "'");
                }
            }
        }
    };
    distinct(mean_regressors, "mean");
    distinct(variance_regressors, "variance");
}

std::size_t GarchSpec::parameter_count() const { return Layout(*this).size; }

ParamVector ParamVector::zeros(const GarchSpec& spec) {
    ParamVector p;
    p.gamma.assign(spec.mean_regressors.size(), 0.0);
    p.alpha.assign(spec.p, 0.0);
    p.beta.assign(spec.q, 0.0);
    p.delta.assign(spec.variance_regressors.size(), 0.0);
    return p;
}

bool ParamVector::shape_matches(const GarchSpec& spec) const {
    return gamma.size() == spec.mean_regressors.size() && alpha.size() == spec.p && beta.size() == spec.q &&
           delta.size() == spec.variance_regressors.size();
}

std::vector<double> ParamVector::flatten(const GarchSpec& spec) const {
    check_shape(spec, *this);
    std::vector<double> out;
    out.reserve(spec.parameter_count());
    out.push_back(beta0);
    if (spec.include_ar1) out.push_back(beta1);
    out.insert(out.end(), gamma.begin(), gamma.end());
    out.push_back(omega);
    out.insert(out.end(), alpha.begin(), alpha.end());
    out.insert(out.end(), beta.begin(), beta.end());
    out.insert(out.end(), delta.begin(), delta.end());
    return out;
}

ParamVector ParamVector::unflatten(const GarchSpec& spec, std::span<const double> flat) {
    const Layout L(spec);
    if (flat.size() != L.size) fail(Errc::InvalidArgument, "flat parameter vector has the wrong length");
    ParamVector p = zeros(spec);
    p.beta0 = flat[L.b0];
    if (L.ar1) p.beta1 = flat[L.ar];
    for (std::size_t j = 0; j < L.m; ++j) p.gamma[j] = flat[L.gamma + j];
    p.omega = flat[L.omega];
    for (std::size_t i = 0; i < L.p; ++i) p.alpha[i] = flat[L.alpha + i];
    for (std::size_t j = 0; j < L.q; ++j) p.beta[j] = flat[L.beta + j];
    for (std::size_t k = 0; k < L.v; ++k) p.delta[k] = flat[L.delta + k];
    return p;
}

double ParamVector::persistence() const {
    return std::accumulate(alpha.begin(), alpha.end(), 0.0) + std::accumulate(beta.begin(), beta.end(), 0.0);
}

bool ParamVector::is_admissible(const GarchSpec& spec) const {
    if (!shape_matches(spec)) return false;
    if (!(omega > 0.0) || !std::isfinite(omega)) return false;
    for (double a : alpha) {
        if (!(a > 0.0)) return false;
    }
    for (double b : beta) {
        if (!(b > 0.0)) return false;
    }
    if (!(persistence() < 1.0)) return false;
    if (spec.include_ar1 && !(std::fabs(beta1) < 1.0)) return false;
    return true;
}

std::vector<std::string> parameter_names(const GarchSpec& spec) {
    std::vector<std::string> names;
    names.emplace_back("mean:const");
    if (spec.include_ar1) names.emplace_back("mean:ar1");
    for (const auto& n : spec.mean_regressors) names.push_back("mean:" + n);
    names.emplace_back("var:omega");
    for (std::size_t i = 1; i <= spec.p; ++i) names.push_back("var:arch" + std::to_string(i));
    for (std::size_t j = 1; j <= spec.q; ++j) names.push_back("var:garch" + std::to_string(j));
    for (const auto& n : spec.variance_regressors) names.push_back("var:" + n);
    return names;
}

// ---------------------------------------------------------------------------
// effective sample

EstimationData build_estimation_data(const HourlyPanel& panel, const GarchSpec& spec,
                                     const RegressorScaling* scaling) {
    spec.validate();
    const auto& r = panel.column(kReturnColumn);
    std::vector<const HourlySeries*> xs;
    std::vector<const HourlySeries*> zs;
    for (const auto& n : spec.mean_regressors) xs.push_back(&panel.column(n));
    for (const auto& n : spec.variance_regressors) zs.push_back(&panel.column(n));
    if (scaling) {
        if (scaling->mean_center.size() != xs.size() || scaling->mean_scale.size() != xs.size() ||
            scaling->var_center.size() != zs.size() || scaling->var_scale.size() != zs.size()) {
            fail(Errc::InvalidArgument, "regressor scaling does not match the spec");
        }
    }

    EstimationData d;
    d.x.cols = xs.size();
    d.z.cols = zs.size();
    const auto mask = panel.mask();
    for (std::size_t t = 1; t < panel.size(); ++t) {
        if (!mask[t]) continue;
        if (r.is_missing(t) || r.is_missing(t - 1)) continue;
        bool ok = true;
        for (const auto* c : xs) ok = ok && !c->is_missing(t - 1);
        for (const auto* c : zs) ok = ok && !c->is_missing(t - 1);
        if (!ok) continue;
        d.grid_index.push_back(t);
        d.r.push_back(r.values()[t]);
        d.r_lag.push_back(r.values()[t - 1]);
        for (std::size_t j = 0; j < xs.size(); ++j) {
            const double v = xs[j]->values()[t - 1];
            d.x.data.push_back(scaling ? (v - scaling->mean_center[j]) / scaling->mean_scale[j] : v);
        }
        for (std::size_t k = 0; k < zs.size(); ++k) {
            const double v = zs[k]->values()[t - 1];
            d.z.data.push_back(scaling ? (v - scaling->var_center[k]) / scaling->var_scale[k] : v);
        }
    }
    d.x.rows = d.r.size();
    d.z.rows = d.r.size();
    return d;
}

RegressorScaling compute_scaling(const EstimationData& raw, const GarchSpec& spec) {
    if (raw.size() == 0) fail(Errc::InsufficientData, "empty estimation sample");
    RegressorScaling s;
    auto fill = [&](const RegressorMatrix& m, const std::vector<std::string>& names, std::vector<double>& center,
                    std::vector<double>& scale) {
        for (std::size_t c = 0; c < m.cols; ++c) {
            const double mu = column_mean(m, c);
            const double sd = column_sd(m, c, mu);
            if (!(sd > 0.0)) {
                fail(Errc::SingularRegression, "regressor '" + names[c] + "' is constant over the estimation sample");
            }
            center.push_back(mu);
            scale.push_back(sd);
        }
    };
    fill(raw.x, spec.mean_regressors, s.mean_center, s.mean_scale);
    fill(raw.z, spec.variance_regressors, s.var_center, s.var_scale);
    return s;
}

// ---------------------------------------------------------------------------
// model equations

std::vector<double> mean_residuals(const EstimationData& data, const GarchSpec& spec, const ParamVector& params) {
    check_shape(spec, params);
    const std::size_t n = data.size();
    const std::size_t m = data.x.cols;
    std::vector<double> e(n);
    for (std::size_t t = 0; t < n; ++t) {
        double mu = params.beta0;
        if (spec.include_ar1) mu += params.beta1 * data.r_lag[t];
        for (std::size_t j = 0; j < m; ++j) mu += params.gamma[j] * data.x.data[t * m + j];
        e[t] = data.r[t] - mu;
    }
    return e;
}

std::vector<double> mean_residuals(const HourlyPanel& panel, const GarchSpec& spec, const ParamVector& params) {
    const auto data = build_estimation_data(panel, spec);
    if (data.size() < 100) {
        fail(Errc::InsufficientData, "mask admits " + std::to_string(data.size()) + " points, need >= 100");
    }
    return mean_residuals(data, spec, params);
}

double variance_step(const ParamVector& params, std::span<const double> e2_lags, std::span<const double> h_lags,
                     std::span<const double> z, bool& clamped) {
    double s = params.omega;
    for (std::size_t i = 0; i < e2_lags.size(); ++i) s += params.alpha[i] * e2_lags[i];
    for (std::size_t j = 0; j < h_lags.size(); ++j) s += params.beta[j] * h_lags[j];
    for (std::size_t k = 0; k < z.size(); ++k) s += params.delta[k] * z[k];
    clamped = !(s >= kVarianceFloor);
    return clamped ? kVarianceFloor : s;
}

VarianceSeries variance_recursion(std::span<const double> residuals, const GarchSpec& spec,
                                  const ParamVector& params, double init, const RegressorMatrix& exog) {
    check_shape(spec, params);
    if (!(init > 0.0) || !std::isfinite(init)) fail(Errc::NonPositiveInit, "initial variance must be positive");
    const std::size_t n = residuals.size();
    const std::size_t v = spec.variance_regressors.size();
    if (v > 0 && (exog.cols != v || exog.rows != n)) {
        fail(Errc::GridMismatch, "variance regressors do not match the residual series");
    }
    const std::size_t p = spec.p;
    const std::size_t q = spec.q;

    VarianceSeries out;
    out.values.resize(n);
    std::vector<double> e2(p), h(q);
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t i = 1; i <= p; ++i) e2[i - 1] = t >= i ? residuals[t - i] * residuals[t - i] : init;
        for (std::size_t j = 1; j <= q; ++j) h[j - 1] = t >= j ? out.values[t - j] : init;
        bool clamped = false;
        out.values[t] = variance_step(params, e2, h,
                                      std::span<const double>(exog.data.data() + (v > 0 ? t * v : 0), v), clamped);
        if (clamped) ++out.clamp_events;
    }
    return out;
}

double log_likelihood(std::span<const double> residuals, std::span<const double> variances) {
    if (residuals.size() != variances.size()) fail(Errc::InvalidArgument, "residual/variance length mismatch");
    double ll = 0.0;
    for (std::size_t t = 0; t < residuals.size(); ++t) {
        const double s = variances[t];
        if (!(s > 0.0)) fail(Errc::NonPositiveVariance, "variance at index " + std::to_string(t));
        const double e = residuals[t];
        ll += -0.5 * kLog2Pi - 0.5 * std::log(s) - e * e / (2.0 * s);
    }
    return ll;
}

double residual_variance_init(std::span<const double> residuals) {
    if (residuals.empty()) fail(Errc::InsufficientData, "no residuals");
    return std::max(stats::variance(residuals), kVarianceFloor);
}

// ---------------------------------------------------------------------------
// reparameterization

std::vector<double> to_unconstrained(const GarchSpec& spec, const ParamVector& params) {
    if (!params.is_admissible(spec)) {
        fail(Errc::InvariantViolation, "parameters violate positivity, stationarity or |b1| < 1");
    }
    const Layout L(spec);
    std::vector<double> th(L.size);
    th[L.b0] = params.beta0;
    if (L.ar1) th[L.ar] = std::atanh(params.beta1);
    for (std::size_t j = 0; j < L.m; ++j) th[L.gamma + j] = params.gamma[j];
    th[L.omega] = std::log(params.omega);
    const double s = params.persistence();
    th[L.alpha] = std::log(s) - std::log1p(-s);
    std::vector<double> coef(params.alpha);
    coef.insert(coef.end(), params.beta.begin(), params.beta.end());
    const double last = std::log(coef.back());
    for (std::size_t i = 0; i + 1 < coef.size(); ++i) th[L.alpha + 1 + i] = std::log(coef[i]) - last;
    for (std::size_t k = 0; k < L.v; ++k) th[L.delta + k] = params.delta[k];
    return th;
}

ParamVector from_unconstrained(const GarchSpec& spec, std::span<const double> theta) {
    const Layout L(spec);
    if (theta.size() != L.size) fail(Errc::InvalidArgument, "theta has the wrong length");
    ParamVector p = ParamVector::zeros(spec);
    p.beta0 = theta[L.b0];
    if (L.ar1) p.beta1 = std::tanh(std::clamp(theta[L.ar], -kArBound, kArBound));
    for (std::size_t j = 0; j < L.m; ++j) p.gamma[j] = theta[L.gamma + j];
    p.omega = std::exp(std::clamp(theta[L.omega], -kLogOmegaBound, kLogOmegaBound));
    const double s = logistic(std::clamp(theta[L.alpha], -kLogitBound, kLogitBound));
    const auto w = softmax_shares(theta.subspan(L.alpha + 1, L.p + L.q - 1));
    for (std::size_t i = 0; i < L.p; ++i) p.alpha[i] = s * w[i];
    for (std::size_t j = 0; j < L.q; ++j) p.beta[j] = s * w[L.p + j];
    for (std::size_t k = 0; k < L.v; ++k) p.delta[k] = theta[L.delta + k];
    return p;
}

std::vector<double> reparameterization_jacobian(const GarchSpec& spec, std::span<const double> theta) {
    const Layout L(spec);
    if (theta.size() != L.size) fail(Errc::InvalidArgument, "theta has the wrong length");
    const std::size_t k = L.size;
    std::vector<double> j(k * k, 0.0);
    auto at = [&](std::size_t row, std::size_t col) -> double& { return j[row * k + col]; };

    at(L.b0, L.b0) = 1.0;
    if (L.ar1 && inside(theta[L.ar], kArBound)) {
        const double t = std::tanh(theta[L.ar]);
        at(L.ar, L.ar) = 1.0 - t * t;
    }
    for (std::size_t c = 0; c < L.m; ++c) at(L.gamma + c, L.gamma + c) = 1.0;
    if (inside(theta[L.omega], kLogOmegaBound)) at(L.omega, L.omega) = std::exp(theta[L.omega]);

    const double s = logistic(std::clamp(theta[L.alpha], -kLogitBound, kLogitBound));
    const auto w = softmax_shares(theta.subspan(L.alpha + 1, L.p + L.q - 1));
    const std::size_t nc = L.p + L.q;
    // coefficient rows alpha_1..alpha_p, beta_1..beta_q are contiguous from L.alpha
    for (std::size_t a = 0; a < nc; ++a) {
        const std::size_t row = L.alpha + a;
        if (inside(theta[L.alpha], kLogitBound)) at(row, L.alpha) = s * (1.0 - s) * w[a];
        for (std::size_t b = 0; b + 1 < nc; ++b) {
            if (!inside(theta[L.alpha + 1 + b], kLogitBound)) continue;
            at(row, L.alpha + 1 + b) = s * w[a] * ((a == b ? 1.0 : 0.0) - w[b]);
        }
    }
    for (std::size_t c = 0; c < L.v; ++c) at(L.delta + c, L.delta + c) = 1.0;
    return j;
}

InformationCriteria information_criteria(double log_likelihood, std::size_t k, std::size_t n) {
    if (k < 1 || n <= k) fail(Errc::BadCounts, "need n > k >= 1");
    const double dk = static_cast<double>(k);
    return {2.0 * dk - 2.0 * log_likelihood, dk * std::log(static_cast<double>(n)) - 2.0 * log_likelihood};
}

// ---------------------------------------------------------------------------
// likelihood with analytic gradient

LikelihoodModel::LikelihoodModel(EstimationData data, GarchSpec spec) : data_(std::move(data)), spec_(std::move(spec)) {
    spec_.validate();
    if (data_.x.cols != spec_.mean_regressors.size() || data_.z.cols != spec_.variance_regressors.size()) {
        fail(Errc::InvalidArgument, "estimation data does not match the spec");
    }
    if (data_.size() == 0) fail(Errc::InsufficientData, "empty estimation sample");
}

double LikelihoodModel::log_likelihood(const ParamVector& params) const {
    const auto e = mean_residuals(data_, spec_, params);
    const auto h = variance_recursion(e, spec_, params, residual_variance_init(e), data_.z);
    return btcg::log_likelihood(e, h.values);
}

double LikelihoodModel::log_likelihood(std::span<const double> theta) const {
    return log_likelihood(from_unconstrained(spec_, theta));
}

double LikelihoodModel::log_likelihood_and_gradient(std::span<const double> theta, std::span<double> grad) const {
    if (grad.size() != dimension()) fail(Errc::InvalidArgument, "gradient buffer has the wrong length");
    return evaluate(theta, grad, nullptr);
}

std::vector<double> LikelihoodModel::scores(std::span<const double> theta) const {
    std::vector<double> out;
    std::vector<double> grad(dimension());
    evaluate(theta, grad, &out);
    return out;
}

// Forward-mode derivative of the recursion in the natural parameters, mapped
// to theta through the reparameterization Jacobian at the end.
double LikelihoodModel::evaluate(std::span<const double> theta, std::span<double> grad,
                                 std::vector<double>* scores) const {
    const Layout L(spec_);
    const std::size_t k = L.size;
    const std::size_t n = data_.size();
    const ParamVector par = from_unconstrained(spec_, theta);
    const auto e = mean_residuals(data_, spec_, par);

    // d e_t / d phi is -1, -r_{t-1}, -x_{t-1}; only the mean block is nonzero.
    auto de = [&](std::size_t t, std::vector<double>& out) {
        std::fill(out.begin(), out.end(), 0.0);
        out[L.b0] = -1.0;
        if (L.ar1) out[L.ar] = -data_.r_lag[t];
        for (std::size_t j = 0; j < L.m; ++j) out[L.gamma + j] = -data_.x.data[t * L.m + j];
    };

    // pre-sample value and its derivative (b0 drops out of a centered variance)
    const double raw_var = stats::variance(e);
    const double init = std::max(raw_var, kVarianceFloor);
    std::vector<double> dinit(k, 0.0);
    if (raw_var >= kVarianceFloor) {
        const double ebar = stats::mean(e);
        const double c = 2.0 / static_cast<double>(n);
        for (std::size_t t = 0; t < n; ++t) {
            const double w = c * (e[t] - ebar);
            if (L.ar1) dinit[L.ar] -= w * data_.r_lag[t];
            for (std::size_t j = 0; j < L.m; ++j) dinit[L.gamma + j] -= w * data_.x.data[t * L.m + j];
        }
    }

    const std::size_t p = L.p;
    const std::size_t q = L.q;
    // ring buffers of the last p squared residuals / q variances with derivatives
    std::vector<double> e2_hist(p, init), h_hist(q, init);
    std::vector<double> de2_hist(p * k), dh_hist(q * k);
    for (std::size_t i = 0; i < p; ++i) std::copy(dinit.begin(), dinit.end(), de2_hist.begin() + static_cast<std::ptrdiff_t>(i * k));
    for (std::size_t j = 0; j < q; ++j) std::copy(dinit.begin(), dinit.end(), dh_hist.begin() + static_cast<std::ptrdiff_t>(j * k));
    std::size_t e_head = 0;  // slot holding lag 1
    std::size_t h_head = 0;

    std::vector<double> gphi(k, 0.0), dh(k), det(k);
    if (scores) scores->assign(n * k, 0.0);
    const auto jac = reparameterization_jacobian(spec_, theta);

    double ll = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        double s = par.omega;
        for (std::size_t i = 1; i <= p; ++i) s += par.alpha[i - 1] * e2_hist[(e_head + i - 1) % p];
        for (std::size_t j = 1; j <= q; ++j) s += par.beta[j - 1] * h_hist[(h_head + j - 1) % q];
        for (std::size_t c = 0; c < L.v; ++c) s += par.delta[c] * data_.z.data[t * L.v + c];

        if (!(s >= kVarianceFloor)) {
            s = kVarianceFloor;
            std::fill(dh.begin(), dh.end(), 0.0);
        } else {
            std::fill(dh.begin(), dh.end(), 0.0);
            dh[L.omega] = 1.0;
            for (std::size_t i = 1; i <= p; ++i) {
                const std::size_t slot = (e_head + i - 1) % p;
                const double a = par.alpha[i - 1];
                const double* src = &de2_hist[slot * k];
                for (std::size_t c = 0; c < k; ++c) dh[c] += a * src[c];
                dh[L.alpha + i - 1] += e2_hist[slot];
            }
            for (std::size_t j = 1; j <= q; ++j) {
                const std::size_t slot = (h_head + j - 1) % q;
                const double b = par.beta[j - 1];
                const double* src = &dh_hist[slot * k];
                for (std::size_t c = 0; c < k; ++c) dh[c] += b * src[c];
                dh[L.beta + j - 1] += h_hist[slot];
            }
            for (std::size_t c = 0; c < L.v; ++c) dh[L.delta + c] += data_.z.data[t * L.v + c];
        }

        const double et = e[t];
        ll += -0.5 * kLog2Pi - 0.5 * std::log(s) - et * et / (2.0 * s);

        de(t, det);
        const double a_coef = -0.5 / s + 0.5 * et * et / (s * s);
        const double b_coef = -et / s;
        for (std::size_t c = 0; c < k; ++c) {
            const double g = a_coef * dh[c] + b_coef * det[c];
            gphi[c] += g;
            if (scores) (*scores)[t * k + c] = g;
        }

        // push lag-1 entries
        e_head = (e_head + p - 1) % p;
        e2_hist[e_head] = et * et;
        for (std::size_t c = 0; c < k; ++c) de2_hist[e_head * k + c] = 2.0 * et * det[c];
        h_head = (h_head + q - 1) % q;
        h_hist[h_head] = s;
        std::copy(dh.begin(), dh.end(), dh_hist.begin() + static_cast<std::ptrdiff_t>(h_head * k));
    }

    // theta gradient = J' grad_phi
    for (std::size_t c = 0; c < k; ++c) {
        double acc = 0.0;
        for (std::size_t r = 0; r < k; ++r) acc += jac[r * k + c] * gphi[r];
        grad[c] = acc;
    }
    if (scores) {
        std::vector<double> row(k);
        for (std::size_t t = 0; t < n; ++t) {
            for (std::size_t c = 0; c < k; ++c) {
                double acc = 0.0;
                for (std::size_t r = 0; r < k; ++r) acc += jac[r * k + c] * (*scores)[t * k + r];
                row[c] = acc;
            }
            std::copy(row.begin(), row.end(), scores->begin() + static_cast<std::ptrdiff_t>(t * k));
        }
    }
    return ll;
}

// ---------------------------------------------------------------------------
// estimation

namespace {

// Scale factors taking natural parameters estimated on r / s back to the
// return scale: location terms scale with s, variance terms with s^2.
std::vector<double> output_scale_factors(const GarchSpec& spec, double s) {
    const Layout L(spec);
    std::vector<double> d(L.size, 1.0);
    d[L.b0] = s;
    for (std::size_t j = 0; j < L.m; ++j) d[L.gamma + j] = s;
    d[L.omega] = s * s;
    for (std::size_t c = 0; c < L.v; ++c) d[L.delta + c] = s * s;
    return d;
}

ParamVector to_output_scale(const GarchSpec& spec, const ParamVector& scaled, std::span<const double> factors) {
    auto flat = scaled.flatten(spec);
    for (std::size_t i = 0; i < flat.size(); ++i) flat[i] *= factors[i];
    return ParamVector::unflatten(spec, flat);
}

// Linear map from standardized-regressor coefficients to raw-regressor ones.
Eigen::MatrixXd raw_scale_map(const GarchSpec& spec, const RegressorScaling& sc) {
    const Layout L(spec);
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(L.size), static_cast<Eigen::Index>(L.size));
    for (std::size_t j = 0; j < L.m; ++j) {
        const auto g = static_cast<Eigen::Index>(L.gamma + j);
        a(g, g) = 1.0 / sc.mean_scale[j];
        a(static_cast<Eigen::Index>(L.b0), g) = -sc.mean_center[j] / sc.mean_scale[j];
    }
    for (std::size_t c = 0; c < L.v; ++c) {
        const auto d = static_cast<Eigen::Index>(L.delta + c);
        a(d, d) = 1.0 / sc.var_scale[c];
        a(static_cast<Eigen::Index>(L.omega), d) = -sc.var_center[c] / sc.var_scale[c];
    }
    return a;
}

HourlySeries on_grid(const HourlyPanel& panel, const std::vector<std::size_t>& index, const std::vector<double>& v,
                     const std::string& name) {
    std::vector<double> values(panel.size(), kNaN);
    std::vector<PointFlag> flags(panel.size(), PointFlag::missing);
    for (std::size_t i = 0; i < index.size(); ++i) {
        values[index[i]] = v[i];
        flags[index[i]] = PointFlag::observed;
    }
    return {name, panel.grid().start, std::move(values), std::move(flags)};
}

}  // namespace

FitResult fit(const HourlyPanel& panel, const GarchSpec& spec, const FitOptions& options) {
    spec.validate();
    const Layout L(spec);
    const std::size_t k = L.size;

    const auto raw = build_estimation_data(panel, spec);
    const std::size_t n = raw.size();
    if (n < std::max<std::size_t>(options.min_obs, k + 1)) {
        fail(Errc::InsufficientData,
             "effective sample " + std::to_string(n) + " below minimum " + std::to_string(options.min_obs));
    }
    const RegressorScaling scaling = compute_scaling(raw, spec);
    const EstimationData standardized = build_estimation_data(panel, spec, &scaling);

    const double r_sd = std::sqrt(stats::variance(standardized.r));
    if (!(r_sd > 0.0)) fail(Errc::ZeroVariance, "returns are constant over the estimation sample");
    EstimationData scaled = standardized;
    for (auto& v : scaled.r) v /= r_sd;
    for (auto& v : scaled.r_lag) v /= r_sd;
    const LikelihoodModel model(std::move(scaled), spec);
    const auto factors = output_scale_factors(spec, r_sd);
    const double dn = static_cast<double>(n);

    ParamVector start = ParamVector::zeros(spec);
    start.omega = 0.1 * stats::variance(model.data().r);
    for (auto& a : start.alpha) a = 0.05 / static_cast<double>(spec.p);
    for (auto& b : start.beta) b = 0.80 / static_cast<double>(spec.q);
    const auto theta0 = to_unconstrained(spec, start);

    auto observe = [&](std::span<const double> theta) {
        if (options.observer) options.observer(to_output_scale(spec, from_unconstrained(spec, theta), factors));
    };
    const optim::Objective objective = [&](std::span<const double> theta) {
        observe(theta);
        return -model.log_likelihood(theta) / dn;
    };
    const optim::ObjectiveWithGradient objective_grad = [&](std::span<const double> theta, std::span<double> g) {
        observe(theta);
        const double ll = model.log_likelihood_and_gradient(theta, g);
        for (auto& v : g) v = -v / dn;
        return -ll / dn;
    };

    const double start_ll_scaled = model.log_likelihood(std::span<const double>(theta0));

    optim::SimplexOptions nm_opts;
    nm_opts.max_evaluations = options.max_simplex_evaluations ? options.max_simplex_evaluations : 150 * k;
    nm_opts.initial_step.assign(k, 0.1);
    nm_opts.initial_step[L.omega] = 0.5;
    for (std::size_t i = 0; i < L.p + L.q; ++i) nm_opts.initial_step[L.alpha + i] = 0.5;
    const auto nm = optim::nelder_mead(objective, theta0, nm_opts);

    optim::QuasiNewtonOptions qn_opts;
    qn_opts.max_iterations = options.max_quasi_newton_iterations;
    const auto qn = optim::bfgs(objective_grad, nm.x, qn_opts);

    const std::vector<double>& theta = qn.f <= nm.f ? qn.x : nm.x;

    FitResult res;
    res.spec = spec;
    res.names = parameter_names(spec);
    res.k = k;
    res.n = n;
    res.scaling = scaling;
    res.std_error_kind = options.std_errors;
    res.iterations = nm.iterations + qn.iterations;
    res.evaluations = nm.evaluations + qn.evaluations;
    {
        std::vector<double> g(k);
        model.log_likelihood_and_gradient(theta, g);
        double gmax = 0.0;
        for (double v : g) gmax = std::max(gmax, std::fabs(v / dn));
        res.final_gradient_norm = gmax;
    }
    res.final_change = qn.iterations > 0 ? std::fabs(qn.last_change) : std::fabs(nm.last_change);
    res.converged = res.final_change < options.tol && res.final_gradient_norm < options.gradient_tol;

    // Inference: Hessian in theta by central differences of the analytic
    // gradient, then the delta method through the reparameterization and the
    // output scaling.
    const auto ki = static_cast<Eigen::Index>(k);
    Eigen::MatrixXd hess(ki, ki);
    {
        std::vector<double> tp(theta), gp(k), gm(k);
        for (std::size_t i = 0; i < k; ++i) {
            const double h = options.hessian_step * (1.0 + std::fabs(theta[i]));
            tp[i] = theta[i] + h;
            model.log_likelihood_and_gradient(tp, gp);
            tp[i] = theta[i] - h;
            model.log_likelihood_and_gradient(tp, gm);
            tp[i] = theta[i];
            for (std::size_t j = 0; j < k; ++j) {
                hess(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = (gp[j] - gm[j]) / (2.0 * h);
            }
        }
        hess = 0.5 * (hess + hess.transpose()).eval();
    }
    const Eigen::MatrixXd info = -hess;
    const Eigen::LLT<Eigen::MatrixXd> llt(info);
    Eigen::MatrixXd cov_phi = Eigen::MatrixXd::Constant(ki, ki, kNaN);
    if (llt.info() == Eigen::Success && info.allFinite()) {
        const Eigen::MatrixXd info_inv = llt.solve(Eigen::MatrixXd::Identity(ki, ki));
        Eigen::MatrixXd cov_theta = info_inv;
        if (options.std_errors == StdErrorKind::sandwich) {
            const auto sc = model.scores(theta);
            const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> s(
                sc.data(), static_cast<Eigen::Index>(n), ki);
            const Eigen::MatrixXd opg = s.transpose() * s;
            cov_theta = info_inv * opg * info_inv;
        }
        const auto jv = reparameterization_jacobian(spec, theta);
        const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> jac(
            jv.data(), ki, ki);
        Eigen::VectorXd d(ki);
        for (std::size_t i = 0; i < k; ++i) d(static_cast<Eigen::Index>(i)) = factors[i];
        cov_phi = d.asDiagonal() * jac * cov_theta * jac.transpose() * d.asDiagonal();
        res.std_errors_available = cov_phi.diagonal().allFinite() && (cov_phi.diagonal().array() >= 0.0).all();
    }

    // Final quantities on the return scale, recomputed with the public
    // building blocks so they can be reproduced exactly from the result.
    res.params = to_output_scale(spec, from_unconstrained(spec, theta), factors);
    res.estimates = res.params.flatten(spec);
    const auto e = mean_residuals(standardized, spec, res.params);
    res.variance_init = residual_variance_init(e);
    const auto h = variance_recursion(e, spec, res.params, res.variance_init, standardized.z);
    res.clamp_events = h.clamp_events;
    res.log_likelihood = btcg::log_likelihood(e, h.values);
    res.start_log_likelihood = start_ll_scaled - dn * std::log(r_sd);
    const auto ic = information_criteria(res.log_likelihood, k, n);
    res.aic = ic.aic;
    res.bic = ic.bic;
    res.residuals = on_grid(panel, standardized.grid_index, e, "residual");
    res.conditional_variance = on_grid(panel, standardized.grid_index, h.values, "conditional_variance");

    res.std_errors.assign(k, kNaN);
    res.z_stats.assign(k, kNaN);
    res.p_values.assign(k, kNaN);
    const Eigen::MatrixXd amap = raw_scale_map(spec, scaling);
    const Eigen::Map<const Eigen::VectorXd> est(res.estimates.data(), ki);
    const Eigen::VectorXd raw_est = amap * est;
    res.raw_estimates.assign(raw_est.data(), raw_est.data() + k);
    res.raw_std_errors.assign(k, kNaN);
    if (res.std_errors_available) {
        const Eigen::MatrixXd cov_raw = amap * cov_phi * amap.transpose();
        for (std::size_t i = 0; i < k; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            const double se = std::sqrt(cov_phi(ii, ii));
            res.std_errors[i] = se;
            res.z_stats[i] = res.estimates[i] / se;
            res.p_values[i] = stats::normal_two_sided_p(res.z_stats[i]);
            res.raw_std_errors[i] = std::sqrt(std::max(cov_raw(ii, ii), 0.0));
        }
    }
    return res;
}

}  // namespace btcg
