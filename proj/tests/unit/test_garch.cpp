#include <cmath>
#include <random>
#include <vector>

#include "btcgarch/error.hpp"
#include "btcgarch/garch.hpp"
#include "btcgarch/random.hpp"
#include "btcgarch/simulation.hpp"
#include "doctest.h"
#include "reference.hpp"

using namespace btcg;

namespace {

GarchSpec plain() { return GarchSpec{}; }

GarchSpec with_x() {
    GarchSpec s;
    s.mean_regressors = {"x1", "x2"};
    s.variance_regressors = {"x1"};
    return s;
}

ParamVector params_11(double omega, double alpha, double beta) {
    ParamVector p = ParamVector::zeros(plain());
    p.omega = omega;
    p.alpha = {alpha};
    p.beta = {beta};
    return p;
}

SimConfig x_config(std::uint64_t seed, std::size_t n) {
    SimConfig c;
    c.spec = with_x();
    c.truth = ParamVector::zeros(c.spec);
    c.truth.beta0 = 0.02;
    c.truth.beta1 = 0.1;
    c.truth.gamma = {0.05, -0.03};
    c.truth.omega = 0.05;
    c.truth.alpha = {0.1};
    c.truth.beta = {0.8};
    c.truth.delta = {0.01};
    c.regressors = {{"x1", 0.9, 0.5, 1.0}, {"x2", 0.5, 1.0, 0.0}};
    c.n = n;
    c.seed = seed;
    return c;
}

reference::Garch11X to_reference(const ParamVector& p) {
    return {p.beta0, p.beta1, p.gamma, p.omega, p.alpha[0], p.beta[0], p.delta};
}

}  // namespace

TEST_CASE("variance step") {
    const auto p = params_11(0.1, 0.2, 0.7);
    bool clamped = true;
    const double one[] = {1.0};
    CHECK(variance_step(p, one, one, {}, clamped) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_FALSE(clamped);
    const double e2[] = {4.0}, h[] = {2.0};
    CHECK(variance_step(p, e2, h, {}, clamped) == doctest::Approx(2.3).epsilon(1e-15));

    ParamVector neg = p;
    neg.delta = {-10.0};
    const double z[] = {1.0};
    CHECK(variance_step(neg, one, one, z, clamped) == kVarianceFloor);
    CHECK(clamped);
}

TEST_CASE("variance recursion") {
    const auto spec = plain();
    SUBCASE("first step from the pre-sample value") {
        const std::vector<double> e{2.0, 0.0};
        const auto v = variance_recursion(e, spec, params_11(0.1, 0.2, 0.7), 1.0);
        CHECK(v.values[0] == doctest::Approx(1.0));
        CHECK(v.values[1] == doctest::Approx(0.1 + 0.2 * 4.0 + 0.7 * 1.0));
    }
    SUBCASE("unconditional fixed point") {
        std::vector<double> e(200);
        for (std::size_t i = 0; i < e.size(); ++i) e[i] = i % 2 ? 1.0 : -1.0;
        const auto v = variance_recursion(e, spec, params_11(0.05, 0.15, 0.80), 1.0);
        for (double s : v.values) CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(v.clamp_events == 0);
    }
    SUBCASE("errors") {
        const std::vector<double> e{0.1, 0.2};
        CHECK_THROWS_AS((void)variance_recursion(e, spec, params_11(0.1, 0.2, 0.7), 0.0), Error);
        CHECK_THROWS_AS((void)variance_recursion(e, with_x(), params_11(0.1, 0.2, 0.7), 1.0), Error);
    }
}

TEST_CASE("recursion agrees with the simulator") {
    auto cfg = x_config(17, 500);
    cfg.burn_in = 0;
    const auto sim = simulate_garch(cfg);
    const auto v = variance_recursion(sim.residuals, cfg.spec, cfg.truth, sim.presample_variance, sim.data.z);
    REQUIRE(v.values.size() == sim.sigma2.size());
    for (std::size_t t = 0; t < v.values.size(); ++t) CHECK(v.values[t] == sim.sigma2[t]);

    const auto e = mean_residuals(sim.data, cfg.spec, cfg.truth);
    for (std::size_t t = 0; t < e.size(); ++t) CHECK(e[t] == doctest::Approx(sim.residuals[t]).epsilon(1e-12));
}

TEST_CASE("gaussian log-likelihood") {
    const std::vector<double> e0{0.0}, h1{1.0};
    CHECK(std::abs(log_likelihood(e0, h1) - (-0.91893853)) < 1e-8);

    const std::vector<double> e{1.0, -2.0, 0.5}, h{1.0, 4.0, 0.25};
    double expected = 0.0;
    for (double s : h) expected += -0.5 * std::log(2.0 * M_PI) - 0.5 * std::log(s) - 0.5;
    CHECK(log_likelihood(e, h) == doctest::Approx(expected).epsilon(1e-14));

    const std::vector<double> bad{0.0};
    CHECK_THROWS_AS((void)log_likelihood(e0, bad), Error);
}

TEST_CASE("information criteria") {
    const auto ic = information_criteria(100.0, 5, 1000);
    CHECK(ic.aic == doctest::Approx(-190.0));
    CHECK(ic.bic == doctest::Approx(10.0 * std::log(1000.0) / 2.0 - 200.0));
    CHECK_THROWS_AS((void)information_criteria(100.0, 5, 5), Error);
}

TEST_CASE("reparameterization") {
    const auto spec = plain();
    SUBCASE("zero vector") {
        const std::vector<double> theta(spec.parameter_count(), 0.0);
        const auto p = from_unconstrained(spec, theta);
        CHECK(p.omega == 1.0);
        CHECK(p.persistence() == doctest::Approx(0.5));
        CHECK(p.alpha[0] == doctest::Approx(0.25));
        CHECK(p.beta[0] == doctest::Approx(0.25));
        CHECK(p.beta1 == 0.0);
    }
    SUBCASE("every finite theta is admissible") {
        std::mt19937_64 g(5);
        std::uniform_real_distribution<double> u(-40.0, 40.0);
        GarchSpec big;
        big.p = 2;
        big.q = 3;
        big.variance_regressors = {"z"};
        for (int i = 0; i < 500; ++i) {
            std::vector<double> theta(big.parameter_count());
            for (auto& t : theta) t = u(g);
            const auto p = from_unconstrained(big, theta);
            CHECK(p.is_admissible(big));
            CHECK(p.persistence() < 1.0);
        }
    }
    SUBCASE("round trip") {
        std::mt19937_64 g(11);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const auto s = with_x();
        for (int i = 0; i < 100; ++i) {
            ParamVector p = ParamVector::zeros(s);
            p.beta0 = u(g) - 0.5;
            p.beta1 = 1.8 * u(g) - 0.9;
            p.gamma = {u(g), -u(g)};
            p.omega = 0.01 + u(g);
            const double persistence = 0.05 + 0.9 * u(g);
            const double share = 0.05 + 0.9 * u(g);
            p.alpha = {persistence * share};
            p.beta = {persistence * (1.0 - share)};
            p.delta = {u(g) - 0.5};
            const auto back = from_unconstrained(s, to_unconstrained(s, p));
            const auto a = p.flatten(s), b = back.flatten(s);
            for (std::size_t j = 0; j < a.size(); ++j) CHECK(b[j] == doctest::Approx(a[j]).epsilon(1e-10));
        }
    }
    SUBCASE("inadmissible input") {
        CHECK_THROWS_AS((void)to_unconstrained(spec, params_11(0.1, 0.6, 0.5)), Error);
        CHECK_THROWS_AS((void)to_unconstrained(spec, params_11(-0.1, 0.1, 0.5)), Error);
    }
    SUBCASE("jacobian against central differences") {
        const auto s = with_x();
        std::mt19937_64 g(3);
        std::normal_distribution<double> nd;
        std::vector<double> theta(s.parameter_count());
        for (auto& t : theta) t = nd(g);
        const std::size_t k = theta.size();
        const auto jac = reparameterization_jacobian(s, theta);
        for (std::size_t c = 0; c < k; ++c) {
            auto up = theta, dn = theta;
            const double h = 1e-6;
            up[c] += h;
            dn[c] -= h;
            const auto fu = from_unconstrained(s, up).flatten(s);
            const auto fd = from_unconstrained(s, dn).flatten(s);
            for (std::size_t r = 0; r < k; ++r) {
                CHECK(jac[r * k + c] == doctest::Approx((fu[r] - fd[r]) / (2 * h)).epsilon(1e-6).scale(1.0));
            }
        }
    }
}

TEST_CASE("parameter layout") {
    const auto s = with_x();
    CHECK(s.parameter_count() == 8);
    CHECK(parameter_names(s) == std::vector<std::string>{"mean:const", "mean:ar1", "mean:x1", "mean:x2", "var:omega",
                                                         "var:arch1", "var:garch1", "var:x1"});
    GarchSpec dup;
    dup.mean_regressors = {"a", "a"};
    CHECK_THROWS_AS(dup.validate(), Error);
}

TEST_CASE("mean residuals") {
    auto cfg = x_config(2, 400);
    const auto sim = simulate_garch(cfg);
    const auto zero = mean_residuals(sim.data, cfg.spec, ParamVector::zeros(cfg.spec));
    for (std::size_t t = 0; t < zero.size(); ++t) CHECK(zero[t] == sim.data.r[t]);

    GarchSpec bare;
    bare.include_ar1 = false;
    EstimationData d = sim.data;
    d.x = {};
    d.z = {};
    d.x.rows = d.z.rows = d.size();
    ParamVector centered = ParamVector::zeros(bare);
    double mu = 0.0;
    for (double r : d.r) mu += r;
    centered.beta0 = mu / static_cast<double>(d.size());
    const auto e = mean_residuals(d, bare, centered);
    double sum = 0.0;
    for (double v : e) sum += v;
    CHECK(std::abs(sum / static_cast<double>(e.size())) < 1e-10);

    auto quiet = x_config(4, 300);
    quiet.innovation_scale = 0.0;
    const auto qs = simulate_garch(quiet);
    const auto panel = qs.to_panel();
    for (double v : mean_residuals(panel, quiet.spec, quiet.truth)) CHECK(std::abs(v) < 1e-10);
}

TEST_CASE("likelihood matches the straight-loop reference") {
    const auto cfg = x_config(8, 1000);
    const auto sim = simulate_garch(cfg);
    const LikelihoodModel model(sim.data, cfg.spec);
    const double ref = reference::log_likelihood(sim.data.r, sim.data.r_lag, sim.data.x.data, sim.data.z.data,
                                                 to_reference(cfg.truth));
    CHECK(std::abs(model.log_likelihood(cfg.truth) - ref) < 1e-8);
    const auto theta = to_unconstrained(cfg.spec, cfg.truth);
    CHECK(std::abs(model.log_likelihood(theta) - ref) < 1e-8);
}

TEST_CASE("analytic gradient and scores") {
    const auto cfg = x_config(9, 800);
    const auto sim = simulate_garch(cfg);
    const LikelihoodModel model(sim.data, cfg.spec);
    const std::size_t k = model.dimension();
    auto theta = to_unconstrained(cfg.spec, cfg.truth);
    theta[0] += 0.01;
    theta[5] -= 0.2;
    std::vector<double> grad(k);
    const double ll = model.log_likelihood_and_gradient(theta, grad);
    CHECK(ll == model.log_likelihood(theta));
    for (std::size_t i = 0; i < k; ++i) {
        const double h = 1e-5 * (1.0 + std::abs(theta[i]));
        auto up = theta, dn = theta;
        up[i] += h;
        dn[i] -= h;
        const double fd = (model.log_likelihood(up) - model.log_likelihood(dn)) / (2 * h);
        CAPTURE(i);
        CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-5));
    }
    const auto sc = model.scores(theta);
    REQUIRE(sc.size() == model.nobs() * k);
    for (std::size_t i = 0; i < k; ++i) {
        double sum = 0.0;
        for (std::size_t t = 0; t < model.nobs(); ++t) sum += sc[t * k + i];
        CHECK(sum == doctest::Approx(grad[i]).epsilon(1e-9));
    }
}

TEST_CASE("fit recovers a simulated process and is deterministic") {
    auto cfg = x_config(10, 4000);
    const auto panel = simulate_garch(cfg).to_panel();
    const auto a = fit(panel, cfg.spec);
    const auto b = fit(panel, cfg.spec);
    REQUIRE(a.converged);
    CHECK(a.estimates == b.estimates);
    CHECK(a.std_errors == b.std_errors);
    CHECK(a.log_likelihood == b.log_likelihood);
    CHECK(a.n == 4000);
    CHECK(a.k == 8);
    CHECK(a.names == parameter_names(cfg.spec));
    CHECK(a.std_errors_available);
    CHECK(a.log_likelihood >= a.start_log_likelihood);
    CHECK(a.aic == doctest::Approx(-2 * a.log_likelihood + 2 * 8));

    const auto raw = a.raw_estimates;
    CHECK(std::abs(raw[1] - 0.1) < 0.05);                                      // ar1
    CHECK(std::abs(raw[2] - 0.05) < 4 * a.raw_std_errors[2] + 1e-12);         // gamma x1
    CHECK(std::abs(raw[3] + 0.03) < 4 * a.raw_std_errors[3] + 1e-12);         // gamma x2
    CHECK(a.estimates[5] + a.estimates[6] < 1.0);
    CHECK(std::abs(a.estimates[6] - 0.8) < 0.1);

    FitOptions sandwich;
    sandwich.std_errors = StdErrorKind::sandwich;
    const auto s = fit(panel, cfg.spec, sandwich);
    CHECK(s.std_error_kind == StdErrorKind::sandwich);
    CHECK(s.estimates == a.estimates);
    CHECK(s.std_errors != a.std_errors);
}

TEST_CASE("fit errors") {
    auto cfg = x_config(1, 200);
    const auto panel = simulate_garch(cfg).to_panel();
    try {
        (void)fit(panel, cfg.spec);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::InsufficientData);
    }
    GarchSpec unknown;
    unknown.mean_regressors = {"nope"};
    try {
        (void)fit(panel, unknown);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::UnknownColumn);
    }
}

TEST_CASE("no spurious ARCH term on homoskedastic data") {
    // alpha should not look significant at 1% on iid data in at least 90% of 50 seeds
    int significant = 0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        SimConfig c;
        c.spec = plain();
        c.truth = params_11(1.0, 0.0, 0.0);
        c.n = 2000;
        c.seed = seed;
        const auto f = fit(simulate_garch(c).to_panel(), c.spec);
        if (f.std_errors_available && f.p_values[3] < 0.01) ++significant;
    }
    CHECK(significant <= 5);
}
