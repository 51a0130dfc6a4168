#include <cmath>
#include <string>
#include <vector>

#include "btcgarch/csv.hpp"
#include "btcgarch/error.hpp"
#include "btcgarch/random.hpp"
#include "btcgarch/stats.hpp"
#include "doctest.h"

using namespace btcg;

// Upper-tail values frozen from scipy.stats.chi2.sf.
TEST_CASE("chi-square upper tail") {
    struct Case {
        double x, dof, expected;
    };
    const Case cases[] = {
        {11.0705, 5, 0.0499999554280436},
        {3.0, 2, 0.22313016014842982},
        {20.0, 10, 0.029252688076961124},
        {0.5, 1, 0.47950012218695337},
    };
    for (const auto& c : cases) {
        CAPTURE(c.x);
        CAPTURE(c.dof);
        CHECK(std::abs(stats::chi_square_sf(c.x, c.dof) - c.expected) < 1e-12);
    }
    // two degrees of freedom has the closed form exp(-x/2)
    CHECK(stats::chi_square_sf(300.0, 2) == doctest::Approx(std::exp(-150.0)).epsilon(1e-10));
    CHECK(stats::chi_square_sf(0.0, 3) == 1.0);
}

TEST_CASE("incomplete gamma complements") {
    for (double a : {0.5, 1.0, 2.5, 10.0, 40.0}) {
        for (double x : {0.01, 0.5, 3.0, 12.0, 60.0}) {
            CHECK(stats::gamma_p(a, x) + stats::gamma_q(a, x) == doctest::Approx(1.0).epsilon(1e-13));
        }
    }
    CHECK(stats::gamma_p(1.0, 2.0) == doctest::Approx(1.0 - std::exp(-2.0)).epsilon(1e-14));
}

TEST_CASE("normal distribution") {
    CHECK(stats::normal_cdf(0.0) == 0.5);
    CHECK(stats::normal_two_sided_p(1.959963984540054) == doctest::Approx(0.05).epsilon(1e-12));
    for (double p : {1e-10, 0.001, 0.025, 0.3, 0.5, 0.8, 0.999}) {
        CHECK(stats::normal_cdf(stats::normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
    }
}

TEST_CASE("rng is reproducible and uniforms stay inside (0, 1)") {
    Rng a(42), b(42), c(43);
    bool differs = false;
    for (int i = 0; i < 1000; ++i) {
        const double u = a.uniform();
        CHECK(u == b.uniform());
        if (u != c.uniform()) differs = true;
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
    CHECK(differs);

    Rng g(7);
    double sum = 0.0, sum2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = g.normal();
        sum += z;
        sum2 += z * z;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(std::abs(sum2 / n - 1.0) < 0.015);
}

TEST_CASE("csv helpers") {
    const auto f = csv::split("a, b,,c\r");
    CHECK(f.size() == 4);
    CHECK(csv::trim(f[1]) == "b");
    CHECK(csv::chomp("x\r") == "x");
    CHECK(csv::is_missing_marker("."));
    CHECK(csv::is_missing_marker(""));
    CHECK_FALSE(csv::parse_double("1.5x"));
    CHECK(*csv::parse_double(" 2.5 ") == 2.5);
    CHECK(*csv::parse_int("1388534400") == 1388534400);
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 12003606.924657114, -2.5e17}) {
        CHECK(*csv::parse_double(csv::format_full(v)) == v);
    }
    CHECK(csv::format_full(0.05) == "0.05");
}

TEST_CASE("error categories map to exit codes") {
    CHECK(errc_category(Errc::NonPositivePrice) == ErrorCategory::input);
    CHECK(errc_category(Errc::IoFailure) == ErrorCategory::input);
    CHECK(errc_category(Errc::NoConvergence) == ErrorCategory::convergence);
    CHECK(errc_category(Errc::InvariantViolation) == ErrorCategory::internal);
    CHECK(errc_name(Errc::LagTooLarge) == "LagTooLarge");
    try {
        fail(Errc::TooShort, "detail");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::TooShort);
        CHECK(std::string(e.what()).find("detail") != std::string::npos);
    }
}
