#include <cmath>
#include <sstream>
#include <vector>

#include "btcgarch/error.hpp"
#include "btcgarch/series.hpp"
#include "doctest.h"

using namespace btcg;

namespace {

const TimePoint h0{1388534400};

HourlySeries make(std::vector<double> v) { return HourlySeries("x", h0, std::move(v)); }

Errc error_code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error thrown");
    return Errc::InvariantViolation;
}

}  // namespace

TEST_CASE("log returns") {
    SUBCASE("identical prices give a zero return") {
        const auto r = log_returns(make({100, 100}));
        REQUIRE(r.size() == 1);
        CHECK(r.value(0) == 0.0);
        CHECK(r.start_hour() == h0.plus_hours(1));
    }
    SUBCASE("ten percent move") {
        const auto r = log_returns(make({100, 110}));
        CHECK(std::abs(r.value(0) - 0.09531018) < 1e-8);
    }
    SUBCASE("round trip sums to zero") {
        const auto r = log_returns(make({50, 100, 50}));
        CHECK(r.value(0) == doctest::Approx(std::log(2.0)));
        CHECK(r.value(1) == doctest::Approx(-std::log(2.0)));
        CHECK(std::abs(r.value(0) + r.value(1)) < 1e-15);
    }
    SUBCASE("non-positive price") {
        CHECK(error_code_of([] { (void)log_returns(make({100, 0})); }) == Errc::NonPositivePrice);
    }
    SUBCASE("missing price propagates to both neighbouring returns") {
        HourlySeries p("p", h0, {1, std::nan(""), 2},
                       {PointFlag::observed, PointFlag::missing, PointFlag::observed});
        const auto r = log_returns(p);
        CHECK(r.is_missing(0));
        CHECK(r.is_missing(1));
    }
}

TEST_CASE("resample last") {
    SUBCASE("one tick per hour passes through") {
        std::vector<Tick> ticks{{h0, 1.0}, {h0.plus_hours(1), 2.0}, {h0.plus_hours(2), 3.0}};
        const auto s = resample_last(ticks);
        REQUIRE(s.size() == 3);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(s.value(i) == static_cast<double>(i + 1));
            CHECK(s.flag(i) == PointFlag::observed);
        }
    }
    SUBCASE("last tick in the bucket wins") {
        std::vector<Tick> ticks{{TimePoint{h0.epoch_seconds + 600}, 5.0}, {TimePoint{h0.epoch_seconds + 3000}, 7.0}};
        CHECK(resample_last(ticks).value(0) == 7.0);
    }
    SUBCASE("gap is forward filled") {
        std::vector<Tick> ticks{{h0, 4.0}, {h0.plus_hours(2), 6.0}};
        const auto s = resample_last(ticks);
        CHECK(s.value(1) == 4.0);
        CHECK(s.flag(1) == PointFlag::forward_filled);
    }
    SUBCASE("gap longer than the policy is missing") {
        std::vector<Tick> ticks{{h0, 4.0}, {h0.plus_hours(4), 6.0}};
        const auto s = resample_last(ticks, FillPolicy{2});
        CHECK(s.flag(1) == PointFlag::missing);
        CHECK(s.flag(3) == PointFlag::missing);
    }
    SUBCASE("empty input") {
        CHECK(error_code_of([] { (void)resample_last({}); }) == Errc::EmptyInput);
    }
}

TEST_CASE("resample sum") {
    std::vector<Tick> ticks{{TimePoint{h0.epoch_seconds + 5}, 1.5}, {TimePoint{h0.epoch_seconds + 50}, 2.5},
                            {h0.plus_hours(2), 1.0}};
    const auto s = resample_sum(ticks);
    CHECK(s.value(0) == 4.0);
    CHECK(s.value(1) == 0.0);

    std::vector<Tick> minutes;
    for (int m = 0; m < 60; ++m) minutes.push_back({TimePoint{h0.epoch_seconds + 60 * m}, 2.5});
    CHECK(resample_sum(minutes).value(0) == doctest::Approx(150.0).epsilon(1e-15));
}

TEST_CASE("safe log") {
    const auto s = safe_log(make({1.0, 0.0, std::exp(1.0)}), 1e-8);
    CHECK(s.value(0) == 0.0);
    CHECK(std::abs(s.value(1) - (-18.4206807)) < 1e-7);
    CHECK(s.flag(1) == PointFlag::clamped);
    CHECK(s.value(2) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(s.flag(2) == PointFlag::observed);
    CHECK(error_code_of([] { (void)safe_log(make({1.0}), 0.0); }) == Errc::InvalidArgument);
}

TEST_CASE("lag") {
    const auto s = lag(make({1, 2, 3}), 1);
    CHECK(s.is_missing(0));
    CHECK(s.value(1) == 1.0);
    CHECK(s.value(2) == 2.0);
    CHECK(s.start_hour() == h0);
    CHECK(error_code_of([] { (void)lag(make({1, 2, 3}), 3); }) == Errc::LagTooLarge);
}

TEST_CASE("align") {
    const auto s = align(make({1, 2}), h0.plus_hours(-1), 4);
    CHECK(s.is_missing(0));
    CHECK(s.value(1) == 1.0);
    CHECK(s.value(2) == 2.0);
    CHECK(s.is_missing(3));
}

TEST_CASE("panel mask and csv round trip") {
    HourlySeries a("a", h0, {1, 2, std::nan(""), 4, 5},
                   {PointFlag::observed, PointFlag::observed, PointFlag::missing, PointFlag::observed,
                    PointFlag::observed});
    HourlySeries b("b", h0, {0.5, 0.25, 0.125, 1.0 / 3.0, 1e-300});
    const auto mask = lagged_mask({a, b}, 5, 1);
    CHECK(mask == std::vector<std::uint8_t>{0, 1, 0, 0, 1});

    HourlyPanel panel(HourGrid{h0, 5}, {a, b}, mask);
    CHECK(panel.mask_count() == 2);
    std::stringstream buf;
    write_panel_csv(panel, buf);
    const auto back = read_panel_csv(buf);
    CHECK(back.grid() == panel.grid());
    CHECK(back.column_names() == panel.column_names());
    CHECK(back.column("b") == panel.column("b"));
    CHECK(back.column("a").is_missing(2));
    CHECK(std::vector<std::uint8_t>(back.mask().begin(), back.mask().end()) == mask);
}

TEST_CASE("panel rejects a column on another grid") {
    HourlySeries a("a", h0, {1, 2});
    HourlySeries b("b", h0.plus_hours(1), {1, 2});
    CHECK(error_code_of([&] { HourlyPanel(HourGrid{h0, 2}, {a, b}); }) == Errc::GridMismatch);
}
