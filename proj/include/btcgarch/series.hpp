#pragma once

// Hourly time-series containers and the transforms every other module
// consumes. All timestamps are UTC seconds since the Unix epoch.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace btcg {

inline constexpr std::int64_t kSecondsPerHour = 3600;

struct TimePoint {
    std::int64_t epoch_seconds = 0;

    [[nodiscard]] constexpr TimePoint hour_bucket() const noexcept {
        return TimePoint{epoch_seconds - epoch_seconds % kSecondsPerHour};
    }
    [[nodiscard]] constexpr bool is_hour_aligned() const noexcept {
        return epoch_seconds % kSecondsPerHour == 0;
    }
    [[nodiscard]] constexpr TimePoint plus_hours(std::int64_t h) const noexcept {
        return TimePoint{epoch_seconds + h * kSecondsPerHour};
    }

    auto operator<=>(const TimePoint&) const = default;
};

enum class PointFlag : std::uint8_t { observed, forward_filled, clamped, missing };

const char* flag_name(PointFlag f) noexcept;

/// Dense hourly series. Missing points hold NaN and are flagged `missing`;
/// the grid never has holes.
class HourlySeries {
public:
    HourlySeries() = default;
    HourlySeries(std::string name, TimePoint start_hour, std::vector<double> values,
                 std::vector<PointFlag> flags);
    /// All points flagged observed.
    HourlySeries(std::string name, TimePoint start_hour, std::vector<double> values);

    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    [[nodiscard]] TimePoint start_hour() const noexcept { return start_; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] bool empty() const noexcept { return values_.empty(); }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] std::span<const PointFlag> flags() const noexcept { return flags_; }
    [[nodiscard]] double value(std::size_t i) const { return values_.at(i); }
    [[nodiscard]] PointFlag flag(std::size_t i) const { return flags_.at(i); }
    [[nodiscard]] bool is_missing(std::size_t i) const { return flags_.at(i) == PointFlag::missing; }
    [[nodiscard]] TimePoint time_at(std::size_t i) const noexcept {
        return start_.plus_hours(static_cast<std::int64_t>(i));
    }
    [[nodiscard]] std::size_t count(PointFlag f) const noexcept;

    [[nodiscard]] HourlySeries renamed(std::string name) const;

    friend bool operator==(const HourlySeries& a, const HourlySeries& b);

private:
    std::string name_;
    TimePoint start_{};
    std::vector<double> values_;
    std::vector<PointFlag> flags_;
};

struct Tick {
    TimePoint time;
    double value = 0.0;
};

struct FillPolicy {
    // Runs of empty hours longer than this are marked missing instead of filled.
    std::size_t max_fill_hours = 24;
};

/// ln(P_t) - ln(P_{t-1}); output starts one hour after the input.
HourlySeries log_returns(const HourlySeries& prices);

/// Last tick per hour bucket, short gaps forward-filled.
HourlySeries resample_last(std::span<const Tick> ticks, const FillPolicy& policy = {});

/// Sum of ticks per hour bucket, short gaps zero-filled.
HourlySeries resample_sum(std::span<const Tick> ticks, const FillPolicy& policy = {});

/// ln(max(v, floor)); points below the floor are flagged clamped.
HourlySeries safe_log(const HourlySeries& series, double floor);

HourlySeries lag(const HourlySeries& series, std::size_t k);

/// Re-index onto [start, start + length); hours outside the source are missing.
HourlySeries align(const HourlySeries& series, TimePoint start, std::size_t length);

struct HourGrid {
    TimePoint start{};
    std::size_t length = 0;

    [[nodiscard]] TimePoint time_at(std::size_t i) const noexcept {
        return start.plus_hours(static_cast<std::int64_t>(i));
    }
    bool operator==(const HourGrid&) const = default;
};

/// Columns on one shared grid plus the estimation mask. The mask passed in is
/// intersected with "no column missing at t".
class HourlyPanel {
public:
    HourlyPanel() = default;
    HourlyPanel(HourGrid grid, std::vector<HourlySeries> columns,
                std::vector<std::uint8_t> base_mask = {});

    [[nodiscard]] const HourGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] std::size_t size() const noexcept { return grid_.length; }
    [[nodiscard]] const std::vector<HourlySeries>& columns() const noexcept { return columns_; }
    [[nodiscard]] bool has_column(const std::string& name) const noexcept;
    [[nodiscard]] const HourlySeries& column(const std::string& name) const;
    [[nodiscard]] std::vector<std::string> column_names() const;
    [[nodiscard]] std::span<const std::uint8_t> mask() const noexcept { return mask_; }
    [[nodiscard]] std::size_t mask_count() const noexcept;

private:
    HourGrid grid_{};
    std::vector<HourlySeries> columns_;
    std::vector<std::uint8_t> mask_;
};

/// Mask that is true at t only when every column is present at t and at the
/// `max_lag` preceding hours.
std::vector<std::uint8_t> lagged_mask(const std::vector<HourlySeries>& columns, std::size_t length,
                                      std::size_t max_lag);

void write_panel_csv(const HourlyPanel& panel, std::ostream& out);
HourlyPanel read_panel_csv(std::istream& in);

}  // namespace btcg
