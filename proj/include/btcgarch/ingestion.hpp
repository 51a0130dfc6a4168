#pragma once

// Source parsing (exchange trades, chain statistics, daily macro series),
// regressor construction and panel assembly.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "btcgarch/series.hpp"

namespace btcg {

inline constexpr std::int64_t kSecondsPerDay = 86400;

struct TradeRecord {
    TimePoint time;
    double price_usd = 0.0;
    double volume_btc = 0.0;
};

struct ChainRecord {
    TimePoint time;
    double tx_volume_btc = 0.0;
    std::int64_t tx_count = 0;
    std::int64_t unique_addresses = 0;
    double avg_block_time_minutes = 0.0;
};

struct DailyRecord {
    std::int64_t day = 0;  // days since 1970-01-01
    std::optional<double> total_btc;
    std::optional<double> tips_rate;  // percent per annum

    [[nodiscard]] TimePoint start() const noexcept { return TimePoint{day * kSecondsPerDay}; }
};

struct RejectedRow {
    std::size_t line = 0;
    std::string reason;
    std::string text;
};

template <typename Record>
struct ParseResult {
    std::vector<Record> records;
    std::vector<RejectedRow> rejects;
};

/// Header `unix_ts,price_usd,volume_btc`. Output is time-sorted.
ParseResult<TradeRecord> parse_trades(std::istream& in);
/// Header `unix_ts,tx_volume_btc,tx_count,unique_addresses,avg_block_time_minutes`.
ParseResult<ChainRecord> parse_chain(std::istream& in);
/// Header `date,total_btc,tips_rate`; `.` or empty marks a missing value.
ParseResult<DailyRecord> parse_daily(std::istream& in);

/// Parses `YYYY-MM-DD` into days since the epoch.
std::optional<std::int64_t> parse_iso_date(std::string_view text);
std::string format_iso_date(std::int64_t day);

/// Block subsidy schedule: `initial_reward`, halved every `halving_interval` blocks.
struct RewardSchedule {
    double initial_reward = 50.0;
    std::int64_t halving_interval = 210000;

    [[nodiscard]] double reward_at_height(double height) const;
    /// Height at which cumulative issuance reaches `stock`.
    [[nodiscard]] double height_for_stock(double stock) const;
};

/// Coin stock per hour: anchored to the daily total at day start, advanced
/// minute by minute at reward / block_time, reported at the end of each hour.
HourlySeries total_stock_hourly(std::span<const DailyRecord> daily, const HourlySeries& block_time_minutes,
                                const RewardSchedule& schedule = {});

enum class VelocityVariant { v1, v2 };

const char* velocity_name(VelocityVariant v) noexcept;
std::optional<VelocityVariant> parse_velocity(std::string_view text) noexcept;

inline constexpr std::size_t kVelocityWindowHours = 720;

/// v1: volume / end-of-hour stock. v2: volume / trailing 720-hour mean stock
/// (expanding mean over the first 719 hours).
HourlySeries velocity(const HourlySeries& tx_volume, const HourlySeries& stock, VelocityVariant variant);

enum class DailyField { total_btc, tips_rate };

/// Most recent daily value for each hour of the grid; hours after the
/// observation day are flagged forward_filled.
HourlySeries forward_fill_daily(std::span<const DailyRecord> daily, DailyField field, TimePoint start,
                                std::size_t length);

struct PanelRecipe {
    TimePoint start;  // inclusive, hour aligned
    TimePoint end;    // exclusive, hour aligned
    VelocityVariant velocity_variant = VelocityVariant::v1;
    double log_floor = 1e-8;
    double rate_shift = 5.0;  // percentage points added to the rate before the log
    FillPolicy fill;
    RewardSchedule reward;
    std::string trades_path;
    std::string chain_path;
    std::string daily_path;

    [[nodiscard]] std::size_t hours() const;
};

struct ColumnSummary {
    std::string name;
    std::size_t observed = 0;
    std::size_t forward_filled = 0;
    std::size_t clamped = 0;
    std::size_t missing = 0;
};

struct BuildReport {
    std::size_t trade_rows = 0;
    std::size_t chain_rows = 0;
    std::size_t daily_rows = 0;
    std::vector<RejectedRow> trade_rejects;
    std::vector<RejectedRow> chain_rejects;
    std::vector<RejectedRow> daily_rejects;
    std::vector<ColumnSummary> columns;
    std::size_t velocity2_warmup_hours = 0;
    std::size_t mask_count = 0;
    double log_floor = 0.0;
    double rate_shift = 0.0;
};

struct PanelBundle {
    HourlyPanel panel;
    HourlySeries price;  // hourly last-trade price on the panel grid
    BuildReport report;
};

/// Panel columns, in order.
const std::vector<std::string>& panel_column_names();

/// Panel from already parsed sources.
PanelBundle assemble_panel(const ParseResult<TradeRecord>& trades, const ParseResult<ChainRecord>& chain,
                           const ParseResult<DailyRecord>& daily, const PanelRecipe& recipe);

/// Reads the three source files named in the recipe and assembles the panel.
PanelBundle build_panel(const PanelRecipe& recipe);

void write_build_report(const BuildReport& report, std::ostream& out);

}  // namespace btcg
