#include "btcgarch/ingestion.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include "btcgarch/csv.hpp"
#include "btcgarch/error.hpp"

namespace btcg {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Reads the header, then hands each non-blank data line to `row`, which either
// appends a record or returns a reject reason.
template <typename Record, typename RowFn>
ParseResult<Record> parse_csv(std::istream& in, std::string_view expected_header, const char* what, RowFn row) {
    ParseResult<Record> out;
    std::string line;
    if (!std::getline(in, line)) fail(Errc::BadHeader, std::string(what) + ": empty input");
    const auto header = csv::split(csv::chomp(line));
    const auto want = csv::split(expected_header);
    if (header != want) {
        fail(Errc::BadHeader, std::string(what) + ": expected '" + std::string(expected_header) + "'");
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        const auto text = csv::chomp(line);
        if (csv::trim(text).empty()) continue;
        const auto fields = csv::split(text);
        if (fields.size() != want.size()) {
            out.rejects.push_back({lineno, "Malformed", std::string(text)});
            continue;
        }
        if (auto reason = row(fields, out.records); !reason.empty()) {
            out.rejects.push_back({lineno, std::move(reason), std::string(text)});
        }
    }
    if (out.records.empty()) fail(Errc::NoValidRows, std::string(what) + ": no valid rows");
    return out;
}

std::string parse_time(std::string_view field, TimePoint& out) {
    const auto ts = csv::parse_int(field);
    if (!ts) return "Malformed";
    if (*ts < 0) return "NegativeTime";
    out = TimePoint{*ts};
    return {};
}

template <typename Record>
void sort_by_time(std::vector<Record>& rs) {
    std::stable_sort(rs.begin(), rs.end(), [](const Record& a, const Record& b) { return a.time < b.time; });
}

std::ifstream open_source(const std::string& path, const char* what) {
    if (path.empty()) fail(Errc::IoFailure, std::string(what) + " source path is not set");
    std::ifstream in(path);
    if (!in) fail(Errc::IoFailure, std::string("cannot open ") + what + " file '" + path + "'");
    return in;
}

bool covers(TimePoint first, TimePoint last, TimePoint start, TimePoint end) {
    return first.hour_bucket() < end && last.hour_bucket() >= start;
}

ColumnSummary summarize(const HourlySeries& s) {
    return {s.name(), s.count(PointFlag::observed), s.count(PointFlag::forward_filled),
            s.count(PointFlag::clamped), s.count(PointFlag::missing)};
}

}  // namespace

// ---------------------------------------------------------------------------
// parsers

ParseResult<TradeRecord> parse_trades(std::istream& in) {
    auto res = parse_csv<TradeRecord>(in, "unix_ts,price_usd,volume_btc", "trades",
                                      [](const auto& f, std::vector<TradeRecord>& out) -> std::string {
                                          TradeRecord r;
                                          if (auto e = parse_time(f[0], r.time); !e.empty()) return e;
                                          const auto price = csv::parse_double(f[1]);
                                          const auto vol = csv::parse_double(f[2]);
                                          if (!price || !vol) return "Malformed";
                                          if (!std::isfinite(*price) || !std::isfinite(*vol)) return "NonFinite";
                                          if (!(*price > 0.0)) return "NonPositivePrice";
                                          if (*vol < 0.0) return "NegativeVolume";
                                          r.price_usd = *price;
                                          r.volume_btc = *vol;
                                          out.push_back(r);
                                          return {};
                                      });
    sort_by_time(res.records);
    return res;
}

ParseResult<ChainRecord> parse_chain(std::istream& in) {
    auto res = parse_csv<ChainRecord>(
        in, "unix_ts,tx_volume_btc,tx_count,unique_addresses,avg_block_time_minutes", "chain",
        [](const auto& f, std::vector<ChainRecord>& out) -> std::string {
            ChainRecord r;
            if (auto e = parse_time(f[0], r.time); !e.empty()) return e;
            const auto vol = csv::parse_double(f[1]);
            const auto count = csv::parse_int(f[2]);
            const auto addr = csv::parse_int(f[3]);
            const auto block = csv::parse_double(f[4]);
            if (!vol || !count || !addr || !block) return "Malformed";
            if (!std::isfinite(*vol) || !std::isfinite(*block)) return "NonFinite";
            if (*vol < 0.0) return "NegativeVolume";
            if (*count < 0 || *addr < 0) return "NegativeCount";
            if (!(*block > 0.0)) return "NonPositiveBlockTime";
            r.tx_volume_btc = *vol;
            r.tx_count = *count;
            r.unique_addresses = *addr;
            r.avg_block_time_minutes = *block;
            out.push_back(r);
            return {};
        });
    sort_by_time(res.records);
    return res;
}

ParseResult<DailyRecord> parse_daily(std::istream& in) {
    std::optional<double> last_stock;
    auto res = parse_csv<DailyRecord>(
        in, "date,total_btc,tips_rate", "daily", [&](const auto& f, std::vector<DailyRecord>& out) -> std::string {
            DailyRecord r;
            const auto day = parse_iso_date(f[0]);
            if (!day) return "BadDate";
            r.day = *day;
            if (!csv::is_missing_marker(f[1])) {
                const auto v = csv::parse_double(f[1]);
                if (!v || !std::isfinite(*v)) return "Malformed";
                if (!(*v > 0.0)) return "NonPositiveStock";
                if (last_stock && *v < *last_stock) return "NonMonotoneStock";
                r.total_btc = *v;
            }
            if (!csv::is_missing_marker(f[2])) {
                const auto v = csv::parse_double(f[2]);
                if (!v || !std::isfinite(*v)) return "Malformed";
                r.tips_rate = *v;
            }
            if (!r.total_btc && !r.tips_rate) return "NoValues";
            if (r.total_btc) last_stock = r.total_btc;
            out.push_back(r);
            return {};
        });
    std::stable_sort(res.records.begin(), res.records.end(),
                     [](const DailyRecord& a, const DailyRecord& b) { return a.day < b.day; });
    return res;
}

std::optional<std::int64_t> parse_iso_date(std::string_view text) {
    using namespace std::chrono;
    text = csv::trim(text);
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    const auto y = csv::parse_int(text.substr(0, 4));
    const auto m = csv::parse_int(text.substr(5, 2));
    const auto d = csv::parse_int(text.substr(8, 2));
    if (!y || !m || !d) return std::nullopt;
    const year_month_day ymd{year{static_cast<int>(*y)}, month{static_cast<unsigned>(*m)},
                             day{static_cast<unsigned>(*d)}};
    if (!ymd.ok()) return std::nullopt;
    return sys_days{ymd}.time_since_epoch().count();
}

std::string format_iso_date(std::int64_t d) {
    using namespace std::chrono;
    const year_month_day ymd{sys_days{days{d}}};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()));
    return buf;
}

// ---------------------------------------------------------------------------
// coin stock

double RewardSchedule::reward_at_height(double height) const {
    if (initial_reward <= 0.0 || halving_interval <= 0) return 0.0;
    const double era = std::floor(height / static_cast<double>(halving_interval));
    if (era >= 64.0) return 0.0;
    return initial_reward * std::ldexp(1.0, -static_cast<int>(era));
}

double RewardSchedule::height_for_stock(double stock) const {
    if (initial_reward <= 0.0 || halving_interval <= 0) return 0.0;
    const double interval = static_cast<double>(halving_interval);
    double issued = 0.0;
    for (int era = 0; era < 64; ++era) {
        const double reward = initial_reward * std::ldexp(1.0, -era);
        const double era_total = reward * interval;
        if (stock < issued + era_total) return era * interval + (stock - issued) / reward;
        issued += era_total;
    }
    return 64.0 * interval;
}

HourlySeries total_stock_hourly(std::span<const DailyRecord> daily, const HourlySeries& block_time,
                                const RewardSchedule& schedule) {
    if (block_time.empty()) fail(Errc::EmptyInput, "empty block-time series");
    std::vector<std::pair<std::int64_t, double>> anchors;
    for (const auto& d : daily) {
        if (d.total_btc) anchors.emplace_back(d.day, *d.total_btc);
    }
    std::stable_sort(anchors.begin(), anchors.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 0; i < block_time.size(); ++i) {
        if (!block_time.is_missing(i) && !(block_time.values()[i] > 0.0)) {
            fail(Errc::NonPositiveBlockTime, "hour index " + std::to_string(i));
        }
    }

    const TimePoint start = block_time.start_hour();
    const std::int64_t first_day = start.epoch_seconds / kSecondsPerDay;
    const auto anchor_for = [&](std::int64_t day) -> std::optional<double> {
        const auto it = std::lower_bound(anchors.begin(), anchors.end(), day,
                                         [](const auto& a, std::int64_t d) { return a.first < d; });
        if (it == anchors.end() || it->first != day) return std::nullopt;
        return it->second;
    };
    const auto first_anchor = anchor_for(first_day);
    if (!first_anchor) fail(Errc::MissingAnchor, format_iso_date(first_day));

    double stock = *first_anchor;
    double height = schedule.height_for_stock(stock);
    double last_block_time = kNaN;
    for (std::size_t i = 0; i < block_time.size(); ++i) {
        if (!block_time.is_missing(i)) {
            last_block_time = block_time.values()[i];
            break;
        }
    }

    // Advances the stock by one hour, minute by minute, splitting a minute's
    // blocks across a halving boundary when one falls inside it.
    auto advance_hour = [&](double minutes_per_block) {
        const double interval = static_cast<double>(schedule.halving_interval);
        for (int minute = 0; minute < 60; ++minute) {
            double blocks = 1.0 / minutes_per_block;
            while (blocks > 0.0) {
                const double reward = schedule.reward_at_height(height);
                if (reward <= 0.0) return;
                const double next_era = (std::floor(height / interval) + 1.0) * interval;
                const double take = std::min(blocks, next_era - height);
                stock += take * reward;
                height += take;
                blocks -= take;
                if (take <= 0.0) break;
            }
        }
    };

    // hours of the first day that precede the grid
    const std::int64_t lead_hours = (start.epoch_seconds - first_day * kSecondsPerDay) / kSecondsPerHour;
    if (std::isfinite(last_block_time)) {
        for (std::int64_t h = 0; h < lead_hours; ++h) advance_hour(last_block_time);
    }

    std::vector<double> values(block_time.size(), kNaN);
    std::vector<PointFlag> flags(block_time.size(), PointFlag::missing);
    for (std::size_t i = 0; i < block_time.size(); ++i) {
        const TimePoint t = block_time.time_at(i);
        if (i > 0 && t.epoch_seconds % kSecondsPerDay == 0) {
            if (const auto a = anchor_for(t.epoch_seconds / kSecondsPerDay)) {
                if (*a > stock) {
                    stock = *a;
                    height = schedule.height_for_stock(stock);
                }
            }
        }
        if (block_time.is_missing(i)) continue;
        advance_hour(block_time.values()[i]);
        values[i] = stock;
        flags[i] = PointFlag::observed;
    }
    return {"total_btc", start, std::move(values), std::move(flags)};
}

// ---------------------------------------------------------------------------
// velocity and daily alignment

const char* velocity_name(VelocityVariant v) noexcept { return v == VelocityVariant::v1 ? "v1" : "v2"; }

std::optional<VelocityVariant> parse_velocity(std::string_view text) noexcept {
    text = csv::trim(text);
    if (text == "v1") return VelocityVariant::v1;
    if (text == "v2") return VelocityVariant::v2;
    return std::nullopt;
}

HourlySeries velocity(const HourlySeries& tx_volume, const HourlySeries& stock, VelocityVariant variant) {
    if (tx_volume.start_hour() != stock.start_hour() || tx_volume.size() != stock.size()) {
        fail(Errc::GridMismatch, "transaction volume and stock are on different grids");
    }
    const std::size_t n = stock.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (!stock.is_missing(i) && !(stock.values()[i] > 0.0)) {
            fail(Errc::NonPositiveStock, "hour index " + std::to_string(i));
        }
    }

    std::vector<double> base(n, kNaN);
    if (variant == VelocityVariant::v1) {
        for (std::size_t i = 0; i < n; ++i) base[i] = stock.values()[i];
    } else {
        // Trailing mean over present points of the window; sums of offsets from
        // a reference keep a constant stock exactly constant.
        double ref = kNaN;
        for (std::size_t i = 0; i < n && std::isnan(ref); ++i) {
            if (!stock.is_missing(i)) ref = stock.values()[i];
        }
        std::vector<long double> csum(n + 1, 0.0L);
        std::vector<std::size_t> ccount(n + 1, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const bool present = !stock.is_missing(i);
            csum[i + 1] = csum[i] + (present ? static_cast<long double>(stock.values()[i] - ref) : 0.0L);
            ccount[i + 1] = ccount[i] + (present ? 1 : 0);
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (stock.is_missing(i)) continue;
            const std::size_t lo = i + 1 >= kVelocityWindowHours ? i + 1 - kVelocityWindowHours : 0;
            const auto cnt = ccount[i + 1] - ccount[lo];
            base[i] = ref + static_cast<double>((csum[i + 1] - csum[lo]) / static_cast<long double>(cnt));
        }
    }

    std::vector<double> values(n, kNaN);
    std::vector<PointFlag> flags(n, PointFlag::missing);
    for (std::size_t i = 0; i < n; ++i) {
        if (tx_volume.is_missing(i) || stock.is_missing(i)) continue;
        values[i] = tx_volume.values()[i] / base[i];
        flags[i] = tx_volume.flags()[i] == PointFlag::forward_filled ? PointFlag::forward_filled : PointFlag::observed;
    }
    return {variant == VelocityVariant::v1 ? "velocity" : "velocity2", stock.start_hour(), std::move(values),
            std::move(flags)};
}

HourlySeries forward_fill_daily(std::span<const DailyRecord> daily, DailyField field, TimePoint start,
                                std::size_t length) {
    if (!start.is_hour_aligned()) fail(Errc::InvalidArgument, "grid start not hour aligned");
    std::vector<std::pair<std::int64_t, double>> obs;
    for (const auto& d : daily) {
        const auto& v = field == DailyField::total_btc ? d.total_btc : d.tips_rate;
        if (v) obs.emplace_back(d.day, *v);
    }
    std::stable_sort(obs.begin(), obs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    const std::int64_t first_day = start.epoch_seconds / kSecondsPerDay;
    if (obs.empty() || obs.front().first > first_day) {
        fail(Errc::NoAnchorBeforeWindow, "no daily value on or before " + format_iso_date(first_day));
    }

    std::vector<double> values(length);
    std::vector<PointFlag> flags(length);
    std::size_t j = 0;
    for (std::size_t i = 0; i < length; ++i) {
        const std::int64_t day = start.plus_hours(static_cast<std::int64_t>(i)).epoch_seconds / kSecondsPerDay;
        while (j + 1 < obs.size() && obs[j + 1].first <= day) ++j;
        values[i] = obs[j].second;
        flags[i] = obs[j].first == day ? PointFlag::observed : PointFlag::forward_filled;
    }
    return {field == DailyField::total_btc ? "total_btc" : "tips_rate", start, std::move(values), std::move(flags)};
}

// ---------------------------------------------------------------------------
// panel assembly

std::size_t PanelRecipe::hours() const {
    if (!start.is_hour_aligned() || !end.is_hour_aligned()) fail(Errc::InvalidConfig, "window edges must be whole hours");
    if (!(start < end)) fail(Errc::InvalidConfig, "window start must precede end");
    return static_cast<std::size_t>((end.epoch_seconds - start.epoch_seconds) / kSecondsPerHour);
}

const std::vector<std::string>& panel_column_names() {
    static const std::vector<std::string> names = {"r",          "logvolume",  "logno",    "logvelocity",
                                                   "logvelocity2", "logtot_btc", "logr_rate"};
    return names;
}

PanelBundle assemble_panel(const ParseResult<TradeRecord>& trades, const ParseResult<ChainRecord>& chain,
                           const ParseResult<DailyRecord>& daily, const PanelRecipe& recipe) {
    const std::size_t len = recipe.hours();
    if (trades.records.empty() || chain.records.empty()) fail(Errc::NoValidRows, "empty source");
    if (!covers(trades.records.front().time, trades.records.back().time, recipe.start, recipe.end) ||
        !covers(chain.records.front().time, chain.records.back().time, recipe.start, recipe.end)) {
        fail(Errc::WindowUncovered, "trade and chain sources must overlap the window");
    }

    std::vector<Tick> price_ticks, volume_ticks;
    for (const auto& t : trades.records) {
        price_ticks.push_back({t.time, t.price_usd});
        volume_ticks.push_back({t.time, t.volume_btc});
    }
    std::vector<Tick> txvol_ticks, addr_ticks, block_ticks;
    for (const auto& c : chain.records) {
        txvol_ticks.push_back({c.time, c.tx_volume_btc});
        addr_ticks.push_back({c.time, static_cast<double>(c.unique_addresses)});
        block_ticks.push_back({c.time, c.avg_block_time_minutes});
    }

    const auto on_grid = [&](const HourlySeries& s, const char* name) {
        return align(s, recipe.start, len).renamed(name);
    };
    const HourlySeries price = on_grid(resample_last(price_ticks, recipe.fill), "price_usd");
    const HourlySeries volume = on_grid(resample_sum(volume_ticks, recipe.fill), "volume");
    const HourlySeries tx_volume = on_grid(resample_sum(txvol_ticks, recipe.fill), "tx_volume");
    const HourlySeries addresses = on_grid(resample_sum(addr_ticks, recipe.fill), "unique_addresses");
    const HourlySeries block_time = on_grid(resample_last(block_ticks, recipe.fill), "block_time");

    const HourlySeries stock = total_stock_hourly(daily.records, block_time, recipe.reward);
    const HourlySeries v1 = velocity(tx_volume, stock, VelocityVariant::v1);
    const HourlySeries v2 = velocity(tx_volume, stock, VelocityVariant::v2);
    const HourlySeries rate = forward_fill_daily(daily.records, DailyField::tips_rate, recipe.start, len);
    std::vector<double> shifted(rate.values().begin(), rate.values().end());
    for (auto& v : shifted) v += recipe.rate_shift;
    const HourlySeries rate_shifted(rate.name(), rate.start_hour(), std::move(shifted),
                                    std::vector<PointFlag>(rate.flags().begin(), rate.flags().end()));

    const HourlySeries returns = align(log_returns(price), recipe.start, len).renamed("r");

    std::vector<HourlySeries> cols;
    cols.push_back(returns);
    cols.push_back(safe_log(volume, recipe.log_floor).renamed("logvolume"));
    cols.push_back(safe_log(addresses, recipe.log_floor).renamed("logno"));
    cols.push_back(safe_log(v1, recipe.log_floor).renamed("logvelocity"));
    cols.push_back(safe_log(v2, recipe.log_floor).renamed("logvelocity2"));
    cols.push_back(safe_log(stock, recipe.log_floor).renamed("logtot_btc"));
    cols.push_back(safe_log(rate_shifted, recipe.log_floor).renamed("logr_rate"));

    auto mask = lagged_mask(cols, len, 1);
    PanelBundle out{HourlyPanel(HourGrid{recipe.start, len}, cols, std::move(mask)), price, {}};

    auto& rep = out.report;
    rep.trade_rows = trades.records.size();
    rep.chain_rows = chain.records.size();
    rep.daily_rows = daily.records.size();
    rep.trade_rejects = trades.rejects;
    rep.chain_rejects = chain.rejects;
    rep.daily_rejects = daily.rejects;
    rep.columns.push_back(summarize(price));
    for (const auto& c : out.panel.columns()) rep.columns.push_back(summarize(c));
    rep.velocity2_warmup_hours = std::min(len, kVelocityWindowHours - 1);
    rep.mask_count = out.panel.mask_count();
    rep.log_floor = recipe.log_floor;
    rep.rate_shift = recipe.rate_shift;
    return out;
}

PanelBundle build_panel(const PanelRecipe& recipe) {
    (void)recipe.hours();
    auto trades_in = open_source(recipe.trades_path, "trades");
    auto chain_in = open_source(recipe.chain_path, "chain");
    auto daily_in = open_source(recipe.daily_path, "daily");
    const auto trades = parse_trades(trades_in);
    const auto chain = parse_chain(chain_in);
    const auto daily = parse_daily(daily_in);
    return assemble_panel(trades, chain, daily, recipe);
}

void write_build_report(const BuildReport& r, std::ostream& out) {
    out << "source rows: trades=" << r.trade_rows << " chain=" << r.chain_rows << " daily=" << r.daily_rows << '\n';
    out << "rejected rows: trades=" << r.trade_rejects.size() << " chain=" << r.chain_rejects.size()
        << " daily=" << r.daily_rejects.size() << '\n';
    auto list = [&](const char* what, const std::vector<RejectedRow>& rows) {
        for (const auto& x : rows) out << "  " << what << " line " << x.line << ": " << x.reason << '\n';
    };
    list("trades", r.trade_rejects);
    list("chain", r.chain_rejects);
    list("daily", r.daily_rejects);
    out << "log floor: " << csv::format_full(r.log_floor) << '\n';
    out << "rate shift (percentage points): " << csv::format_full(r.rate_shift) << '\n';
    out << "velocity2 expanding-mean warm-up hours: " << r.velocity2_warmup_hours << '\n';
    out << "estimation mask hours: " << r.mask_count << '\n';
    out << "column,observed,forward_filled,clamped,missing\n";
    for (const auto& c : r.columns) {
        out << c.name << ',' << c.observed << ',' << c.forward_filled << ',' << c.clamped << ',' << c.missing << '\n';
    }
}

}  // namespace btcg
