#include "btcgarch/series.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include "btcgarch/csv.hpp"
#include "btcgarch/error.hpp"

namespace btcg {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_sorted(std::span<const Tick> ticks) {
    if (ticks.empty()) fail(Errc::EmptyInput, "no ticks to resample");
    for (std::size_t i = 1; i < ticks.size(); ++i) {
        if (ticks[i].time < ticks[i - 1].time) {
            fail(Errc::InvalidArgument, "ticks not sorted at index " + std::to_string(i));
        }
    }
    if (ticks.front().time.epoch_seconds < 0) fail(Errc::InvalidArgument, "negative timestamp");
}

std::size_t bucket_index(TimePoint first_bucket, TimePoint t) {
    return static_cast<std::size_t>((t.hour_bucket().epoch_seconds - first_bucket.epoch_seconds) /
                                    kSecondsPerHour);
}

// Marks runs of unfilled buckets longer than the policy as missing; shorter
// runs are handed to `fill(i, previous_filled_index)`.
template <typename Fill>
void apply_gap_policy(std::vector<std::uint8_t>& seen, std::vector<double>& values,
                      std::vector<PointFlag>& flags, const FillPolicy& policy, Fill fill) {
    std::size_t i = 0;
    const std::size_t n = seen.size();
    while (i < n) {
        if (seen[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && !seen[j]) ++j;
        const std::size_t run = j - i;
        for (std::size_t k = i; k < j; ++k) {
            if (run > policy.max_fill_hours) {
                values[k] = kNaN;
                flags[k] = PointFlag::missing;
            } else {
                fill(k, i - 1);
            }
        }
        i = j;
    }
}

}  // namespace

const char* flag_name(PointFlag f) noexcept {
    switch (f) {
        case PointFlag::observed: return "observed";
        case PointFlag::forward_filled: return "forward_filled";
        case PointFlag::clamped: return "clamped";
        case PointFlag::missing: return "missing";
    }
    return "unknown";
}

HourlySeries::HourlySeries(std::string name, TimePoint start_hour, std::vector<double> values,
                           std::vector<PointFlag> flags)
    : name_(std::move(name)), start_(start_hour), values_(std::move(values)), flags_(std::move(flags)) {
    if (values_.size() != flags_.size()) {
        fail(Errc::InvariantViolation, "series '" + name_ + "': values/flags length mismatch");
    }
    if (start_.epoch_seconds < 0 || !start_.is_hour_aligned()) {
        fail(Errc::InvariantViolation, "series '" + name_ + "': start is not a nonnegative hour");
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (flags_[i] == PointFlag::missing) values_[i] = kNaN;
    }
}

HourlySeries::HourlySeries(std::string name, TimePoint start_hour, std::vector<double> values)
    : HourlySeries(std::move(name), start_hour, values,
                   std::vector<PointFlag>(values.size(), PointFlag::observed)) {}

std::size_t HourlySeries::count(PointFlag f) const noexcept {
    return static_cast<std::size_t>(std::count(flags_.begin(), flags_.end(), f));
}

HourlySeries HourlySeries::renamed(std::string name) const {
    HourlySeries out = *this;
    out.name_ = std::move(name);
    return out;
}

bool operator==(const HourlySeries& a, const HourlySeries& b) {
    if (a.name_ != b.name_ || a.start_ != b.start_ || a.flags_ != b.flags_) return false;
    for (std::size_t i = 0; i < a.values_.size(); ++i) {
        const double x = a.values_[i];
        const double y = b.values_[i];
        if (!(x == y || (std::isnan(x) && std::isnan(y)))) return false;
    }
    return true;
}

HourlySeries log_returns(const HourlySeries& prices) {
    if (prices.empty()) fail(Errc::EmptyInput, "no prices");
    const auto v = prices.values();
    const auto f = prices.flags();
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (f[i] != PointFlag::missing && !(v[i] > 0.0)) {
            fail(Errc::NonPositivePrice, "index " + std::to_string(i));
        }
    }
    const std::size_t n = v.size() - 1;
    std::vector<double> out(n);
    std::vector<PointFlag> flags(n, PointFlag::observed);
    for (std::size_t t = 0; t < n; ++t) {
        const PointFlag a = f[t];
        const PointFlag b = f[t + 1];
        if (a == PointFlag::missing || b == PointFlag::missing) {
            flags[t] = PointFlag::missing;
            out[t] = kNaN;
            continue;
        }
        out[t] = std::log(v[t + 1]) - std::log(v[t]);
        if (a == PointFlag::forward_filled || b == PointFlag::forward_filled) {
            flags[t] = PointFlag::forward_filled;
        }
    }
    return {prices.name(), prices.start_hour().plus_hours(1), std::move(out), std::move(flags)};
}

HourlySeries resample_last(std::span<const Tick> ticks, const FillPolicy& policy) {
    check_sorted(ticks);
    const TimePoint first = ticks.front().time.hour_bucket();
    const std::size_t n = bucket_index(first, ticks.back().time) + 1;
    std::vector<double> values(n, kNaN);
    std::vector<PointFlag> flags(n, PointFlag::observed);
    std::vector<std::uint8_t> seen(n, 0);
    for (const auto& t : ticks) {
        const auto i = bucket_index(first, t.time);
        values[i] = t.value;
        seen[i] = 1;
    }
    apply_gap_policy(seen, values, flags, policy, [&](std::size_t k, std::size_t prev) {
        values[k] = values[prev];
        flags[k] = PointFlag::forward_filled;
    });
    return {"", first, std::move(values), std::move(flags)};
}

HourlySeries resample_sum(std::span<const Tick> ticks, const FillPolicy& policy) {
    check_sorted(ticks);
    const TimePoint first = ticks.front().time.hour_bucket();
    const std::size_t n = bucket_index(first, ticks.back().time) + 1;
    std::vector<double> values(n, 0.0);
    std::vector<PointFlag> flags(n, PointFlag::observed);
    std::vector<std::uint8_t> seen(n, 0);
    for (const auto& t : ticks) {
        if (!std::isfinite(t.value)) fail(Errc::InvalidArgument, "non-finite tick value");
        const auto i = bucket_index(first, t.time);
        values[i] += t.value;
        seen[i] = 1;
    }
    apply_gap_policy(seen, values, flags, policy, [&](std::size_t k, std::size_t) {
        values[k] = 0.0;
        flags[k] = PointFlag::observed;
    });
    return {"", first, std::move(values), std::move(flags)};
}

HourlySeries safe_log(const HourlySeries& series, double floor) {
    if (!(floor > 0.0)) fail(Errc::InvalidArgument, "log floor must be positive");
    const auto v = series.values();
    const auto f = series.flags();
    std::vector<double> out(v.size());
    std::vector<PointFlag> flags(f.begin(), f.end());
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (f[i] == PointFlag::missing || std::isnan(v[i])) {
            out[i] = kNaN;
            flags[i] = PointFlag::missing;
        } else if (v[i] < floor) {
            out[i] = std::log(floor);
            flags[i] = PointFlag::clamped;
        } else {
            out[i] = std::log(v[i]);
        }
    }
    return {series.name(), series.start_hour(), std::move(out), std::move(flags)};
}

HourlySeries lag(const HourlySeries& series, std::size_t k) {
    if (k == 0) fail(Errc::InvalidArgument, "lag must be positive");
    if (k >= series.size()) {
        fail(Errc::LagTooLarge, "lag " + std::to_string(k) + " >= length " + std::to_string(series.size()));
    }
    const std::size_t n = series.size();
    std::vector<double> out(n, kNaN);
    std::vector<PointFlag> flags(n, PointFlag::missing);
    for (std::size_t t = k; t < n; ++t) {
        out[t] = series.values()[t - k];
        flags[t] = series.flags()[t - k];
    }
    return {series.name(), series.start_hour(), std::move(out), std::move(flags)};
}

HourlySeries align(const HourlySeries& series, TimePoint start, std::size_t length) {
    if (!start.is_hour_aligned()) fail(Errc::InvalidArgument, "grid start not hour aligned");
    std::vector<double> out(length, kNaN);
    std::vector<PointFlag> flags(length, PointFlag::missing);
    const std::int64_t offset =
        (start.epoch_seconds - series.start_hour().epoch_seconds) / kSecondsPerHour;
    for (std::size_t i = 0; i < length; ++i) {
        const std::int64_t src = offset + static_cast<std::int64_t>(i);
        if (src < 0 || src >= static_cast<std::int64_t>(series.size())) continue;
        out[i] = series.values()[static_cast<std::size_t>(src)];
        flags[i] = series.flags()[static_cast<std::size_t>(src)];
    }
    return {series.name(), start, std::move(out), std::move(flags)};
}

HourlyPanel::HourlyPanel(HourGrid grid, std::vector<HourlySeries> columns,
                         std::vector<std::uint8_t> base_mask)
    : grid_(grid), columns_(std::move(columns)) {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        const auto& c = columns_[i];
        if (c.start_hour() != grid_.start || c.size() != grid_.length) {
            fail(Errc::GridMismatch, "column '" + c.name() + "' is not on the panel grid");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (columns_[j].name() == c.name()) fail(Errc::InvalidArgument, "duplicate column '" + c.name() + "'");
        }
    }
    if (base_mask.empty()) base_mask.assign(grid_.length, 1);
    if (base_mask.size() != grid_.length) fail(Errc::GridMismatch, "mask length does not match grid");
    mask_ = std::move(base_mask);
    for (std::size_t t = 0; t < grid_.length; ++t) {
        for (const auto& c : columns_) {
            if (c.flags()[t] == PointFlag::missing) {
                mask_[t] = 0;
                break;
            }
        }
        mask_[t] = mask_[t] ? 1 : 0;
    }
}

bool HourlyPanel::has_column(const std::string& name) const noexcept {
    return std::any_of(columns_.begin(), columns_.end(), [&](const auto& c) { return c.name() == name; });
}

const HourlySeries& HourlyPanel::column(const std::string& name) const {
    for (const auto& c : columns_) {
        if (c.name() == name) return c;
    }
    fail(Errc::UnknownColumn, "'" + name + "'");
}

std::vector<std::string> HourlyPanel::column_names() const {
    std::vector<std::string> out;
    out.reserve(columns_.size());
    for (const auto& c : columns_) out.push_back(c.name());
    return out;
}

std::size_t HourlyPanel::mask_count() const noexcept {
    return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
}

std::vector<std::uint8_t> lagged_mask(const std::vector<HourlySeries>& columns, std::size_t length,
                                      std::size_t max_lag) {
    std::vector<std::uint8_t> present(length, 1);
    for (const auto& c : columns) {
        for (std::size_t t = 0; t < length && t < c.size(); ++t) {
            if (c.flags()[t] == PointFlag::missing) present[t] = 0;
        }
    }
    std::vector<std::uint8_t> mask(length, 0);
    for (std::size_t t = max_lag; t < length; ++t) {
        bool ok = true;
        for (std::size_t k = 0; k <= max_lag && ok; ++k) ok = present[t - k] != 0;
        mask[t] = ok ? 1 : 0;
    }
    return mask;
}

void write_panel_csv(const HourlyPanel& panel, std::ostream& out) {
    out << "hour_ts";
    for (const auto& c : panel.columns()) out << ',' << c.name();
    out << ",mask\n";
    for (std::size_t t = 0; t < panel.size(); ++t) {
        out << panel.grid().time_at(t).epoch_seconds;
        for (const auto& c : panel.columns()) {
            out << ',';
            if (c.flags()[t] != PointFlag::missing) out << csv::format_full(c.values()[t]);
        }
        out << ',' << static_cast<int>(panel.mask()[t]) << '\n';
    }
}

HourlyPanel read_panel_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) fail(Errc::BadHeader, "empty panel file");
    const auto header = csv::split(csv::chomp(line));
    if (header.size() < 2 || header.front() != "hour_ts" || header.back() != "mask") {
        fail(Errc::BadHeader, "panel header must be hour_ts,<column>...,mask");
    }
    const std::size_t ncol = header.size() - 2;
    std::vector<std::string> names;
    for (std::size_t j = 0; j < ncol; ++j) names.emplace_back(header[j + 1]);

    std::vector<std::vector<double>> values(ncol);
    std::vector<std::vector<PointFlag>> flags(ncol);
    std::vector<std::uint8_t> mask;
    std::int64_t first_ts = -1;
    std::int64_t expected = -1;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        const auto row = csv::chomp(line);
        if (csv::trim(row).empty()) continue;
        const auto fields = csv::split(row);
        if (fields.size() != header.size()) {
            fail(Errc::InvalidArgument, "panel line " + std::to_string(lineno) + ": wrong field count");
        }
        const auto ts = csv::parse_int(fields[0]);
        if (!ts) fail(Errc::InvalidArgument, "panel line " + std::to_string(lineno) + ": bad hour_ts");
        if (first_ts < 0) {
            first_ts = *ts;
            expected = *ts;
        }
        if (*ts != expected) {
            fail(Errc::GridMismatch, "panel line " + std::to_string(lineno) + ": grid not dense hourly");
        }
        expected += kSecondsPerHour;
        for (std::size_t j = 0; j < ncol; ++j) {
            const auto f = fields[j + 1];
            if (csv::is_missing_marker(f)) {
                values[j].push_back(kNaN);
                flags[j].push_back(PointFlag::missing);
            } else {
                const auto v = csv::parse_double(f);
                if (!v) fail(Errc::InvalidArgument, "panel line " + std::to_string(lineno) + ": bad value");
                values[j].push_back(*v);
                flags[j].push_back(PointFlag::observed);
            }
        }
        mask.push_back(fields.back() == "1" ? 1 : 0);
    }
    if (first_ts < 0) fail(Errc::NoValidRows, "panel has no rows");
    const HourGrid grid{TimePoint{first_ts}, mask.size()};
    std::vector<HourlySeries> cols;
    for (std::size_t j = 0; j < ncol; ++j) {
        cols.emplace_back(names[j], grid.start, std::move(values[j]), std::move(flags[j]));
    }
    return {grid, std::move(cols), std::move(mask)};
}

}  // namespace btcg
