#include "btcgarch/simulation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <thread>

#include "btcgarch/csv.hpp"
#include "btcgarch/error.hpp"
#include "btcgarch/random.hpp"
#include "btcgarch/stats.hpp"

namespace btcg {

namespace {

constexpr double kHoursPerYear = 8760.0;

double stationary_sd(double persistence, double scale) {
    return scale / std::sqrt(1.0 - persistence * persistence);
}

// 1970-01-01 was a Thursday.
bool is_weekend(std::int64_t day) {
    const auto dow = (day + 4) % 7;  // 0 = Sunday
    return dow == 0 || dow == 6;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::IoFailure, "cannot write '" + path.string() + "'");
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// GARCH-X series

void SimConfig::validate() const {
    spec.validate();
    if (n == 0) fail(Errc::InvalidConfig, "simulation length must be positive");
    if (!truth.shape_matches(spec)) fail(Errc::InvalidConfig, "true parameters do not match the spec");
    // The simulator accepts the closed set (zero ARCH or GARCH terms allowed);
    // only estimation needs the open one.
    const bool nonnegative = std::all_of(truth.alpha.begin(), truth.alpha.end(), [](double a) { return a >= 0.0; }) &&
                             std::all_of(truth.beta.begin(), truth.beta.end(), [](double b) { return b >= 0.0; });
    if (!(truth.omega > 0.0) || !nonnegative || !(truth.persistence() < 1.0) ||
        (spec.include_ar1 && !(std::fabs(truth.beta1) < 1.0))) {
        fail(Errc::InvalidConfig, "true parameters are not admissible");
    }
    if (!(innovation_scale >= 0.0)) fail(Errc::InvalidConfig, "innovation scale must be nonnegative");
    auto known = [&](const std::string& name) {
        return std::any_of(regressors.begin(), regressors.end(), [&](const auto& r) { return r.name == name; });
    };
    for (const auto* list : {&spec.mean_regressors, &spec.variance_regressors}) {
        for (const auto& name : *list) {
            if (!known(name)) fail(Errc::InvalidConfig, "no regressor process for '" + name + "'");
        }
    }
    for (const auto& r : regressors) {
        if (!(std::fabs(r.persistence) < 1.0)) fail(Errc::InvalidConfig, "regressor persistence must be in (-1, 1)");
        if (!(r.scale >= 0.0)) fail(Errc::InvalidConfig, "regressor scale must be nonnegative");
    }
}

SimulatedSeries simulate_garch(const SimConfig& cfg) {
    cfg.validate();
    const GarchSpec& spec = cfg.spec;
    const ParamVector& par = cfg.truth;
    const std::size_t total = cfg.burn_in + cfg.n;
    const std::size_t nr = cfg.regressors.size();
    const std::size_t m = spec.mean_regressors.size();
    const std::size_t v = spec.variance_regressors.size();
    auto index_of = [&](const std::string& name) {
        return static_cast<std::size_t>(
            std::find_if(cfg.regressors.begin(), cfg.regressors.end(), [&](const auto& r) { return r.name == name; }) -
            cfg.regressors.begin());
    };
    std::vector<std::size_t> mean_idx, var_idx;
    for (const auto& s : spec.mean_regressors) mean_idx.push_back(index_of(s));
    for (const auto& s : spec.variance_regressors) var_idx.push_back(index_of(s));

    Rng rng(cfg.seed);
    std::vector<std::vector<double>> paths(nr, std::vector<double>(total + 1));
    for (std::size_t j = 0; j < nr; ++j) {
        const auto& rp = cfg.regressors[j];
        paths[j][0] = rp.mean + stationary_sd(rp.persistence, rp.scale) * rng.normal();
    }

    const double init = par.omega / (1.0 - par.persistence());
    double r_prev = spec.include_ar1 ? par.beta0 / (1.0 - par.beta1) : par.beta0;

    SimulatedSeries out;
    out.presample_variance = init;
    out.start = cfg.start;
    auto& d = out.data;
    d.x.rows = cfg.n;
    d.x.cols = m;
    d.z.rows = cfg.n;
    d.z.cols = v;

    std::vector<double> e_hist(total), h_hist(total);
    std::vector<double> e2(spec.p), h(spec.q), z(v);
    for (std::size_t t = 0; t < total; ++t) {
        for (std::size_t i = 1; i <= spec.p; ++i) e2[i - 1] = t >= i ? e_hist[t - i] * e_hist[t - i] : init;
        for (std::size_t j = 1; j <= spec.q; ++j) h[j - 1] = t >= j ? h_hist[t - j] : init;
        for (std::size_t k = 0; k < v; ++k) z[k] = paths[var_idx[k]][t];
        bool clamped = false;
        const double s2 = variance_step(par, e2, h, z, clamped);
        const double e = std::sqrt(s2) * cfg.innovation_scale * rng.normal();
        double mu = par.beta0;
        if (spec.include_ar1) mu += par.beta1 * r_prev;
        for (std::size_t k = 0; k < m; ++k) mu += par.gamma[k] * paths[mean_idx[k]][t];
        const double r = mu + e;
        e_hist[t] = e;
        h_hist[t] = s2;

        if (t >= cfg.burn_in) {
            if (clamped) ++out.clamp_events;
            d.grid_index.push_back(t - cfg.burn_in + 1);
            d.r.push_back(r);
            d.r_lag.push_back(r_prev);
            for (std::size_t k = 0; k < m; ++k) d.x.data.push_back(paths[mean_idx[k]][t]);
            for (std::size_t k = 0; k < v; ++k) d.z.data.push_back(z[k]);
            out.residuals.push_back(e);
            out.sigma2.push_back(s2);
        }
        r_prev = r;
        for (std::size_t j = 0; j < nr; ++j) {
            const auto& rp = cfg.regressors[j];
            paths[j][t + 1] = rp.mean + rp.persistence * (paths[j][t] - rp.mean) + rp.scale * rng.normal();
        }
    }

    for (std::size_t j = 0; j < nr; ++j) {
        out.regressor_names.push_back(cfg.regressors[j].name);
        out.regressor_paths.emplace_back(paths[j].begin() + static_cast<std::ptrdiff_t>(cfg.burn_in), paths[j].end());
    }
    return out;
}

HourlyPanel SimulatedSeries::to_panel() const {
    const std::size_t len = data.size() + 1;
    std::vector<HourlySeries> cols;
    std::vector<double> r(len);
    r[0] = data.r_lag.empty() ? 0.0 : data.r_lag[0];
    std::copy(data.r.begin(), data.r.end(), r.begin() + 1);
    cols.emplace_back(kReturnColumn, start, std::move(r));
    for (std::size_t j = 0; j < regressor_names.size(); ++j) cols.emplace_back(regressor_names[j], start, regressor_paths[j]);
    auto mask = lagged_mask(cols, len, 1);
    return HourlyPanel(HourGrid{start, len}, std::move(cols), std::move(mask));
}

// ---------------------------------------------------------------------------
// price panel

double DemandModel::price(double k, double economy, double rate, double stock) const {
    if (!(stock > 0.0)) fail(Errc::NonPositiveStock, "coin stock must be positive");
    return (k * economy + liquidity(rate)) / stock;
}

void PriceSimConfig::validate() const {
    if (hours < 48) fail(Errc::InvalidConfig, "price simulation needs at least 48 hours");
    if (start.epoch_seconds < 0 || start.epoch_seconds % kSecondsPerDay != 0) {
        fail(Errc::InvalidConfig, "price simulation must start at a UTC midnight");
    }
    if (!(demand.liquidity_slope > 0.0)) fail(Errc::InvalidConfig, "liquidity must decrease with the rate");
    if (!(initial_stock > 0.0) || !(block_time_minutes > 0.0)) fail(Errc::InvalidConfig, "stock and block time must be positive");
    if (!(economy_level > 0.0) || !(velocity_level > 0.0)) fail(Errc::InvalidConfig, "economy and velocity must be positive");
    if (!(std::fabs(factor_persistence) < 1.0) || !(std::fabs(rate_persistence) < 1.0)) {
        fail(Errc::InvalidConfig, "factor persistence must be in (-1, 1)");
    }
    if (!(noise_sigma > 0.0)) fail(Errc::InvalidConfig, "noise sigma must be positive");
    if (!(arch > 0.0) || !(garch > 0.0) || !(arch + garch < 1.0)) {
        fail(Errc::InvalidConfig, "arch and garch must be positive with arch + garch < 1");
    }
    if (effects.columns.size() != effects.signs.size()) fail(Errc::InvalidConfig, "one sign per effect column");
    const auto& names = panel_column_names();
    for (const auto& c : effects.columns) {
        if (c == kReturnColumn || std::find(names.begin(), names.end(), c) == names.end()) {
            fail(Errc::InvalidConfig, "unknown effect column '" + c + "'");
        }
    }
}

PanelRecipe PriceSimConfig::recipe() const {
    PanelRecipe r;
    r.start = start;
    r.end = start.plus_hours(static_cast<std::int64_t>(hours));
    r.velocity_variant = velocity_variant;
    r.reward = reward;
    return r;
}

PriceFixture simulate_price_panel(const PriceSimConfig& cfg) {
    cfg.validate();
    const std::size_t n = cfg.hours;
    const std::int64_t first_day = cfg.start.epoch_seconds / kSecondsPerDay;
    const std::size_t days = (n + 23) / 24;
    Rng rng(cfg.seed);

    // latent factors
    std::vector<double> rate(days);
    rate[0] = cfg.rate_mean + stationary_sd(cfg.rate_persistence, cfg.rate_innovation) * rng.normal();
    for (std::size_t d = 1; d < days; ++d) {
        rate[d] = cfg.rate_mean + cfg.rate_persistence * (rate[d - 1] - cfg.rate_mean) + cfg.rate_innovation * rng.normal();
    }
    const double fsd = stationary_sd(cfg.factor_persistence, cfg.factor_innovation);
    std::vector<double> economy(n), vel(n), block(n);
    double g_dev = fsd * rng.normal();
    double v_dev = fsd * rng.normal();
    for (std::size_t t = 0; t < n; ++t) {
        if (t > 0) {
            g_dev = cfg.factor_persistence * g_dev + cfg.factor_innovation * rng.normal();
            v_dev = cfg.factor_persistence * v_dev + cfg.factor_innovation * rng.normal();
        }
        economy[t] = cfg.economy_level * std::exp(cfg.economy_drift * static_cast<double>(t) + g_dev);
        vel[t] = cfg.velocity_level * std::exp(v_dev);
        block[t] = cfg.block_time_minutes * std::exp(cfg.block_time_noise * rng.normal());
    }

    // Coin stock: propagate from the opening anchor, then publish each later
    // day's opening stock as that day's anchor.
    const HourlySeries block_series("block_time", cfg.start, block);
    const std::vector<DailyRecord> opening{{first_day, cfg.initial_stock, std::nullopt}};
    const HourlySeries stock = total_stock_hourly(opening, block_series, cfg.reward);

    PriceFixture fx;
    fx.daily.resize(days);
    for (std::size_t d = 0; d < days; ++d) {
        auto& rec = fx.daily[d];
        rec.day = first_day + static_cast<std::int64_t>(d);
        rec.total_btc = d == 0 ? cfg.initial_stock : stock.value(24 * d - 1);
        if (d == 0 || !is_weekend(rec.day)) rec.tips_rate = rate[d];
    }

    const double econ0 = cfg.economy_level;
    fx.chain.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        auto& c = fx.chain[t];
        c.time = cfg.start.plus_hours(static_cast<std::int64_t>(t));
        c.time.epoch_seconds += 1800;
        c.tx_volume_btc = vel[t] * stock.value(t) * std::exp(cfg.proxy_noise * rng.normal());
        c.tx_count = static_cast<std::int64_t>(std::llround(c.tx_volume_btc * 0.5));
        c.unique_addresses = static_cast<std::int64_t>(
            std::llround(cfg.address_level * economy[t] / econ0 * std::exp(cfg.proxy_noise * rng.normal())));
        c.avg_block_time_minutes = block[t];
    }
    std::vector<double> volume(n);
    for (std::size_t t = 0; t < n; ++t) {
        volume[t] = cfg.volume_level * economy[t] / econ0 * std::exp(cfg.proxy_noise * rng.normal());
    }

    // Trades with placeholder prices give the regressor columns exactly as
    // ingestion will compute them from the written files.
    constexpr std::array<std::int64_t, 3> kTickOffsets{600, 1800, 3000};
    constexpr std::array<double, 3> kTickShares{0.2, 0.3, 0.5};
    fx.trades.resize(3 * n);
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t j = 0; j < 3; ++j) {
            auto& tr = fx.trades[3 * t + j];
            tr.time = TimePoint{cfg.start.plus_hours(static_cast<std::int64_t>(t)).epoch_seconds + kTickOffsets[j]};
            tr.volume_btc = volume[t] * kTickShares[j];
            tr.price_usd = 1.0;
        }
    }
    const PanelRecipe recipe = cfg.recipe();
    const auto provisional = assemble_panel({fx.trades, {}}, {fx.chain, {}}, {fx.daily, {}}, recipe);
    const auto& panel = provisional.panel;

    // variance truth on the lagged panel regressors
    const std::size_t ne = cfg.effects.columns.size();
    fx.omega = cfg.noise_sigma * cfg.noise_sigma * (1.0 - cfg.arch - cfg.garch);
    std::vector<std::vector<double>> centered(ne);
    fx.delta_raw.resize(ne);
    fx.centers.resize(ne);
    fx.omega_raw = fx.omega;
    for (std::size_t j = 0; j < ne; ++j) {
        const auto& col = panel.column(cfg.effects.columns[j]);
        for (std::size_t t = 0; t < n; ++t) {
            if (col.is_missing(t)) fail(Errc::InvariantViolation, "simulated regressor has a missing hour");
        }
        const auto lagged = col.values().first(n - 1);
        const double mu = stats::mean(lagged);
        const double sd = std::sqrt(stats::variance(lagged));
        if (!(sd > 0.0)) fail(Errc::InvalidConfig, "effect column '" + cfg.effects.columns[j] + "' is constant");
        fx.centers[j] = mu;
        fx.delta_raw[j] = cfg.effects.signs[j] * cfg.effects.strength * fx.omega / sd;
        fx.omega_raw -= fx.delta_raw[j] * mu;
        centered[j].resize(n);
        for (std::size_t t = 0; t < n; ++t) centered[j][t] = col.value(t) - mu;
    }

    GarchSpec vspec;
    vspec.variance_regressors = cfg.effects.columns;
    ParamVector vpar = ParamVector::zeros(vspec);
    vpar.omega = fx.omega;
    vpar.alpha[0] = cfg.arch;
    vpar.beta[0] = cfg.garch;
    vpar.delta = fx.delta_raw;

    fx.fundamental.resize(n);
    fx.price.resize(n);
    fx.sigma2.assign(n, 0.0);
    const double init = cfg.noise_sigma * cfg.noise_sigma;
    double e_prev = 0.0, h_prev = init, u = 0.0;
    std::vector<double> z(ne);
    for (std::size_t t = 0; t < n; ++t) {
        const double k = 1.0 / (vel[t] * kHoursPerYear);
        fx.fundamental[t] = cfg.demand.price(k, economy[t], rate[t / 24], stock.value(t));
        if (!(fx.fundamental[t] > 0.0)) fail(Errc::InvalidConfig, "fundamental price is not positive");
        if (t > 0) {
            for (std::size_t j = 0; j < ne; ++j) z[j] = centered[j][t - 1];
            const double e2 = t == 1 ? init : e_prev * e_prev;
            bool clamped = false;
            const double s2 = variance_step(vpar, std::span<const double>(&e2, 1), std::span<const double>(&h_prev, 1),
                                            z, clamped);
            if (clamped) ++fx.clamp_events;
            const double e = std::sqrt(s2) * rng.normal();
            u += e;
            fx.sigma2[t] = s2;
            e_prev = e;
            h_prev = s2;
        }
        fx.price[t] = fx.fundamental[t] * std::exp(u);
    }

    for (std::size_t t = 0; t < n; ++t) {
        const double prev = t > 0 ? fx.price[t - 1] : fx.price[0];
        const double step = std::log(fx.price[t] / prev);
        fx.trades[3 * t].price_usd = prev * std::exp(step / 3.0);
        fx.trades[3 * t + 1].price_usd = prev * std::exp(2.0 * step / 3.0);
        fx.trades[3 * t + 2].price_usd = fx.price[t];
    }
    return fx;
}

// ---------------------------------------------------------------------------
// fixture files

void write_trades_csv(const std::vector<TradeRecord>& rows, std::ostream& out) {
    out << "unix_ts,price_usd,volume_btc\n";
    for (const auto& r : rows) {
        out << r.time.epoch_seconds << ',' << csv::format_full(r.price_usd) << ',' << csv::format_full(r.volume_btc)
            << '\n';
    }
}

void write_chain_csv(const std::vector<ChainRecord>& rows, std::ostream& out) {
    out << "unix_ts,tx_volume_btc,tx_count,unique_addresses,avg_block_time_minutes\n";
    for (const auto& r : rows) {
        out << r.time.epoch_seconds << ',' << csv::format_full(r.tx_volume_btc) << ',' << r.tx_count << ','
            << r.unique_addresses << ',' << csv::format_full(r.avg_block_time_minutes) << '\n';
    }
}

void write_daily_csv(const std::vector<DailyRecord>& rows, std::ostream& out) {
    out << "date,total_btc,tips_rate\n";
    for (const auto& r : rows) {
        out << format_iso_date(r.day) << ',' << (r.total_btc ? csv::format_full(*r.total_btc) : ".") << ','
            << (r.tips_rate ? csv::format_full(*r.tips_rate) : ".") << '\n';
    }
}

void write_fixture(const PriceFixture& fx, const PriceSimConfig& cfg, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(Errc::IoFailure, "cannot create directory '" + dir + "': " + ec.message());
    const fs::path root(dir);
    {
        auto out = open_out(root / "trades.csv");
        write_trades_csv(fx.trades, out);
    }
    {
        auto out = open_out(root / "chain.csv");
        write_chain_csv(fx.chain, out);
    }
    {
        auto out = open_out(root / "daily.csv");
        write_daily_csv(fx.daily, out);
    }
    auto out = open_out(root / "manifest.txt");
    const auto f = [](double v) { return csv::format_full(v); };
    out << "# synthetic source fixture\n";
    out << "rng_algorithm = " << kRngAlgorithm << '\n';
    out << "seed = " << cfg.seed << '\n';
    out << "hours = " << cfg.hours << '\n';
    out << "start = " << cfg.start.epoch_seconds << '\n';
    out << "price_model = P = (k G + L(i)) / B, k = 1 / (hourly velocity * 8760)\n";
    out << "liquidity_model = L(i) = " << f(cfg.demand.liquidity_level) << " - " << f(cfg.demand.liquidity_slope)
        << " * i\n";
    out << "price_signs = economy:+ stock:- velocity:- rate:-\n";
    out << "reward_initial = " << f(cfg.reward.initial_reward) << '\n';
    out << "reward_halving_interval = " << cfg.reward.halving_interval << '\n';
    out << "initial_stock = " << f(cfg.initial_stock) << '\n';
    out << "block_time_minutes = " << f(cfg.block_time_minutes) << '\n';
    out << "block_time_noise = " << f(cfg.block_time_noise) << '\n';
    out << "economy_level = " << f(cfg.economy_level) << '\n';
    out << "economy_drift = " << f(cfg.economy_drift) << '\n';
    out << "velocity_level = " << f(cfg.velocity_level) << '\n';
    out << "factor_persistence = " << f(cfg.factor_persistence) << '\n';
    out << "factor_innovation = " << f(cfg.factor_innovation) << '\n';
    out << "rate_mean = " << f(cfg.rate_mean) << '\n';
    out << "rate_persistence = " << f(cfg.rate_persistence) << '\n';
    out << "rate_innovation = " << f(cfg.rate_innovation) << '\n';
    out << "proxy_noise = " << f(cfg.proxy_noise) << '\n';
    out << "volume_level = " << f(cfg.volume_level) << '\n';
    out << "address_level = " << f(cfg.address_level) << '\n';
    out << "noise_sigma = " << f(cfg.noise_sigma) << '\n';
    out << "effect_strength = " << f(cfg.effects.strength) << '\n';
    out << "true_omega_centered = " << f(fx.omega) << '\n';
    out << "true_omega_raw = " << f(fx.omega_raw) << '\n';
    out << "true_arch1 = " << f(cfg.arch) << '\n';
    out << "true_garch1 = " << f(cfg.garch) << '\n';
    for (std::size_t j = 0; j < cfg.effects.columns.size(); ++j) {
        const auto& c = cfg.effects.columns[j];
        out << "true_delta_raw." << c << " = " << f(fx.delta_raw[j]) << '\n';
        out << "true_sign." << c << " = " << (cfg.effects.signs[j] > 0 ? "+" : "-") << '\n';
        out << "center." << c << " = " << f(fx.centers[j]) << '\n';
    }
    out << "variance_clamp_events = " << fx.clamp_events << '\n';
    if (!out) fail(Errc::IoFailure, "failed writing manifest in '" + dir + "'");
}

// ---------------------------------------------------------------------------
// Monte Carlo

MonteCarloSummary monte_carlo(const Replication& run, const std::vector<double>& truth,
                              const MonteCarloOptions& options) {
    if (options.replications < 2) fail(Errc::InvalidArgument, "Monte Carlo needs at least 2 replications");
    const std::size_t reps = options.replications;
    unsigned threads = options.threads ? options.threads : std::max(1U, std::thread::hardware_concurrency());

    MonteCarloSummary out;
    out.truth = truth;
    for (std::size_t i = 0; i < reps; ++i) out.seeds.push_back(options.same_seed ? options.base_seed : options.base_seed + i);

    std::vector<std::optional<FitResult>> results(reps);
    for (std::size_t lo = 0; lo < reps; lo += threads) {
        const std::size_t hi = std::min(reps, lo + threads);
        std::vector<std::future<std::optional<FitResult>>> batch;
        for (std::size_t i = lo; i < hi; ++i) {
            batch.push_back(std::async(std::launch::async, [&, i]() -> std::optional<FitResult> {
                try {
                    return run(out.seeds[i]);
                } catch (const Error&) {
                    return std::nullopt;
                }
            }));
        }
        for (std::size_t i = lo; i < hi; ++i) results[i] = batch[i - lo].get();
    }

    for (std::size_t i = 0; i < reps; ++i) {
        const auto& r = results[i];
        if (!r || !r->converged || r->estimates.size() != truth.size()) {
            ++out.failures;
            continue;
        }
        if (out.names.empty()) out.names = r->names;
        out.converged_seeds.push_back(out.seeds[i]);
        out.estimates.push_back(r->estimates);
    }
    if (out.estimates.empty()) fail(Errc::AllReplicationsFailed, std::to_string(reps) + " replications failed");

    const std::size_t k = truth.size();
    const auto count = static_cast<double>(out.estimates.size());
    out.mean.assign(k, 0.0);
    out.bias.assign(k, 0.0);
    out.mc_se.assign(k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        double s = 0.0;
        for (const auto& e : out.estimates) s += e[j];
        const double mu = s / count;
        double ss = 0.0;
        for (const auto& e : out.estimates) ss += (e[j] - mu) * (e[j] - mu);
        out.mean[j] = mu;
        out.bias[j] = mu - truth[j];
        out.mc_se[j] = out.estimates.size() > 1 ? std::sqrt(ss / (count - 1.0)) / std::sqrt(count)
                                                 : std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

}  // namespace btcg
