#pragma once

// Data-generating processes with known ground truth, and a Monte Carlo
// harness around fit().

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "btcgarch/garch.hpp"
#include "btcgarch/ingestion.hpp"
#include "btcgarch/series.hpp"

namespace btcg {

/// x_t = mean + persistence (x_{t-1} - mean) + scale u_t, u_t ~ N(0, 1),
/// started from its stationary distribution.
struct RegressorProcess {
    std::string name;
    double persistence = 0.9;
    double scale = 1.0;
    double mean = 0.0;
};

struct SimConfig {
    GarchSpec spec;
    ParamVector truth;
    std::size_t n = 1000;
    std::size_t burn_in = 500;
    std::uint64_t seed = 1;
    /// Must name every mean and variance regressor of `spec`.
    std::vector<RegressorProcess> regressors;
    /// Multiplies the standard normal innovations; 0 gives a noiseless path.
    double innovation_scale = 1.0;
    TimePoint start{1388534400};  // 2014-01-01T00:00Z

    void validate() const;
};

struct SimulatedSeries {
    /// Lagged regressors aligned with each observation, as fit() sees them.
    EstimationData data;
    std::vector<double> residuals;
    std::vector<double> sigma2;  // true conditional variances
    /// Pre-sample e^2 and sigma^2 used when burn_in is 0.
    double presample_variance = 0.0;
    std::size_t clamp_events = 0;
    TimePoint start{};
    std::vector<std::string> regressor_names;
    /// Raw regressor paths on the panel grid (n + 1 points).
    std::vector<std::vector<double>> regressor_paths;

    /// Panel of n + 1 hours whose estimation sample is exactly `data`.
    [[nodiscard]] HourlyPanel to_panel() const;
};

SimulatedSeries simulate_garch(const SimConfig& config);

/// Money-demand price: P = (k G + L(i)) / B with L(i) = level - slope * i.
struct DemandModel {
    double liquidity_level = 2.0e9;  // USD
    double liquidity_slope = 2.0e8;  // USD per rate percentage point, > 0

    [[nodiscard]] double liquidity(double rate) const noexcept { return liquidity_level - liquidity_slope * rate; }
    [[nodiscard]] double price(double k, double economy, double rate, double stock) const;
};

/// Ground-truth signs of the variance-equation coefficients on the panel's
/// regressors, in this order.
struct VarianceEffects {
    std::vector<std::string> columns = {"logtot_btc", "logvolume", "logno", "logvelocity", "logr_rate"};
    std::vector<int> signs = {-1, +1, +1, -1, -1};
    /// Each column moves sigma^2 by `strength` * omega per standard deviation.
    double strength = 0.2;
};

struct PriceSimConfig {
    std::size_t hours = 5000;
    TimePoint start{1388534400};  // must fall on a UTC midnight
    std::uint64_t seed = 1;

    DemandModel demand;
    RewardSchedule reward{50.0, 210000};
    double initial_stock = 12.0e6;
    double block_time_minutes = 10.0;
    double block_time_noise = 0.05;  // log-scale sd, iid per hour

    // Latent factors: log-AR(1) deviations around a drift.
    double economy_level = 4.0e10;   // USD
    double economy_drift = 2.0e-5;   // per hour, log scale
    double velocity_level = 1.0e-4;  // per hour
    double factor_persistence = 0.998;
    double factor_innovation = 0.004;
    double rate_mean = 0.5;          // percent
    double rate_persistence = 0.95;  // per day
    double rate_innovation = 0.08;
    /// sd of the iid log noise separating each observed proxy from its factor.
    double proxy_noise = 0.25;
    double volume_level = 500.0;     // BTC traded per hour at the initial economy size
    double address_level = 20000.0;  // active addresses per hour

    // Log-price innovations: GARCH(1,1)-X whose unconditional sd is
    // `noise_sigma`, with variance effects on the lagged panel regressors.
    double noise_sigma = 0.01;
    double arch = 0.10;
    double garch = 0.80;
    VarianceEffects effects;

    VelocityVariant velocity_variant = VelocityVariant::v1;

    void validate() const;
    [[nodiscard]] PanelRecipe recipe() const;
};

struct PriceFixture {
    std::vector<TradeRecord> trades;
    std::vector<ChainRecord> chain;
    std::vector<DailyRecord> daily;
    std::vector<double> fundamental;  // (k G + L(i)) / B per hour
    std::vector<double> price;        // hourly close
    std::vector<double> sigma2;       // true innovation variances
    // Raw-scale truth of the variance equation: sigma^2_t = omega_raw +
    // arch e^2 + garch sigma^2 + sum delta_raw_j z_{j,t-1}.
    std::vector<double> delta_raw;
    std::vector<double> centers;
    double omega = 0.0;
    double omega_raw = 0.0;
    std::size_t clamp_events = 0;
};

PriceFixture simulate_price_panel(const PriceSimConfig& config);

/// Writes trades.csv, chain.csv, daily.csv and manifest.txt into `dir`.
void write_fixture(const PriceFixture& fixture, const PriceSimConfig& config, const std::string& dir);

void write_trades_csv(const std::vector<TradeRecord>& rows, std::ostream& out);
void write_chain_csv(const std::vector<ChainRecord>& rows, std::ostream& out);
void write_daily_csv(const std::vector<DailyRecord>& rows, std::ostream& out);

struct MonteCarloSummary {
    std::vector<std::string> names;
    std::vector<double> truth;
    std::vector<double> mean;
    std::vector<double> bias;
    std::vector<double> mc_se;  // sd across converged replications / sqrt(count)
    std::vector<std::uint64_t> seeds;
    std::vector<std::uint64_t> converged_seeds;
    /// One row of estimates per converged replication, in seed order.
    std::vector<std::vector<double>> estimates;
    std::size_t failures = 0;
};

/// One replication: simulate with `seed` and fit.
using Replication = std::function<FitResult(std::uint64_t seed)>;

struct MonteCarloOptions {
    std::size_t replications = 20;
    std::uint64_t base_seed = 1;
    bool same_seed = false;  // every replication uses base_seed
    unsigned threads = 0;    // 0: hardware concurrency
};

/// Runs replications (seed = base + index) and summarizes converged ones. A
/// replication that throws or does not converge counts as a failure.
MonteCarloSummary monte_carlo(const Replication& run, const std::vector<double>& truth,
                              const MonteCarloOptions& options);

}  // namespace btcg
