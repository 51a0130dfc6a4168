#pragma once

// Run configuration, the specification registry, report files and the
// end-to-end pipeline.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "btcgarch/diagnostics.hpp"
#include "btcgarch/garch.hpp"
#include "btcgarch/ingestion.hpp"
#include "btcgarch/simulation.hpp"

namespace btcg {

struct SpecRegistryEntry {
    std::string id;
    std::vector<std::string> mean_regressors;
    std::vector<std::string> variance_regressors;

    [[nodiscard]] GarchSpec spec() const;
};

/// The ten default specifications, 1.1-1.5 on logvelocity and 2.1-2.5 on
/// logvelocity2, with the same regressors in both equations.
std::vector<SpecRegistryEntry> default_registry();

const SpecRegistryEntry& find_spec(const std::vector<SpecRegistryEntry>& registry, const std::string& id);

struct RunConfig {
    std::string trades_path;
    std::string chain_path;
    std::string daily_path;
    TimePoint start{};
    TimePoint end{};
    VelocityVariant velocity = VelocityVariant::v1;
    double log_floor = 1e-8;
    double rate_shift = 5.0;
    std::size_t max_fill_hours = 24;
    RewardSchedule reward;

    /// Empty: the five specifications of the configured velocity family.
    std::vector<std::string> spec_ids;
    FitOptions fit;
    unsigned threads = 0;  // concurrent fits; 0: hardware concurrency

    int adf_lags = -1;  // negative: AIC selection
    int lm_lags = 5;
    double alpha = 0.05;

    std::string out_dir = "out";
    PriceSimConfig simulate;
    std::vector<SpecRegistryEntry> registry = default_registry();

    [[nodiscard]] PanelRecipe recipe() const;
    [[nodiscard]] std::vector<std::string> requested_specs() const;
    void validate() const;
};

/// Sets one option by "section.key", the same names the INI file uses.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

/// INI file with [sources], [window], [panel], [reward], [fit], [diagnostics],
/// [output], [simulate] and [registry] sections. Relative paths resolve
/// against the file's directory.
RunConfig load_config(const std::string& path);

/// Accepts epoch seconds, YYYY-MM-DD or YYYY-MM-DDTHH:MM[:SS][Z].
TimePoint parse_time_text(const std::string& text);

struct DiagnosticsBundle {
    TestReport adf;
    TestReport arch_lm;
    MomentSummary returns;
    std::size_t nobs = 0;
};

/// ADF on the masked returns, ARCH-LM on the residuals of an AR(1) fitted to
/// them by least squares.
DiagnosticsBundle run_diagnostics(const HourlyPanel& panel, int adf_lags, int lm_lags, double alpha);
void write_diagnostics(const DiagnosticsBundle& d, std::ostream& out);

/// "***" below 1%, "**" below 5%, "*" below 10%.
std::string significance_stars(double p_value);

void write_coefficients_csv(const FitResult& fit, std::ostream& out);
void write_fit_summary(const FitResult& fit, const std::string& spec_id, std::ostream& out);

/// Combined table from coef_<id>.csv and summary_<id>.csv in `dir`.
std::string render_report(const std::string& dir, const std::vector<std::string>& spec_ids);

/// price.csv (hour_ts,price_usd) and returns.csv (hour_ts,log_return).
void emit_plot_data(const HourlySeries& price, const HourlyPanel& panel, const std::string& dir);

struct SpecOutcome {
    std::string id;
    bool fitted = false;     // false: the fit threw
    bool converged = false;
    int status = 0;  // exit-code category: 0, 2 input, 3 convergence, 4 internal
    std::string message;
};

/// Fits the requested specifications concurrently and writes their files
/// plus report.txt, in specification order.
std::vector<SpecOutcome> run_fits(const HourlyPanel& panel, const RunConfig& config);

/// Writes panel.csv, build_report.txt, price.csv and returns.csv.
void write_panel_outputs(const PanelBundle& bundle, const std::string& dir);

struct PipelineResult {
    std::vector<SpecOutcome> specs;
    [[nodiscard]] bool all_converged() const;
};

PipelineResult run_pipeline(const RunConfig& config);

/// Writes a simulated source fixture into `dir`.
void simulate_fixture(const PriceSimConfig& config, const std::string& dir);

}  // namespace btcg
