#include "btcgarch/report.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <cstdio>
#include <future>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include "btcgarch/csv.hpp"
#include "btcgarch/error.hpp"
#include "ols.hpp"

namespace btcg {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    for (auto f : csv::split(text)) {
        f = csv::trim(f);
        if (!f.empty()) out.emplace_back(f);
    }
    return out;
}

double to_double(const std::string& key, const std::string& value) {
    const auto v = csv::parse_double(csv::trim(value));
    if (!v || !std::isfinite(*v)) fail(Errc::InvalidConfig, key + ": expected a number, got '" + value + "'");
    return *v;
}

std::int64_t to_int(const std::string& key, const std::string& value) {
    const auto v = csv::parse_int(csv::trim(value));
    if (!v) fail(Errc::InvalidConfig, key + ": expected an integer, got '" + value + "'");
    return *v;
}

std::size_t to_count(const std::string& key, const std::string& value) {
    const auto v = to_int(key, value);
    if (v < 0) fail(Errc::InvalidConfig, key + ": must be nonnegative");
    return static_cast<std::size_t>(v);
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::IoFailure, "cannot write '" + path.string() + "'");
    return out;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(Errc::IoFailure, "cannot create directory '" + dir + "': " + ec.message());
}

std::string equation_of(const std::string& name, std::string& term) {
    const auto colon = name.find(':');
    const std::string eq = name.substr(0, colon);
    term = name.substr(colon + 1);
    if (eq == "mean") return "mean";
    if (term.rfind("arch", 0) == 0 && term.find_first_not_of("0123456789", 4) == std::string::npos) return "arch";
    if (term.rfind("garch", 0) == 0 && term.find_first_not_of("0123456789", 5) == std::string::npos) return "garch";
    return "variance";
}

std::string pad(const std::string& s, std::size_t width) {
    return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

}  // namespace

// ---------------------------------------------------------------------------
// registry

GarchSpec SpecRegistryEntry::spec() const {
    GarchSpec s;
    s.mean_regressors = mean_regressors;
    s.variance_regressors = variance_regressors;
    return s;
}

std::vector<SpecRegistryEntry> default_registry() {
    std::vector<SpecRegistryEntry> out;
    for (int family = 1; family <= 2; ++family) {
        const std::string vel = family == 1 ? "logvelocity" : "logvelocity2";
        const std::vector<std::vector<std::string>> lists = {
            {"logvolume", vel, "logr_rate"},
            {"logno", vel, "logr_rate"},
            {"logtot_btc", "logvolume", vel, "logr_rate"},
            {"logtot_btc", "logno", vel, "logr_rate"},
            {"logtot_btc", "logvolume", "logno", vel, "logr_rate"},
        };
        for (std::size_t i = 0; i < lists.size(); ++i) {
            out.push_back({std::to_string(family) + "." + std::to_string(i + 1), lists[i], lists[i]});
        }
    }
    return out;
}

const SpecRegistryEntry& find_spec(const std::vector<SpecRegistryEntry>& registry, const std::string& id) {
    const auto it = std::find_if(registry.begin(), registry.end(), [&](const auto& e) { return e.id == id; });
    if (it == registry.end()) fail(Errc::InvalidConfig, "unknown specification id '" + id + "'");
    return *it;
}

// ---------------------------------------------------------------------------
// configuration

PanelRecipe RunConfig::recipe() const {
    PanelRecipe r;
    r.start = start;
    r.end = end;
    r.velocity_variant = velocity;
    r.log_floor = log_floor;
    r.rate_shift = rate_shift;
    r.fill.max_fill_hours = max_fill_hours;
    r.reward = reward;
    r.trades_path = trades_path;
    r.chain_path = chain_path;
    r.daily_path = daily_path;
    return r;
}

std::vector<std::string> RunConfig::requested_specs() const {
    if (!spec_ids.empty()) return spec_ids;
    const std::string prefix = velocity == VelocityVariant::v1 ? "1." : "2.";
    std::vector<std::string> out;
    for (const auto& e : registry) {
        if (e.id.rfind(prefix, 0) == 0) out.push_back(e.id);
    }
    return out;
}

void RunConfig::validate() const {
    if (!(log_floor > 0.0)) fail(Errc::InvalidConfig, "panel.log_floor must be positive");
    if (!(alpha > 0.0 && alpha < 1.0)) fail(Errc::InvalidConfig, "diagnostics.alpha must be in (0, 1)");
    if (lm_lags < 1) fail(Errc::InvalidConfig, "diagnostics.lm_lags must be >= 1");
    for (std::size_t i = 0; i < registry.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (registry[i].id == registry[j].id) fail(Errc::InvalidConfig, "duplicate registry id '" + registry[i].id + "'");
        }
        const auto& names = panel_column_names();
        for (const auto* list : {&registry[i].mean_regressors, &registry[i].variance_regressors}) {
            for (const auto& c : *list) {
                if (c == kReturnColumn || std::find(names.begin(), names.end(), c) == names.end()) {
                    fail(Errc::InvalidConfig, "registry entry '" + registry[i].id + "' names unknown column '" + c + "'");
                }
            }
        }
        registry[i].spec().validate();
    }
    for (const auto& id : requested_specs()) (void)find_spec(registry, id);
}

TimePoint parse_time_text(const std::string& raw) {
    const std::string text(csv::trim(raw));
    if (!text.empty() && text.find('-') == std::string::npos) {
        const auto v = csv::parse_int(text);
        if (!v || *v < 0) fail(Errc::InvalidConfig, "bad time '" + text + "'");
        return TimePoint{*v};
    }
    const auto day = parse_iso_date(std::string_view(text).substr(0, std::min<std::size_t>(10, text.size())));
    if (!day) fail(Errc::InvalidConfig, "bad time '" + text + "'");
    std::int64_t secs = *day * kSecondsPerDay;
    if (text.size() > 10) {
        std::string rest = text.substr(10);
        if (rest.front() != 'T' && rest.front() != ' ') fail(Errc::InvalidConfig, "bad time '" + text + "'");
        rest.erase(0, 1);
        if (!rest.empty() && rest.back() == 'Z') rest.pop_back();
        int hh = 0, mm = 0, ss = 0;
        char c1 = 0, c2 = 0;
        const int got = std::sscanf(rest.c_str(), "%2d%c%2d%c%2d", &hh, &c1, &mm, &c2, &ss);
        if (got < 3 || c1 != ':' || (got == 5 && c2 != ':') || got == 4 || hh > 23 || mm > 59 || ss > 59 || hh < 0 ||
            mm < 0 || ss < 0) {
            fail(Errc::InvalidConfig, "bad time '" + text + "'");
        }
        secs += hh * 3600 + mm * 60 + ss;
    }
    return TimePoint{secs};
}

void apply_setting(RunConfig& c, const std::string& key, const std::string& value) {
    const std::string v(csv::trim(value));
    const auto dot = key.find('.');
    if (dot == std::string::npos) fail(Errc::InvalidConfig, "setting '" + key + "' must be section.key");
    const std::string section = key.substr(0, dot);
    const std::string name = key.substr(dot + 1);
    auto unknown = [&] { fail(Errc::InvalidConfig, "unknown setting '" + key + "'"); };

    if (section == "sources") {
        if (name == "trades") c.trades_path = v;
        else if (name == "chain") c.chain_path = v;
        else if (name == "daily") c.daily_path = v;
        else unknown();
    } else if (section == "window") {
        if (name == "start") c.start = parse_time_text(v);
        else if (name == "end") c.end = parse_time_text(v);
        else unknown();
    } else if (section == "panel") {
        if (name == "velocity") {
            const auto vv = parse_velocity(v);
            if (!vv) fail(Errc::InvalidConfig, "panel.velocity must be v1 or v2");
            c.velocity = *vv;
            c.simulate.velocity_variant = *vv;
        } else if (name == "log_floor") c.log_floor = to_double(key, v);
        else if (name == "rate_shift") c.rate_shift = to_double(key, v);
        else if (name == "max_fill_hours") c.max_fill_hours = to_count(key, v);
        else unknown();
    } else if (section == "reward") {
        if (name == "initial") c.reward.initial_reward = to_double(key, v);
        else if (name == "halving_interval") c.reward.halving_interval = to_int(key, v);
        else unknown();
        c.simulate.reward = c.reward;
    } else if (section == "fit") {
        if (name == "specs") c.spec_ids = split_list(v);
        else if (name == "tol") c.fit.tol = to_double(key, v);
        else if (name == "gradient_tol") c.fit.gradient_tol = to_double(key, v);
        else if (name == "min_obs") c.fit.min_obs = to_count(key, v);
        else if (name == "max_simplex_evaluations") c.fit.max_simplex_evaluations = to_count(key, v);
        else if (name == "max_quasi_newton_iterations") c.fit.max_quasi_newton_iterations = to_count(key, v);
        else if (name == "hessian_step") c.fit.hessian_step = to_double(key, v);
        else if (name == "std_errors") {
            if (v == "hessian") c.fit.std_errors = StdErrorKind::hessian;
            else if (v == "sandwich") c.fit.std_errors = StdErrorKind::sandwich;
            else fail(Errc::InvalidConfig, "fit.std_errors must be hessian or sandwich");
        } else if (name == "threads") c.threads = static_cast<unsigned>(to_count(key, v));
        else unknown();
    } else if (section == "diagnostics") {
        if (name == "adf_lags") c.adf_lags = v == "auto" ? -1 : static_cast<int>(to_count(key, v));
        else if (name == "lm_lags") c.lm_lags = static_cast<int>(to_count(key, v));
        else if (name == "alpha") c.alpha = to_double(key, v);
        else unknown();
    } else if (section == "output") {
        if (name == "dir") c.out_dir = v;
        else unknown();
    } else if (section == "simulate") {
        auto& s = c.simulate;
        if (name == "seed") s.seed = static_cast<std::uint64_t>(to_count(key, v));
        else if (name == "hours") s.hours = to_count(key, v);
        else if (name == "start") s.start = parse_time_text(v);
        else if (name == "strength") s.effects.strength = to_double(key, v);
        else if (name == "noise_sigma") s.noise_sigma = to_double(key, v);
        else if (name == "arch") s.arch = to_double(key, v);
        else if (name == "garch") s.garch = to_double(key, v);
        else if (name == "proxy_noise") s.proxy_noise = to_double(key, v);
        else if (name == "initial_stock") s.initial_stock = to_double(key, v);
        else unknown();
    } else if (section == "registry") {
        // "<id> = a,b,c" for both equations or "<id> = mean list | variance list"
        SpecRegistryEntry e;
        e.id = name;
        const auto bar = v.find('|');
        e.mean_regressors = split_list(v.substr(0, bar));
        e.variance_regressors = bar == std::string::npos ? e.mean_regressors : split_list(v.substr(bar + 1));
        const auto it = std::find_if(c.registry.begin(), c.registry.end(), [&](const auto& x) { return x.id == name; });
        if (it != c.registry.end()) *it = e;
        else c.registry.push_back(e);
    } else {
        unknown();
    }
}

RunConfig load_config(const std::string& path) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(path, tree);
    } catch (const pt::ini_parser_error& e) {
        if (!fs::exists(path)) fail(Errc::IoFailure, "cannot open config file '" + path + "'");
        fail(Errc::InvalidConfig, "config '" + path + "': " + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    RunConfig c;
    const fs::path base = fs::path(path).parent_path();
    auto resolve = [&](const std::string& p) {
        if (p.empty() || fs::path(p).is_absolute()) return p;
        return (base / p).lexically_normal().string();
    };
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) fail(Errc::InvalidConfig, "setting '" + section + "' outside a section");
        for (const auto& [key, node] : body) {
            const std::string full = section + "." + key;
            std::string value = node.data();
            if (section == "sources" || (section == "output" && key == "dir")) value = resolve(value);
            apply_setting(c, full, value);
        }
    }
    return c;
}

// ---------------------------------------------------------------------------
// diagnostics

DiagnosticsBundle run_diagnostics(const HourlyPanel& panel, int adf_lags, int lm_lags, double alpha) {
    GarchSpec ar1;
    const auto data = build_estimation_data(panel, ar1);
    const std::size_t n = data.size();
    if (n < 20) fail(Errc::TooShort, "too few masked returns for diagnostics");

    DiagnosticsBundle d;
    d.nobs = n;
    d.returns = moments(data.r);
    d.adf = adf_test(data.r, adf_lags, alpha);

    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 2);
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (std::size_t t = 0; t < n; ++t) {
        const auto i = static_cast<Eigen::Index>(t);
        x(i, 0) = 1.0;
        x(i, 1) = data.r_lag[t];
        y(i) = data.r[t];
    }
    const auto fit = detail::ols(x, y);
    const Eigen::VectorXd e = y - x * fit.coef;
    const std::vector<double> resid(e.data(), e.data() + e.size());
    d.arch_lm = arch_lm_test(resid, lm_lags, alpha);
    return d;
}

void write_diagnostics(const DiagnosticsBundle& d, std::ostream& out) {
    const auto s = [](double v) { return csv::format_short(v); };
    out << "Specification tests on hourly log returns (estimation sample, n = " << d.nobs << ")\n\n";
    out << "Moments\n";
    out << "  mean             " << s(d.returns.mean) << '\n';
    out << "  variance         " << s(d.returns.variance) << '\n';
    out << "  skewness         " << s(d.returns.skewness) << '\n';
    out << "  excess kurtosis  " << s(d.returns.excess_kurtosis) << '\n';
    out << '\n';
    out << "Augmented Dickey-Fuller (intercept, H0: unit root)\n";
    out << "  statistic        " << s(d.adf.statistic) << '\n';
    out << "  lags             " << d.adf.lags << '\n';
    out << "  critical value   " << s(d.adf.critical_value) << " at alpha = " << s(d.adf.alpha) << '\n';
    out << "  p-value band     " << d.adf.p_band << '\n';
    out << "  verdict          " << verdict_name(d.adf.verdict) << '\n';
    out << '\n';
    out << "Engle ARCH-LM on AR(1) residuals (H0: no ARCH effects)\n";
    out << "  statistic n*R^2  " << s(d.arch_lm.statistic) << '\n';
    out << "  lags             " << d.arch_lm.lags << '\n';
    out << "  p-value          " << s(d.arch_lm.p_value) << '\n';
    out << "  verdict          " << verdict_name(d.arch_lm.verdict) << " at alpha = " << s(d.arch_lm.alpha) << '\n';
}

// ---------------------------------------------------------------------------
// fit outputs

std::string significance_stars(double p) {
    if (!(p == p)) return "";
    if (p < 0.01) return "***";
    if (p < 0.05) return "**";
    if (p < 0.10) return "*";
    return "";
}

void write_coefficients_csv(const FitResult& f, std::ostream& out) {
    const auto full = [](double v) { return std::isnan(v) ? std::string() : csv::format_full(v); };
    out << "equation,term,estimate,std_error,z,p_value,stars,raw_estimate,raw_std_error\n";
    for (std::size_t i = 0; i < f.k; ++i) {
        std::string term;
        const auto eq = equation_of(f.names[i], term);
        out << eq << ',' << term << ',' << full(f.estimates[i]) << ',' << full(f.std_errors[i]) << ','
            << full(f.z_stats[i]) << ',' << full(f.p_values[i]) << ',' << significance_stars(f.p_values[i]) << ','
            << full(f.raw_estimates[i]) << ',' << full(f.raw_std_errors[i]) << '\n';
    }
}

void write_fit_summary(const FitResult& f, const std::string& id, std::ostream& out) {
    const auto full = [](double v) { return csv::format_full(v); };
    out << "key,value\n";
    out << "spec_id," << id << '\n';
    out << "converged," << (f.converged ? "true" : "false") << '\n';
    out << "log_likelihood," << full(f.log_likelihood) << '\n';
    out << "start_log_likelihood," << full(f.start_log_likelihood) << '\n';
    out << "aic," << full(f.aic) << '\n';
    out << "bic," << full(f.bic) << '\n';
    out << "k," << f.k << '\n';
    out << "n," << f.n << '\n';
    out << "iterations," << f.iterations << '\n';
    out << "evaluations," << f.evaluations << '\n';
    out << "final_change," << full(f.final_change) << '\n';
    out << "final_gradient_norm," << full(f.final_gradient_norm) << '\n';
    out << "variance_clamp_events," << f.clamp_events << '\n';
    out << "variance_init," << full(f.variance_init) << '\n';
    out << "std_errors," << (f.std_error_kind == StdErrorKind::hessian ? "hessian" : "sandwich") << '\n';
    out << "std_errors_available," << (f.std_errors_available ? "true" : "false") << '\n';
    out << "regressor_scaling,standardized over the estimation sample\n";
}

namespace {

struct CoefRow {
    std::string equation, term, estimate, std_error, stars;
};

struct SpecFiles {
    bool present = false;
    std::vector<CoefRow> rows;
    std::map<std::string, std::string> summary;
};

std::vector<std::vector<std::string>> read_csv_rows(const fs::path& p, std::size_t expected_fields) {
    std::ifstream in(p);
    if (!in) fail(Errc::IoFailure, "cannot open '" + p.string() + "'");
    std::vector<std::vector<std::string>> rows;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        const auto text = csv::chomp(line);
        if (csv::trim(text).empty()) continue;
        const auto f = csv::split(text);
        if (f.size() != expected_fields) fail(Errc::InvalidArgument, "malformed row in '" + p.string() + "'");
        rows.emplace_back(f.begin(), f.end());
    }
    return rows;
}

SpecFiles load_spec_files(const fs::path& dir, const std::string& id) {
    SpecFiles s;
    const auto coef = dir / ("coef_" + id + ".csv");
    const auto summary = dir / ("summary_" + id + ".csv");
    if (!fs::exists(coef) || !fs::exists(summary)) return s;
    s.present = true;
    for (const auto& f : read_csv_rows(coef, 9)) s.rows.push_back({f[0], f[1], f[2], f[3], f[6]});
    for (const auto& f : read_csv_rows(summary, 2)) s.summary[f[0]] = f[1];
    return s;
}

std::string short_of(const std::string& full) {
    if (full.empty()) return "";
    const auto v = csv::parse_double(full);
    return v ? csv::format_short(*v) : full;
}

}  // namespace

std::string render_report(const std::string& dir, const std::vector<std::string>& ids) {
    std::vector<SpecFiles> specs;
    for (const auto& id : ids) specs.push_back(load_spec_files(dir, id));

    constexpr std::size_t kLabel = 22;
    constexpr std::size_t kCell = 18;
    std::ostringstream out;
    out << "QML estimates: AR(1)-X mean, GARCH(1,1)-X variance\n";
    out << "Standard errors in parentheses; regressors standardized over the estimation sample.\n\n";
    out << pad("", kLabel);
    for (const auto& id : ids) out << pad(id, kCell);
    out << '\n';

    const std::vector<std::pair<std::string, std::string>> blocks = {
        {"mean", "Mean equation"}, {"variance", "Variance equation"}, {"arch", "ARCH term"}, {"garch", "GARCH term"}};
    for (const auto& [eq, title] : blocks) {
        std::vector<std::string> terms;
        for (const auto& s : specs) {
            for (const auto& r : s.rows) {
                if (r.equation == eq && std::find(terms.begin(), terms.end(), r.term) == terms.end()) {
                    terms.push_back(r.term);
                }
            }
        }
        out << title << '\n';
        for (const auto& term : terms) {
            std::ostringstream est, se;
            est << pad("  " + term, kLabel);
            se << pad("", kLabel);
            for (const auto& s : specs) {
                const auto it = std::find_if(s.rows.begin(), s.rows.end(),
                                             [&](const auto& r) { return r.equation == eq && r.term == term; });
                if (it == s.rows.end()) {
                    est << pad("", kCell);
                    se << pad("", kCell);
                } else {
                    est << pad(short_of(it->estimate) + (it->stars.empty() ? "" : " " + it->stars), kCell);
                    se << pad(it->std_error.empty() ? "(n/a)" : "(" + short_of(it->std_error) + ")", kCell);
                }
            }
            out << est.str() << '\n' << se.str() << '\n';
        }
    }

    out << '\n';
    const std::vector<std::pair<std::string, std::string>> footer = {
        {"log_likelihood", "Log-likelihood"}, {"aic", "AIC"}, {"bic", "BIC"}, {"n", "Observations"}};
    for (const auto& [key, label] : footer) {
        out << pad(label, kLabel);
        for (const auto& s : specs) {
            const auto it = s.summary.find(key);
            out << pad(it == s.summary.end() ? "" : short_of(it->second), kCell);
        }
        out << '\n';
    }
    out << pad("Status", kLabel);
    for (const auto& s : specs) {
        const auto it = s.summary.find("converged");
        const bool ok = s.present && it != s.summary.end() && it->second == "true";
        out << pad(ok ? "converged" : "FAILED", kCell);
    }
    out << "\n\n* p < 0.10, ** p < 0.05, *** p < 0.01\n";
    return out.str();
}

void emit_plot_data(const HourlySeries& price, const HourlyPanel& panel, const std::string& dir) {
    ensure_dir(dir);
    const fs::path root(dir);
    if (price.start_hour() != panel.grid().start || price.size() != panel.size()) {
        fail(Errc::GridMismatch, "price series is not on the panel grid");
    }
    {
        auto out = open_out(root / "price.csv");
        out << "hour_ts,price_usd\n";
        for (std::size_t t = 0; t < price.size(); ++t) {
            out << price.time_at(t).epoch_seconds << ',';
            if (!price.is_missing(t)) out << csv::format_full(price.values()[t]);
            out << '\n';
        }
        if (!out) fail(Errc::IoFailure, "failed writing price.csv in '" + dir + "'");
    }
    const auto& r = panel.column(kReturnColumn);
    auto out = open_out(root / "returns.csv");
    out << "hour_ts,log_return\n";
    for (std::size_t t = 1; t < r.size(); ++t) {
        out << r.time_at(t).epoch_seconds << ',';
        if (!r.is_missing(t)) out << csv::format_full(r.values()[t]);
        out << '\n';
    }
    if (!out) fail(Errc::IoFailure, "failed writing returns.csv in '" + dir + "'");
}

// ---------------------------------------------------------------------------
// orchestration

std::vector<SpecOutcome> run_fits(const HourlyPanel& panel, const RunConfig& config) {
    config.validate();
    ensure_dir(config.out_dir);
    const fs::path root(config.out_dir);
    const auto ids = config.requested_specs();
    const unsigned threads = config.threads ? config.threads : std::max(1U, std::thread::hardware_concurrency());

    struct Slot {
        std::optional<FitResult> fit;
        SpecOutcome outcome;
    };
    std::vector<Slot> slots(ids.size());
    for (std::size_t lo = 0; lo < ids.size(); lo += threads) {
        const std::size_t hi = std::min(ids.size(), lo + threads);
        std::vector<std::future<Slot>> batch;
        for (std::size_t i = lo; i < hi; ++i) {
            batch.push_back(std::async(std::launch::async, [&, i] {
                Slot s;
                s.outcome.id = ids[i];
                try {
                    s.fit = fit(panel, find_spec(config.registry, ids[i]).spec(), config.fit);
                    s.outcome.fitted = true;
                    s.outcome.converged = s.fit->converged;
                    s.outcome.status = s.fit->converged ? 0 : static_cast<int>(ErrorCategory::convergence);
                    if (!s.fit->converged) s.outcome.message = "optimizer stopped before meeting the convergence criteria";
                } catch (const Error& e) {
                    s.outcome.status = static_cast<int>(e.category());
                    s.outcome.message = e.what();
                }
                return s;
            }));
        }
        for (std::size_t i = lo; i < hi; ++i) slots[i] = batch[i - lo].get();
    }

    std::vector<SpecOutcome> outcomes;
    for (auto& s : slots) {
        const auto& id = s.outcome.id;
        const auto failed_marker = root / ("FAILED_" + id + ".txt");
        if (s.fit) {
            {
                auto out = open_out(root / ("coef_" + id + ".csv"));
                write_coefficients_csv(*s.fit, out);
            }
            auto out = open_out(root / ("summary_" + id + ".csv"));
            write_fit_summary(*s.fit, id, out);
        }
        if (s.outcome.status != 0) {
            auto out = open_out(failed_marker);
            out << "FAILED " << id << ": " << s.outcome.message << '\n';
        } else {
            std::error_code ec;
            fs::remove(failed_marker, ec);
        }
        outcomes.push_back(std::move(s.outcome));
    }
    auto out = open_out(root / "report.txt");
    out << render_report(config.out_dir, ids);
    return outcomes;
}

void write_panel_outputs(const PanelBundle& bundle, const std::string& dir) {
    ensure_dir(dir);
    const fs::path root(dir);
    {
        auto out = open_out(root / "panel.csv");
        write_panel_csv(bundle.panel, out);
    }
    {
        auto out = open_out(root / "build_report.txt");
        write_build_report(bundle.report, out);
    }
    emit_plot_data(bundle.price, bundle.panel, dir);
}

bool PipelineResult::all_converged() const {
    return std::all_of(specs.begin(), specs.end(), [](const auto& s) { return s.status == 0; });
}

PipelineResult run_pipeline(const RunConfig& config) {
    config.validate();
    const auto bundle = build_panel(config.recipe());
    write_panel_outputs(bundle, config.out_dir);
    {
        const auto diag = run_diagnostics(bundle.panel, config.adf_lags, config.lm_lags, config.alpha);
        auto out = open_out(fs::path(config.out_dir) / "diagnostics.txt");
        write_diagnostics(diag, out);
    }
    PipelineResult res;
    res.specs = run_fits(bundle.panel, config);
    return res;
}

void simulate_fixture(const PriceSimConfig& config, const std::string& dir) {
    write_fixture(simulate_price_panel(config), config, dir);
}

}  // namespace btcg
