// Acceptance gate. Prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails. Seeds and tolerances are fixed below.

#include <sys/wait.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "btcgarch/diagnostics.hpp"
#include "btcgarch/error.hpp"
#include "btcgarch/garch.hpp"
#include "btcgarch/random.hpp"
#include "btcgarch/report.hpp"
#include "btcgarch/simulation.hpp"
#include "reference.hpp"

using namespace btcg;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

void progress(const std::string& s) {
    std::fprintf(stderr, "  .. %s\n", s.c_str());
    std::fflush(stderr);
}

ParamVector garch11(double omega, double alpha, double beta) {
    ParamVector p = ParamVector::zeros(GarchSpec{});
    p.omega = omega;
    p.alpha = {alpha};
    p.beta = {beta};
    return p;
}

// Four persistent regressors shared by both equations.
SimConfig x_config(std::size_t n, std::uint64_t seed, double delta) {
    SimConfig c;
    c.spec.mean_regressors = {"x1", "x2", "x3", "x4"};
    c.spec.variance_regressors = c.spec.mean_regressors;
    c.truth = ParamVector::zeros(c.spec);
    c.truth.omega = 0.05;
    c.truth.alpha = {0.10};
    c.truth.beta = {0.85};
    c.truth.delta.assign(4, delta);
    c.regressors = {{"x1", 0.95, 0.3, 0.0}, {"x2", 0.9, 0.5, 1.0}, {"x3", 0.5, 1.0, 0.0}, {"x4", 0.99, 0.1, 2.0}};
    c.n = n;
    c.seed = seed;
    return c;
}

// -- 1 ---------------------------------------------------------------------

Outcome likelihood_oracle() {
    auto cfg = x_config(1000, 101, 0.002);
    cfg.truth.beta0 = 0.01;
    cfg.truth.beta1 = 0.05;
    cfg.truth.gamma = {0.02, -0.01, 0.03, 0.0};
    const auto sim = simulate_garch(cfg);
    const auto& d = sim.data;

    std::vector<ParamVector> points{cfg.truth};
    std::mt19937_64 g(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 9; ++i) {
        ParamVector p = cfg.truth;
        p.beta0 = 0.05 * (u(g) - 0.5);
        p.beta1 = 0.4 * (u(g) - 0.5);
        for (auto& x : p.gamma) x = 0.1 * (u(g) - 0.5);
        p.omega = 0.01 + 0.2 * u(g);
        const double s = 0.3 + 0.69 * u(g), share = 0.05 + 0.5 * u(g);
        p.alpha = {s * share};
        p.beta = {s * (1.0 - share)};
        for (auto& x : p.delta) x = 0.004 * u(g);
        points.push_back(p);
    }

    const auto t0 = Clock::now();
    const LikelihoodModel model(d, cfg.spec);
    std::vector<double> engine;
    for (const auto& p : points) engine.push_back(model.log_likelihood(p));
    const double elapsed = seconds_since(t0);

    double worst = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        const reference::Garch11X ref{p.beta0, p.beta1, p.gamma, p.omega, p.alpha[0], p.beta[0], p.delta};
        worst = std::max(worst, std::abs(engine[i] - reference::log_likelihood(d.r, d.r_lag, d.x.data, d.z.data, ref)));
    }
    return {worst <= 1e-8 && elapsed < 1.0,
            fmt("max |engine - reference| = %.3g over %zu points (tol 1e-8), %.4f s (limit 1 s)", worst, points.size(),
                elapsed)};
}

// -- 2, 3, 7 ---------------------------------------------------------------

struct RecoveryRun {
    MonteCarloSummary summary;
    std::size_t proposals = 0;
    std::size_t inadmissible = 0;
    double seconds = 0.0;
};

RecoveryRun parameter_recovery() {
    const GarchSpec spec;
    const ParamVector truth = garch11(0.05, 0.10, 0.85);
    std::atomic<std::size_t> proposals{0}, inadmissible{0};

    const Replication run = [&](std::uint64_t seed) {
        SimConfig cfg;
        cfg.spec = spec;
        cfg.truth = truth;
        cfg.n = 50000;
        cfg.burn_in = 1000;
        cfg.seed = seed;
        FitOptions opts;
        opts.observer = [&](const ParamVector& p) {
            ++proposals;
            const bool ok = p.omega > 0.0 && p.alpha[0] > 0.0 && p.beta[0] > 0.0 && p.alpha[0] + p.beta[0] < 1.0;
            if (!ok) ++inadmissible;
        };
        auto f = fit(simulate_garch(cfg).to_panel(), spec, opts);
        progress(fmt("recovery seed %llu: omega %.4f alpha %.4f beta %.4f%s", static_cast<unsigned long long>(seed),
                     f.estimates[2], f.estimates[3], f.estimates[4], f.converged ? "" : " (not converged)"));
        return f;
    };
    MonteCarloOptions mc;
    mc.replications = 20;
    mc.base_seed = 1001;
    const auto t0 = Clock::now();
    RecoveryRun out;
    out.summary = monte_carlo(run, truth.flatten(spec), mc);
    out.seconds = seconds_since(t0);
    out.proposals = proposals;
    out.inadmissible = inadmissible;
    return out;
}

Outcome recovery_verdict(const RecoveryRun& r, double suite_seconds) {
    const auto& s = r.summary;
    bool within = s.failures == 0;
    std::string worst;
    double worst_ratio = 0.0;
    for (std::size_t j = 0; j < s.truth.size(); ++j) {
        const double ratio = std::abs(s.bias[j]) / s.mc_se[j];
        if (!(ratio <= 3.0)) within = false;
        if (ratio > worst_ratio) {
            worst_ratio = ratio;
            worst = s.names[j];
        }
    }
    const double bias_beta = s.bias[4];
    const bool pass = within && std::abs(bias_beta) < 0.02 && suite_seconds < 600.0;
    return {pass, fmt("mean (omega, alpha, beta) = (%.4f, %.4f, %.4f); worst |bias|/MC-SE = %.2f on %s (limit 3); "
                      "bias(beta) = %+.4f (limit 0.02); %zu/20 converged; suite %.0f s (limit 600 s)",
                      s.mean[2], s.mean[3], s.mean[4], worst_ratio, worst.c_str(), bias_beta,
                      s.converged_seeds.size(), suite_seconds)};
}

Outcome constraint_safety(const RecoveryRun& r) {
    return {r.proposals > 0 && r.inadmissible == 0,
            fmt("%zu inadmissible of %zu evaluated parameter sets (limit 0)", r.inadmissible, r.proposals)};
}

Outcome garch_dominates_arch(const RecoveryRun& r) {
    std::size_t count = 0;
    for (const auto& e : r.summary.estimates) count += e[4] > e[3] ? 1 : 0;
    const double share = static_cast<double>(count) / 20.0;
    return {share >= 0.95, fmt("beta > alpha in %zu/20 seeds = %.2f (limit >= 0.95)", count, share)};
}

// -- 4 ---------------------------------------------------------------------

Outcome arch_lm_size_power() {
    std::size_t size_rejects = 0;
    for (std::uint64_t i = 0; i < 500; ++i) {
        SimConfig c;
        c.truth = garch11(1.0, 0.0, 0.0);
        c.n = 10000;
        c.burn_in = 0;
        c.seed = 20000 + i;
        const auto sim = simulate_garch(c);
        if (arch_lm_test(sim.residuals, 5, 0.05).verdict == Verdict::reject) ++size_rejects;
    }
    std::size_t power_rejects = 0;
    for (std::uint64_t i = 0; i < 200; ++i) {
        SimConfig c;
        c.truth = garch11(0.1, 0.2, 0.7);
        c.n = 10000;
        c.seed = 30000 + i;
        const auto sim = simulate_garch(c);
        if (arch_lm_test(sim.residuals, 5, 0.05).verdict == Verdict::reject) ++power_rejects;
    }
    const double size = static_cast<double>(size_rejects) / 500.0;
    const double power = static_cast<double>(power_rejects) / 200.0;
    return {size >= 0.03 && size <= 0.07 && power >= 0.99,
            fmt("size %.3f over 500 iid series (band [0.03, 0.07]); power %.3f over 200 GARCH(0.2, 0.7) series "
                "(limit >= 0.99)",
                size, power)};
}

// -- 5 ---------------------------------------------------------------------

Outcome adf_behaviour() {
    std::size_t walk_kept = 0, noise_rejected = 0;
    for (std::uint64_t i = 0; i < 200; ++i) {
        Rng g(40000 + i);
        std::vector<double> walk(5000), noise(5000);
        double level = 0.0;
        for (auto& w : walk) w = (level += g.normal());
        for (auto& e : noise) e = g.normal();
        if (adf_test(walk, -1, 0.05).verdict == Verdict::fail_to_reject) ++walk_kept;
        if (adf_test(noise, -1, 0.05).verdict == Verdict::reject) ++noise_rejected;
    }
    const double a = static_cast<double>(walk_kept) / 200.0;
    const double b = static_cast<double>(noise_rejected) / 200.0;
    return {a >= 0.90 && b >= 0.99,
            fmt("random walks not rejected %.3f (limit >= 0.90); iid series rejected %.3f (limit >= 0.99); n = 5000, "
                "5%% level, AIC lags",
                a, b)};
}

// -- 6 ---------------------------------------------------------------------

Outcome sign_reproduction() {
    const auto entry = find_spec(default_registry(), "1.5");
    const VarianceEffects effects;
    std::map<std::string, std::size_t> right;
    std::size_t fitted = 0, tot_starred = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        PriceSimConfig cfg;
        cfg.hours = 5000;
        cfg.seed = seed;
        const auto fx = simulate_price_panel(cfg);
        const auto bundle = assemble_panel({fx.trades, {}}, {fx.chain, {}}, {fx.daily, {}}, cfg.recipe());
        FitResult f;
        try {
            f = fit(bundle.panel, entry.spec());
        } catch (const Error& e) {
            progress(fmt("sign seed %llu: %s", static_cast<unsigned long long>(seed), e.what()));
            continue;
        }
        if (!f.converged) {
            progress(fmt("sign seed %llu: not converged", static_cast<unsigned long long>(seed)));
            continue;
        }
        ++fitted;
        std::string line;
        for (std::size_t j = 0; j < effects.columns.size(); ++j) {
            const auto it = std::find(f.names.begin(), f.names.end(), "var:" + effects.columns[j]);
            const auto i = static_cast<std::size_t>(it - f.names.begin());
            const double est = f.estimates[i];
            if ((est > 0.0) == (effects.signs[j] > 0)) ++right[effects.columns[j]];
            if (effects.columns[j] == "logtot_btc" && est < 0.0 && f.p_values[i] < 0.10) ++tot_starred;
            line += fmt(" %s %+.2e", effects.columns[j].c_str(), est);
        }
        progress(fmt("sign seed %llu:%s", static_cast<unsigned long long>(seed), line.c_str()));
    }
    bool pass = true;
    std::string detail;
    for (std::size_t j = 0; j < effects.columns.size(); ++j) {
        const auto& c = effects.columns[j];
        const double share = static_cast<double>(right[c]) / 20.0;
        if (share < 0.90) pass = false;
        detail += fmt("%s%s %s %zu/20", j ? ", " : "", c.c_str(), effects.signs[j] < 0 ? "(-)" : "(+)", right[c]);
    }
    progress(fmt("logtot_btc negative and significant at 10%%: %zu/20", tot_starred));
    return {pass, detail + fmt(" correct sign (limit >= 18/20 each; %zu/20 fits converged)", fitted)};
}

// -- 8 ---------------------------------------------------------------------

Outcome mean_null() {
    std::vector<std::size_t> significant(4, 0);
    std::size_t fitted = 0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        auto cfg = x_config(5000, 50000 + seed, 0.0);
        const auto f = fit(simulate_garch(cfg).to_panel(), cfg.spec);
        if (!f.converged || !f.std_errors_available) continue;
        ++fitted;
        for (std::size_t j = 0; j < 4; ++j) significant[j] += f.p_values[2 + j] < 0.05 ? 1 : 0;
    }
    bool pass = fitted == 50;
    std::string detail;
    for (std::size_t j = 0; j < 4; ++j) {
        if (significant[j] > 5) pass = false;
        detail += fmt("%sx%zu %zu/50", j ? ", " : "", j + 1, significant[j]);
    }
    return {pass, "significant at 5%: " + detail + fmt(" (limit <= 5/50 each; %zu/50 fits usable)", fitted)};
}

// -- 9 ---------------------------------------------------------------------

Outcome gradient_check() {
    const auto cfg = x_config(1000, 909, 0.002);
    const auto sim = simulate_garch(cfg);
    const LikelihoodModel model(sim.data, cfg.spec);
    const std::size_t k = model.dimension();
    std::mt19937_64 g(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    std::size_t points = 0;
    while (points < 50) {
        ParamVector p = cfg.truth;
        p.beta0 = 0.1 * (u(g) - 0.5);
        p.beta1 = 1.6 * (u(g) - 0.5);
        for (auto& x : p.gamma) x = 0.2 * (u(g) - 0.5);
        p.omega = 0.005 + 0.3 * u(g);
        const double s = 0.05 + 0.9 * u(g), share = 0.02 + 0.96 * u(g);
        p.alpha = {s * share};
        p.beta = {s * (1.0 - share)};
        for (auto& x : p.delta) x = 0.01 * (u(g) - 0.5);
        // keep the variance off its floor, where the likelihood is not smooth
        const auto v = variance_recursion(mean_residuals(sim.data, cfg.spec, p), cfg.spec, p, 1.0, sim.data.z);
        if (v.clamp_events > 0) continue;
        const auto theta = to_unconstrained(cfg.spec, p);
        std::vector<double> grad(k);
        (void)model.log_likelihood_and_gradient(theta, grad);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const double h = 1e-5 * (1.0 + std::abs(theta[i]));
            auto up = theta, dn = theta;
            up[i] += h;
            dn[i] -= h;
            const double fd = (model.log_likelihood(up) - model.log_likelihood(dn)) / (2.0 * h);
            num = std::max(num, std::abs(grad[i] - fd));
            den = std::max(den, std::abs(fd));
        }
        worst = std::max(worst, num / den);
        ++points;
    }
    return {worst <= 1e-5, fmt("max over 50 points of max|analytic - central FD| / max|FD| = %.3g (tol 1e-5)", worst)};
}

// -- 10 --------------------------------------------------------------------

struct Run {
    int code = -1;
    std::string output;
};

Run run_command(const std::string& cmd) {
    FILE* pipe = popen((cmd + " 2>&1").c_str(), "r");
    if (!pipe) return {};
    Run r;
    char buf[4096];
    while (const std::size_t got = std::fread(buf, 1, sizeof buf, pipe)) r.output.append(buf, got);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        std::ifstream in(e.path(), std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        files[fs::relative(e.path(), root).string()] = s.str();
    }
    return files;
}

Outcome determinism(const std::string& cli) {
    const auto root = fs::temp_directory_path() / "btcg_acceptance_determinism";
    fs::remove_all(root);
    const std::string config = std::string(BTCG_FIXTURE_DIR) + "/pipeline.ini";
    const auto a = run_command(cli + " pipeline --config " + config + " --out " + (root / "a").string());
    const auto b = run_command(cli + " pipeline --config " + config + " --out " + (root / "b").string());
    if (a.code != 0 || b.code != 0) {
        return {false, fmt("exit codes %d and %d (expected 0): %s", a.code, b.code, a.output.c_str())};
    }
    const auto fa = read_tree(root / "a");
    const auto fb = read_tree(root / "b");
    const bool same = fa == fb && a.output == b.output && !fa.empty();
    std::size_t bytes = 0;
    for (const auto& [name, body] : fa) bytes += body.size();
    fs::remove_all(root);
    return {same, fmt("two runs: exit 0 and 0; %zu files, %zu bytes, %s", fa.size(), bytes,
                      same ? "byte-identical" : "DIFFERENT")};
}

// -- 11 --------------------------------------------------------------------

Outcome throughput() {
    auto cfg = x_config(50000, 1111, 0.002);
    cfg.truth.gamma = {0.01, 0.0, -0.01, 0.0};
    const auto panel = simulate_garch(cfg).to_panel();
    const auto t0 = Clock::now();
    const auto f = fit(panel, cfg.spec);
    const double elapsed = seconds_since(t0);
    return {elapsed < 60.0 && f.converged,
            fmt("n = %zu, 4 regressors in both equations, k = %zu: %.2f s (limit 60 s), %s", f.n, f.k, elapsed,
                f.converged ? "converged" : "NOT converged")};
}

}  // namespace

int main(int argc, char** argv) {
    // The CLI sits next to this binary in the build tree.
    const fs::path self = fs::weakly_canonical(fs::path(argv[0]));
    const std::string cli = argc > 1 ? argv[1] : (self.parent_path() / "btcgarch").string();
    const auto suite_start = Clock::now();

    std::vector<std::pair<std::string, std::function<Outcome()>>> fast = {
        {"1 likelihood oracle", likelihood_oracle},
        {"4 ARCH-LM size and power", arch_lm_size_power},
        {"5 ADF behaviour", adf_behaviour},
        {"6 variance-equation signs", sign_reproduction},
        {"8 mean-equation null", mean_null},
        {"9 gradient check", gradient_check},
        {"10 pipeline determinism", [&] { return determinism(cli); }},
        {"11 throughput", throughput},
    };

    std::map<int, std::pair<std::string, Outcome>> results;
    auto record = [&](const std::string& name, Outcome o) {
        progress(name + (o.pass ? " done" : " FAILED"));
        results[std::stoi(name)] = {name, std::move(o)};
    };

    progress("2 parameter recovery (20 fits, n = 50000)");
    const auto recovery = parameter_recovery();
    for (auto& [name, fn] : fast) {
        progress(name);
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        record(name, std::move(o));
    }
    record("3 constraint safety", constraint_safety(recovery));
    record("7 GARCH term above ARCH term", garch_dominates_arch(recovery));
    record("2 parameter recovery", recovery_verdict(recovery, seconds_since(suite_start)));

    int failed = 0;
    for (const auto& [id, entry] : results) {
        const auto& [name, o] = entry;
        std::printf("%s  criterion %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
        if (!o.pass) ++failed;
    }
    std::printf("%d of %zu criteria passed in %.0f s\n", static_cast<int>(results.size()) - failed, results.size(),
                seconds_since(suite_start));
    return failed == 0 ? 0 : 1;
}
