// Command-line front end. Talks to the library only through the C API.

#include <cstdint>
#include <cstdio>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "btcgarch/btcgarch.h"

namespace {

struct Flags {
    std::string config;
    std::string spec;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string velocity;
    std::optional<int> lm_lags;
    std::string adf_lags;
    std::string panel;
};

struct ConfigDeleter {
    void operator()(btcg_config* c) const { btcg_config_free(c); }
};
struct PanelDeleter {
    void operator()(btcg_panel* p) const { btcg_panel_free(p); }
};
using ConfigPtr = std::unique_ptr<btcg_config, ConfigDeleter>;
using PanelPtr = std::unique_ptr<btcg_panel, PanelDeleter>;

int report_error(btcg_status s) {
    std::fprintf(stderr, "error: %s\n", btcg_last_error());
    return static_cast<int>(s);
}

void print_and_free(char* text) {
    if (!text) return;
    std::fputs(text, stdout);
    btcg_string_free(text);
}

btcg_status load_config(const Flags& f, ConfigPtr& out) {
    btcg_config* raw = nullptr;
    const btcg_status s = f.config.empty() ? btcg_config_new(&raw) : btcg_config_load(f.config.c_str(), &raw);
    if (s != BTCG_OK) return s;
    out.reset(raw);
    auto set = [&](const char* key, const std::string& value) { return btcg_config_set(raw, key, value.c_str()); };
    btcg_status r = BTCG_OK;
    if (r == BTCG_OK && !f.out.empty()) r = set("output.dir", f.out);
    if (r == BTCG_OK && !f.spec.empty()) r = set("fit.specs", f.spec);
    if (r == BTCG_OK && f.seed) r = set("simulate.seed", std::to_string(*f.seed));
    if (r == BTCG_OK && !f.velocity.empty()) r = set("panel.velocity", f.velocity);
    if (r == BTCG_OK && f.lm_lags) r = set("diagnostics.lm_lags", std::to_string(*f.lm_lags));
    if (r == BTCG_OK && !f.adf_lags.empty()) r = set("diagnostics.adf_lags", f.adf_lags);
    return r;
}

btcg_status obtain_panel(const Flags& f, const btcg_config* cfg, PanelPtr& out) {
    btcg_panel* raw = nullptr;
    const btcg_status s = f.panel.empty() ? btcg_panel_build(cfg, &raw) : btcg_panel_load_csv(f.panel.c_str(), &raw);
    if (s == BTCG_OK) out.reset(raw);
    return s;
}

std::string out_dir(const btcg_config* cfg) {
    char* dir = nullptr;
    if (btcg_config_get_out_dir(cfg, &dir) != BTCG_OK) return "out";
    std::string s(dir);
    btcg_string_free(dir);
    return s;
}

int run(const std::string& command, const Flags& f) {
    ConfigPtr cfg;
    if (auto s = load_config(f, cfg); s != BTCG_OK) return report_error(s);
    const std::string dir = out_dir(cfg.get());

    if (command == "simulate") {
        if (auto s = btcg_simulate_fixture(cfg.get(), dir.c_str()); s != BTCG_OK) return report_error(s);
        std::printf("fixture written to %s\n", dir.c_str());
        return 0;
    }
    if (command == "report") {
        char* text = nullptr;
        if (auto s = btcg_render_report(cfg.get(), &text); s != BTCG_OK) return report_error(s);
        print_and_free(text);
        return 0;
    }
    if (command == "pipeline") {
        const btcg_status s = btcg_run_pipeline(cfg.get());
        if (s == BTCG_OK || s == BTCG_ERR_CONVERGENCE) {
            char* text = nullptr;
            if (btcg_render_report(cfg.get(), &text) == BTCG_OK) print_and_free(text);
        }
        return s == BTCG_OK ? 0 : report_error(s);
    }

    PanelPtr panel;
    if (auto s = obtain_panel(f, cfg.get(), panel); s != BTCG_OK) return report_error(s);
    if (command == "ingest") {
        if (auto s = btcg_panel_write(panel.get(), dir.c_str()); s != BTCG_OK) return report_error(s);
        std::printf("panel: %zu hours, %zu in the estimation mask, written to %s\n", btcg_panel_hours(panel.get()),
                    btcg_panel_mask_count(panel.get()), dir.c_str());
        return 0;
    }
    if (command == "test") {
        char* text = nullptr;
        if (auto s = btcg_run_diagnostics(cfg.get(), panel.get(), dir.c_str(), &text); s != BTCG_OK) {
            return report_error(s);
        }
        print_and_free(text);
        return 0;
    }
    // fit
    const btcg_status s = btcg_run_fits(cfg.get(), panel.get());
    if (s == BTCG_OK || s == BTCG_ERR_CONVERGENCE) {
        char* text = nullptr;
        if (btcg_render_report(cfg.get(), &text) == BTCG_OK) print_and_free(text);
    }
    return s == BTCG_OK ? 0 : report_error(s);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hourly BitCoin price-formation analysis: panel building, specification tests and GARCH-X fits"};
    app.set_version_flag("--version", std::string(btcg_version()));
    app.require_subcommand(1);

    Flags flags;
    struct Command {
        const char* name;
        const char* help;
    };
    const Command commands[] = {
        {"ingest", "Build the hourly panel from the source files"},
        {"test", "ADF and ARCH-LM specification tests on a panel"},
        {"fit", "Fit the requested specifications and write the coefficient tables"},
        {"simulate", "Write a synthetic source fixture with known ground truth"},
        {"report", "Render the combined table from existing fit outputs"},
        {"pipeline", "Sources to panel, tests, fits, report and plot data"},
    };
    std::string chosen;
    for (const auto& c : commands) {
        auto* sub = app.add_subcommand(c.name, c.help);
        sub->add_option("--config", flags.config, "INI configuration file")->check(CLI::ExistingFile);
        sub->add_option("--out", flags.out, "Output directory");
        sub->add_option("--seed", flags.seed, "Seed for the simulate subcommand");
        if (std::string(c.name) != "simulate") {
            sub->add_option("--spec", flags.spec, "Comma-separated specification ids, e.g. 1.1,1.5");
            sub->add_option("--velocity", flags.velocity, "Velocity family for the default specs")
                ->check(CLI::IsMember({"v1", "v2"}));
            sub->add_option("--lm-lags", flags.lm_lags, "ARCH-LM lag order")->check(CLI::PositiveNumber);
            sub->add_option("--adf-lags", flags.adf_lags, "ADF lag order or 'auto'");
        }
        if (std::string(c.name) == "test" || std::string(c.name) == "fit") {
            sub->add_option("--panel", flags.panel, "Use an existing panel.csv instead of the sources")
                ->check(CLI::ExistingFile);
        }
        sub->callback([&chosen, name = std::string(c.name)] { chosen = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    return run(chosen, flags);
}
