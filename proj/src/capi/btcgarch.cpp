#include "btcgarch/btcgarch.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <new>
#include <optional>
#include <sstream>
#include <string>

#include "btcgarch/error.hpp"
#include "btcgarch/report.hpp"

struct btcg_config {
    btcg::RunConfig run;
};

struct btcg_panel {
    btcg::HourlyPanel panel;
    std::optional<btcg::PanelBundle> bundle;  // set when built from sources
};

struct btcg_fit {
    btcg::FitResult result;
};

namespace {

thread_local std::string g_last_error;

btcg_status set_error(btcg_status status, const std::string& message) {
    g_last_error = message;
    return status;
}

btcg_status status_of(int category) {
    switch (category) {
        case 0: return BTCG_OK;
        case 2: return BTCG_ERR_INPUT;
        case 3: return BTCG_ERR_CONVERGENCE;
        default: return BTCG_ERR_INTERNAL;
    }
}

template <typename Fn>
btcg_status guarded(Fn&& fn) {
    try {
        g_last_error.clear();
        return fn();
    } catch (const btcg::Error& e) {
        return set_error(status_of(static_cast<int>(e.category())), e.what());
    } catch (const std::bad_alloc&) {
        return set_error(BTCG_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return set_error(BTCG_ERR_INTERNAL, std::string("internal error: ") + e.what());
    } catch (...) {
        return set_error(BTCG_ERR_INTERNAL, "internal error");
    }
}

btcg_status null_argument(const char* what) { return set_error(BTCG_ERR_INPUT, std::string("null argument: ") + what); }

void make_dir(const char* dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) btcg::fail(btcg::Errc::IoFailure, std::string("cannot create directory '") + dir + "': " + ec.message());
}

char* duplicate(const std::string& s) {
    auto* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

// Worst outcome wins: internal, then input, then convergence.
btcg_status summarize(const std::vector<btcg::SpecOutcome>& outcomes) {
    btcg_status worst = BTCG_OK;
    std::string messages;
    auto rank = [](btcg_status s) { return s == BTCG_ERR_INTERNAL ? 3 : s == BTCG_ERR_INPUT ? 2 : s == BTCG_ERR_CONVERGENCE ? 1 : 0; };
    for (const auto& o : outcomes) {
        const auto s = status_of(o.status);
        if (s == BTCG_OK) continue;
        if (rank(s) > rank(worst)) worst = s;
        if (!messages.empty()) messages += "; ";
        messages += "spec " + o.id + ": " + o.message;
    }
    if (worst != BTCG_OK) g_last_error = messages;
    return worst;
}

}  // namespace

extern "C" {

const char* btcg_version(void) { return "0.1.0"; }

const char* btcg_last_error(void) { return g_last_error.c_str(); }

void btcg_string_free(char* s) { std::free(s); }

btcg_status btcg_config_new(btcg_config** out) {
    if (!out) return null_argument("out");
    return guarded([&] {
        *out = new btcg_config{};
        return BTCG_OK;
    });
}

btcg_status btcg_config_load(const char* path, btcg_config** out) {
    if (!path || !out) return null_argument("path/out");
    return guarded([&] {
        auto cfg = std::make_unique<btcg_config>();
        cfg->run = btcg::load_config(path);
        *out = cfg.release();
        return BTCG_OK;
    });
}

btcg_status btcg_config_set(btcg_config* cfg, const char* key, const char* value) {
    if (!cfg || !key || !value) return null_argument("cfg/key/value");
    return guarded([&] {
        btcg::apply_setting(cfg->run, key, value);
        return BTCG_OK;
    });
}

btcg_status btcg_config_get_out_dir(const btcg_config* cfg, char** out) {
    if (!cfg || !out) return null_argument("cfg/out");
    return guarded([&] {
        *out = duplicate(cfg->run.out_dir);
        return BTCG_OK;
    });
}

void btcg_config_free(btcg_config* cfg) { delete cfg; }

btcg_status btcg_panel_build(const btcg_config* cfg, btcg_panel** out) {
    if (!cfg || !out) return null_argument("cfg/out");
    return guarded([&] {
        cfg->run.validate();
        auto p = std::make_unique<btcg_panel>();
        p->bundle = btcg::build_panel(cfg->run.recipe());
        p->panel = p->bundle->panel;
        *out = p.release();
        return BTCG_OK;
    });
}

btcg_status btcg_panel_load_csv(const char* path, btcg_panel** out) {
    if (!path || !out) return null_argument("path/out");
    return guarded([&] {
        std::ifstream in(path);
        if (!in) btcg::fail(btcg::Errc::IoFailure, std::string("cannot open panel file '") + path + "'");
        auto p = std::make_unique<btcg_panel>();
        p->panel = btcg::read_panel_csv(in);
        *out = p.release();
        return BTCG_OK;
    });
}

btcg_status btcg_panel_write(const btcg_panel* panel, const char* dir) {
    if (!panel || !dir) return null_argument("panel/dir");
    return guarded([&] {
        if (panel->bundle) {
            btcg::write_panel_outputs(*panel->bundle, dir);
        } else {
            make_dir(dir);
            const auto path = std::filesystem::path(dir) / "panel.csv";
            std::ofstream out(path, std::ios::binary);
            if (!out) btcg::fail(btcg::Errc::IoFailure, "cannot write '" + path.string() + "'");
            btcg::write_panel_csv(panel->panel, out);
        }
        return BTCG_OK;
    });
}

size_t btcg_panel_hours(const btcg_panel* panel) { return panel ? panel->panel.size() : 0; }

size_t btcg_panel_mask_count(const btcg_panel* panel) { return panel ? panel->panel.mask_count() : 0; }

void btcg_panel_free(btcg_panel* panel) { delete panel; }

btcg_status btcg_run_diagnostics(const btcg_config* cfg, const btcg_panel* panel, const char* dir, char** text) {
    if (!cfg || !panel) return null_argument("cfg/panel");
    return guarded([&] {
        const auto& c = cfg->run;
        const auto d = btcg::run_diagnostics(panel->panel, c.adf_lags, c.lm_lags, c.alpha);
        std::ostringstream s;
        btcg::write_diagnostics(d, s);
        if (dir) {
            make_dir(dir);
            const auto path = std::filesystem::path(dir) / "diagnostics.txt";
            std::ofstream out(path, std::ios::binary);
            if (!out) btcg::fail(btcg::Errc::IoFailure, "cannot write '" + path.string() + "'");
            out << s.str();
        }
        if (text) *text = duplicate(s.str());
        return BTCG_OK;
    });
}

btcg_status btcg_fit_spec(const btcg_config* cfg, const btcg_panel* panel, const char* spec_id, btcg_fit** out) {
    if (!cfg || !panel || !spec_id || !out) return null_argument("cfg/panel/spec_id/out");
    return guarded([&] {
        const auto& entry = btcg::find_spec(cfg->run.registry, spec_id);
        auto f = std::make_unique<btcg_fit>();
        f->result = btcg::fit(panel->panel, entry.spec(), cfg->run.fit);
        const bool converged = f->result.converged;
        *out = f.release();
        if (!converged) return set_error(BTCG_ERR_CONVERGENCE, std::string("spec ") + spec_id + " did not converge");
        return BTCG_OK;
    });
}

int btcg_fit_converged(const btcg_fit* fit) { return fit && fit->result.converged ? 1 : 0; }

double btcg_fit_log_likelihood(const btcg_fit* fit) { return fit ? fit->result.log_likelihood : 0.0; }

size_t btcg_fit_param_count(const btcg_fit* fit) { return fit ? fit->result.k : 0; }

btcg_status btcg_fit_param(const btcg_fit* fit, size_t index, const char** name, double* estimate, double* std_error,
                           double* p_value) {
    if (!fit) return null_argument("fit");
    if (index >= fit->result.k) return set_error(BTCG_ERR_INPUT, "parameter index out of range");
    if (name) *name = fit->result.names[index].c_str();
    if (estimate) *estimate = fit->result.estimates[index];
    if (std_error) *std_error = fit->result.std_errors[index];
    if (p_value) *p_value = fit->result.p_values[index];
    return BTCG_OK;
}

void btcg_fit_free(btcg_fit* fit) { delete fit; }

btcg_status btcg_run_fits(const btcg_config* cfg, const btcg_panel* panel) {
    if (!cfg || !panel) return null_argument("cfg/panel");
    return guarded([&] { return summarize(btcg::run_fits(panel->panel, cfg->run)); });
}

btcg_status btcg_run_pipeline(const btcg_config* cfg) {
    if (!cfg) return null_argument("cfg");
    return guarded([&] { return summarize(btcg::run_pipeline(cfg->run).specs); });
}

btcg_status btcg_simulate_fixture(const btcg_config* cfg, const char* dir) {
    if (!cfg || !dir) return null_argument("cfg/dir");
    return guarded([&] {
        btcg::simulate_fixture(cfg->run.simulate, dir);
        return BTCG_OK;
    });
}

btcg_status btcg_render_report(const btcg_config* cfg, char** text) {
    if (!cfg || !text) return null_argument("cfg/text");
    return guarded([&] {
        const auto ids = cfg->run.requested_specs();
        const auto report = btcg::render_report(cfg->run.out_dir, ids);
        const auto path = std::filesystem::path(cfg->run.out_dir) / "report.txt";
        std::ofstream out(path, std::ios::binary);
        if (!out) btcg::fail(btcg::Errc::IoFailure, "cannot write '" + path.string() + "'");
        out << report;
        *text = duplicate(report);
        return BTCG_OK;
    });
}

}  // extern "C"
