// Exercises the shared library through its C interface only, plus the CLI's
// exit-code contract.

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "btcgarch/btcgarch.h"
#include "doctest.h"

namespace fs = std::filesystem;

namespace {

const std::string fixture = BTCG_FIXTURE_DIR;

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("btcg_capi_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

btcg_config* fixture_config(const fs::path& out) {
    btcg_config* cfg = nullptr;
    REQUIRE(btcg_config_new(&cfg) == BTCG_OK);
    const std::pair<const char*, std::string> settings[] = {
        {"sources.trades", fixture + "/trades.csv"}, {"sources.chain", fixture + "/chain.csv"},
        {"sources.daily", fixture + "/daily.csv"},   {"window.start", "2014-01-01"},
        {"window.end", "2014-02-11T16:00Z"},         {"fit.specs", "1.1"},
        {"output.dir", out.string()},
    };
    for (const auto& [key, value] : settings) REQUIRE(btcg_config_set(cfg, key, value.c_str()) == BTCG_OK);
    return cfg;
}

struct Run {
    int code;
    std::string output;
};

Run run_cli(const std::string& args) {
    const std::string cmd = std::string(BTCG_CLI) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    char buf[4096];
    while (const std::size_t got = std::fread(buf, 1, sizeof buf, pipe)) out.append(buf, got);
    const int status = pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

}  // namespace

TEST_CASE("version and null arguments") {
    CHECK(std::strlen(btcg_version()) > 0);
    CHECK(btcg_config_new(nullptr) == BTCG_ERR_INPUT);
    CHECK(std::strlen(btcg_last_error()) > 0);
    CHECK(btcg_panel_hours(nullptr) == 0);
    btcg_config_free(nullptr);
    btcg_panel_free(nullptr);
    btcg_fit_free(nullptr);
}

TEST_CASE("configuration errors are input errors") {
    btcg_config* cfg = nullptr;
    CHECK(btcg_config_load("/no/such/dir/run.ini", &cfg) == BTCG_ERR_INPUT);
    CHECK(cfg == nullptr);
    CHECK(std::string(btcg_last_error()).find("/no/such/dir/run.ini") != std::string::npos);

    REQUIRE(btcg_config_new(&cfg) == BTCG_OK);
    CHECK(btcg_config_set(cfg, "fit.bogus", "1") == BTCG_ERR_INPUT);
    CHECK(btcg_config_set(cfg, "window.start", "not a time") == BTCG_ERR_INPUT);
    char* dir = nullptr;
    REQUIRE(btcg_config_get_out_dir(cfg, &dir) == BTCG_OK);
    CHECK(std::string(dir) == "out");
    btcg_string_free(dir);
    btcg_config_free(cfg);
}

TEST_CASE("panel, diagnostics and a single fit") {
    const auto dir = scratch("fit");
    btcg_config* cfg = fixture_config(dir);
    btcg_panel* panel = nullptr;
    REQUIRE(btcg_panel_build(cfg, &panel) == BTCG_OK);
    CHECK(btcg_panel_hours(panel) == 1000);
    CHECK(btcg_panel_mask_count(panel) == 998);

    char* text = nullptr;
    REQUIRE(btcg_run_diagnostics(cfg, panel, dir.string().c_str(), &text) == BTCG_OK);
    CHECK(std::string(text).find("ARCH-LM") != std::string::npos);
    btcg_string_free(text);
    CHECK(fs::exists(dir / "diagnostics.txt"));

    btcg_fit* fit = nullptr;
    REQUIRE(btcg_fit_spec(cfg, panel, "1.1", &fit) == BTCG_OK);
    CHECK(btcg_fit_converged(fit) == 1);
    CHECK(btcg_fit_param_count(fit) == 11);
    CHECK(std::isfinite(btcg_fit_log_likelihood(fit)));
    const char* name = nullptr;
    double est = 0, se = 0, p = 0;
    REQUIRE(btcg_fit_param(fit, 0, &name, &est, &se, &p) == BTCG_OK);
    CHECK(std::string(name) == "mean:const");
    CHECK(se > 0.0);
    CHECK(btcg_fit_param(fit, 11, &name, &est, &se, &p) == BTCG_ERR_INPUT);
    btcg_fit_free(fit);

    CHECK(btcg_fit_spec(cfg, panel, "8.8", &fit) == BTCG_ERR_INPUT);

    REQUIRE(btcg_panel_write(panel, (dir / "written").string().c_str()) == BTCG_OK);
    btcg_panel* reread = nullptr;
    REQUIRE(btcg_panel_load_csv((dir / "written" / "panel.csv").string().c_str(), &reread) == BTCG_OK);
    CHECK(btcg_panel_mask_count(reread) == 998);
    btcg_panel_free(reread);

    btcg_panel_free(panel);
    btcg_config_free(cfg);
    fs::remove_all(dir);
}

TEST_CASE("missing source file") {
    const auto dir = scratch("missing");
    btcg_config* cfg = fixture_config(dir);
    REQUIRE(btcg_config_set(cfg, "sources.daily", "/nowhere/daily.csv") == BTCG_OK);
    CHECK(btcg_run_pipeline(cfg) == BTCG_ERR_INPUT);
    CHECK(std::string(btcg_last_error()).find("/nowhere/daily.csv") != std::string::npos);
    btcg_config_free(cfg);
    fs::remove_all(dir);
}

TEST_CASE("pipeline and report through the C interface") {
    const auto dir = scratch("pipeline");
    btcg_config* cfg = fixture_config(dir);
    REQUIRE(btcg_run_pipeline(cfg) == BTCG_OK);
    char* text = nullptr;
    REQUIRE(btcg_render_report(cfg, &text) == BTCG_OK);
    CHECK(std::string(text).find("converged") != std::string::npos);
    btcg_string_free(text);
    btcg_config_free(cfg);
    fs::remove_all(dir);
}

TEST_CASE("command line exit codes") {
    const auto dir = scratch("cli");
    {
        std::ofstream ini(dir / "run.ini");
        ini << "[sources]\ntrades = " << fixture << "/trades.csv\nchain = " << fixture
            << "/chain.csv\ndaily = " << dir.string() << "/absent.csv\n"
            << "[window]\nstart = 2014-01-01\nend = 2014-01-10\n[output]\ndir = out\n";
    }
    auto missing = run_cli("pipeline --config " + (dir / "run.ini").string());
    CHECK(missing.code == 2);
    CHECK(missing.output.find("absent.csv") != std::string::npos);

    CHECK(run_cli("--version").code == 0);
    CHECK(run_cli("fit --no-such-flag").code == 2);
    CHECK(run_cli("fit --config " + (dir / "run.ini").string() + " --spec 5.5").code == 2);

    const auto sim = run_cli("simulate --seed 3 --out " + (dir / "sim").string());
    CHECK(sim.code == 0);
    CHECK(fs::exists(dir / "sim" / "manifest.txt"));
    fs::remove_all(dir);
}
