/* C interface to the btcgarch library: panel construction, specification
 * tests, GARCH-X estimation, reports and synthetic fixtures.
 *
 * Every call returns a btcg_status. On failure, btcg_last_error() describes
 * the most recent error on the calling thread. Strings returned through
 * `char**` out-parameters are released with btcg_string_free. */

#ifndef BTCGARCH_H
#define BTCGARCH_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(BTCG_BUILDING_LIBRARY)
#    define BTCG_API __declspec(dllexport)
#  else
#    define BTCG_API __declspec(dllimport)
#  endif
#else
#  define BTCG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum btcg_status {
    BTCG_OK = 0,
    BTCG_ERR_INPUT = 2,       /* bad input, configuration or I/O */
    BTCG_ERR_CONVERGENCE = 3, /* an estimation did not converge */
    BTCG_ERR_INTERNAL = 4     /* invariant violation or unexpected failure */
} btcg_status;

typedef struct btcg_config btcg_config;
typedef struct btcg_panel btcg_panel;
typedef struct btcg_fit btcg_fit;

BTCG_API const char* btcg_version(void);
BTCG_API const char* btcg_last_error(void);
BTCG_API void btcg_string_free(char* s);

/* configuration */
BTCG_API btcg_status btcg_config_new(btcg_config** out);
BTCG_API btcg_status btcg_config_load(const char* path, btcg_config** out);
/* key is "section.key" as in the INI file, e.g. "fit.specs" = "1.1,1.5" */
BTCG_API btcg_status btcg_config_set(btcg_config* cfg, const char* key, const char* value);
BTCG_API btcg_status btcg_config_get_out_dir(const btcg_config* cfg, char** out);
BTCG_API void btcg_config_free(btcg_config* cfg);

/* panels */
BTCG_API btcg_status btcg_panel_build(const btcg_config* cfg, btcg_panel** out);
BTCG_API btcg_status btcg_panel_load_csv(const char* path, btcg_panel** out);
/* panel.csv; for built panels also build_report.txt, price.csv, returns.csv */
BTCG_API btcg_status btcg_panel_write(const btcg_panel* panel, const char* dir);
BTCG_API size_t btcg_panel_hours(const btcg_panel* panel);
BTCG_API size_t btcg_panel_mask_count(const btcg_panel* panel);
BTCG_API void btcg_panel_free(btcg_panel* panel);

/* specification tests; writes diagnostics.txt into dir when dir is non-null */
BTCG_API btcg_status btcg_run_diagnostics(const btcg_config* cfg, const btcg_panel* panel, const char* dir,
                                          char** text);

/* single fit */
BTCG_API btcg_status btcg_fit_spec(const btcg_config* cfg, const btcg_panel* panel, const char* spec_id,
                                   btcg_fit** out);
BTCG_API int btcg_fit_converged(const btcg_fit* fit);
BTCG_API double btcg_fit_log_likelihood(const btcg_fit* fit);
BTCG_API size_t btcg_fit_param_count(const btcg_fit* fit);
/* name stays valid for the lifetime of the fit; any out pointer may be null */
BTCG_API btcg_status btcg_fit_param(const btcg_fit* fit, size_t index, const char** name, double* estimate,
                                    double* std_error, double* p_value);
BTCG_API void btcg_fit_free(btcg_fit* fit);

/* the configured specifications: coef_<id>.csv, summary_<id>.csv, report.txt
 * in the output directory; BTCG_ERR_CONVERGENCE if any fit fails to converge */
BTCG_API btcg_status btcg_run_fits(const btcg_config* cfg, const btcg_panel* panel);

/* sources -> panel, diagnostics, fits, report and plot data */
BTCG_API btcg_status btcg_run_pipeline(const btcg_config* cfg);

/* synthetic trades/chain/daily CSVs plus manifest.txt from the [simulate] section */
BTCG_API btcg_status btcg_simulate_fixture(const btcg_config* cfg, const char* dir);

/* report text from the coefficient and summary files in the output directory */
BTCG_API btcg_status btcg_render_report(const btcg_config* cfg, char** text);

#ifdef __cplusplus
}
#endif

#endif /* BTCGARCH_H */
