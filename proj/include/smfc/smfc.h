/* smfc: SMFC energy forecasting and activation-scheduling toolkit.
 *
 * C interface to the forecasting core. All objects are opaque handles
 * released with their matching *_free function. Functions returning
 * smfc_status give 0 on success; on failure smfc_last_error() describes
 * the problem for the calling thread.
 */
#ifndef SMFC_SMFC_H
#define SMFC_SMFC_H

#include <stddef.h>

#if defined(_WIN32)
#define SMFC_API __declspec(dllexport)
#else
#define SMFC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef int smfc_status;
#define SMFC_OK 0
#define SMFC_ERROR 1

SMFC_API const char* smfc_version(void);
SMFC_API const char* smfc_last_error(void);

/* ---- raw sample series ---------------------------------------------- */

typedef struct smfc_series smfc_series;

/* Delimited trace with header timestamp,voltage,current,power,ec,temp,vwc;
 * timestamps are epoch seconds or ISO-8601. Unparsable rows are skipped. */
SMFC_API smfc_status smfc_series_parse_file(const char* path, double deployment_start,
                                            smfc_series** out, size_t* rows_read,
                                            size_t* rows_skipped);
/* Drops exact-zero-voltage outage rows. */
SMFC_API smfc_status smfc_series_sanitize(const smfc_series* series, smfc_series** out,
                                          size_t* removed);
SMFC_API smfc_status smfc_series_write_file(const smfc_series* series, const char* path);
SMFC_API size_t smfc_series_count(const smfc_series* series);
/* Counts inter-sample gaps larger than threshold seconds. */
SMFC_API smfc_status smfc_series_gap_stats(const smfc_series* series, double threshold,
                                           size_t* gap_count, double* max_gap);
SMFC_API void smfc_series_free(smfc_series* series);

typedef struct {
    unsigned long long seed;
    double days;
    double start_timestamp;
    double base_voltage;
    double drift_fraction;
    double diurnal_amplitude;
    double noise_level;
    double current_scale;
    double zero_rate;
} smfc_synth_config;

SMFC_API void smfc_synth_config_default(smfc_synth_config* config);
SMFC_API smfc_status smfc_series_synth(const smfc_synth_config* config, smfc_series** out);

/* ---- resampling and supervised datasets ------------------------------ */

typedef struct smfc_resampled smfc_resampled;
typedef struct smfc_dataset smfc_dataset;

/* horizon in seconds: 180, 300, 900, 1800 or 3600 */
SMFC_API smfc_status smfc_resample(const smfc_series* series, double horizon,
                                   smfc_resampled** out);
SMFC_API size_t smfc_resampled_count(const smfc_resampled* resampled);
SMFC_API size_t smfc_resampled_missing_count(const smfc_resampled* resampled);
SMFC_API void smfc_resampled_free(smfc_resampled* resampled);

SMFC_API smfc_status smfc_build_supervised(const smfc_resampled* resampled,
                                           double deployment_start, smfc_dataset** out,
                                           size_t* windows_dropped);
SMFC_API size_t smfc_dataset_count(const smfc_dataset* dataset);
SMFC_API double smfc_dataset_horizon(const smfc_dataset* dataset);
/* target[3] = voltage, current, power of the target interval */
SMFC_API smfc_status smfc_dataset_target(const smfc_dataset* dataset, size_t index,
                                         double target[3], double* interval_start);
SMFC_API smfc_status smfc_dataset_split(const smfc_dataset* dataset, double train_fraction,
                                        double val_fraction, double test_fraction,
                                        smfc_dataset** train, smfc_dataset** val,
                                        smfc_dataset** test);
/* Order-sensitive hash of the windows; matches the fingerprint stored in
 * ensembles trained on the same data. */
SMFC_API smfc_status smfc_dataset_fingerprint(const smfc_dataset* dataset,
                                              unsigned long long* out);
/* Contiguous window range [begin, end). */
SMFC_API smfc_status smfc_dataset_slice(const smfc_dataset* dataset, size_t begin, size_t end,
                                        smfc_dataset** out);
/* Walk-forward fold k in 1..4: first 20k% train, next 10% naive history,
 * next 10% test. */
SMFC_API smfc_status smfc_dataset_tscv(const smfc_dataset* dataset, int fold,
                                       smfc_dataset** train, smfc_dataset** naive_history,
                                       smfc_dataset** test);
SMFC_API void smfc_dataset_free(smfc_dataset* dataset);

/* ---- quantile ensembles ---------------------------------------------- */

typedef struct smfc_ensemble smfc_ensemble;

typedef struct {
    int hidden_size;
    double learning_rate;
    size_t batch_size;
    int max_epochs;
    int patience;
    double grad_clip_norm;
    unsigned long long seed;
    double lower_alpha;
    double upper_alpha;
} smfc_train_options;

/* Fills defaults; batch size follows the per-horizon schedule. */
SMFC_API smfc_status smfc_train_options_default(smfc_train_options* options, double horizon);

SMFC_API smfc_status smfc_train_ensemble(const smfc_dataset* train, const smfc_dataset* val,
                                         const smfc_train_options* options,
                                         smfc_ensemble** out);
SMFC_API smfc_status smfc_ensemble_save(const smfc_ensemble* ensemble, const char* path);
SMFC_API smfc_status smfc_ensemble_load(const char* path, smfc_ensemble** out);
SMFC_API double smfc_ensemble_horizon(const smfc_ensemble* ensemble);
SMFC_API unsigned long long smfc_ensemble_fingerprint(const smfc_ensemble* ensemble);
/* quantile: 0 lower, 1 median, 2 upper */
SMFC_API smfc_status smfc_ensemble_summary(const smfc_ensemble* ensemble, int quantile,
                                           int* epochs_run, double* best_val_loss);
SMFC_API void smfc_ensemble_free(smfc_ensemble* ensemble);

/* ---- forecasts -------------------------------------------------------- */

typedef struct smfc_forecast_series smfc_forecast_series;

SMFC_API smfc_status smfc_forecast(const smfc_ensemble* ensemble, const smfc_dataset* test,
                                   smfc_forecast_series** out);
SMFC_API size_t smfc_forecast_count(const smfc_forecast_series* series);
/* values[9]: v_lo v_med v_hi, i_lo i_med i_hi, p_lo p_med p_hi */
SMFC_API smfc_status smfc_forecast_get(const smfc_forecast_series* series, size_t index,
                                       double values[9], double* interval_start);
SMFC_API smfc_status smfc_forecast_export_file(const smfc_forecast_series* series,
                                               const smfc_dataset* test, const char* path);
/* fraction of forecasts with lower > median or median > upper, per output */
SMFC_API smfc_status smfc_forecast_crossing(const smfc_forecast_series* series, double out[3]);
SMFC_API smfc_status smfc_forecast_coverage(const smfc_forecast_series* series,
                                            const smfc_dataset* actual, double out[3]);
SMFC_API void smfc_forecast_free(smfc_forecast_series* series);

/* ---- metrics ----------------------------------------------------------- */

SMFC_API smfc_status smfc_mape(const double* predicted, const double* actual, size_t n,
                               double* out_percent, size_t* excluded);
SMFC_API smfc_status smfc_total_energy_error(const double* predicted_power,
                                             const double* actual_power, size_t n,
                                             double interval_seconds, double* out_percent);
SMFC_API smfc_status smfc_failed_rate(size_t failed, size_t scheduled, double* out);
SMFC_API smfc_status smfc_missed_rate(size_t missed, size_t max_possible, double* out);

/* ---- harvesting simulation --------------------------------------------- */

#define SMFC_ENERGY_MATCHED_LOAD 0
#define SMFC_ENERGY_MEASURED_VI 1

typedef struct {
    double internal_resistance;  /* ohms */
    double harvester_efficiency; /* (0, 1] */
    double activation_energy;    /* joules */
    int energy_model;            /* SMFC_ENERGY_* */
    double initial_stored_energy;
} smfc_harvest_config;

SMFC_API void smfc_harvest_config_default(smfc_harvest_config* config);

/* matched-load conversion: eta * V^2 / (4 R_int) */
SMFC_API smfc_status smfc_usable_power(double voltage, const smfc_harvest_config* config,
                                       double* out_watts);
SMFC_API smfc_status smfc_usable_energy_vi(const double* voltage, const double* current,
                                           size_t n, double interval_seconds,
                                           const smfc_harvest_config* config,
                                           double* out_joules);
SMFC_API smfc_status smfc_oracle_max(const double* actual_energy, size_t n,
                                     const smfc_harvest_config* config, size_t* out);

typedef struct smfc_sim smfc_sim;

typedef struct {
    size_t scheduled;
    size_t failed;
    size_t successful;
    size_t missed;
    size_t max_possible;
} smfc_sim_totals;

SMFC_API smfc_status smfc_simulate(const double* forecast_energy, const double* actual_energy,
                                   size_t n, const smfc_harvest_config* config,
                                   double first_interval_start, double interval_seconds,
                                   smfc_sim** out);
SMFC_API smfc_status smfc_naive_simulate(const double* history_voltage, size_t history_n,
                                         const double* actual_energy, size_t n,
                                         double interval_seconds,
                                         const smfc_harvest_config* config,
                                         double first_interval_start, smfc_sim** out);
SMFC_API smfc_status smfc_sim_totals_get(const smfc_sim* sim, smfc_sim_totals* out);
SMFC_API smfc_status smfc_sim_export_file(const smfc_sim* sim, const char* path);
SMFC_API void smfc_sim_free(smfc_sim* sim);

#ifdef __cplusplus
}
#endif

#endif /* SMFC_SMFC_H */
