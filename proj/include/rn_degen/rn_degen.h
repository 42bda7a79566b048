#ifndef RN_DEGEN_H
#define RN_DEGEN_H

#include <stddef.h>

#if defined(RN_DEGEN_BUILDING)
#define RN_API __attribute__((visibility("default")))
#else
#define RN_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rn_status {
    RN_OK = 0,
    RN_ERR_INVALID_ARGUMENT = 1,
    RN_ERR_VALIDATION = 2,
    RN_ERR_NUMERICAL = 3,
    RN_ERR_IO = 4,
    RN_ERR_USAGE = 5,
    RN_ERR_INTERNAL = 6
} rn_status;

typedef struct rn_scenario rn_scenario;
typedef struct rn_options rn_options;
typedef struct rn_report rn_report;

RN_API const char* rn_version(void);

/* Message of the last failed call on this thread; empty when none. */
RN_API const char* rn_last_error(void);

RN_API rn_status rn_scenario_load(const char* path, rn_scenario** out);
RN_API rn_status rn_scenario_parse(const char* json_text, rn_scenario** out);
RN_API const char* rn_scenario_name(const rn_scenario* scenario);
RN_API void rn_scenario_free(rn_scenario* scenario);

/* Options start from the scenario's own settings block when passed to rn_run with no overrides. */
RN_API rn_status rn_options_create(rn_options** out);
RN_API rn_status rn_options_set_s_values(rn_options* options, const double* values, size_t count);
RN_API rn_status rn_options_set_modes(rn_options* options, size_t modes);
RN_API rn_status rn_options_set_m(rn_options* options, size_t m);
RN_API rn_status rn_options_set_dump_series(rn_options* options, int enabled);
RN_API void rn_options_free(rn_options* options);

RN_API int rn_is_command(const char* command);
RN_API const char* rn_command_list(void);

/* options may be NULL. */
RN_API rn_status rn_run(const char* command, const rn_scenario* scenario, const rn_options* options, rn_report** out);

RN_API const char* rn_report_json(const rn_report* report);
RN_API int rn_report_passed(const rn_report* report);
RN_API size_t rn_report_table_count(const rn_report* report);
RN_API const char* rn_report_table_name(const rn_report* report, size_t index);
RN_API const char* rn_report_table_csv(const rn_report* report, size_t index);
RN_API void rn_report_free(rn_report* report);

#ifdef __cplusplus
}
#endif

#endif
