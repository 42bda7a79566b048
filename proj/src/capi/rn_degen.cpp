#include "rn_degen/rn_degen.h"

#include <exception>
#include <new>
#include <optional>
#include <string>
#include <vector>

#include "harness/commands.hpp"
#include "util/error.hpp"

struct rn_scenario {
    rn::harness::Scenario scenario;
};

struct rn_options {
    std::optional<std::vector<double>> s_values;
    std::optional<std::size_t> modes;
    std::optional<std::size_t> m;
    bool dump_series = false;
};

struct rn_report {
    std::string json;
    bool passed = false;
    std::vector<std::string> table_names;
    std::vector<std::string> table_csv;
};

namespace {

thread_local std::string last_error;

rn_status status_of(rn::ErrorKind k) {
    switch (k) {
        case rn::ErrorKind::invalid_argument: return RN_ERR_INVALID_ARGUMENT;
        case rn::ErrorKind::validation: return RN_ERR_VALIDATION;
        case rn::ErrorKind::numerical: return RN_ERR_NUMERICAL;
        case rn::ErrorKind::io: return RN_ERR_IO;
        case rn::ErrorKind::usage: return RN_ERR_USAGE;
    }
    return RN_ERR_INTERNAL;
}

template <class F>
rn_status guarded(F&& body) {
    last_error.clear();
    try {
        body();
        return RN_OK;
    } catch (const rn::Error& e) {
        last_error = e.what();
        return status_of(e.kind());
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return RN_ERR_INTERNAL;
    } catch (const std::exception& e) {
        last_error = e.what();
        return RN_ERR_INTERNAL;
    }
}

rn_status null_argument(const char* what) {
    last_error = std::string("null argument: ") + what;
    return RN_ERR_INVALID_ARGUMENT;
}

}  // namespace

extern "C" {

const char* rn_version(void) { return "1.0.0"; }

const char* rn_last_error(void) { return last_error.c_str(); }

rn_status rn_scenario_load(const char* path, rn_scenario** out) {
    if (!path || !out) return null_argument("path/out");
    return guarded([&] { *out = new rn_scenario{rn::harness::parse_scenario(path)}; });
}

rn_status rn_scenario_parse(const char* json_text, rn_scenario** out) {
    if (!json_text || !out) return null_argument("json_text/out");
    return guarded([&] { *out = new rn_scenario{rn::harness::parse_scenario_text(json_text)}; });
}

const char* rn_scenario_name(const rn_scenario* scenario) { return scenario ? scenario->scenario.name.c_str() : ""; }

void rn_scenario_free(rn_scenario* scenario) { delete scenario; }

rn_status rn_options_create(rn_options** out) {
    if (!out) return null_argument("out");
    return guarded([&] { *out = new rn_options{}; });
}

rn_status rn_options_set_s_values(rn_options* options, const double* values, size_t count) {
    if (!options || (!values && count)) return null_argument("options/values");
    for (size_t i = 0; i < count; ++i)
        if (!(values[i] > 0.0 && values[i] < 1.0)) {
            last_error = "s-values must satisfy 0 < s < 1";
            return RN_ERR_INVALID_ARGUMENT;
        }
    options->s_values = std::vector<double>(values, values + count);
    return RN_OK;
}

rn_status rn_options_set_modes(rn_options* options, size_t modes) {
    if (!options) return null_argument("options");
    if (modes < 4) {
        last_error = "modes must be at least 4";
        return RN_ERR_INVALID_ARGUMENT;
    }
    options->modes = modes;
    return RN_OK;
}

rn_status rn_options_set_m(rn_options* options, size_t m) {
    if (!options) return null_argument("options");
    options->m = m;
    return RN_OK;
}

rn_status rn_options_set_dump_series(rn_options* options, int enabled) {
    if (!options) return null_argument("options");
    options->dump_series = enabled != 0;
    return RN_OK;
}

void rn_options_free(rn_options* options) { delete options; }

int rn_is_command(const char* command) { return command && rn::harness::is_command(command) ? 1 : 0; }

const char* rn_command_list(void) {
    static const std::string list = [] {
        std::string s;
        for (const auto& n : rn::harness::command_names()) s += (s.empty() ? "" : ", ") + n;
        return s;
    }();
    return list.c_str();
}

rn_status rn_run(const char* command, const rn_scenario* scenario, const rn_options* options, rn_report** out) {
    if (!command || !scenario || !out) return null_argument("command/scenario/out");
    return guarded([&] {
        rn::harness::Settings s = scenario->scenario.settings;
        if (options) {
            if (options->s_values) {
                s.s_values = *options->s_values;
                s.s_grid = true;
            }
            if (options->modes) s.modes = *options->modes;
            if (options->m) s.m = *options->m;
            s.dump_series = options->dump_series;
        }
        const auto rep = rn::harness::run(command, scenario->scenario, s);
        auto r = new rn_report;
        r->json = rn::harness::dump_json(rep.to_json());
        r->passed = rep.passed();
        for (const auto& t : rep.tables) {
            r->table_names.push_back(t.name);
            r->table_csv.push_back(rn::harness::to_csv(t));
        }
        *out = r;
    });
}

const char* rn_report_json(const rn_report* report) { return report ? report->json.c_str() : ""; }

int rn_report_passed(const rn_report* report) { return report && report->passed ? 1 : 0; }

size_t rn_report_table_count(const rn_report* report) { return report ? report->table_names.size() : 0; }

const char* rn_report_table_name(const rn_report* report, size_t index) {
    return report && index < report->table_names.size() ? report->table_names[index].c_str() : nullptr;
}

const char* rn_report_table_csv(const rn_report* report, size_t index) {
    return report && index < report->table_csv.size() ? report->table_csv[index].c_str() : nullptr;
}

void rn_report_free(rn_report* report) { delete report; }

}  // extern "C"
