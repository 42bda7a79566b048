#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rn_degen/rn_degen.h"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_failed = 1;
constexpr int exit_usage = 2;

int report_error(const char* what, rn_status st) {
    std::cerr << "rn-degen: " << what << ": " << rn_last_error() << "\n";
    return st == RN_ERR_USAGE || st == RN_ERR_INVALID_ARGUMENT ? exit_usage : exit_failed;
}

bool write_file(const std::filesystem::path& path, const char* text) {
    std::ofstream f(path, std::ios::binary);
    f << text;
    return static_cast<bool>(f);
}

struct Handles {
    rn_scenario* scenario = nullptr;
    rn_options* options = nullptr;
    rn_report* report = nullptr;
    ~Handles() {
        rn_report_free(report);
        rn_options_free(options);
        rn_scenario_free(scenario);
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Degenerations of real-normalized differentials"};
    app.set_version_flag("--version", std::string(rn_version()));

    std::string command;
    std::string scenario_path;
    std::vector<double> s_values;
    std::size_t modes = 0;
    std::size_t m = 0;
    std::string out_dir;
    bool dump_series = false;

    app.add_option("command", command, std::string("one of: ") + rn_command_list())->required();
    app.add_option("--scenario", scenario_path, "scenario JSON file");
    app.add_option("--s-values", s_values, "comma-separated |s| values")->delimiter(',');
    app.add_option("--modes", modes, "Fourier modes per seam");
    app.add_option("--m", m, "jet order for the balanced approximation");
    app.add_option("--out", out_dir, "directory for report.json and CSV tables");
    app.add_flag("--dump-series", dump_series, "include seam Laurent coefficients in the report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    if (!rn_is_command(command.c_str())) {
        std::cerr << "rn-degen: unknown command '" << command << "' (expected one of: " << rn_command_list() << ")\n";
        return exit_usage;
    }
    if (scenario_path.empty()) {
        std::cerr << "rn-degen: --scenario is required\n";
        return exit_usage;
    }

    Handles h;
    if (rn_status st = rn_scenario_load(scenario_path.c_str(), &h.scenario); st != RN_OK)
        return report_error("cannot load scenario", st);
    if (rn_status st = rn_options_create(&h.options); st != RN_OK) return report_error("options", st);
    if (!s_values.empty()) {
        if (rn_status st = rn_options_set_s_values(h.options, s_values.data(), s_values.size()); st != RN_OK)
            return report_error("--s-values", st);
    }
    if (modes) {
        if (rn_status st = rn_options_set_modes(h.options, modes); st != RN_OK) return report_error("--modes", st);
    }
    if (m) rn_options_set_m(h.options, m);
    rn_options_set_dump_series(h.options, dump_series ? 1 : 0);

    if (rn_status st = rn_run(command.c_str(), h.scenario, h.options, &h.report); st != RN_OK)
        return report_error(command.c_str(), st);

    if (out_dir.empty()) {
        std::fputs(rn_report_json(h.report), stdout);
    } else {
        std::error_code ec;
        const std::filesystem::path dir(out_dir);
        std::filesystem::create_directories(dir, ec);
        if (ec || !write_file(dir / "report.json", rn_report_json(h.report))) {
            std::cerr << "rn-degen: cannot write to " << out_dir << "\n";
            return exit_failed;
        }
        for (std::size_t i = 0; i < rn_report_table_count(h.report); ++i) {
            const std::string name = std::string(rn_report_table_name(h.report, i)) + ".csv";
            if (!write_file(dir / name, rn_report_table_csv(h.report, i))) {
                std::cerr << "rn-degen: cannot write " << name << "\n";
                return exit_failed;
            }
        }
        std::cerr << "rn-degen: wrote " << (dir / "report.json").string() << "\n";
    }

    if (!rn_report_passed(h.report)) {
        std::cerr << "rn-degen: one or more checks failed\n";
        return exit_failed;
    }
    return exit_ok;
}
