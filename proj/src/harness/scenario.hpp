#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "blowup/blowup.hpp"
#include "components/geometry.hpp"
#include "degen/degen.hpp"

namespace rn::harness {

inline constexpr int kSchemaVersion = 1;

struct KirchhoffData {
    std::vector<double> resistances;        // empty: derived from the plumbing data
    std::vector<double> emf;                // per basis cycle; empty means zero
    std::optional<std::vector<double>> inflows;  // per leg; default Im of the marked residues
};

struct Settings {
    std::size_t modes = 64;
    std::size_t m = 0;                 // 0 selects 2m₀ + 1
    std::vector<double> s_values;      // |s| applied to every edge
    bool dump_series = false;
    bool s_grid = false;               // sweep s_values even when a k-grid family is present
};

struct Scenario {
    std::string name;
    CurveGeometry geometry;
    std::vector<std::vector<cplx>> parts;   // per leg, coefficients of (z − p)^{−k} dz (ζ = 1/z at ∞)
    std::vector<SingularPart> marked;       // bound to the marked charts
    std::optional<ResistanceSchedule> schedule;
    std::vector<double> arg;                // per edge, may be empty
    std::vector<double> k_grid;
    std::optional<KirchhoffData> kirchhoff;
    Settings settings;
    nlohmann::ordered_json document;        // the validated input

    const DualGraph& graph() const { return geometry.graph(); }
    bool has_family() const { return schedule.has_value() && !k_grid.empty(); }
    DegeneratingFamily family() const;
};

// Every validation problem found in the document; empty when the scenario is valid.
std::vector<std::string> validate_scenario(const nlohmann::ordered_json& doc);

// Throws Error(validation) carrying all problems, one per line.
Scenario parse_scenario_text(const std::string& text);
Scenario parse_scenario(const std::string& path);

// Chart coefficients from global ones: u_k = a_k / r^{k−1}.
std::vector<cplx> to_chart_coefficients(const std::vector<cplx>& global, double scale);

}  // namespace rn::harness
