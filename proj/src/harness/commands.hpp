#pragma once

#include <string>
#include <vector>

#include "harness/report.hpp"
#include "harness/scenario.hpp"

namespace rn::harness {

const std::vector<std::string>& command_names();
bool is_command(const std::string& name);

// Dispatches to the module operations. Throws Error(usage) for unknown commands or missing inputs.
Report run(const std::string& command, const Scenario& scenario, const Settings& settings);

// Up to `count` probe points on component v, on a square grid around its special points,
// kept `keep_out` chart scales away from node and marked points.
std::vector<cplx> probe_grid(const CurveGeometry& geo, std::size_t v, std::size_t count = 100, double keep_out = 0.3);

// max |Ψ − oracle| over the probe grids, relative to the largest oracle value.
struct OracleComparison {
    double max_abs_error = 0.0;
    double scale = 0.0;
    double rel_error = 0.0;
    std::size_t probes = 0;
};
OracleComparison compare_with_tree_oracle(const PlumbedCurve& curve, const std::vector<SingularPart>& marked,
                                          const GluedDifferential& psi);

}  // namespace rn::harness
