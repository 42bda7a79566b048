#pragma once

#include <cstddef>
#include <vector>

#include "graph/dual_graph.hpp"
#include "kirchhoff/kirchhoff.hpp"

namespace rn {

// Ordered partition of the unoriented edges; blocks[0] holds the largest resistances.
struct BlowupPoint {
    std::vector<std::vector<std::size_t>> blocks;
    std::vector<std::vector<double>> coordinates;  // parallel to blocks, max entry 1

    void validate(std::size_t edge_count) const;
    std::size_t block_of(std::size_t edge) const;
};

struct ResistanceSchedule {
    enum class Kind { parametric, table };
    Kind kind = Kind::parametric;
    std::vector<double> alpha;                // parametric: ρ_e(k) = β_e k^{α_e}
    std::vector<double> beta;
    std::vector<double> samples_k;            // table: sample abscissae
    std::vector<std::vector<double>> table;   // table[e][i] = ρ_e(samples_k[i])

    static ResistanceSchedule parametric(std::vector<double> alpha, std::vector<double> beta);
    static ResistanceSchedule tabulated(std::vector<double> ks, std::vector<std::vector<double>> values);

    std::size_t edge_count() const;
    // parametric: any k >= 1; table: k must be one of the sample abscissae
    Resistances at(double k) const;
    // ln ρ_e(k), finite even when ρ overflows
    std::vector<double> log_at(double k) const;
    void validate() const;
};

BlowupPoint classify_sequence(const ResistanceSchedule& s);

// Point of the closed non-negative sphere, indexed by edge, max entry 1.
std::vector<double> project_base(const BlowupPoint& p, std::size_t edge_count);

CurrentAssignment solve_multiscale(const DualGraph& g, const LegFlow& f, const BlowupPoint& p);

struct ConvergenceRow {
    double k = 0.0;
    std::vector<double> currents;
    double deviation = 0.0;  // max_e |c_e(k) − c_e^limit|
};

struct ConvergenceReport {
    BlowupPoint point;
    CurrentAssignment limit;
    std::vector<ConvergenceRow> rows;
    double max_deviation = 0.0;
    double final_deviation = 0.0;
    double rate = 0.0;  // fitted slope of ln deviation against ln k; 0 when deviations vanish
};

ConvergenceReport limit_of_flow_solutions(const DualGraph& g, const LegFlow& f, const ResistanceSchedule& s,
                                          const std::vector<double>& k_grid);

}  // namespace rn
