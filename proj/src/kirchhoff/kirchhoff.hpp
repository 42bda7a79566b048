#pragma once

#include <cstddef>
#include <vector>

#include "graph/dual_graph.hpp"

namespace rn {

// Antisymmetric current, stored once per unoriented edge as c_{2k}.
struct CurrentAssignment {
    std::vector<double> values;

    CurrentAssignment() = default;
    explicit CurrentAssignment(std::size_t edges) : values(edges, 0.0) {}

    double at(std::size_t oriented) const {
        double c = values.at(oriented >> 1U);
        return (oriented & 1U) ? -c : c;
    }
    std::size_t size() const { return values.size(); }
    double max_abs() const;
};

CurrentAssignment operator+(const CurrentAssignment& a, const CurrentAssignment& b);
CurrentAssignment operator-(const CurrentAssignment& a, const CurrentAssignment& b);
CurrentAssignment operator*(double s, const CurrentAssignment& a);

using Resistances = std::vector<double>;

// Values on the basis cycles returned by cycle_basis(g).
struct ElectromotiveForce {
    std::vector<double> values;

    double evaluate(const CycleBasis& basis, const std::vector<int>& coefficients) const;
};

struct VoltagePotential {
    std::vector<double> values;
    std::vector<std::vector<std::size_t>> order;  // classes of equal potential, highest first
};

CurrentAssignment solve_flow(const DualGraph& g, const LegFlow& f, const Resistances& rho);
CurrentAssignment solve_force(const DualGraph& g, const ElectromotiveForce& emf, const Resistances& rho);
CurrentAssignment solve_general(const DualGraph& g, const LegFlow& f, const ElectromotiveForce& emf,
                                const Resistances& rho);

// Independent route for the flow problem: grounded weighted Laplacian.
CurrentAssignment solve_flow_laplacian(const DualGraph& g, const LegFlow& f, const Resistances& rho);

VoltagePotential voltage_potential(const DualGraph& g, const CurrentAssignment& c, const Resistances& rho);

struct KirchhoffResiduals {
    double conservation = 0.0;  // max_v |Σ_{e∈E_v} c_e + Σ f_ℓ|
    double cycle = 0.0;         // max over basis cycles |Σ c_e ρ_e − ℰ_γ|
};

KirchhoffResiduals kirchhoff_residuals(const DualGraph& g, const LegFlow& f, const ElectromotiveForce& emf,
                                       const Resistances& rho, const CurrentAssignment& c);

// Σ_{e∈γ} c_e ρ_e along an oriented cycle.
double cycle_drop(const OrientedCycle& cyc, const CurrentAssignment& c, const Resistances& rho);

struct ForceBound {
    double max_loop_force = 0.0;  // |ℰ|
    double bound = 0.0;           // N |ℰ| / min ρ
    bool enumerated = false;      // false when only basis cycles were used
    std::size_t simple_loops = 0;
};

double flow_bound(const LegFlow& f);
ForceBound force_bound(const DualGraph& g, const ElectromotiveForce& emf, const Resistances& rho,
                       std::size_t enumeration_rank_limit = 16);

// All simple cycles, enumerated as GF(2) combinations of a fundamental basis.
std::vector<OrientedCycle> simple_cycles(const DualGraph& g, const CycleBasis& basis);

// Rejects non-positive or sub-1e-12 resistances; returns true when some ρ < 1e-6.
bool check_resistances(const Resistances& rho, std::size_t edges, const char* where);

}  // namespace rn
