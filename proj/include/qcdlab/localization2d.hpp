#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qcdlab/classify.hpp"
#include "qcdlab/spectral.hpp" // SolverFailure

namespace qcdlab {
namespace loc2d {

struct Vec2 {
    double x = 0.0, y = 0.0;
};

/// Rectangular cell grid over [x0, x0 + W*cell] x [y0, y0 + H*cell];
/// cells are indexed row-major, iy * W + ix.
struct PlanarGrid {
    int W = 0, H = 0;
    double cell = 1.0;
    double x0 = 0.0, y0 = 0.0;

    std::size_t size() const { return std::size_t(W) * std::size_t(H); }
    Vec2 center(int ix, int iy) const {
        return {x0 + (ix + 0.5) * cell, y0 + (iy + 0.5) * cell};
    }
};

/// Balanced cell function g against the cell measure (Lebesgue by default):
/// sum g * m vanishes, positive and negative parts are transported onto each
/// other.
struct PlanarInstance {
    PlanarGrid grid;
    std::vector<double> g;    // cell values
    std::vector<double> mass; // cell measures

    static PlanarInstance unit_square(int W, int H, std::vector<double> g_values);
    void validate() const;
};

struct Atom {
    Vec2 pos;
    double mass = 0.0;
};

struct PlanEdge {
    int src = 0, snk = 0;
    double flow = 0.0;
};

struct TransportSolution {
    std::vector<Atom> sources, sinks;
    std::vector<PlanEdge> plan;
    double cost = 0.0;
    std::vector<double> u_source, u_sink; // Kantorovich potential at the atoms
    double dual_value = 0.0;
    double duality_gap = 0.0;             // cost - dual value; zero at optimality
    std::vector<double> u_cells;          // potential extended to every cell
    int coarsen = 1;                      // grid coarsening factor used for clustering
};

/// Exact L1 optimal transport between the positive and negative parts of g*m,
/// clustered to at most atom_cap atoms per side by deterministic grid
/// coarsening, solved by successive shortest paths with potentials. The dual
/// potential is extended to all cells through u(x) = min_j (u(y_j) + |x-y_j|).
TransportSolution solve_l1_ot(const PlanarInstance& instance, int atom_cap = 400);

struct Ray {
    Vec2 origin;          // point at arclength 0
    Vec2 dir;             // unit direction of decreasing potential
    double length = 0.0;
    double flow = 0.0;    // transported mass carried by the merged segments
    double u_origin = 0.0;
    double u_rate_error = 0.0; // max deviation of u from unit-rate decrease
};

struct RayOptions {
    double angle_tol = 0.06;   // radians
    double dist_tol_cells = 0.9;
    double gap_tol_cells = 2.0;
};

/// Chains the saturated atom pairs of the plan into maximal collinear
/// segments. Atoms feeding several non-collinear partners keep their edges as
/// separate rays; the count of such branch atoms is reported.
std::vector<Ray> extract_rays(const PlanarInstance& instance, const TransportSolution& sol,
                              const RayOptions& opts = {}, int* branch_atoms = nullptr);

struct Needle {
    double s_min = 0.0, s_max = 0.0;
    std::vector<double> h;      // 1D density samples per bin (mass / bin width)
    std::vector<double> g_proj; // signed g-mass per bin
    double mass = 0.0;
    double g_abs_mass = 0.0;
    double balance_residual = 0.0; // |sum g m| over the needle
};

struct NeedleDecomposition {
    std::vector<Ray> rays;
    std::vector<Needle> needles;
    std::vector<double> u_cells;
    double uncovered_mass = 0.0;  // |g|-carrying mass off every tube
    double ambiguous_fraction = 0.0; // mass split between equidistant rays
};

/// Projects every cell within tube_width of a unique nearest ray onto that
/// ray's arclength; equidistant cells split evenly.
NeedleDecomposition needle_disintegration(const PlanarInstance& instance,
                                          const TransportSolution& sol,
                                          const std::vector<Ray>& rays, double tube_width);

struct NeedleCheck {
    double max_balance_rel = 0.0;   // max residual / needle mass
    double min_concavity_slack = 0.0;
    double concavity_allowance = 0.0; // grid allowance the slack is compared against
    double uncovered_rel = 0.0;     // uncovered |g| mass / total |g| mass
    bool balance_ok = false;
    bool concavity_ok = false;
    bool leak_ok = false;
};

struct NeedleCheckOptions {
    double balance_tol = 1e-3;      // per needle, relative to its mass
    double concavity_cells = 5.0;   // allowance in grid-tolerance multiples
    double leak_tol = 1e-6;
};

/// Report-only verification of the needle properties: per-needle balance,
/// flat-ambient concavity of the needle densities (curvature-dimension with
/// K = 0 and dimension ambient_n), and the off-tube g leak.
NeedleCheck verify_needles(const PlanarInstance& instance, const NeedleDecomposition& dec,
                           double ambient_n, const NeedleCheckOptions& opts = {});

} // namespace loc2d
} // namespace qcdlab
