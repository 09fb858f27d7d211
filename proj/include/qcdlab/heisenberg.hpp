#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qcdlab/spectral.hpp" // SolverFailure

namespace qcdlab {
namespace h1 {

/// Point (x, y, t) of the first Heisenberg group, z = x + iy horizontal and
/// t the vertical coordinate.
struct Point {
    double x = 0.0, y = 0.0, t = 0.0;
};

/// Covector (p_x, p_y, p_t) dual to the coordinates.
struct Covector {
    double px = 0.0, py = 0.0, pt = 0.0;
};

Point group_mul(const Point& a, const Point& b);
Point group_inverse(const Point& a);
/// Carnot dilation (x, y, t) -> (l x, l y, l^2 t).
Point dilate(const Point& a, double lambda);

/// Horizontal Hamiltonian 1/2 (h_X^2 + h_Y^2) with h_X = p_x - (y/2) p_t,
/// h_Y = p_y + (x/2) p_t; conserved along the geodesic flow.
double hamiltonian(const Point& q, const Covector& p);

struct FlowSample {
    Point q;
    Covector p;
    double s = 0.0;
};

/// RK4 integration of Hamilton's equations for the horizontal Hamiltonian.
std::vector<FlowSample> hamiltonian_flow(const Covector& p0, const Point& start,
                                         double duration, std::size_t steps);

/// Exact time-s flow from the origin (the system reduces to a rotating
/// horizontal velocity, integrable in closed form).
Point flow_from_origin(const Covector& p0, double s);

struct ShootingConfig {
    int pt_starts = 17;          // grid over p_t in [-4 pi, 4 pi]
    int angle_starts = 2;        // directions around the planar bearing
    int max_iterations = 60;
    double tolerance = 1e-12;    // endpoint residual (scaled)
};

struct DistanceResult {
    double distance = 0.0;
    Covector p0;          // minimizing initial covector
    double residual = 0.0;
    int converged = 0;    // number of converged starts
    bool multiple = false; // several distinct minimizers found
};

/// Carnot-Caratheodory distance from the identity by multi-start damped
/// Newton shooting over the time-1 exponential map; the distance of the
/// returned solution is sqrt(2 H(p0)).
DistanceResult cc_distance(const Point& target, const ShootingConfig& config = {});

struct MidpointResult {
    Point point;
    bool multiple = false;
};

/// Point at parameter t of a minimizing geodesic from a to b.
MidpointResult midpoint(const Point& a, const Point& b, double t,
                        const ShootingConfig& config = {});

// --- fast symmetry-reduced helpers (validated against the shooting path) ---

/// Distance from the origin via the rotation-reduced inversion of the
/// exponential map: for planar radius R and height T solve
/// (w - sin w) / (8 sin^2(w/2)) = |T| / R^2 on (0, 2 pi).
double reduced_distance(const Point& target);

/// Geodesic point at parameter s in [0,1] from the origin to the target,
/// via the same reduction. On the vertical axis the minimizer is not unique;
/// one representative is returned and *multiple is set when non-null.
Point reduced_geodesic_point(const Point& target, double s, bool* multiple = nullptr);

// --- Monte-Carlo estimators -------------------------------------------------

struct BetaEstimate {
    double estimate = 0.0;
    double stderr_est = 0.0;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
};

/// Measure distortion from x toward the ball B_r(y): the midpoint map is a
/// diffeomorphism on small balls away from the cut locus, so the image volume
/// ratio is the Monte-Carlo average of |det D midpoint| over the ball.
BetaEstimate distortion_beta_estimate(const Point& x, const Point& y, double t, double r,
                                      std::size_t samples, std::uint64_t seed,
                                      bool euclidean = false);

struct BallSpec {
    Point center;
    double radius = 1.0;
};

struct BMReport {
    double volA = 0.0, volB = 0.0, volZ = 0.0;
    double stderrA = 0.0, stderrB = 0.0, stderrZ = 0.0;
    double slack_bm = 0.0;  // n = 3, N = 5 exponents
    double slack_qbm = 0.0; // Q = 4, N = 5
    double stderr_slack_bm = 0.0;  // volume errors propagated through the slacks
    double stderr_slack_qbm = 0.0;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    int voxel_divisions = 0;
};

struct VolumeOptions {
    // Per-axis divisions of the sample cloud's bounding box; 0 picks a count
    // matched to the sample budget so interior voxels stay densely hit.
    int voxel_divisions = 0;
};

int auto_voxel_divisions(std::size_t samples);

/// Midpoint-set volume experiment: samples pairs from A x B, voxelizes the
/// midpoint cloud on an anisotropic grid (CC balls are r x r x r^2 pancakes,
/// cubic voxels cannot resolve them), and evaluates the Brunn-Minkowski
/// and quasi Brunn-Minkowski slacks with the group's exponents.
BMReport quasi_bm_estimate(const BallSpec& A, const BallSpec& B, double t,
                           std::size_t samples, std::uint64_t seed,
                           const VolumeOptions& opts = {}, bool euclidean = false);

struct ShrinkageReport {
    double ratio = 0.0; // m(Z_t(A, A + vertical shift)) / m(A)
    double volA = 0.0, volZ = 0.0;
    double stderr_ratio = 0.0;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
};

/// Midpoint shrinkage of a small ball against its vertical translate; the
/// ratio drops toward 1/4 as the radius shrinks.
ShrinkageReport juillet_shrinkage(double radius, double height, double t,
                                  std::size_t samples, std::uint64_t seed,
                                  const VolumeOptions& opts = {}, bool euclidean = false);

} // namespace h1
} // namespace qcdlab
