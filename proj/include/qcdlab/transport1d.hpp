#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "qcdlab/classify.hpp"
#include "qcdlab/grid_density.hpp"

namespace qcdlab {

/// Probability measure absolutely continuous with respect to the ambient
/// measure m = h * Lebesgue: mu = rho * m with total mass 1.
class Measure1D {
public:
    Measure1D(GridDensity reference, GridDensity rel_density);

    /// rho = c * 1_blocks relative to m, normalized to unit mass. Block
    /// edges snap to the sampling grid (spacing <= diameter/2048).
    static Measure1D uniform_blocks(const GridDensity& reference,
                                    const std::vector<std::pair<double, double>>& blocks);

    /// Rescales rho to unit mass before constructing; for densities coming
    /// out of discretized computations.
    static Measure1D normalized(const GridDensity& reference, const GridDensity& rel_density);

    const GridDensity& reference() const { return reference_; }
    const GridDensity& rel_density() const { return rho_; }

    /// Mass density rho(x)*h(x) against Lebesgue.
    double lebesgue_density(double x) const { return rho_.eval(x) * reference_.eval(x); }
    double mass() const;

    /// Cumulative function of rho*h, exact for the piecewise-linear data.
    double cdf(double x) const;
    /// Inverse of the cumulative function (p in (0,1)).
    double quantile(double p) const;

private:
    GridDensity reference_;
    GridDensity rho_;
    std::vector<double> cum_; // cdf at grid nodes
};

/// Monotone rearrangement T = G^{-1} o F sampled at common quantile levels.
struct MonotoneMap {
    std::vector<double> levels;  // probability levels
    std::vector<double> source;  // F^{-1}(p)
    std::vector<double> image;   // G^{-1}(p)
};

struct DisplacementPath {
    double t = 0.0;
    std::vector<double> source;          // quantile positions of mu0
    std::vector<double> map_samples;     // T_t at those positions
    std::vector<double> jacobian_samples; // difference quotients of T_t
    std::vector<double> rho_t_samples;   // rho_t(T_t(x)) relative to m
    GridDensity rho_t;                   // reconstructed on the reference grid
};

struct TransportOptions {
    std::size_t quantile_levels = 4096;
    double rho_threshold_rel = 1e-8; // samples with rho0 below this fraction of max are skipped
};

MonotoneMap monotone_map(const Measure1D& mu0, const Measure1D& mu1,
                         const TransportOptions& opts = {});

/// Pushes mu0 forward through T_t(x) = (1-t) x + t T(x) and reconstructs the
/// interpolated density on the reference grid through the change-of-variables
/// identity rho_t(x_t) h(x_t) J_t(x0) = rho_0(x0) h(x0).
DisplacementPath displacement_interpolation(const Measure1D& mu0, const Measure1D& mu1,
                                            double t, const TransportOptions& opts = {});

/// Interpolation weight pair (sigma_0, sigma_1) as functions of (s, theta).
struct InterpolationWeights {
    std::function<double(double, double)> sigma0;
    std::function<double(double, double)> sigma1;
    std::string name;
};

InterpolationWeights cd_weights(double K, double N);
InterpolationWeights mcp_weights(double K, double N);
InterpolationWeights qcd_weights(double Q, double K, double N);

/// Checks the interpolation inequality
///   rho_t^{-1/N}(g_t) >= (1-t)^{1/N} sigma0^{(1-t)}(theta)^{(N-1)/N} rho_0^{-1/N}(g_0)
///                      + t^{1/N}     sigma1^{(t)}(theta)^{(N-1)/N}  rho_1^{-1/N}(g_1)
/// at every transported quantile sample and every t in t_grid, and reports
/// the worst slack with its witness.
ClassificationReport verify_interpolation(const Measure1D& mu0, const Measure1D& mu1,
                                          const InterpolationWeights& weights, double N,
                                          const std::vector<double>& t_grid,
                                          const TransportOptions& opts = {});

struct QuasiBMReport {
    double zt_lo = 0.0, zt_hi = 0.0;
    double massA = 0.0, massB = 0.0, massZ = 0.0;
    double slack = 0.0; // m(Z)^{1/N} - (1/Q^{1/N}) ((1-t) m(A)^{1/N} + t m(B)^{1/N})
    bool passed = false;
};

/// One-dimensional quasi Brunn-Minkowski check on intervals: Z_t(A,B) is the
/// exact Minkowski combination (1-t)A + tB, masses are exact integrals of the
/// reference density.
QuasiBMReport quasi_bm_1d(const GridDensity& reference,
                          std::pair<double, double> A, std::pair<double, double> B,
                          double t, double Q, double N);

} // namespace qcdlab
