#pragma once

#include "qcdlab/grid_density.hpp"

namespace qcdlab {

struct EnvelopeResult {
    GridDensity envelope;     // the dominating curvature-dimension density f
    double q_order = 1.0;     // sup f/h over the grid; +inf when no finite sandwich exists
    double sandwich_margin = 0.0; // min over grid of min(q_order*h - f, f - h)
};

struct EnvelopeOptions {
    // Ratios f/h are evaluated only where h > eps_ratio * max(h); near
    // endpoint zeros the sandwich extends by continuity.
    double eps_ratio = 1e-6;
};

/// Value at x of the interpolation chord of h spanned by x0 <= x <= x1,
///   (sigma^{(1-t)}(|x1-x0|) h^{1/(N-1)}(x0) + sigma^{(t)}(...) h^{1/(N-1)}(x1))^{N-1},
/// where t is determined by x = (1-t)x0 + t x1. Degenerate endpoints return
/// h at that point. Chords of length >= the maximal diameter contribute +inf
/// unless both endpoint values vanish.
double chord_value(const GridDensity& h, const CurvatureParams& params,
                   double x, double x0, double x1);

/// Pointwise supremum of all grid chords through each grid node: the minimal
/// curvature-dimension density dominating h, together with the minimal
/// quasi-convexity order q_order = sup f/h. The search over pairs is exact
/// (O(M^3)); desk-scale grids keep it cheap.
EnvelopeResult cd_upper_envelope(const GridDensity& h, const CurvatureParams& params,
                                 const EnvelopeOptions& opts = {});

} // namespace qcdlab
