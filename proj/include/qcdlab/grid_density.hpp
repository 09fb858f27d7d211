#pragma once

#include <vector>

#include "qcdlab/coefficients.hpp"

namespace qcdlab {

/// A 1D density on a closed interval [a,b], sampled at M >= 2 uniform grid
/// points and interpolated linearly in between. Evaluates to 0 outside the
/// support.
class GridDensity {
public:
    GridDensity() = default;
    GridDensity(double a, double b, std::vector<double> values);

    double a() const { return a_; }
    double b() const { return b_; }
    double diameter() const { return b_ - a_; }
    std::size_t size() const { return values_.size(); }
    double spacing() const { return (b_ - a_) / double(values_.size() - 1); }
    const std::vector<double>& values() const { return values_; }
    double node(std::size_t i) const { return a_ + spacing() * double(i); }

    /// Piecewise-linear evaluation; 0 outside [a,b].
    double eval(double x) const;

    /// eval(x)^expo with the convention 0^expo = 0.
    double root_eval(double x, double expo) const;

    double max_value() const;
    double min_value() const;

    /// Trapezoid mass of the density over its support.
    double mass() const;

    /// Exact integral of the piecewise-linear interpolant over [lo,hi]
    /// intersected with the support.
    double integral(double lo, double hi) const;

    GridDensity resampled(std::size_t m) const;
    GridDensity restricted(double lo, double hi, std::size_t m) const;

    /// Finite-difference Lipschitz bound of eval(.)^expo over the grid.
    double lipschitz_root_bound(double expo) const;

    /// True if some grid value strictly between the first and last positive
    /// nodes vanishes (the support of the induced measure would then be
    /// disconnected).
    bool has_interior_zero() const;

private:
    double a_ = 0.0, b_ = 1.0;
    std::vector<double> values_;
};

/// Density f_m = u^{N-1} whose root u solves u'' + (K/(N-1)) u = 0 on the
/// support, determined by the value and slope of u at the left endpoint.
/// These are exactly the equality cases of the one-dimensional
/// curvature-dimension inequality.
class ModelDensity {
public:
    ModelDensity(const CurvatureParams& params, double a, double b,
                 double u0, double slope0);

    const CurvatureParams& params() const { return params_; }
    double a() const { return a_; }
    double b() const { return b_; }

    /// The root u(t) in the fundamental-solution basis.
    double u(double t) const;
    /// f_m(t) = u(t)^{N-1}.
    double eval(double t) const;

    GridDensity sample(std::size_t m) const;

private:
    CurvatureParams params_;
    double a_, b_;
    double u0_, slope0_;
};

} // namespace qcdlab
