#include "qcdlab/grid_density.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qcdlab {

GridDensity::GridDensity(double a, double b, std::vector<double> values)
    : a_(a), b_(b), values_(std::move(values)) {
    if (!(b_ > a_))
        throw std::invalid_argument("GridDensity: support must have b > a");
    if (values_.size() < 2)
        throw std::invalid_argument("GridDensity: need at least 2 grid values");
    for (double v : values_)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw std::invalid_argument("GridDensity: values must be finite and >= 0");
}

double GridDensity::eval(double x) const {
    if (x < a_ || x > b_) return 0.0;
    const double d = spacing();
    double s = (x - a_) / d;
    auto i = std::size_t(s);
    if (i >= values_.size() - 1) return values_.back();
    const double w = s - double(i);
    return values_[i] * (1.0 - w) + values_[i + 1] * w;
}

double GridDensity::root_eval(double x, double expo) const {
    const double v = eval(x);
    if (v == 0.0 || expo == 1.0) return v;
    return std::pow(v, expo);
}

double GridDensity::max_value() const {
    return *std::max_element(values_.begin(), values_.end());
}

double GridDensity::min_value() const {
    return *std::min_element(values_.begin(), values_.end());
}

double GridDensity::mass() const { return integral(a_, b_); }

double GridDensity::integral(double lo, double hi) const {
    lo = std::max(lo, a_);
    hi = std::min(hi, b_);
    if (!(hi > lo)) return 0.0;
    const double d = spacing();
    // Sum exact cell integrals of the linear interpolant.
    double total = 0.0;
    auto cell_of = [&](double x) {
        return std::min(values_.size() - 2, std::size_t(std::max(0.0, (x - a_) / d)));
    };
    const std::size_t c0 = cell_of(lo), c1 = cell_of(hi);
    for (std::size_t c = c0; c <= c1; ++c) {
        const double xl = std::max(lo, node(c));
        const double xr = std::min(hi, node(c + 1));
        if (!(xr > xl)) continue;
        total += 0.5 * (eval(xl) + eval(xr)) * (xr - xl);
    }
    return total;
}

GridDensity GridDensity::resampled(std::size_t m) const {
    if (m < 2) throw std::invalid_argument("resampled: m must be >= 2");
    std::vector<double> v(m);
    const double d = (b_ - a_) / double(m - 1);
    for (std::size_t i = 0; i < m; ++i) v[i] = eval(a_ + d * double(i));
    return GridDensity(a_, b_, std::move(v));
}

GridDensity GridDensity::restricted(double lo, double hi, std::size_t m) const {
    lo = std::max(lo, a_);
    hi = std::min(hi, b_);
    if (!(hi > lo))
        throw std::invalid_argument("restricted: empty intersection with support");
    std::vector<double> v(m);
    const double d = (hi - lo) / double(m - 1);
    for (std::size_t i = 0; i < m; ++i) v[i] = eval(lo + d * double(i));
    return GridDensity(lo, hi, std::move(v));
}

double GridDensity::lipschitz_root_bound(double expo) const {
    const double d = spacing();
    double L = 0.0;
    double prev = values_[0] > 0.0 ? std::pow(values_[0], expo) : 0.0;
    for (std::size_t i = 1; i < values_.size(); ++i) {
        const double cur = values_[i] > 0.0 ? std::pow(values_[i], expo) : 0.0;
        L = std::max(L, std::abs(cur - prev) / d);
        prev = cur;
    }
    return L;
}

bool GridDensity::has_interior_zero() const {
    std::size_t first = values_.size(), last = 0;
    for (std::size_t i = 0; i < values_.size(); ++i)
        if (values_[i] > 0.0) {
            first = std::min(first, i);
            last = i;
        }
    if (first >= last) return false;
    for (std::size_t i = first + 1; i < last; ++i)
        if (values_[i] == 0.0) return true;
    return false;
}

ModelDensity::ModelDensity(const CurvatureParams& params, double a, double b,
                           double u0, double slope0)
    : params_(params), a_(a), b_(b), u0_(u0), slope0_(slope0) {
    if (!(b > a)) throw std::invalid_argument("ModelDensity: b must exceed a");
    if (!(u0 >= 0.0)) throw std::invalid_argument("ModelDensity: u0 must be >= 0");
    const double dmax = coeff::max_diameter(params_);
    if (b - a > dmax * (1.0 + 1e-12))
        throw std::invalid_argument("ModelDensity: support diameter exceeds the maximal one");
    // u may vanish at the endpoints but not inside.
    const int probes = 4096;
    for (int i = 1; i < probes; ++i) {
        const double t = a + (b - a) * double(i) / double(probes);
        if (!(u(t) > 0.0))
            throw std::invalid_argument("ModelDensity: root crosses zero in the interior");
    }
}

double ModelDensity::u(double t) const {
    const double kappa = params_.K / (params_.N - 1.0);
    const double s = t - a_;
    if (kappa > 0.0) {
        const double r = std::sqrt(kappa);
        return u0_ * std::cos(r * s) + slope0_ / r * std::sin(r * s);
    }
    if (kappa < 0.0) {
        const double r = std::sqrt(-kappa);
        return u0_ * std::cosh(r * s) + slope0_ / r * std::sinh(r * s);
    }
    return u0_ + slope0_ * s;
}

double ModelDensity::eval(double t) const {
    if (t < a_ || t > b_) return 0.0;
    const double v = u(t);
    if (v <= 0.0) return 0.0;
    return std::pow(v, params_.N - 1.0);
}

GridDensity ModelDensity::sample(std::size_t m) const {
    if (m < 2) throw std::invalid_argument("sample: m must be >= 2");
    std::vector<double> v(m);
    const double d = (b_ - a_) / double(m - 1);
    for (std::size_t i = 0; i < m; ++i) v[i] = eval(a_ + d * double(i));
    // snap rounding dust at conjugate zeros to exact zeros; the infinite
    // comparison coefficients at the maximal span pair only against true zeros
    double vmax = 0.0;
    for (double x : v) vmax = std::max(vmax, x);
    for (double& x : v)
        if (x < 1e-13 * vmax) x = 0.0;
    return GridDensity(a_, b_, std::move(v));
}

} // namespace qcdlab
