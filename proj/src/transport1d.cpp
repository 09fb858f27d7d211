#include "qcdlab/transport1d.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qcdlab {

namespace {

constexpr double kMassTol = 1e-8;

// Quadrature matching the Measure1D cumulative construction.
double discrete_mass(const GridDensity& reference, const GridDensity& rho) {
    double total = 0.0;
    for (std::size_t i = 1; i < reference.size(); ++i) {
        const double xl = reference.node(i - 1), xr = reference.node(i);
        const double xm = 0.5 * (xl + xr);
        const double fl = rho.eval(xl) * reference.eval(xl);
        const double fm = rho.eval(xm) * reference.eval(xm);
        const double fr = rho.eval(xr) * reference.eval(xr);
        total += (xr - xl) * (fl + 4.0 * fm + fr) / 6.0;
    }
    return total;
}

} // namespace

Measure1D::Measure1D(GridDensity reference, GridDensity rel_density)
    : reference_(std::move(reference)), rho_(std::move(rel_density)) {
    if (std::abs(rho_.a() - reference_.a()) > 1e-12 ||
        std::abs(rho_.b() - reference_.b()) > 1e-12)
        throw std::invalid_argument("Measure1D: rho must live on the reference grid interval");
    if (rho_.size() != reference_.size())
        rho_ = rho_.resampled(reference_.size());

    // Nodal cumulative mass of rho*h (trapezoid is exact for products of
    // linear pieces up to the quadratic term; refine with the midpoint value).
    const std::size_t m = reference_.size();
    cum_.assign(m, 0.0);
    for (std::size_t i = 1; i < m; ++i) {
        const double xl = reference_.node(i - 1), xr = reference_.node(i);
        const double xm = 0.5 * (xl + xr);
        const double fl = lebesgue_density(xl), fm = lebesgue_density(xm),
                     fr = lebesgue_density(xr);
        cum_[i] = cum_[i - 1] + (xr - xl) * (fl + 4.0 * fm + fr) / 6.0;
    }
    const double total = cum_.back();
    if (!(total > 0.0)) throw std::invalid_argument("Measure1D: zero total mass");
    if (std::abs(total - 1.0) > kMassTol)
        throw std::invalid_argument("Measure1D: total mass must be 1 within 1e-8");
}

Measure1D Measure1D::uniform_blocks(const GridDensity& reference,
                                    const std::vector<std::pair<double, double>>& blocks) {
    if (blocks.empty()) throw std::invalid_argument("uniform_blocks: need at least one block");
    // Block edges snap to the refined grid; the piecewise-linear density then
    // ramps over at most one cell on either side of each block.
    const std::size_t m = std::max<std::size_t>(reference.size(), 2049);
    const double d = (reference.b() - reference.a()) / double(m - 1);
    std::vector<double> values(m, 0.0);
    for (const auto& [lo, hi] : blocks) {
        if (!(hi > lo)) throw std::invalid_argument("uniform_blocks: empty block");
        const auto i0 = std::size_t(std::clamp(std::round((lo - reference.a()) / d), 0.0, double(m - 1)));
        const auto i1 = std::size_t(std::clamp(std::round((hi - reference.a()) / d), 0.0, double(m - 1)));
        if (i1 <= i0) throw std::invalid_argument("uniform_blocks: block thinner than the grid");
        for (std::size_t i = i0; i <= i1; ++i) values[i] = 1.0;
    }
    const GridDensity ref = reference.resampled(m);
    GridDensity raw(reference.a(), reference.b(), std::move(values));
    const double total = discrete_mass(ref, raw);
    if (!(total > 0.0))
        throw std::invalid_argument("uniform_blocks: blocks carry no reference mass");
    std::vector<double> scaled = raw.values();
    for (double& v : scaled) v /= total;
    return Measure1D(ref, GridDensity(reference.a(), reference.b(), std::move(scaled)));
}

Measure1D Measure1D::normalized(const GridDensity& reference, const GridDensity& rel_density) {
    GridDensity rho = rel_density.size() == reference.size()
                          ? rel_density
                          : rel_density.resampled(reference.size());
    const double total = discrete_mass(reference, rho);
    if (!(total > 0.0)) throw std::invalid_argument("Measure1D::normalized: zero mass");
    std::vector<double> scaled = rho.values();
    for (double& v : scaled) v /= total;
    return Measure1D(reference, GridDensity(rho.a(), rho.b(), std::move(scaled)));
}

double Measure1D::mass() const { return cum_.back(); }

double Measure1D::cdf(double x) const {
    if (x <= reference_.a()) return 0.0;
    if (x >= reference_.b()) return cum_.back();
    const double d = reference_.spacing();
    const std::size_t i = std::min(reference_.size() - 2,
                                   std::size_t((x - reference_.a()) / d));
    const double xl = reference_.node(i);
    // Integrate the quadratic piece from the left node.
    const double s = x - xl;
    const double fl = lebesgue_density(xl), fx = lebesgue_density(x),
                 fm = lebesgue_density(xl + 0.5 * s);
    return cum_[i] + s * (fl + 4.0 * fm + fx) / 6.0;
}

double Measure1D::quantile(double p) const {
    if (!(p > 0.0 && p < 1.0))
        throw std::domain_error("quantile: p must lie in (0,1)");
    const double target = p * cum_.back();
    const auto it = std::lower_bound(cum_.begin(), cum_.end(), target);
    std::size_t i = it == cum_.begin() ? 0 : std::size_t(it - cum_.begin()) - 1;
    i = std::min(i, reference_.size() - 2);
    // Bisect inside the cell; the cell mass is monotone in position.
    double lo = reference_.node(i), hi = reference_.node(i + 1);
    for (int iter = 0; iter < 60; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (cdf(mid) < target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

MonotoneMap monotone_map(const Measure1D& mu0, const Measure1D& mu1,
                         const TransportOptions& opts) {
    if (std::abs(mu0.reference().a() - mu1.reference().a()) > 1e-12 ||
        std::abs(mu0.reference().b() - mu1.reference().b()) > 1e-12)
        throw std::invalid_argument("monotone_map: measures must share the reference density");
    if (!(mu0.mass() > 0.0)) throw std::invalid_argument("monotone_map: mu0 has zero mass");

    MonotoneMap map;
    const std::size_t P = opts.quantile_levels;
    map.levels.resize(P);
    map.source.resize(P);
    map.image.resize(P);
    for (std::size_t k = 0; k < P; ++k) {
        const double p = (double(k) + 0.5) / double(P);
        map.levels[k] = p;
        map.source[k] = mu0.quantile(p);
        map.image[k] = mu1.quantile(p);
    }
    return map;
}

DisplacementPath displacement_interpolation(const Measure1D& mu0, const Measure1D& mu1,
                                            double t, const TransportOptions& opts) {
    if (!(t >= 0.0 && t <= 1.0))
        throw std::domain_error("displacement_interpolation: t must lie in [0,1]");
    const MonotoneMap map = monotone_map(mu0, mu1, opts);
    const std::size_t P = map.levels.size();

    DisplacementPath path;
    path.t = t;
    path.source = map.source;
    path.map_samples.resize(P);
    path.jacobian_samples.resize(P);
    path.rho_t_samples.resize(P);

    for (std::size_t k = 0; k < P; ++k)
        path.map_samples[k] = (1.0 - t) * map.source[k] + t * map.image[k];

    const GridDensity& h = mu0.reference();
    for (std::size_t k = 0; k < P; ++k) {
        const std::size_t kl = k == 0 ? 0 : k - 1;
        const std::size_t kr = k + 1 == P ? k : k + 1;
        const double dx = map.source[kr] - map.source[kl];
        const double dz = path.map_samples[kr] - path.map_samples[kl];
        path.jacobian_samples[k] = dx > 0.0 ? dz / dx : 1.0;
        const double num = mu0.rel_density().eval(map.source[k]) * h.eval(map.source[k]);
        const double den = h.eval(path.map_samples[k]) * path.jacobian_samples[k];
        path.rho_t_samples[k] = den > 0.0 ? num / den : 0.0;
    }

    // Reconstruct rho_t on the reference grid from the pushed-forward
    // cumulative function; centered differences keep the total mass exact.
    const std::size_t m = h.size();
    const double d = h.spacing();
    auto image_cdf = [&](double x) -> double {
        if (x < path.map_samples.front()) return 0.0;
        if (x >= path.map_samples.back()) return 1.0;
        const auto it = std::upper_bound(path.map_samples.begin(), path.map_samples.end(), x);
        const std::size_t k = std::size_t(it - path.map_samples.begin()); // first sample > x
        const double zl = k == 0 ? path.map_samples.front() : path.map_samples[k - 1];
        const double zr = path.map_samples[k];
        const double frac = zr > zl ? (x - zl) / (zr - zl) : 0.0;
        return (double(k) + frac) / double(P);
    };
    std::vector<double> values(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double hx = h.values()[i];
        if (hx <= 0.0) continue;
        const double xl = h.node(i) - 0.5 * d, xr = h.node(i) + 0.5 * d;
        values[i] = std::max(0.0, (image_cdf(xr) - image_cdf(xl)) / (d * hx));
    }
    path.rho_t = GridDensity(h.a(), h.b(), std::move(values));
    return path;
}

InterpolationWeights cd_weights(double K, double N) {
    const CurvatureParams params(K, N);
    auto s = [params](double u, double theta) { return coeff::sigma(u, theta, params); };
    return {s, s, "cd"};
}

InterpolationWeights mcp_weights(double K, double N) {
    const CurvatureParams params(K, N);
    auto s = [params](double u, double theta) { return coeff::sigma(u, theta, params); };
    auto zero = [](double, double) { return 0.0; };
    return {s, zero, "mcp"};
}

InterpolationWeights qcd_weights(double Q, double K, double N) {
    if (!(Q >= 1.0)) throw std::invalid_argument("qcd_weights: Q must be >= 1");
    const CurvatureParams params(K, N);
    const double scale = std::pow(Q, -1.0 / (N - 1.0));
    auto s = [params, scale](double u, double theta) {
        const double v = coeff::sigma(u, theta, params);
        return v == kInf ? kInf : scale * v;
    };
    return {s, s, "qcd"};
}

ClassificationReport verify_interpolation(const Measure1D& mu0, const Measure1D& mu1,
                                          const InterpolationWeights& weights, double N,
                                          const std::vector<double>& t_grid,
                                          const TransportOptions& opts) {
    const MonotoneMap map = monotone_map(mu0, mu1, opts);
    const std::size_t P = map.levels.size();

    // rho thresholds mirror the almost-everywhere qualifier of the condition.
    double rho0_max = 0.0;
    std::vector<double> rho0(P);
    for (std::size_t k = 0; k < P; ++k) {
        rho0[k] = mu0.rel_density().eval(map.source[k]);
        rho0_max = std::max(rho0_max, rho0[k]);
    }
    const double rho_cut = opts.rho_threshold_rel * rho0_max;

    const GridDensity& h = mu0.reference();
    ClassificationReport report;
    report.worst_violation = kInf;

    for (double t : t_grid) {
        if (!(t > 0.0 && t < 1.0))
            throw std::invalid_argument("verify_interpolation: t grid must lie in (0,1)");
        for (std::size_t k = 0; k < P; ++k) {
            if (rho0[k] <= rho_cut) continue;
            const double x0 = map.source[k], x1 = map.image[k];
            const double theta = std::abs(x1 - x0);
            const double xt = (1.0 - t) * x0 + t * x1;

            // Change-of-variables densities along the quantile flow; the
            // endpoint density rho_1 uses the same measured Jacobian so the
            // whole chain lives on the transported plan.
            const std::size_t kl = k == 0 ? 0 : k - 1;
            const std::size_t kr = k + 1 == P ? k : k + 1;
            const double dx = map.source[kr] - map.source[kl];
            const double j1 = dx > 0.0 ? (map.image[kr] - map.image[kl]) / dx : 1.0;
            const double jt = (1.0 - t) + t * j1;
            const double ht = h.eval(xt), h1 = h.eval(x1);
            if (!(ht > 0.0) || !(h1 > 0.0) || !(jt > 0.0) || !(j1 > 0.0)) continue;
            const double rho_t = rho0[k] * h.eval(x0) / (ht * jt);
            const double rho_1 = rho0[k] * h.eval(x0) / (h1 * j1);
            if (!(rho_t > 0.0) || !(rho_1 > 0.0)) continue;

            const double lhs = std::pow(rho_t, -1.0 / N);
            const double s0 = weights.sigma0(1.0 - t, theta);
            const double s1 = weights.sigma1(t, theta);
            const double w0 = s0 == kInf ? kInf
                                         : std::pow(1.0 - t, 1.0 / N) * std::pow(s0, (N - 1.0) / N);
            const double w1 = s1 == kInf ? kInf : std::pow(t, 1.0 / N) * std::pow(s1, (N - 1.0) / N);
            const double rhs = ext_mul(w0, std::pow(rho0[k], -1.0 / N)) +
                               ext_mul(w1, std::pow(rho_1, -1.0 / N));
            const double slack = lhs - rhs;
            ++report.checks_performed;
            if (slack < report.worst_violation) {
                report.worst_violation = slack;
                report.witness = {x0, x1, t};
            }
        }
    }

    if (report.worst_violation == kInf) report.worst_violation = 0.0;
    // Discretization slack: the quantile flow resolves features of width
    // ~ mass/levels; a Lipschitz-scaled allowance absorbs it.
    const double L = h.lipschitz_root_bound(1.0 / (N - 1.0));
    const double feature = h.diameter() / double(P);
    report.tolerance = 1e-7 + 4.0 * (1.0 + L) * feature;
    report.passed = report.worst_violation >= -report.tolerance;
    return report;
}

QuasiBMReport quasi_bm_1d(const GridDensity& reference,
                          std::pair<double, double> A, std::pair<double, double> B,
                          double t, double Q, double N) {
    if (!(t >= 0.0 && t <= 1.0)) throw std::domain_error("quasi_bm_1d: t in [0,1]");
    if (!(Q >= 1.0)) throw std::invalid_argument("quasi_bm_1d: Q >= 1");
    QuasiBMReport r;
    r.zt_lo = (1.0 - t) * A.first + t * B.first;
    r.zt_hi = (1.0 - t) * A.second + t * B.second;
    r.massA = reference.integral(A.first, A.second);
    r.massB = reference.integral(B.first, B.second);
    r.massZ = reference.integral(r.zt_lo, r.zt_hi);
    const double rhs = ((1.0 - t) * std::pow(r.massA, 1.0 / N) + t * std::pow(r.massB, 1.0 / N)) /
                       std::pow(Q, 1.0 / N);
    r.slack = std::pow(r.massZ, 1.0 / N) - rhs;
    r.passed = r.slack >= -1e-9;
    return r;
}

} // namespace qcdlab
