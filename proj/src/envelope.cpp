#include "qcdlab/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qcdlab/parallel.hpp"

namespace qcdlab {

namespace {

// Chord in root coordinates: r0, r1 are h^{1/(N-1)} at the endpoints.
double chord_root(double t, double theta, double r0, double r1,
                  const CurvatureParams& params, double dmax) {
    if (t <= 0.0) return r0; // limiting chord values at the endpoints
    if (t >= 1.0) return r1;
    if (params.K == 0.0 || theta == 0.0) return (1.0 - t) * r0 + t * r1;
    if (params.K > 0.0 && theta >= dmax * (1.0 - 1e-15)) {
        // sigma = +inf beyond the comparison span; only zero endpoint values
        // keep the chord finite.
        if (r0 == 0.0 && r1 == 0.0) return 0.0;
        return kInf;
    }
    const double s0 = coeff::sigma(1.0 - t, theta, params);
    const double s1 = coeff::sigma(t, theta, params);
    return ext_mul(s0, r0) + ext_mul(s1, r1);
}

} // namespace

double chord_value(const GridDensity& h, const CurvatureParams& params,
                   double x, double x0, double x1) {
    if (!(x0 <= x && x <= x1))
        throw std::invalid_argument("chord_value: need x0 <= x <= x1");
    const double expo = 1.0 / (params.N - 1.0);
    if (x1 - x0 == 0.0) return h.eval(x);
    if (x == x0 || x == x1) return h.eval(x);
    const double t = (x - x0) / (x1 - x0);
    const double r = chord_root(t, x1 - x0, h.root_eval(x0, expo), h.root_eval(x1, expo),
                                params, coeff::max_diameter(params));
    if (r == kInf) return kInf;
    return std::pow(r, params.N - 1.0);
}

EnvelopeResult cd_upper_envelope(const GridDensity& h, const CurvatureParams& params,
                                 const EnvelopeOptions& opts) {
    const std::size_t m = h.size();
    const double expo = 1.0 / (params.N - 1.0);
    const double dmax = coeff::max_diameter(params);

    if (params.K > 0.0 && h.diameter() > dmax * (1.0 + 1e-12))
        throw std::invalid_argument("cd_upper_envelope: support diameter exceeds the maximal one");

    std::vector<double> roots(m);
    for (std::size_t i = 0; i < m; ++i)
        roots[i] = h.values()[i] > 0.0 ? std::pow(h.values()[i], expo) : 0.0;

    const double delta = h.spacing();
    std::vector<double> env_roots(m);

    parallel_for(0, m, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            double best = roots[i];
            for (std::size_t j = 0; j <= i; ++j) {
                for (std::size_t k = i; k < m; ++k) {
                    if (j == k) continue;
                    const double theta = delta * double(k - j);
                    const double t = double(i - j) / double(k - j);
                    const double c = chord_root(t, theta, roots[j], roots[k], params, dmax);
                    if (c > best) best = c;
                }
            }
            env_roots[i] = best;
        }
    });

    EnvelopeResult result;
    std::vector<double> env_values(m);
    bool infinite = false;
    for (std::size_t i = 0; i < m; ++i) {
        if (env_roots[i] == kInf) {
            infinite = true;
            env_values[i] = kInf;
        } else {
            env_values[i] = std::pow(env_roots[i], params.N - 1.0);
        }
    }

    const double hmax = h.max_value();
    double q = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
        if (h.values()[i] > opts.eps_ratio * hmax) {
            if (env_values[i] == kInf) {
                q = kInf;
            } else if (q != kInf) {
                q = std::max(q, env_values[i] / h.values()[i]);
            }
        } else if (env_values[i] > opts.eps_ratio * hmax &&
                   i > 0 && i + 1 < m && h.values()[i] == 0.0) {
            // Positive envelope over an interior zero of h: no finite order.
            q = kInf;
        }
    }
    result.q_order = q;

    if (infinite || q == kInf) {
        for (double& v : env_values)
            if (v == kInf) v = 0.0; // placeholder values; q_order signals the failure
        result.envelope = GridDensity(h.a(), h.b(), std::move(env_values));
        result.sandwich_margin = -kInf;
        return result;
    }

    double margin = kInf;
    for (std::size_t i = 0; i < m; ++i) {
        margin = std::min(margin, env_values[i] - h.values()[i]);
        if (h.values()[i] > opts.eps_ratio * hmax)
            margin = std::min(margin, q * h.values()[i] - env_values[i]);
    }
    result.sandwich_margin = margin;
    result.envelope = GridDensity(h.a(), h.b(), std::move(env_values));
    return result;
}

} // namespace qcdlab
