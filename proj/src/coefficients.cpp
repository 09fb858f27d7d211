#include "qcdlab/coefficients.hpp"

#include <cmath>

namespace qcdlab {
namespace coeff {

namespace {

// Switch to a series evaluation of the sin/sinh ratio when the branch
// argument is this small; the branch point at kappa*theta^2 = 0 is removable.
constexpr double kSeriesThreshold = 1e-8;

// g(u) = s(theta)/theta as a function of u = kappa*theta^2, valid for both
// signs of u: 1 - u/6 + u^2/120 - u^3/5040.
double sinc_ratio_series(double u) {
    return 1.0 + u * (-1.0 / 6.0 + u * (1.0 / 120.0 + u * (-1.0 / 5040.0)));
}

} // namespace

double s_kappa(double kappa, double theta) {
    if (kappa > 0.0) {
        const double r = std::sqrt(kappa);
        return std::sin(r * theta) / r;
    }
    if (kappa < 0.0) {
        const double r = std::sqrt(-kappa);
        return std::sinh(r * theta) / r;
    }
    return theta;
}

double c_kappa(double kappa, double t) {
    if (kappa > 0.0) {
        const double z = std::sqrt(kappa) * t;
        if (std::abs(z) > M_PI / 2.0) return 0.0;
        return std::cos(z);
    }
    if (kappa < 0.0) return std::cosh(std::sqrt(-kappa) * t);
    return 1.0;
}

double sigma(double t, double theta, const CurvatureParams& p) {
    if (!(t > 0.0 && t < 1.0))
        throw std::domain_error("sigma: t must lie strictly inside (0,1)");
    if (!(theta >= 0.0))
        throw std::domain_error("sigma: theta must be >= 0");

    const double nm1 = p.N - 1.0;
    if (p.K * theta * theta >= M_PI * M_PI * nm1) return kInf;
    if (theta == 0.0) return t;

    const double kappa = p.K / nm1;
    const double u = kappa * theta * theta;
    if (std::abs(u) < kSeriesThreshold)
        return t * sinc_ratio_series(u * t * t) / sinc_ratio_series(u);
    return s_kappa(kappa, t * theta) / s_kappa(kappa, theta);
}

double tau(double t, double theta, const CurvatureParams& p) {
    const double s = sigma(t, theta, p);
    if (s == kInf) return kInf;
    return std::pow(t, 1.0 / p.N) * std::pow(s, 1.0 - 1.0 / p.N);
}

double max_diameter(const CurvatureParams& p) {
    if (p.K > 0.0) return M_PI * std::sqrt((p.N - 1.0) / p.K);
    return kInf;
}

double qcd_from_mcp(double N, double n) {
    if (!(n >= 1.0))
        throw std::invalid_argument("qcd_from_mcp: n must be >= 1");
    if (n > N)
        throw std::invalid_argument("qcd_from_mcp: n must not exceed N");
    return std::exp2(N - n);
}

} // namespace coeff
} // namespace qcdlab
