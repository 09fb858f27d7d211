#pragma once

#include <limits>
#include <stdexcept>

namespace qcdlab {

/// Curvature lower bound K and (generalized) dimension upper bound N > 1.
struct CurvatureParams {
    double K = 0.0;
    double N = 2.0;

    CurvatureParams() = default;
    CurvatureParams(double K_, double N_) : K(K_), N(N_) {
        if (!(N > 1.0))
            throw std::invalid_argument("CurvatureParams: N must be > 1");
    }
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Product honoring the convention inf * 0 = 0 (all other products with
/// inf stay infinite).
inline double ext_mul(double a, double b) {
    if (a == kInf || b == kInf) {
        if (a == 0.0 || b == 0.0) return 0.0;
        return kInf;
    }
    return a * b;
}

namespace coeff {

/// Generalized sine: sin branch for kappa > 0, identity for kappa = 0,
/// sinh branch for kappa < 0. Continuous in kappa.
double s_kappa(double kappa, double theta);

/// Generalized cosine: the positive-curvature branch is truncated to zero
/// outside |sqrt(kappa) t| <= pi/2.
double c_kappa(double kappa, double t);

/// Volume distortion ratio sigma^{(t)}_{K,N-1}(theta).
/// Returns +inf when K theta^2 >= pi^2 (N-1), and t at theta = 0 (the
/// continuous extension). Requires t in (0,1); the boundary values are
/// deliberately not defined.
double sigma(double t, double theta, const CurvatureParams& p);

/// Full distortion coefficient tau^{(t)}_{K,N}(theta)
///   = t^{1/N} * sigma^{(t)}_{K,N-1}(theta)^{1-1/N},
/// with inf^{1-1/N} = inf.
double tau(double t, double theta, const CurvatureParams& p);

/// Bonnet-Myers bound on diam(supp m): pi*sqrt((N-1)/K) for K > 0,
/// +inf otherwise.
double max_diameter(const CurvatureParams& p);

/// Quasi-convexity order implied by a measure contraction bound with
/// geodesic dimension N on a space of topological dimension n: Q = 2^(N-n).
double qcd_from_mcp(double N, double n);

} // namespace coeff
} // namespace qcdlab
