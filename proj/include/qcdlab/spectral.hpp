#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "qcdlab/grid_density.hpp"

namespace qcdlab {

/// Thrown when an iterative solver exhausts its budget; carries the best
/// bracketing information seen.
struct SolverFailure : std::runtime_error {
    explicit SolverFailure(const std::string& what) : std::runtime_error(what) {}
};

/// Closed subset Omega of the support given as a union of intervals; its
/// geodesic hull in one dimension is the enclosing interval.
struct IntervalSet {
    std::vector<std::array<double, 2>> parts; // empty means "full support"

    bool full() const { return parts.empty(); }
    double hull_lo() const;
    double hull_hi() const;
    bool contains(double x) const;
    void validate() const;
};

struct SpectralProblem {
    GridDensity density;
    double p = 2.0;       // exponent of the Poincare inequality, > 1
    IntervalSet omega;    // mass side; energy always integrates over the hull
    std::size_t grid = 2048;
    bool prefer_shooting = false; // p = 2 full-support problems route to the
                                  // eigensolver unless this cross-check flag is set
};

struct SpectralResult {
    double lambda = 0.0;
    std::vector<double> x;  // sample abscissae of the eigenfunction
    std::vector<double> f;  // eigenfunction samples
    double residual = 0.0;
    double balance = 0.0;   // int_Omega |f|^{p-2} f dm of the reported function
    std::string method;     // fd-eig | shooting | ls-minimize
};

/// Sharp flat-space constant (p-1) (2 pi / (p sin(pi/p) D))^p.
double lambda_p_closed_form(double p, double D);

/// Sharp positive-curvature spectral gap N K / (N - 1), K > 0.
double lichnerowicz(double K, double N);

/// Best constant of the L^p Poincare inequality with the p-mean-zero
/// normalization on Omega and energy on its hull. p = 2 with full Omega uses
/// a second-order finite-difference generalized eigensolve; otherwise a
/// momentum-form shooting method with bisection in lambda.
SpectralResult solve_lambda_p(const SpectralProblem& problem);

struct LogSobolevOptions {
    int random_starts = 8;
    std::uint64_t seed = 7177;
    int max_iterations = 600;
    std::size_t grid = 1024;
};

/// Upper estimate of the log-Sobolev constant by projected descent of the
/// quotient 2 int f'^2 dm / int f^2 log f^2 dm over grid functions with
/// int_Omega (f^2 - 1) dm = 0, seeded from random starts and from the
/// spectral-gap eigenfunction. Converges to the constant under refinement.
SpectralResult estimate_lambda_ls(const SpectralProblem& problem,
                                  const LogSobolevOptions& opts = {});

struct GapReport {
    double measured = 0.0;
    double bound = 0.0;     // flat closed form or positive-curvature value
    double lower = 0.0;     // bound / Q
    double ratio = 0.0;     // measured / bound
    bool lower_ok = false;  // measured >= bound/Q - tol
    bool upper_ok = false;  // measured <= bound*(1+tol); meaningful for extremal inputs
};

/// Measures lambda_p of a quasi curvature-dimension density and compares it
/// with the sharp model constant: the measured value must not drop below
/// bound/Q. The density must actually pass QCD(Q,K,N) classification.
GapReport theorem_gap(const GridDensity& h, double Q, double K, double N, double p,
                      double tol = 0.02);

} // namespace qcdlab
