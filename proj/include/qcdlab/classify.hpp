#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qcdlab/grid_density.hpp"

namespace qcdlab {

enum class ConditionKind { CD, MCP, QCD, CGTD };

ConditionKind condition_kind_from_string(const std::string& s);
std::string to_string(ConditionKind k);

/// Names one curvature-dimension-type condition: CD(K,N), MCP(K,N),
/// QCD(Q,K,N) or CGTD(K,N,n).
struct ConditionSpec {
    ConditionKind kind = ConditionKind::CD;
    double K = 0.0;
    double N = 2.0;
    double Q = 1.0; // QCD only, >= 1
    double n = 1.0; // CGTD only, 1 <= n <= N

    static ConditionSpec cd(double K, double N) { return {ConditionKind::CD, K, N, 1.0, 1.0}; }
    static ConditionSpec mcp(double K, double N) { return {ConditionKind::MCP, K, N, 1.0, 1.0}; }
    static ConditionSpec qcd(double Q, double K, double N) { return {ConditionKind::QCD, K, N, Q, 1.0}; }
    static ConditionSpec cgtd(double K, double N, double n) { return {ConditionKind::CGTD, K, N, 1.0, n}; }

    void validate() const;
};

struct Witness {
    double x0 = 0.0, x1 = 0.0, t = 0.5;
};

struct ClassificationReport {
    bool passed = false;
    double worst_violation = 0.0; // signed slack, negative = violation
    Witness witness;
    std::uint64_t checks_performed = 0;
    double tolerance = 0.0; // the pass threshold actually used (>= 0)
    std::string diagnostic;   // non-empty for structural failures
};

struct ClassifyOptions {
    std::vector<double> t_grid;      // empty -> {0.1,...,0.9}
    int random_t_per_pair = 16;
    std::uint64_t seed = 20240901;
    double base_tolerance = 1e-9;
};

std::vector<double> default_t_grid();

/// Checks the defining interpolation inequality of `spec` over all ordered
/// grid-point pairs of h and all interpolation times, and reports the most
/// violated triple. Pass threshold is -(tol + L*delta) with L a
/// finite-difference Lipschitz bound of the relevant root of h and delta the
/// grid spacing, so interpolation error is absorbed without hiding real
/// violations.
ClassificationReport classify(const GridDensity& h, const ConditionSpec& spec,
                              const ClassifyOptions& opts = {});

} // namespace qcdlab
