#include "qcdlab/classify.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <random>
#include <stdexcept>

#include "qcdlab/parallel.hpp"

namespace qcdlab {

ConditionKind condition_kind_from_string(const std::string& s) {
    if (s == "cd" || s == "CD") return ConditionKind::CD;
    if (s == "mcp" || s == "MCP") return ConditionKind::MCP;
    if (s == "qcd" || s == "QCD") return ConditionKind::QCD;
    if (s == "cgtd" || s == "CGTD") return ConditionKind::CGTD;
    throw std::invalid_argument("unknown condition kind: " + s);
}

std::string to_string(ConditionKind k) {
    switch (k) {
        case ConditionKind::CD: return "cd";
        case ConditionKind::MCP: return "mcp";
        case ConditionKind::QCD: return "qcd";
        case ConditionKind::CGTD: return "cgtd";
    }
    return "?";
}

void ConditionSpec::validate() const {
    if (!(N > 1.0)) throw std::invalid_argument("ConditionSpec: N must be > 1");
    if (kind == ConditionKind::QCD && !(Q >= 1.0))
        throw std::invalid_argument("ConditionSpec: Q must be >= 1");
    if (kind == ConditionKind::CGTD && !(n >= 1.0 && n <= N))
        throw std::invalid_argument("ConditionSpec: need 1 <= n <= N");
}

std::vector<double> default_t_grid() {
    std::vector<double> t;
    for (int i = 1; i <= 9; ++i) t.push_back(0.1 * i);
    return t;
}

namespace {

struct PairCheck {
    double worst = kInf;
    Witness witness;
    std::uint64_t checks = 0;
};

// Cheap counter-based stream for the per-pair interpolation times; a full
// engine per pair would dominate the pair loop.
double splitmix_unit(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return (double(z >> 11) + 0.5) * 0x1.0p-53;
}

// Slack of the defining inequality at one (x0, x1, t) triple. `root0/root1`
// are the precomputed roots of h at the endpoints, `lhs` the root of h at the
// interpolated point. `cgtd_expo` is (N-1)/(n-1); +inf marks the n = 1
// limiting form, which degenerates to the larger of the two one-sided
// contraction bounds with coefficients sigma^{N-1}.
double triple_slack(ConditionKind kind, double lhs, double root0, double root1,
                    double s0, double s1, double q_root, double cgtd_expo,
                    double nm1) {
    switch (kind) {
        case ConditionKind::CD:
            return lhs - (ext_mul(s0, root0) + ext_mul(s1, root1));
        case ConditionKind::QCD:
            return lhs - (ext_mul(s0, root0) + ext_mul(s1, root1)) / q_root;
        case ConditionKind::MCP:
            return lhs - ext_mul(s0, root0);
        case ConditionKind::CGTD: {
            const double p0 = s0 == kInf ? kInf : std::pow(s0, cgtd_expo == kInf ? nm1 : cgtd_expo);
            const double p1 = s1 == kInf ? kInf : std::pow(s1, cgtd_expo == kInf ? nm1 : cgtd_expo);
            if (cgtd_expo == kInf)
                return lhs - std::max(ext_mul(p0, root0), ext_mul(p1, root1));
            return lhs - (ext_mul(p0, root0) + ext_mul(p1, root1));
        }
    }
    return 0.0;
}

} // namespace

ClassificationReport classify(const GridDensity& h, const ConditionSpec& spec,
                              const ClassifyOptions& opts) {
    spec.validate();
    if (h.size() < 3)
        throw std::invalid_argument("classify: density grid must have M >= 3");

    if ((spec.kind == ConditionKind::QCD || spec.kind == ConditionKind::CGTD) &&
        h.has_interior_zero())
        throw std::invalid_argument(
            "classify: density vanishes in the interior; the support of a "
            "quasi curvature-dimension density must be an interval");

    ClassificationReport report;

    const CurvatureParams params(spec.K, spec.N);
    const double dmax = coeff::max_diameter(params);
    if (spec.K > 0.0 && h.diameter() > dmax * (1.0 + 1e-12)) {
        report.passed = false;
        report.worst_violation = -kInf;
        report.witness = {h.a(), h.b(), 0.5};
        report.diagnostic = "support diameter exceeds the maximal diameter for K > 0";
        return report;
    }

    // Exponent of h in the inequality: 1/(N-1), except CGTD which compares
    // roots of order 1/(n-1) (n = 1 compares h itself).
    const double nm1 = spec.N - 1.0;
    double root_expo;
    double cgtd_expo = 0.0;
    if (spec.kind == ConditionKind::CGTD) {
        if (spec.n <= 1.0 + 1e-12) {
            root_expo = 1.0;
            cgtd_expo = kInf; // marks the limiting max-form
        } else {
            root_expo = 1.0 / (spec.n - 1.0);
            cgtd_expo = (spec.N - 1.0) / (spec.n - 1.0);
        }
    } else {
        root_expo = 1.0 / (spec.N - 1.0);
    }

    const double q_root =
        spec.kind == ConditionKind::QCD ? std::pow(spec.Q, 1.0 / (spec.N - 1.0)) : 1.0;

    const std::size_t m = h.size();
    std::vector<double> roots(m);
    for (std::size_t i = 0; i < m; ++i)
        roots[i] = h.values()[i] > 0.0 ? std::pow(h.values()[i], root_expo) : 0.0;

    std::vector<double> base_t = opts.t_grid.empty() ? default_t_grid() : opts.t_grid;
    for (double t : base_t)
        if (!(t > 0.0 && t < 1.0))
            throw std::invalid_argument("classify: t grid must lie in (0,1)");

    // Per-pair random interpolation times, reproducible from the seed and the
    // pair index alone so the pair loop can be chunked.
    const int n_rand = std::max(0, opts.random_t_per_pair);

    std::vector<std::pair<std::size_t, PairCheck>> partial;
    std::mutex partial_mutex;

    parallel_for(0, m, [&](std::size_t lo, std::size_t hi) {
        PairCheck local;
        std::vector<double> ts;
        for (std::size_t i = lo; i < hi; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                if (i == j) continue;
                const double x0 = h.node(i), x1 = h.node(j);
                const double theta = std::abs(x1 - x0);
                ts = base_t;
                if (n_rand > 0) {
                    std::uint64_t state = opts.seed ^ (0x9e3779b97f4a7c15ULL * (i * m + j + 1));
                    for (int r = 0; r < n_rand; ++r) {
                        const double u = splitmix_unit(state);
                        ts.push_back(1e-3 + u * (1.0 - 2e-3));
                    }
                }
                const bool flat = spec.K == 0.0;
                for (double t : ts) {
                    const double xt = (1.0 - t) * x0 + t * x1;
                    const double lhs = h.root_eval(xt, root_expo);
                    const double s0 = flat ? 1.0 - t : coeff::sigma(1.0 - t, theta, params);
                    const double s1 = flat ? t : coeff::sigma(t, theta, params);
                    const double slack = triple_slack(spec.kind, lhs, roots[i], roots[j],
                                                      s0, s1, q_root, cgtd_expo, nm1);
                    ++local.checks;
                    if (slack < local.worst) {
                        local.worst = slack;
                        local.witness = {x0, x1, t};
                    }
                }
            }
        }
        std::lock_guard<std::mutex> lock(partial_mutex);
        partial.emplace_back(lo, local);
    });

    // Merge in chunk order so tie-broken witnesses do not depend on thread
    // scheduling.
    std::sort(partial.begin(), partial.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    PairCheck best;
    best.worst = kInf;
    for (const auto& entry : partial) {
        const PairCheck& pc = entry.second;
        best.checks += pc.checks;
        if (pc.worst < best.worst) {
            best.worst = pc.worst;
            best.witness = pc.witness;
        }
    }

    const double L = h.lipschitz_root_bound(root_expo);
    const double tol = opts.base_tolerance + L * h.spacing();

    report.worst_violation = best.worst == kInf ? 0.0 : best.worst;
    report.witness = best.witness;
    report.checks_performed = best.checks;
    report.tolerance = tol;
    report.passed = report.worst_violation >= -tol;
    return report;
}

} // namespace qcdlab
