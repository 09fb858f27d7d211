#include "qcdlab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "qcdlab/classify.hpp"

namespace qcdlab {

double IntervalSet::hull_lo() const {
    double lo = parts.front()[0];
    for (const auto& p : parts) lo = std::min(lo, p[0]);
    return lo;
}

double IntervalSet::hull_hi() const {
    double hi = parts.front()[1];
    for (const auto& p : parts) hi = std::max(hi, p[1]);
    return hi;
}

bool IntervalSet::contains(double x) const {
    if (parts.empty()) return true;
    for (const auto& p : parts)
        if (x >= p[0] && x <= p[1]) return true;
    return false;
}

void IntervalSet::validate() const {
    for (const auto& p : parts)
        if (!(p[1] > p[0])) throw std::invalid_argument("IntervalSet: empty part");
}

double lambda_p_closed_form(double p, double D) {
    if (!(p > 1.0)) throw std::invalid_argument("lambda_p_closed_form: p must exceed 1");
    if (!(D > 0.0)) throw std::invalid_argument("lambda_p_closed_form: D must be positive");
    return (p - 1.0) * std::pow(2.0 * M_PI / (p * std::sin(M_PI / p) * D), p);
}

double lichnerowicz(double K, double N) {
    if (!(K > 0.0)) throw std::invalid_argument("lichnerowicz: K must be positive");
    if (!(N > 1.0)) throw std::invalid_argument("lichnerowicz: N must exceed 1");
    return N / (N - 1.0) * K;
}

namespace {

// ---------------------------------------------------------------------------
// Symmetric tridiagonal eigensolve by Sturm-sequence bisection.

struct Tridiag {
    std::vector<double> diag;
    std::vector<double> off; // size n-1
};

// Number of eigenvalues strictly below lambda (LDL^T inertia count).
int sturm_count(const Tridiag& T, double lambda) {
    const std::size_t n = T.diag.size();
    int count = 0;
    double q = T.diag[0] - lambda;
    if (q < 0.0) ++count;
    for (std::size_t i = 1; i < n; ++i) {
        if (q == 0.0) q = 1e-300;
        q = T.diag[i] - lambda - T.off[i - 1] * T.off[i - 1] / q;
        if (q < 0.0) ++count;
    }
    return count;
}

// k-th smallest eigenvalue (1-based) to near machine precision.
double tridiag_eigenvalue(const Tridiag& T, int k) {
    double lo = kInf, hi = -kInf; // Gershgorin bounds
    const std::size_t n = T.diag.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double r = (i > 0 ? std::abs(T.off[i - 1]) : 0.0) +
                         (i + 1 < n ? std::abs(T.off[i]) : 0.0);
        lo = std::min(lo, T.diag[i] - r);
        hi = std::max(hi, T.diag[i] + r);
    }
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (sturm_count(T, mid) >= k)
            hi = mid;
        else
            lo = mid;
        if (hi - lo <= 1e-14 * std::max(1.0, std::abs(hi))) break;
    }
    return 0.5 * (lo + hi);
}

// Inverse iteration at a fixed shift; tridiagonal LU with partial pivoting.
std::vector<double> tridiag_eigenvector(const Tridiag& T, double lambda) {
    const std::size_t n = T.diag.size();
    std::vector<double> dl(n, 0.0), d(n, 0.0), du1(n, 0.0), du2(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = T.diag[i] - lambda;
        if (i + 1 < n) du1[i] = T.off[i];
        if (i > 0) dl[i] = T.off[i - 1];
    }
    std::vector<int> piv(n, 0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (std::abs(dl[i + 1]) > std::abs(d[i])) {
            piv[i] = 1;
            std::swap(d[i], dl[i + 1]);
            std::swap(du1[i], d[i + 1]);
            if (i + 2 < n) std::swap(du2[i], du1[i + 1]);
        }
        if (d[i] == 0.0) d[i] = 1e-300;
        const double m = dl[i + 1] / d[i];
        dl[i + 1] = m;
        d[i + 1] -= m * du1[i];
        if (i + 2 < n) du1[i + 1] -= m * du2[i];
    }
    if (d[n - 1] == 0.0) d[n - 1] = 1e-300;

    std::vector<double> y(n);
    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (double& v : y) v = uni(rng);

    for (int pass = 0; pass < 3; ++pass) {
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (piv[i]) std::swap(y[i], y[i + 1]);
            y[i + 1] -= dl[i + 1] * y[i];
        }
        for (std::size_t ii = n; ii-- > 0;) {
            double v = y[ii];
            if (ii + 1 < n) v -= du1[ii] * y[ii + 1];
            if (ii + 2 < n) v -= du2[ii] * y[ii + 2];
            y[ii] = v / d[ii];
        }
        double norm = 0.0;
        for (double v : y) norm += v * v;
        norm = std::sqrt(norm);
        for (double& v : y) v /= norm;
    }
    return y;
}

// ---------------------------------------------------------------------------
// Weighted Neumann discretization: stiffness from cell-averaged weights and a
// consistent lumped mass, so endpoint masses stay positive even when the
// weight vanishes at the interval ends.

struct Discretization {
    std::vector<double> x, h;   // nodes and weight values
    std::vector<double> cell;   // cell-averaged weight, size n-1
    std::vector<double> lumped; // lumped mass per node
    double dx = 0.0;
};

Discretization discretize(const GridDensity& density, double lo, double hi, std::size_t n) {
    Discretization D;
    D.dx = (hi - lo) / double(n - 1);
    D.x.resize(n);
    D.h.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        D.x[i] = lo + D.dx * double(i);
        D.h[i] = density.eval(D.x[i]);
    }
    D.cell.resize(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) D.cell[i] = 0.5 * (D.h[i] + D.h[i + 1]);
    D.lumped.assign(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        D.lumped[i] += D.dx * (D.h[i] / 3.0 + D.h[i + 1] / 6.0);
        D.lumped[i + 1] += D.dx * (D.h[i] / 6.0 + D.h[i + 1] / 3.0);
    }
    return D;
}

SpectralResult solve_fd_p2(const SpectralProblem& problem) {
    const GridDensity& h = problem.density;
    const std::size_t n = std::max<std::size_t>(problem.grid, 16);
    Discretization D = discretize(h, h.a(), h.b(), n);

    for (std::size_t i = 0; i < n; ++i)
        if (!(D.lumped[i] > 0.0))
            throw std::invalid_argument("solve_lambda_p: density vanishes on a whole cell");

    // symmetric similarity of the generalized problem: M^{-1/2} A M^{-1/2}
    Tridiag T;
    T.diag.resize(n);
    T.off.resize(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        double a = 0.0;
        if (i > 0) a += D.cell[i - 1] / D.dx;
        if (i + 1 < n) a += D.cell[i] / D.dx;
        T.diag[i] = a / D.lumped[i];
    }
    for (std::size_t i = 0; i + 1 < n; ++i)
        T.off[i] = -(D.cell[i] / D.dx) / std::sqrt(D.lumped[i] * D.lumped[i + 1]);

    const double lambda = tridiag_eigenvalue(T, 2);
    std::vector<double> y = tridiag_eigenvector(T, lambda);

    SpectralResult res;
    res.lambda = lambda;
    res.method = "fd-eig";
    res.x = D.x;
    res.f.resize(n);
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        res.f[i] = y[i] / std::sqrt(D.lumped[i]);
        norm = std::max(norm, std::abs(res.f[i]));
    }
    for (double& v : res.f) v /= norm;

    double rnum = 0.0, rden = 0.0, balance = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double Au = 0.0;
        if (i > 0) Au += D.cell[i - 1] / D.dx * (res.f[i] - res.f[i - 1]);
        if (i + 1 < n) Au += D.cell[i] / D.dx * (res.f[i] - res.f[i + 1]);
        const double r = Au - lambda * D.lumped[i] * res.f[i];
        rnum += r * r;
        rden += D.lumped[i] * res.f[i] * res.f[i];
        balance += D.lumped[i] * res.f[i];
    }
    res.residual = std::sqrt(rnum) / std::max(1e-300, lambda * std::sqrt(rden));
    res.balance = balance;
    return res;
}

// ---------------------------------------------------------------------------
// Shooting for general p (and restricted Omega): momentum system
//   u' = sign(v/h) |v/h|^{1/(p-1)},  v' = -lambda h 1_Omega |u|^{p-2} u,
// Neumann data v = 0 at both hull ends. Adaptive RK4 with step doubling and
// rejection; integration is split at the Omega part boundaries so the
// indicator never flips inside a step.

struct ShootState {
    double u, v;
};

struct ShootOutcome {
    double v_end = 0.0;
    int zero_crossings = 0;
    std::vector<double> xs, us;
    double balance = 0.0; // int_Omega h |u|^{p-2} u
};

struct ShootContext {
    const GridDensity* density;
    const IntervalSet* omega;
    double p;
    double lo, hi;
};

ShootState rhs(const ShootContext& ctx, double x, const ShootState& s, double lambda,
               bool in_omega) {
    const double h = std::max(ctx.density->eval(x), 1e-300);
    const double w = s.v / h;
    const double up = std::copysign(std::pow(std::abs(w), 1.0 / (ctx.p - 1.0)), w);
    const double vp =
        in_omega ? -lambda * h * std::copysign(std::pow(std::abs(s.u), ctx.p - 1.0), s.u) : 0.0;
    return {up, vp};
}

ShootState rk4_step(const ShootContext& ctx, double x, const ShootState& s, double dt,
                    double lambda, bool in_omega) {
    const ShootState k1 = rhs(ctx, x, s, lambda, in_omega);
    const ShootState k2 =
        rhs(ctx, x + 0.5 * dt, {s.u + 0.5 * dt * k1.u, s.v + 0.5 * dt * k1.v}, lambda, in_omega);
    const ShootState k3 =
        rhs(ctx, x + 0.5 * dt, {s.u + 0.5 * dt * k2.u, s.v + 0.5 * dt * k2.v}, lambda, in_omega);
    const ShootState k4 = rhs(ctx, x + dt, {s.u + dt * k3.u, s.v + dt * k3.v}, lambda, in_omega);
    return {s.u + dt / 6.0 * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u),
            s.v + dt / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v)};
}

ShootOutcome shoot(const ShootContext& ctx, double lambda, bool record) {
    std::vector<double> cuts = {ctx.lo, ctx.hi};
    for (const auto& part : ctx.omega->parts)
        for (double e : {part[0], part[1]})
            if (e > ctx.lo + 1e-14 && e < ctx.hi - 1e-14) cuts.push_back(e);
    std::sort(cuts.begin(), cuts.end());

    ShootOutcome out;
    ShootState s{1.0, 0.0};
    double prev_u = s.u;
    const double tol = 1e-10;
    const double span = ctx.hi - ctx.lo;

    for (std::size_t seg = 0; seg + 1 < cuts.size(); ++seg) {
        const double a = cuts[seg], b = cuts[seg + 1];
        const bool in_omega = ctx.omega->contains(0.5 * (a + b));
        double x = a;
        double dt = (b - a) / 64.0;
        const double dt_min = span * 1e-12;
        int guard = 0;
        while (x < b - 1e-14 * span) {
            if (++guard > 2000000) throw SolverFailure("shoot: step budget exhausted");
            dt = std::min(dt, b - x);
            const ShootState full = rk4_step(ctx, x, s, dt, lambda, in_omega);
            const ShootState half1 = rk4_step(ctx, x, s, 0.5 * dt, lambda, in_omega);
            const ShootState half2 =
                rk4_step(ctx, x + 0.5 * dt, half1, 0.5 * dt, lambda, in_omega);
            const double err = std::max(std::abs(full.u - half2.u), std::abs(full.v - half2.v));
            const double scale = tol * (1.0 + std::abs(s.u) + std::abs(s.v));
            if (err > scale && dt > dt_min) {
                dt *= 0.5;
                continue;
            }
            x += dt;
            s = half2;
            if (record) {
                out.xs.push_back(x);
                out.us.push_back(s.u);
            }
            if (s.u * prev_u < 0.0) ++out.zero_crossings;
            if (s.u != 0.0) prev_u = s.u;
            if (err < 0.1 * scale && dt < (b - a)) dt *= 1.9;
        }
    }
    out.v_end = s.v;
    // v(b) - v(a) = -lambda * int_Omega h |u|^{p-2} u, v(a) = 0
    out.balance = -s.v / std::max(lambda, 1e-300);
    return out;
}

SpectralResult solve_shooting(const SpectralProblem& problem) {
    const GridDensity& h = problem.density;
    IntervalSet omega = problem.omega;
    double lo = omega.full() ? h.a() : std::max(h.a(), omega.hull_lo());
    double hi = omega.full() ? h.b() : std::min(h.b(), omega.hull_hi());
    if (!(hi > lo)) throw std::invalid_argument("solve_lambda_p: empty hull");

    // inset singular endpoints where the weight vanishes
    const double span = hi - lo;
    if (h.eval(lo) <= 0.0) lo += 1e-9 * span;
    if (h.eval(hi) <= 0.0) hi -= 1e-9 * span;

    ShootContext ctx{&h, &omega, problem.p, lo, hi};

    // predicate turning (and staying) true exactly past the first nonzero
    // eigenvalue: the end momentum changes sign there, and past the next
    // eigenvalue the trajectory carries a second interior zero
    auto past = [&](double lambda, ShootOutcome& out) {
        out = shoot(ctx, lambda, false);
        return out.v_end > 0.0 || out.zero_crossings >= 2;
    };

    const double scale = lambda_p_closed_form(problem.p, span);
    double lam_lo = 1e-6 * scale, lam_hi = lam_lo;
    ShootOutcome probe;
    if (past(lam_lo, probe))
        throw SolverFailure("solve_lambda_p: predicate already true at the bracket floor");
    bool bracketed = false;
    for (int i = 0; i < 120; ++i) {
        lam_hi *= 1.35;
        if (past(lam_hi, probe)) {
            bracketed = true;
            break;
        }
        lam_lo = lam_hi;
    }
    if (!bracketed) throw SolverFailure("solve_lambda_p: no sign change while scanning lambda");

    int iters = 0;
    while (lam_hi - lam_lo > 1e-12 * lam_hi) {
        if (++iters > 200)
            throw SolverFailure("solve_lambda_p: bisection exceeded 200 iterations; bracket [" +
                                std::to_string(lam_lo) + ", " + std::to_string(lam_hi) + "]");
        const double mid = 0.5 * (lam_lo + lam_hi);
        if (past(mid, probe))
            lam_hi = mid;
        else
            lam_lo = mid;
    }

    const double lambda = 0.5 * (lam_lo + lam_hi);
    ShootOutcome out = shoot(ctx, lambda, true);

    SpectralResult res;
    res.lambda = lambda;
    res.method = "shooting";
    double umax = 1.0;
    for (double u : out.us) umax = std::max(umax, std::abs(u));
    const std::size_t stride = std::max<std::size_t>(1, out.xs.size() / 512);
    for (std::size_t i = 0; i < out.xs.size(); i += stride) {
        res.x.push_back(out.xs[i]);
        res.f.push_back(out.us[i] / umax);
    }
    res.residual = std::abs(out.v_end) / (lambda * umax);
    res.balance = out.balance / umax;
    return res;
}

} // namespace

SpectralResult solve_lambda_p(const SpectralProblem& problem) {
    if (!(problem.p > 1.0)) throw std::invalid_argument("solve_lambda_p: p must exceed 1");
    problem.omega.validate();
    if (!problem.omega.full()) {
        if (problem.omega.hull_lo() < problem.density.a() - 1e-12 ||
            problem.omega.hull_hi() > problem.density.b() + 1e-12)
            throw std::invalid_argument("solve_lambda_p: Omega must sit inside the support");
    }
    const bool full = problem.omega.full() ||
                      (problem.omega.parts.size() == 1 &&
                       std::abs(problem.omega.parts[0][0] - problem.density.a()) < 1e-12 &&
                       std::abs(problem.omega.parts[0][1] - problem.density.b()) < 1e-12);
    if (problem.p == 2.0 && full && !problem.prefer_shooting) return solve_fd_p2(problem);
    return solve_shooting(problem);
}

SpectralResult estimate_lambda_ls(const SpectralProblem& problem, const LogSobolevOptions& opts) {
    const GridDensity& h = problem.density;
    IntervalSet omega = problem.omega;
    omega.validate();
    const double lo = omega.full() ? h.a() : std::max(h.a(), omega.hull_lo());
    const double hi = omega.full() ? h.b() : std::min(h.b(), omega.hull_hi());
    if (!(hi > lo)) throw std::invalid_argument("estimate_lambda_ls: empty hull");

    const std::size_t n = std::max<std::size_t>(opts.grid, 16);
    Discretization D = discretize(h, lo, hi, n);
    std::vector<double> mask(n, 1.0);
    if (!omega.full())
        for (std::size_t i = 0; i < n; ++i) mask[i] = omega.contains(D.x[i]) ? 1.0 : 0.0;

    double omega_mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) omega_mass += mask[i] * D.lumped[i];
    if (!(omega_mass > 0.0))
        throw std::invalid_argument("estimate_lambda_ls: Omega carries no mass");

    const double floor_sq = 1e-12; // f^2 floor inside logarithms
    auto energy = [&](const std::vector<double>& f) {
        double e = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double df = f[i + 1] - f[i];
            e += D.cell[i] * df * df / D.dx;
        }
        return 2.0 * e;
    };
    auto entropy = [&](const std::vector<double>& f) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask[i] == 0.0) continue;
            const double q = std::max(f[i] * f[i], floor_sq);
            s += D.lumped[i] * f[i] * f[i] * std::log(q);
        }
        return s;
    };
    auto project = [&](std::vector<double>& f) {
        double m2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) m2 += mask[i] * D.lumped[i] * f[i] * f[i];
        if (!(m2 > 0.0)) return false;
        const double c = std::sqrt(omega_mass / m2);
        for (double& v : f) v *= c;
        return true;
    };
    auto quotient = [&](const std::vector<double>& f) {
        const double s = entropy(f);
        if (!(s > 1e-12 * omega_mass)) return kInf; // degenerated to a constant
        return energy(f) / s;
    };

    auto minimize = [&](std::vector<double> f) {
        if (!project(f)) return kInf;
        double best = quotient(f);
        if (best == kInf) return kInf;
        std::vector<double> grad(n), cons(n), trial(n);
        double step = 0.1;
        for (int it = 0; it < opts.max_iterations; ++it) {
            const double E = energy(f), S = entropy(f);
            if (!(S > 1e-12 * omega_mass)) break;
            for (std::size_t i = 0; i < n; ++i) {
                double Au = 0.0;
                if (i > 0) Au += D.cell[i - 1] / D.dx * (f[i] - f[i - 1]);
                if (i + 1 < n) Au += D.cell[i] / D.dx * (f[i] - f[i + 1]);
                const double dE = 4.0 * Au;
                const double q = std::max(f[i] * f[i], floor_sq);
                const double dS = mask[i] * D.lumped[i] * (2.0 * f[i] * std::log(q) + 2.0 * f[i]);
                grad[i] = (dE * S - E * dS) / (S * S);
                cons[i] = 2.0 * mask[i] * D.lumped[i] * f[i];
            }
            double gc = 0.0, cc = 0.0, gnorm = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                gc += grad[i] * cons[i];
                cc += cons[i] * cons[i];
            }
            for (std::size_t i = 0; i < n; ++i) {
                grad[i] -= gc / std::max(cc, 1e-300) * cons[i];
                gnorm = std::max(gnorm, std::abs(grad[i]));
            }
            if (gnorm < 1e-14 * best) break;
            bool improved = false;
            for (int bt = 0; bt < 25; ++bt) {
                for (std::size_t i = 0; i < n; ++i) trial[i] = f[i] - step / gnorm * grad[i];
                if (project(trial)) {
                    const double q = quotient(trial);
                    if (q < best * (1.0 - 1e-14)) {
                        best = q;
                        f = trial;
                        improved = true;
                        step *= 1.4;
                        break;
                    }
                }
                step *= 0.4;
            }
            if (!improved) break;
        }
        return best;
    };

    // spectral-gap eigenfunction start
    SpectralProblem p2 = problem;
    p2.p = 2.0;
    p2.grid = n;
    SpectralResult gap = solve_lambda_p(p2);
    auto interp_gap_f = [&](double x) {
        const auto it = std::lower_bound(gap.x.begin(), gap.x.end(), x);
        if (it == gap.x.begin()) return gap.f.front();
        if (it == gap.x.end()) return gap.f.back();
        const std::size_t k = std::size_t(it - gap.x.begin());
        const double w = (x - gap.x[k - 1]) / (gap.x[k] - gap.x[k - 1]);
        return gap.f[k - 1] * (1.0 - w) + gap.f[k] * w;
    };

    double best = kInf;
    std::vector<double> f(n);
    for (double eps : {0.5, 0.2, 0.05, 0.01}) {
        for (std::size_t i = 0; i < n; ++i) f[i] = 1.0 + eps * interp_gap_f(D.x[i]);
        best = std::min(best, minimize(f));
    }

    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> amp(-1.0, 1.0);
    for (int s = 0; s < opts.random_starts; ++s) {
        std::vector<double> coef(6);
        for (double& c : coef) c = amp(rng);
        for (std::size_t i = 0; i < n; ++i) {
            const double z = (D.x[i] - lo) / (hi - lo);
            double v = 0.0;
            for (std::size_t k = 0; k < coef.size(); ++k)
                v += coef[k] * std::cos(M_PI * double(k + 1) * z) / double(k + 1);
            f[i] = 1.0 + 0.4 * v;
        }
        best = std::min(best, minimize(f));
    }

    if (best == kInf)
        throw SolverFailure("estimate_lambda_ls: every start degenerated to a constant");

    SpectralResult res;
    res.lambda = best;
    res.method = "ls-minimize";
    return res;
}

GapReport theorem_gap(const GridDensity& h, double Q, double K, double N, double p, double tol) {
    ConditionSpec spec = ConditionSpec::qcd(Q, K, N);
    auto cls = classify(h, spec);
    if (!cls.passed)
        throw std::invalid_argument("theorem_gap: density does not pass its classification");

    SpectralProblem problem;
    problem.density = h;
    problem.p = p;
    SpectralResult sr = solve_lambda_p(problem);

    GapReport rep;
    rep.measured = sr.lambda;
    const double D = h.diameter();
    if (K == 0.0) {
        rep.bound = lambda_p_closed_form(p, D);
    } else if (K > 0.0 && p == 2.0 &&
               D >= coeff::max_diameter(CurvatureParams(K, N)) * (1.0 - 1e-9)) {
        rep.bound = lichnerowicz(K, N);
    } else {
        throw std::invalid_argument("theorem_gap: no closed-form reference for these parameters");
    }
    rep.lower = rep.bound / Q;
    rep.ratio = rep.measured / rep.bound;
    rep.lower_ok = rep.measured >= rep.lower * (1.0 - tol);
    rep.upper_ok = rep.measured <= rep.bound * (1.0 + tol);
    return rep;
}

} // namespace qcdlab
