#include "qcdlab/localization2d.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>

namespace qcdlab {
namespace loc2d {

namespace {
double dist(const Vec2& a, const Vec2& b) { return std::hypot(a.x - b.x, a.y - b.y); }
}

PlanarInstance PlanarInstance::unit_square(int W, int H, std::vector<double> g_values) {
    if (W < 1 || H < 1) throw std::invalid_argument("unit_square: bad grid dims");
    if (g_values.size() != std::size_t(W) * std::size_t(H))
        throw std::invalid_argument("unit_square: g size mismatch");
    PlanarInstance inst;
    inst.grid = {W, H, 1.0 / double(std::max(W, H)), 0.0, 0.0};
    inst.g = std::move(g_values);
    inst.mass.assign(inst.grid.size(), inst.grid.cell * inst.grid.cell);
    return inst;
}

void PlanarInstance::validate() const {
    if (g.size() != grid.size() || mass.size() != grid.size())
        throw std::invalid_argument("PlanarInstance: array sizes do not match the grid");
    double net = 0.0, gross = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        net += g[i] * mass[i];
        gross += std::abs(g[i]) * mass[i];
    }
    if (std::abs(net) > 1e-10 * std::max(1.0, gross))
        throw std::invalid_argument("PlanarInstance: g is not balanced against the cell measure");
}

namespace {

// Deterministic clustering of a signed part of g*m by grid coarsening: atoms
// are the mass centroids of k x k blocks.
std::vector<Atom> cluster_part(const PlanarInstance& inst, bool positive, int k) {
    const auto& gr = inst.grid;
    const int bw = (gr.W + k - 1) / k, bh = (gr.H + k - 1) / k;
    std::vector<Atom> atoms;
    std::vector<double> mx(std::size_t(bw) * bh, 0.0), my(std::size_t(bw) * bh, 0.0),
        mm(std::size_t(bw) * bh, 0.0);
    for (int iy = 0; iy < gr.H; ++iy)
        for (int ix = 0; ix < gr.W; ++ix) {
            const std::size_t c = std::size_t(iy) * gr.W + ix;
            const double v = inst.g[c];
            if ((positive && v <= 0.0) || (!positive && v >= 0.0)) continue;
            const double m = std::abs(v) * inst.mass[c];
            if (m == 0.0) continue;
            const Vec2 p = gr.center(ix, iy);
            const std::size_t b = std::size_t(iy / k) * bw + std::size_t(ix / k);
            mx[b] += m * p.x;
            my[b] += m * p.y;
            mm[b] += m;
        }
    for (std::size_t b = 0; b < mm.size(); ++b)
        if (mm[b] > 0.0) atoms.push_back({{mx[b] / mm[b], my[b] / mm[b]}, mm[b]});
    return atoms;
}

int pick_coarsening(const PlanarInstance& inst, int atom_cap) {
    for (int k = 1; k <= std::max(inst.grid.W, inst.grid.H); ++k) {
        const auto pos = cluster_part(inst, true, k);
        const auto neg = cluster_part(inst, false, k);
        if (int(pos.size()) <= atom_cap && int(neg.size()) <= atom_cap) return k;
    }
    throw std::invalid_argument("solve_l1_ot: cannot cluster within the atom cap");
}

// Successive shortest paths with potentials on the bipartite transportation
// graph. Node layout: 0 = super source, 1..n = sources, n+1..n+m = sinks,
// n+m+1 = super sink.
struct FlowResult {
    std::vector<std::vector<double>> flow; // n x m
    std::vector<double> pot_src, pot_snk;
};

FlowResult min_cost_transport(const std::vector<Atom>& src, const std::vector<Atom>& snk) {
    const int n = int(src.size()), m = int(snk.size());
    FlowResult R;
    R.flow.assign(n, std::vector<double>(m, 0.0));
    R.pot_src.assign(n, 0.0);
    R.pot_snk.assign(m, 0.0);
    if (n == 0 || m == 0) return R;

    std::vector<std::vector<double>> cost(n, std::vector<double>(m));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) cost[i][j] = dist(src[i].pos, snk[j].pos);

    std::vector<double> remaining_supply(n), remaining_demand(m);
    for (int i = 0; i < n; ++i) remaining_supply[i] = src[i].mass;
    for (int j = 0; j < m; ++j) remaining_demand[j] = snk[j].mass;

    // potentials for sources and sinks keep all reduced costs non-negative
    std::vector<double>&pi = R.pot_src, &pj = R.pot_snk;
    const double inf = std::numeric_limits<double>::infinity();

    double total_left = std::accumulate(remaining_supply.begin(), remaining_supply.end(), 0.0);
    const double eps_mass = 1e-14 * std::max(1.0, total_left);
    int guard = 0;
    while (total_left > eps_mass) {
        if (++guard > 50 * (n + m + 2))
            throw SolverFailure("min_cost_transport: augmentation budget exhausted");
        // Dijkstra over sources and sinks with reduced costs. Predecessors
        // commit at settlement, never at relaxation: the transportation
        // graph is full of exact cost ties and stale relaxation pointers can
        // close cycles.
        std::vector<double> ds(n, inf), dt(m, inf);
        std::vector<int> from_src_of_snk(m, -1), from_snk_of_src(n, -1);
        struct QE {
            double d;
            int node; // < n source, >= n sink
            int pred; // settled predecessor on the other side, -1 for roots
            bool operator>(const QE& o) const { return d > o.d; }
        };
        std::priority_queue<QE, std::vector<QE>, std::greater<QE>> pq;
        for (int i = 0; i < n; ++i)
            if (remaining_supply[i] > eps_mass) {
                ds[i] = 0.0;
                pq.push({0.0, i, -1});
            }
        std::vector<char> done_s(n, 0), done_t(m, 0);
        while (!pq.empty()) {
            const QE top = pq.top();
            pq.pop();
            if (top.node < n) {
                const int i = top.node;
                if (done_s[i] || top.d > ds[i]) continue;
                done_s[i] = 1;
                from_snk_of_src[i] = top.pred;
                for (int j = 0; j < m; ++j) {
                    if (done_t[j]) continue;
                    const double rc = std::max(0.0, cost[i][j] - pi[i] + pj[j]);
                    if (ds[i] + rc < dt[j]) {
                        dt[j] = ds[i] + rc;
                        pq.push({dt[j], n + j, i});
                    }
                }
            } else {
                const int j = top.node - n;
                if (done_t[j] || top.d > dt[j]) continue;
                done_t[j] = 1;
                from_src_of_snk[j] = top.pred;
                for (int i = 0; i < n; ++i) {
                    if (done_s[i] || R.flow[i][j] <= eps_mass) continue;
                    const double rc = std::max(0.0, -cost[i][j] + pi[i] - pj[j]);
                    if (dt[j] + rc < ds[i]) {
                        ds[i] = dt[j] + rc;
                        pq.push({ds[i], i, j});
                    }
                }
            }
        }
        // cheapest sink with leftover demand
        int best_j = -1;
        for (int j = 0; j < m; ++j)
            if (remaining_demand[j] > eps_mass && dt[j] < inf &&
                (best_j < 0 || dt[j] < dt[best_j]))
                best_j = j;
        if (best_j < 0) throw SolverFailure("min_cost_transport: no augmenting path");

        // potential update capped at the augmentation distance keeps every
        // reduced cost non-negative for the next round; with the convention
        // rc = c - pi_src + pi_snk the labels are subtracted
        const double D = dt[best_j];
        for (int i = 0; i < n; ++i) pi[i] -= std::min(ds[i], D);
        for (int j = 0; j < m; ++j) pj[j] -= std::min(dt[j], D);

        // walk the path back, find the bottleneck
        double bottleneck = remaining_demand[best_j];
        {
            int j = best_j, hops = 0;
            while (true) {
                if (++hops > n + m + 2)
                    throw SolverFailure("min_cost_transport: corrupt augmenting path");
                const int i = from_src_of_snk[j];
                const int jprev = from_snk_of_src[i];
                if (jprev < 0) {
                    bottleneck = std::min(bottleneck, remaining_supply[i]);
                    break;
                }
                bottleneck = std::min(bottleneck, R.flow[i][jprev]);
                j = jprev;
            }
        }
        {
            int j = best_j;
            while (true) {
                const int i = from_src_of_snk[j];
                R.flow[i][j] += bottleneck;
                const int jprev = from_snk_of_src[i];
                if (jprev < 0) {
                    remaining_supply[i] -= bottleneck;
                    break;
                }
                R.flow[i][jprev] -= bottleneck;
                j = jprev;
            }
            remaining_demand[best_j] -= bottleneck;
        }
        total_left -= bottleneck;
    }
    return R;
}

} // namespace

TransportSolution solve_l1_ot(const PlanarInstance& instance, int atom_cap) {
    instance.validate();
    TransportSolution sol;

    double gross = 0.0;
    for (std::size_t c = 0; c < instance.g.size(); ++c)
        gross += std::abs(instance.g[c]) * instance.mass[c];
    if (gross == 0.0) {
        // nothing to transport; the zero potential is admissible
        sol.u_cells.assign(instance.grid.size(), 0.0);
        return sol;
    }

    sol.coarsen = pick_coarsening(instance, atom_cap);
    sol.sources = cluster_part(instance, true, sol.coarsen);
    sol.sinks = cluster_part(instance, false, sol.coarsen);

    // repair the tiny clustering imbalance so the flow problem closes exactly
    double sum_src = 0.0, sum_snk = 0.0;
    for (const auto& a : sol.sources) sum_src += a.mass;
    for (const auto& a : sol.sinks) sum_snk += a.mass;
    if (sum_snk > 0.0) {
        const double scale = sum_src / sum_snk;
        for (auto& a : sol.sinks) a.mass *= scale;
    }

    FlowResult flow = min_cost_transport(sol.sources, sol.sinks);

    for (int i = 0; i < int(sol.sources.size()); ++i)
        for (int j = 0; j < int(sol.sinks.size()); ++j)
            if (flow.flow[i][j] > 1e-12 * sum_src) {
                sol.plan.push_back({i, j, flow.flow[i][j]});
                sol.cost += flow.flow[i][j] * dist(sol.sources[i].pos, sol.sinks[j].pos);
            }

    // Kantorovich potential from the flow potentials: u(x) - u(y) <= |x-y|
    // with equality on the support of the plan (zero reduced cost there).
    sol.u_source = flow.pot_src;
    sol.u_sink = flow.pot_snk;

    sol.dual_value = 0.0;
    for (int i = 0; i < int(sol.sources.size()); ++i)
        sol.dual_value += sol.sources[i].mass * sol.u_source[i];
    for (int j = 0; j < int(sol.sinks.size()); ++j)
        sol.dual_value -= sol.sinks[j].mass * sol.u_sink[j];
    sol.duality_gap = sol.cost - sol.dual_value;

    // extend to all cells
    sol.u_cells.resize(instance.grid.size());
    for (int iy = 0; iy < instance.grid.H; ++iy)
        for (int ix = 0; ix < instance.grid.W; ++ix) {
            const Vec2 p = instance.grid.center(ix, iy);
            double best = kInf;
            for (int j = 0; j < int(sol.sinks.size()); ++j)
                best = std::min(best, sol.u_sink[j] + dist(p, sol.sinks[j].pos));
            sol.u_cells[std::size_t(iy) * instance.grid.W + ix] = best;
        }
    return sol;
}

std::vector<Ray> extract_rays(const PlanarInstance& instance, const TransportSolution& sol,
                              const RayOptions& opts, int* branch_atoms) {
    const double cell = instance.grid.cell;
    struct Seg {
        Vec2 a, b;
        double flow;
    };
    std::vector<Seg> segs;
    for (const auto& e : sol.plan) {
        const Vec2 a = sol.sources[e.src].pos, b = sol.sinks[e.snk].pos;
        if (dist(a, b) < 1e-12) continue;
        segs.push_back({a, b, e.flow});
    }

    if (branch_atoms) {
        int count = 0;
        auto angles_diverge = [&](const Vec2& base, std::vector<Vec2> dirs) {
            for (std::size_t p = 0; p < dirs.size(); ++p)
                for (std::size_t q = p + 1; q < dirs.size(); ++q) {
                    const double dot = dirs[p].x * dirs[q].x + dirs[p].y * dirs[q].y;
                    if (std::acos(std::clamp(dot, -1.0, 1.0)) > opts.angle_tol) return true;
                }
            (void)base;
            return false;
        };
        for (int side = 0; side < 2; ++side) {
            const auto& atoms = side == 0 ? sol.sources : sol.sinks;
            std::vector<std::vector<Vec2>> incident(atoms.size());
            for (const auto& e : sol.plan) {
                const Vec2 a = sol.sources[e.src].pos, b = sol.sinks[e.snk].pos;
                const double len = dist(a, b);
                if (len < 1e-12) continue;
                const Vec2 d{(b.x - a.x) / len, (b.y - a.y) / len};
                incident[side == 0 ? e.src : e.snk].push_back(d);
            }
            for (std::size_t k = 0; k < atoms.size(); ++k)
                if (incident[k].size() > 1 && angles_diverge(atoms[k].pos, incident[k])) ++count;
        }
        *branch_atoms = count;
    }

    // union-find over segments; merge collinear overlapping/nearby ones
    std::vector<int> parent(segs.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int v) {
        while (parent[v] != v) v = parent[v] = parent[parent[v]];
        return v;
    };
    auto mergeable = [&](const Seg& s, const Seg& t) {
        const double ls = dist(s.a, s.b), lt = dist(t.a, t.b);
        const Vec2 ds{(s.b.x - s.a.x) / ls, (s.b.y - s.a.y) / ls};
        const Vec2 dt{(t.b.x - t.a.x) / lt, (t.b.y - t.a.y) / lt};
        const double dot = std::clamp(ds.x * dt.x + ds.y * dt.y, -1.0, 1.0);
        if (std::acos(dot) > opts.angle_tol) return false;
        // endpoints of t near the line of s
        auto line_dist = [&](const Vec2& p) {
            return std::abs((p.x - s.a.x) * (-ds.y) + (p.y - s.a.y) * ds.x);
        };
        if (line_dist(t.a) > opts.dist_tol_cells * cell) return false;
        if (line_dist(t.b) > opts.dist_tol_cells * cell) return false;
        // projected intervals touch or nearly touch
        auto proj = [&](const Vec2& p) { return (p.x - s.a.x) * ds.x + (p.y - s.a.y) * ds.y; };
        const double lo_s = 0.0, hi_s = ls;
        const double p0 = proj(t.a), p1 = proj(t.b);
        const double lo_t = std::min(p0, p1), hi_t = std::max(p0, p1);
        return !(lo_t > hi_s + opts.gap_tol_cells * cell ||
                 hi_t < lo_s - opts.gap_tol_cells * cell);
    };
    for (std::size_t p = 0; p < segs.size(); ++p)
        for (std::size_t q = p + 1; q < segs.size(); ++q)
            if (find(int(p)) != find(int(q)) && mergeable(segs[p], segs[q]))
                parent[find(int(p))] = find(int(q));

    // fit one ray per group: flow-weighted direction, extent from projections
    std::vector<std::vector<int>> groups(segs.size());
    for (std::size_t p = 0; p < segs.size(); ++p) groups[find(int(p))].push_back(int(p));

    std::vector<Ray> rays;
    for (const auto& members : groups) {
        if (members.empty()) continue;
        double wx = 0.0, wy = 0.0, cx = 0.0, cy = 0.0, wsum = 0.0, fsum = 0.0;
        for (int idx : members) {
            const Seg& s = segs[idx];
            const double len = dist(s.a, s.b), w = s.flow * len;
            wx += w * (s.b.x - s.a.x) / len;
            wy += w * (s.b.y - s.a.y) / len;
            cx += w * 0.5 * (s.a.x + s.b.x);
            cy += w * 0.5 * (s.a.y + s.b.y);
            wsum += w;
            fsum += s.flow;
        }
        const double norm = std::hypot(wx, wy);
        if (norm == 0.0 || wsum == 0.0) continue;
        Ray ray;
        ray.dir = {wx / norm, wy / norm};
        const Vec2 centroid{cx / wsum, cy / wsum};
        double lo = kInf, hi = -kInf;
        for (int idx : members) {
            for (const Vec2& p : {segs[idx].a, segs[idx].b}) {
                const double s = (p.x - centroid.x) * ray.dir.x + (p.y - centroid.y) * ray.dir.y;
                lo = std::min(lo, s);
                hi = std::max(hi, s);
            }
        }
        ray.origin = {centroid.x + lo * ray.dir.x, centroid.y + lo * ray.dir.y};
        ray.length = hi - lo;
        ray.flow = fsum;
        rays.push_back(ray);
    }

    // the potential decreases at unit rate along each ray
    if (!sol.u_cells.empty()) {
        const auto& gr = instance.grid;
        auto u_at = [&](const Vec2& p) {
            const int ix = std::clamp(int((p.x - gr.x0) / gr.cell), 0, gr.W - 1);
            const int iy = std::clamp(int((p.y - gr.y0) / gr.cell), 0, gr.H - 1);
            return sol.u_cells[std::size_t(iy) * gr.W + ix];
        };
        for (auto& ray : rays) {
            ray.u_origin = u_at(ray.origin);
            double worst = 0.0;
            const int probes = std::max(2, int(ray.length / gr.cell));
            for (int k = 0; k <= probes; ++k) {
                const double s = ray.length * double(k) / double(probes);
                const Vec2 p{ray.origin.x + s * ray.dir.x, ray.origin.y + s * ray.dir.y};
                worst = std::max(worst, std::abs((ray.u_origin - u_at(p)) - s));
            }
            ray.u_rate_error = worst;
        }
    }
    return rays;
}

NeedleDecomposition needle_disintegration(const PlanarInstance& instance,
                                          const TransportSolution& sol,
                                          const std::vector<Ray>& rays, double tube_width) {
    const auto& gr = instance.grid;
    if (tube_width < gr.cell * std::sqrt(2.0) * 0.999)
        throw std::invalid_argument("needle_disintegration: tube narrower than a cell diagonal");

    NeedleDecomposition dec;
    dec.rays = rays;
    dec.u_cells = sol.u_cells;
    dec.needles.resize(rays.size());

    const double bin = gr.cell;
    std::vector<std::vector<double>> mass_bins(rays.size()), g_bins(rays.size());
    std::vector<double> smin(rays.size(), 0.0), smax(rays.size(), 0.0);
    for (std::size_t r = 0; r < rays.size(); ++r) {
        smin[r] = -0.5 * tube_width;
        smax[r] = rays[r].length + 0.5 * tube_width;
        const std::size_t nb = std::size_t((smax[r] - smin[r]) / bin) + 1;
        mass_bins[r].assign(nb, 0.0);
        g_bins[r].assign(nb, 0.0);
    }

    auto ray_distance = [&](const Ray& ray, const Vec2& p, double& s_out) {
        const double sx = p.x - ray.origin.x, sy = p.y - ray.origin.y;
        double s = sx * ray.dir.x + sy * ray.dir.y;
        s = std::clamp(s, 0.0, ray.length);
        const Vec2 q{ray.origin.x + s * ray.dir.x, ray.origin.y + s * ray.dir.y};
        s_out = s;
        return dist(p, q);
    };

    double ambiguous = 0.0, assigned = 0.0;
    const double tie_eps = 1e-9 * gr.cell;
    for (int iy = 0; iy < gr.H; ++iy)
        for (int ix = 0; ix < gr.W; ++ix) {
            const std::size_t c = std::size_t(iy) * gr.W + ix;
            const Vec2 p = gr.center(ix, iy);
            double d1 = kInf, d2 = kInf, s1 = 0.0, s2 = 0.0;
            int r1 = -1, r2 = -1;
            for (std::size_t r = 0; r < rays.size(); ++r) {
                double s;
                const double d = ray_distance(rays[r], p, s);
                if (d < d1) {
                    d2 = d1, r2 = r1, s2 = s1;
                    d1 = d, r1 = int(r), s1 = s;
                } else if (d < d2) {
                    d2 = d, r2 = int(r), s2 = s;
                }
            }
            if (r1 < 0 || d1 > tube_width) {
                if (instance.g[c] != 0.0) dec.uncovered_mass += instance.mass[c];
                continue;
            }
            const double m = instance.mass[c];
            const double gm = instance.g[c] * instance.mass[c];
            assigned += m;
            const bool tie = r2 >= 0 && d2 <= tube_width && d2 - d1 <= tie_eps;
            struct Dst {
                int ray;
                double s, share;
            };
            Dst dsts[2] = {{r1, s1, tie ? 0.5 : 1.0}, {r2, s2, tie ? 0.5 : 0.0}};
            if (tie) ambiguous += m;
            for (const auto& d : dsts) {
                if (d.share == 0.0) continue;
                auto& mb = mass_bins[d.ray];
                const auto idx = std::min(mb.size() - 1,
                                          std::size_t((d.s - smin[d.ray]) / bin));
                mb[idx] += d.share * m;
                g_bins[d.ray][idx] += d.share * gm;
            }
        }

    dec.ambiguous_fraction = assigned > 0.0 ? ambiguous / assigned : 0.0;

    for (std::size_t r = 0; r < rays.size(); ++r) {
        Needle& nd = dec.needles[r];
        nd.s_min = smin[r];
        nd.s_max = smax[r];
        nd.h.resize(mass_bins[r].size());
        nd.g_proj = g_bins[r];
        for (std::size_t k = 0; k < mass_bins[r].size(); ++k) {
            nd.h[k] = mass_bins[r][k] / bin;
            nd.mass += mass_bins[r][k];
            nd.g_abs_mass += std::abs(g_bins[r][k]);
            nd.balance_residual += g_bins[r][k];
        }
        nd.balance_residual = std::abs(nd.balance_residual);
    }
    return dec;
}

NeedleCheck verify_needles(const PlanarInstance& instance, const NeedleDecomposition& dec,
                           double ambient_n, const NeedleCheckOptions& opts) {
    NeedleCheck check;
    check.min_concavity_slack = kInf;

    double gross = 0.0;
    for (std::size_t c = 0; c < instance.g.size(); ++c)
        gross += std::abs(instance.g[c]) * instance.mass[c];

    double worst_balance = 0.0, worst_allowance = 0.0;
    for (const auto& nd : dec.needles) {
        if (nd.mass <= 0.0) continue;
        worst_balance = std::max(worst_balance, nd.balance_residual / nd.mass);

        // trim zero bins at the ends, then check the flat-ambient chord
        // inequality of the binned density
        std::size_t lo = 0, hi = nd.h.size();
        while (lo < hi && nd.h[lo] == 0.0) ++lo;
        while (hi > lo && nd.h[hi - 1] == 0.0) --hi;
        if (hi - lo < 3) continue;
        std::vector<double> vals(nd.h.begin() + lo, nd.h.begin() + hi);
        const double bin = (nd.s_max - nd.s_min) / double(nd.h.size());
        GridDensity hq(0.0, bin * double(vals.size() - 1) + 1e-12, std::move(vals));
        ClassifyOptions copts;
        copts.random_t_per_pair = 4;
        auto rep = classify(hq, ConditionSpec::cd(0.0, ambient_n), copts);
        check.min_concavity_slack = std::min(check.min_concavity_slack, rep.worst_violation);
        worst_allowance = std::max(worst_allowance, rep.tolerance);
    }
    if (check.min_concavity_slack == kInf) check.min_concavity_slack = 0.0;

    check.max_balance_rel = worst_balance;
    check.concavity_allowance = opts.concavity_cells * worst_allowance;
    check.uncovered_rel = gross > 0.0 ? dec.uncovered_mass / gross : 0.0;
    check.balance_ok = check.max_balance_rel <= opts.balance_tol;
    check.concavity_ok = check.min_concavity_slack >= -check.concavity_allowance;
    check.leak_ok = check.uncovered_rel <= opts.leak_tol;
    return check;
}

} // namespace loc2d
} // namespace qcdlab
