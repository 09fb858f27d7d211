// qcdlab: numerical laboratory for quasi curvature-dimension bounds on
// one-dimensional densities and the first Heisenberg group.
//
// Exit codes: 0 computation succeeded (verdicts live in the JSON output),
// 2 usage or input error, 3 solver non-convergence.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "qcdlab/classify.hpp"
#include "qcdlab/coefficients.hpp"
#include "qcdlab/density_io.hpp"
#include "qcdlab/envelope.hpp"
#include "qcdlab/heisenberg.hpp"
#include "qcdlab/localization2d.hpp"
#include "qcdlab/spectral.hpp"
#include "qcdlab/transport1d.hpp"
#include "qcdlab/version.hpp"

using nlohmann::json;
using namespace qcdlab;

namespace {

std::string format_number(double v) {
    if (v == kInf) return "inf";
    if (v == -kInf) return "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

void emit(const json& j, const std::string& out_path) {
    const std::string text = j.dump(2) + "\n";
    if (out_path.empty() || out_path == "-") {
        std::cout << text;
    } else {
        std::ofstream out(out_path);
        if (!out) throw std::invalid_argument("cannot open output file: " + out_path);
        out << text;
    }
}

json meta(std::uint64_t seed = 0) {
    json j;
    j["version"] = kVersion;
    j["seed"] = seed;
    return j;
}

json witness_json(const Witness& w) {
    return json{{"x0", w.x0}, {"x1", w.x1}, {"t", w.t}};
}

json report_json(const ClassificationReport& rep) {
    json j;
    j["passed"] = rep.passed;
    j["worst_violation"] = rep.worst_violation;
    j["witness"] = witness_json(rep.witness);
    j["checks_performed"] = rep.checks_performed;
    j["tolerance"] = rep.tolerance;
    if (!rep.diagnostic.empty()) j["diagnostic"] = rep.diagnostic;
    return j;
}

std::vector<double> parse_csv_numbers(const std::string& text) {
    std::vector<double> out;
    std::string token;
    for (char c : text) {
        if (c == ',' || c == '\n' || c == ' ' || c == '\t' || c == '\r' || c == ';') {
            if (!token.empty()) {
                out.push_back(std::stod(token));
                token.clear();
            }
        } else {
            token.push_back(c);
        }
    }
    if (!token.empty()) out.push_back(std::stod(token));
    return out;
}

h1::Point parse_point(const std::string& s) {
    const auto v = parse_csv_numbers(s);
    if (v.size() != 3) throw std::invalid_argument("expected x,y,t triple: " + s);
    return {v[0], v[1], v[2]};
}

IntervalSet parse_omega(const std::string& s) {
    IntervalSet omega;
    if (s.empty()) return omega;
    const auto v = parse_csv_numbers(s);
    if (v.size() < 2 || v.size() % 2 != 0)
        throw std::invalid_argument("omega wants an even list a,b[,c,d...]");
    for (std::size_t k = 0; k + 1 < v.size(); k += 2) omega.parts.push_back({v[k], v[k + 1]});
    omega.validate();
    return omega;
}

struct ConstantsRow {
    std::string space;
    std::string n_label, N_label;
    double n = 0.0, N = 0.0, Q = 0.0, k = 0.0;
};

ConstantsRow constants_row(const std::string& space, int d, int n_corank1) {
    ConstantsRow row;
    row.space = space;
    if (space == "heisenberg") {
        row.n = 2 * d + 1;
        row.N = row.n + 2;
        row.Q = 4.0;
        row.k = 1.0;
        row.n_label = "2d+1";
        row.N_label = "2d+3";
    } else if (space == "grushin") {
        row.n = 2;
        row.N = 5;
        row.Q = 8.0;
        row.k = 1.5;
        row.n_label = "2";
        row.N_label = "5";
    } else if (space == "sasakian") {
        row.n = 2 * d + 1;
        row.N = 2 * d + 3;
        row.Q = 4.0;
        row.k = 1.0;
        row.n_label = "2d+1";
        row.N_label = "2d+3";
    } else if (space == "3sasakian") {
        row.n = 4 * d + 3;
        row.N = 4 * d + 9;
        row.Q = 64.0;
        row.k = 3.0;
        row.n_label = "4d+3";
        row.N_label = "4d+9";
    } else if (space == "corank1") {
        row.n = n_corank1;
        row.N = row.n + 2;
        row.Q = 4.0;
        row.k = 1.0;
        row.n_label = "n";
        row.N_label = "n+2";
    } else {
        throw std::invalid_argument("unknown space: " + space);
    }
    return row;
}

int run(int argc, char** argv) {
    CLI::App app{"quasi curvature-dimension laboratory"};
    app.set_version_flag("--version", std::string("qcdlab ") + kVersion);
    app.require_subcommand(1);

    std::string out_path;
    app.add_option("-o,--output", out_path, "write the report here instead of stdout");

    // ---- coeff ----
    auto* coeff_cmd = app.add_subcommand("coeff", "comparison coefficients");
    std::string coeff_kind;
    double cK = 0.0, cN = 2.0, ct = 0.5, ctheta = 0.0;
    coeff_cmd->add_option("--kind", coeff_kind, "sigma|tau|dmax")->required();
    coeff_cmd->add_option("--K", cK)->required();
    coeff_cmd->add_option("--N", cN)->required();
    coeff_cmd->add_option("--t", ct);
    coeff_cmd->add_option("--theta", ctheta);

    // ---- classify ----
    auto* classify_cmd = app.add_subcommand("classify", "test a density against a condition");
    std::string cl_density, cl_kind;
    double clK = 0.0, clN = 2.0, clQ = 1.0, cln = 1.0;
    std::size_t cl_grid = 512;
    std::uint64_t cl_seed = 20240901;
    classify_cmd->add_option("--density", cl_density)->required();
    classify_cmd->add_option("--kind", cl_kind, "cd|mcp|qcd|cgtd")->required();
    classify_cmd->add_option("--K", clK)->required();
    classify_cmd->add_option("--N", clN)->required();
    classify_cmd->add_option("--Q", clQ);
    classify_cmd->add_option("--n", cln);
    classify_cmd->add_option("--grid", cl_grid);
    classify_cmd->add_option("--seed", cl_seed);

    // ---- envelope ----
    auto* env_cmd = app.add_subcommand("envelope", "dominating density and quasi order");
    std::string env_density;
    double envK = 0.0, envN = 2.0;
    std::size_t env_grid = 512;
    env_cmd->add_option("--density", env_density)->required();
    env_cmd->add_option("--K", envK)->required();
    env_cmd->add_option("--N", envN)->required();
    env_cmd->add_option("--grid", env_grid);

    // ---- interp ----
    auto* interp_cmd = app.add_subcommand("interp", "displacement interpolation check");
    std::string in_ref, in_mu0, in_mu1, in_check;
    double in_t = 0.5, inK = 0.0, inN = 2.0, inQ = 1.0;
    interp_cmd->add_option("--reference", in_ref)->required();
    interp_cmd->add_option("--mu0", in_mu0)->required();
    interp_cmd->add_option("--mu1", in_mu1)->required();
    interp_cmd->add_option("--t", in_t)->required();
    interp_cmd->add_option("--check", in_check, "cd|qcd|mcp");
    interp_cmd->add_option("--K", inK);
    interp_cmd->add_option("--N", inN);
    interp_cmd->add_option("--Q", inQ);

    // ---- lambda ----
    auto* lambda_cmd = app.add_subcommand("lambda", "p-Poincare constant");
    std::string la_density, la_omega;
    double la_p = 2.0;
    std::size_t la_grid = 2048;
    lambda_cmd->add_option("--density", la_density)->required();
    lambda_cmd->add_option("--p", la_p)->required();
    lambda_cmd->add_option("--omega", la_omega, "a,b[,c,d...] sub-intervals");
    lambda_cmd->add_option("--grid", la_grid);

    // ---- ls ----
    auto* ls_cmd = app.add_subcommand("ls", "log-Sobolev constant estimate");
    std::string ls_density, ls_omega;
    std::size_t ls_grid = 1024;
    std::uint64_t ls_seed = 7177;
    ls_cmd->add_option("--density", ls_density)->required();
    ls_cmd->add_option("--omega", ls_omega);
    ls_cmd->add_option("--grid", ls_grid);
    ls_cmd->add_option("--seed", ls_seed);

    // ---- constants ----
    auto* const_cmd = app.add_subcommand("constants", "model constants per space");
    std::string co_space;
    double co_D = 1.0, co_p = 2.0;
    int co_d = 1, co_n = 3;
    const_cmd->add_option("--space", co_space, "heisenberg|grushin|sasakian|3sasakian|corank1")
        ->required();
    const_cmd->add_option("--D", co_D);
    const_cmd->add_option("--p", co_p);
    const_cmd->add_option("--d", co_d, "complex rank parameter of the family");
    const_cmd->add_option("--n", co_n, "topological dimension for corank1");

    // ---- h1 ----
    auto* h1_cmd = app.add_subcommand("h1", "Heisenberg group computations");
    h1_cmd->require_subcommand(1);

    auto* dist_cmd = h1_cmd->add_subcommand("dist", "distance from the identity");
    std::string d_target;
    dist_cmd->add_option("--target", d_target, "x,y,t")->required();

    auto* bm_cmd = h1_cmd->add_subcommand("bm", "midpoint-set volume comparison");
    std::string bm_centerA = "0,0,0", bm_centerB = "0,0,0.5";
    double bm_radiusA = 0.2, bm_radiusB = 0.2, bm_t = 0.5;
    std::size_t bm_samples = 1000000;
    std::uint64_t bm_seed = 1;
    bool bm_euclid = false;
    bm_cmd->add_option("--centerA", bm_centerA);
    bm_cmd->add_option("--radiusA", bm_radiusA);
    bm_cmd->add_option("--centerB", bm_centerB);
    bm_cmd->add_option("--radiusB", bm_radiusB);
    bm_cmd->add_option("--t", bm_t);
    bm_cmd->add_option("--samples", bm_samples);
    bm_cmd->add_option("--seed", bm_seed);
    bm_cmd->add_flag("--euclidean", bm_euclid, "flat-space sanity mode");

    auto* shrink_cmd = h1_cmd->add_subcommand("shrink", "vertical midpoint shrinkage ratio");
    double sh_radius = 0.05, sh_height = 1.0, sh_t = 0.5;
    std::size_t sh_samples = 200000;
    std::uint64_t sh_seed = 1;
    bool sh_euclid = false;
    shrink_cmd->add_option("--radius", sh_radius);
    shrink_cmd->add_option("--height", sh_height);
    shrink_cmd->add_option("--t", sh_t);
    shrink_cmd->add_option("--samples", sh_samples);
    shrink_cmd->add_option("--seed", sh_seed);
    shrink_cmd->add_flag("--euclidean", sh_euclid);

    auto* beta_cmd = h1_cmd->add_subcommand("beta", "distortion coefficient estimate");
    std::string be_x = "0,0,0", be_y = "1,0,0";
    double be_t = 0.5, be_r = 0.05;
    std::size_t be_samples = 4000;
    std::uint64_t be_seed = 1;
    bool be_euclid = false;
    beta_cmd->add_option("--x", be_x);
    beta_cmd->add_option("--y", be_y);
    beta_cmd->add_option("--t", be_t);
    beta_cmd->add_option("--r", be_r);
    beta_cmd->add_option("--samples", be_samples);
    beta_cmd->add_option("--seed", be_seed);
    beta_cmd->add_flag("--euclidean", be_euclid);

    // ---- localize ----
    auto* loc_cmd = app.add_subcommand("localize", "planar needle decomposition");
    std::string lo_grid = "64x64", lo_gfile, lo_csv_dir;
    double lo_tube = 0.0;
    loc_cmd->add_option("--grid", lo_grid, "WxH");
    loc_cmd->add_option("--g", lo_gfile, "CSV of W*H cell values, row-major")->required();
    loc_cmd->add_option("--tube", lo_tube, "tube width (default 2 cells)");
    loc_cmd->add_option("--csv-dir", lo_csv_dir, "write per-needle densities here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2; // usage errors map to exit 2
    }

    if (coeff_cmd->parsed()) {
        const CurvatureParams params(cK, cN);
        double value = 0.0;
        if (coeff_kind == "sigma")
            value = coeff::sigma(ct, ctheta, params);
        else if (coeff_kind == "tau")
            value = coeff::tau(ct, ctheta, params);
        else if (coeff_kind == "dmax")
            value = coeff::max_diameter(params);
        else
            throw std::invalid_argument("unknown coefficient kind: " + coeff_kind);
        std::cout << format_number(value) << "\n";
        return 0;
    }

    if (classify_cmd->parsed()) {
        GridDensity h = load_density_file(cl_density, cl_grid);
        if (h.size() > cl_grid) h = h.resampled(cl_grid);
        ConditionSpec spec;
        spec.kind = condition_kind_from_string(cl_kind);
        spec.K = clK;
        spec.N = clN;
        spec.Q = clQ;
        spec.n = cln;
        ClassifyOptions opts;
        opts.seed = cl_seed;
        auto rep = classify(h, spec, opts);
        json j = report_json(rep);
        j["meta"] = meta(cl_seed);
        j["meta"]["grid"] = h.size();
        j["condition"] = {{"kind", cl_kind}, {"K", clK}, {"N", clN}, {"Q", clQ}, {"n", cln}};
        emit(j, out_path);
        return 0;
    }

    if (env_cmd->parsed()) {
        GridDensity h = load_density_file(env_density, env_grid);
        if (h.size() != env_grid) h = h.resampled(env_grid);
        auto res = cd_upper_envelope(h, CurvatureParams(envK, envN));
        json j;
        j["q_order"] = res.q_order == kInf ? json("inf") : json(res.q_order);
        j["sandwich_margin"] = res.sandwich_margin == -kInf ? json("-inf") : json(res.sandwich_margin);
        j["envelope"] = json::parse(density_to_json(res.envelope));
        j["meta"] = meta();
        j["meta"]["grid"] = h.size();
        emit(j, out_path);
        return 0;
    }

    if (interp_cmd->parsed()) {
        GridDensity ref = load_density_file(in_ref);
        auto load_measure = [&](const std::string& path) {
            std::ifstream in(path);
            if (!in) throw std::invalid_argument("cannot open measure file: " + path);
            std::stringstream ss;
            ss << in.rdbuf();
            json j = json::parse(ss.str());
            if (j.contains("blocks")) {
                std::vector<std::pair<double, double>> blocks;
                for (const auto& b : j["blocks"]) blocks.emplace_back(b[0], b[1]);
                return Measure1D::uniform_blocks(ref, blocks);
            }
            return Measure1D::normalized(ref, density_from_json(ss.str()));
        };
        Measure1D mu0 = load_measure(in_mu0);
        Measure1D mu1 = load_measure(in_mu1);
        auto path = displacement_interpolation(mu0, mu1, in_t);
        json j;
        j["t"] = in_t;
        j["rho_t"] = json::parse(density_to_json(path.rho_t));
        j["meta"] = meta();
        if (!in_check.empty()) {
            InterpolationWeights w = in_check == "cd"    ? cd_weights(inK, inN)
                                     : in_check == "mcp" ? mcp_weights(inK, inN)
                                     : in_check == "qcd" ? qcd_weights(inQ, inK, inN)
                                                         : throw std::invalid_argument(
                                                               "unknown check kind: " + in_check);
            auto rep = verify_interpolation(mu0, mu1, w, inN,
                                            in_t > 0.0 && in_t < 1.0
                                                ? std::vector<double>{in_t}
                                                : default_t_grid());
            j["check"] = report_json(rep);
            j["check"]["weights"] = w.name;
        }
        emit(j, out_path);
        return 0;
    }

    if (lambda_cmd->parsed()) {
        SpectralProblem prob;
        prob.density = load_density_file(la_density, la_grid);
        prob.p = la_p;
        prob.omega = parse_omega(la_omega);
        prob.grid = la_grid;
        auto res = solve_lambda_p(prob);
        json j;
        j["lambda"] = res.lambda;
        j["method"] = res.method;
        j["residual"] = res.residual;
        j["balance"] = res.balance;
        j["meta"] = meta();
        j["meta"]["grid"] = la_grid;
        emit(j, out_path);
        return 0;
    }

    if (ls_cmd->parsed()) {
        SpectralProblem prob;
        prob.density = load_density_file(ls_density, ls_grid);
        prob.p = 2.0;
        prob.omega = parse_omega(ls_omega);
        LogSobolevOptions opts;
        opts.grid = ls_grid;
        opts.seed = ls_seed;
        auto res = estimate_lambda_ls(prob, opts);
        json j;
        j["lambda_ls"] = res.lambda;
        j["method"] = res.method;
        j["meta"] = meta(ls_seed);
        j["meta"]["grid"] = ls_grid;
        emit(j, out_path);
        return 0;
    }

    if (const_cmd->parsed()) {
        const ConstantsRow row = constants_row(co_space, co_d, co_n);
        const double four_k = std::pow(4.0, row.k);
        std::cout << "space=" << row.space << "\n";
        std::cout << "n=" << format_number(row.n) << " (" << row.n_label << ")\n";
        std::cout << "N=" << format_number(row.N) << " (" << row.N_label << ")\n";
        std::cout << "Q=" << format_number(row.Q) << "\n";
        std::cout << "k=" << format_number(row.k) << "\n";
        std::cout << "D=" << format_number(co_D) << "\n";
        std::cout << "poincare=" << format_number(M_PI * M_PI / (four_k * co_D * co_D))
                  << "  # pi^2/(4^k D^2)\n";
        std::cout << "lp[p=" << format_number(co_p)
                  << "]=" << format_number(lambda_p_closed_form(co_p, co_D) / four_k)
                  << "  # (p-1)/4^k (2pi/(p sin(pi/p) D))^p\n";
        std::cout << "logsobolev=pi^2/(4^k 2 C D^2) with an unspecified universal C > 1\n";
        return 0;
    }

    if (dist_cmd->parsed()) {
        auto res = h1::cc_distance(parse_point(d_target));
        json j;
        j["distance"] = res.distance;
        j["residual"] = res.residual;
        j["converged_starts"] = res.converged;
        j["multiple_minimizers"] = res.multiple;
        j["p0"] = {{"px", res.p0.px}, {"py", res.p0.py}, {"pt", res.p0.pt}};
        j["meta"] = meta();
        emit(j, out_path);
        return 0;
    }

    if (bm_cmd->parsed()) {
        h1::BallSpec A{parse_point(bm_centerA), bm_radiusA};
        h1::BallSpec B{parse_point(bm_centerB), bm_radiusB};
        auto rep = h1::quasi_bm_estimate(A, B, bm_t, bm_samples, bm_seed, {}, bm_euclid);
        json j;
        j["volA"] = rep.volA;
        j["volB"] = rep.volB;
        j["volZ"] = rep.volZ;
        j["stderrA"] = rep.stderrA;
        j["stderrB"] = rep.stderrB;
        j["stderrZ"] = rep.stderrZ;
        j["slack_bm"] = rep.slack_bm;
        j["slack_qbm"] = rep.slack_qbm;
        j["stderr_slack_bm"] = rep.stderr_slack_bm;
        j["stderr_slack_qbm"] = rep.stderr_slack_qbm;
        j["samples"] = rep.samples;
        j["voxel_divisions"] = rep.voxel_divisions;
        j["meta"] = meta(bm_seed);
        emit(j, out_path);
        return 0;
    }

    if (shrink_cmd->parsed()) {
        auto rep = h1::juillet_shrinkage(sh_radius, sh_height, sh_t, sh_samples, sh_seed, {},
                                         sh_euclid);
        json j;
        j["ratio"] = rep.ratio;
        j["volA"] = rep.volA;
        j["volZ"] = rep.volZ;
        j["stderr_ratio"] = rep.stderr_ratio;
        j["samples"] = rep.samples;
        j["meta"] = meta(sh_seed);
        emit(j, out_path);
        return 0;
    }

    if (beta_cmd->parsed()) {
        auto est = h1::distortion_beta_estimate(parse_point(be_x), parse_point(be_y), be_t, be_r,
                                                be_samples, be_seed, be_euclid);
        json j;
        j["beta_estimate"] = est.estimate;
        j["stderr"] = est.stderr_est;
        j["samples"] = est.samples;
        j["t_power_topdim_plus_2"] = std::pow(be_t, 5.0);
        j["meta"] = meta(be_seed);
        emit(j, out_path);
        return 0;
    }

    if (loc_cmd->parsed()) {
        int W = 0, H = 0;
        if (std::sscanf(lo_grid.c_str(), "%dx%d", &W, &H) != 2 || W < 2 || H < 2)
            throw std::invalid_argument("grid wants WxH, e.g. 64x64");
        std::ifstream in(lo_gfile);
        if (!in) throw std::invalid_argument("cannot open g file: " + lo_gfile);
        std::stringstream ss;
        ss << in.rdbuf();
        std::vector<double> g = parse_csv_numbers(ss.str());
        if (g.size() != std::size_t(W) * std::size_t(H))
            throw std::invalid_argument("g file must hold exactly W*H values");
        auto inst = loc2d::PlanarInstance::unit_square(W, H, std::move(g));
        auto sol = loc2d::solve_l1_ot(inst);
        int branches = 0;
        auto rays = loc2d::extract_rays(inst, sol, {}, &branches);
        const double tube = lo_tube > 0.0 ? lo_tube : 2.0 * inst.grid.cell;
        auto dec = loc2d::needle_disintegration(inst, sol, rays, tube);
        auto check = loc2d::verify_needles(inst, dec, 2.0);

        json j;
        j["cost"] = sol.cost;
        j["duality_gap"] = sol.duality_gap;
        j["coarsen"] = sol.coarsen;
        j["atoms"] = {{"sources", sol.sources.size()}, {"sinks", sol.sinks.size()}};
        j["rays"] = json::array();
        for (const auto& ray : rays)
            j["rays"].push_back({{"origin", {ray.origin.x, ray.origin.y}},
                                 {"dir", {ray.dir.x, ray.dir.y}},
                                 {"length", ray.length},
                                 {"flow", ray.flow},
                                 {"u_rate_error", ray.u_rate_error}});
        j["branch_atoms"] = branches;
        j["uncovered_mass"] = dec.uncovered_mass;
        j["ambiguous_fraction"] = dec.ambiguous_fraction;
        j["checks"] = {{"max_balance_rel", check.max_balance_rel},
                       {"min_concavity_slack", check.min_concavity_slack},
                       {"concavity_allowance", check.concavity_allowance},
                       {"uncovered_rel", check.uncovered_rel},
                       {"balance_ok", check.balance_ok},
                       {"concavity_ok", check.concavity_ok},
                       {"leak_ok", check.leak_ok}};
        j["tube"] = tube;
        j["meta"] = meta();

        if (!lo_csv_dir.empty()) {
            for (std::size_t r = 0; r < dec.needles.size(); ++r) {
                std::ofstream csv(lo_csv_dir + "/needle_" + std::to_string(r) + ".csv");
                csv << "s,h,g\n";
                const auto& nd = dec.needles[r];
                const double bin = (nd.s_max - nd.s_min) / double(nd.h.size());
                for (std::size_t k = 0; k < nd.h.size(); ++k)
                    csv << format_number(nd.s_min + (k + 0.5) * bin) << ","
                        << format_number(nd.h[k]) << "," << format_number(nd.g_proj[k]) << "\n";
            }
        }
        emit(j, out_path);
        return 0;
    }

    return 2;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const SolverFailure& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
