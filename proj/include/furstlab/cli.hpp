#pragma once

#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "experiments.hpp"
#include "generators.hpp"
#include "highlow.hpp"
#include "incidence.hpp"
#include "multiscale.hpp"
#include "regularity.hpp"
#include "set_io.hpp"

namespace furstlab::cli {

using ordered_json = nlohmann::ordered_json;

namespace detail {

inline ordered_json report_json(const RegularityReport& r) {
    ordered_json j;
    j["class"] = r.cls;
    j["s"] = r.s;
    j["best_constant"] = r.best_constant;
    j["witness"] = {{"cx", r.witness.cx.str()},
                    {"cy", r.witness.cy.str()},
                    {"r", "2^-" + std::to_string(r.witness.r_exp)},
                    {"count", r.witness.count}};
    return j;
}

inline ordered_json interval_json(const DecompInterval& iv) {
    ordered_json j;
    j["c"] = iv.c.str();
    j["d"] = iv.d.str();
    j["c_approx"] = iv.c.to_double();
    j["d_approx"] = iv.d.to_double();
    j["kind"] = std::string(1, iv.kind);
    j["chord"] = iv.chord.to_double();
    if (iv.kind == 'b') j["crossover"] = iv.crossover.to_double();
    return j;
}

inline std::string sniff_header(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::string tag;
    in >> tag;
    return tag;
}

} // namespace detail

// ---------------------------------------------------------------------------
// generate: build a named set or configuration and write it (plus a JSON
// sidecar describing what was generated).
// ---------------------------------------------------------------------------

struct GenerateArgs {
    std::string kind = "grid";
    int n = 6;
    double s = 0.5;
    double t = 1.0;
    int T = 0;
    unsigned long long seed = 1;
    int coarse_exp = 0;        // well-spaced: exponent of the separation scale
    long long per_cell = 1;    // well-spaced: cubes per occupied cell
    std::vector<int> x_schedule, y_schedule;  // block: per-level branch counts
    std::string cubes_path;
    std::string tubes_path;
};

inline int cmd_generate(const GenerateArgs& a, std::ostream& out) {
    if (a.cubes_path.empty()) throw std::invalid_argument("generate: --cubes path required");
    Scale delta(a.n);
    ordered_json meta;
    meta["kind"] = a.kind;
    meta["n"] = a.n;

    bool has_tubes = a.kind == "grid" || a.kind == "random" || a.kind == "cantor-config";
    if (!has_tubes && !a.tubes_path.empty())
        throw std::invalid_argument("generate: kind '" + a.kind + "' has no tube family");

    if (a.kind == "cantor-1d") {
        CubeSet1D A = cantor_1d(delta, a.s, a.T);
        write_cubeset1d_file(a.cubes_path, A);
        meta["s"] = a.s;
        meta["count"] = A.count();
        meta["achieved_dim"] = std::log2(double(A.count())) / double(a.n);
    } else if (has_tubes) {
        NiceConfiguration cfg;
        if (a.kind == "grid") cfg = grid_example(delta, a.s, a.t);
        else if (a.kind == "random") cfg = random_nice_configuration(delta, a.s, a.t, a.seed);
        else cfg = cantor_configuration(delta, a.s, a.t, a.T);
        write_cubeset_file(a.cubes_path, cfg.P);
        meta["s"] = a.s;
        meta["t"] = a.t;
        if (a.kind == "random") meta["seed"] = a.seed;
        meta["distinct"] = cfg.P.distinct_count();
        meta["total_mult"] = cfg.P.total_mult();
        meta["tubes"] = cfg.tubes.distinct_count();
        meta["slopes_per_point"] = cfg.M;
        meta["predicted_ratio_exponent"] = cfg.predicted_ratio_exponent;
        ConfigurationCheck v = validate_nice_configuration(cfg);
        meta["valid"] = v.ok;
        meta["worst_family_katz_tao"] = v.worst_family_kt;
        if (!v.ok) meta["issue"] = v.issue;
        if (!a.tubes_path.empty()) {
            write_tubeset_file(a.tubes_path, cfg.tubes);
            meta["tubes_file"] = a.tubes_path;
        }
    } else {
        CubeSet P;
        if (a.kind == "cantor") {
            P = cantor_product(delta, a.s, a.t, a.T);
            meta["dim_x"] = a.s;
            meta["dim_y"] = a.t;
        } else if (a.kind == "interval-cantor") {
            P = interval_cross_cantor(delta, a.s, a.T);
            meta["s"] = a.s;
        } else if (a.kind == "well-spaced") {
            P = well_spaced(delta, Scale(a.coarse_exp), a.per_cell);
            meta["coarse_exp"] = a.coarse_exp;
            meta["per_cell"] = a.per_cell;
        } else if (a.kind == "block") {
            P = block_product(delta, a.T, a.x_schedule, a.y_schedule);
            meta["T"] = a.T;
            meta["x_schedule"] = a.x_schedule;
            meta["y_schedule"] = a.y_schedule;
        } else {
            throw std::invalid_argument("generate: unknown kind: " + a.kind);
        }
        write_cubeset_file(a.cubes_path, P);
        meta["distinct"] = P.distinct_count();
        meta["total_mult"] = P.total_mult();
    }

    std::ofstream mf(a.cubes_path + ".meta.json");
    mf << meta.dump(2) << "\n";
    out << meta.dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// check: regularity statistics, uniformity, branching function of a cube set.
// ---------------------------------------------------------------------------

struct CheckArgs {
    std::string cubes;
    double s = 0.5;
    int T = 1;
    std::string branch_out;  // optional BRANCH v1 output
};

inline int cmd_check(const CheckArgs& a, std::ostream& out) {
    CubeSet P = read_cubeset_file(a.cubes);
    int n = P.scale().n;
    ordered_json j;
    j["file"] = a.cubes;
    j["n"] = n;
    j["distinct"] = P.distinct_count();
    j["total_mult"] = P.total_mult();
    j["frostman"] = detail::report_json(frostman_constant(P, a.s, all_ball_scales(P)));
    j["katz_tao"] = detail::report_json(katz_tao_constant(P, a.s));
    auto [up, lo] = ad_regular_constants(P, a.s);
    j["ad_upper"] = detail::report_json(up);
    j["ad_lower"] = detail::report_json(lo);

    if (a.T > 0 && n % a.T == 0) {
        std::vector<Scale> ladder;
        for (int k = a.T; k <= n; k += a.T) ladder.push_back(Scale(k));
        UniformityReport ur = is_uniform(P, ladder);
        ordered_json uj;
        uj["uniform"] = ur.uniform;
        uj["T"] = a.T;
        if (!ur.uniform) uj["failed_level"] = ur.failed_level;
        j["uniformity"] = uj;
        if (ur.uniform) {
            BranchingFunction f = branching_function(P, a.T);
            ordered_json fj = ordered_json::array();
            for (size_t i = 0; i < f.values.size(); ++i)
                fj.push_back(f.values[i].to_double());
            j["branching"] = {{"T", f.T}, {"m", f.m}, {"values", fj}};
            if (!a.branch_out.empty()) {
                write_branching_file(a.branch_out, f);
                j["branch_file"] = a.branch_out;
            }
        }
    } else {
        j["uniformity"] = {{"uniform", nullptr},
                           {"note", "T must be positive and divide n"}};
    }
    out << j.dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// incidence: exact weighted counts, rich-tube census, or the frequency-split
// decomposition.
// ---------------------------------------------------------------------------

struct IncidenceArgs {
    std::string cubes;
    std::string tubes;
    int delta_exp = -1;   // coarse counting scale; default = tube scale
    int fat = 6;
    std::string mode = "exact";  // exact | highlow
    long long S = 0;
    double eps = 0.1;
    double rich_b = 0;           // when > 0, add the rich-cell census
    std::string census_path;     // optional per-tube CSV
};

inline int cmd_incidence(const IncidenceArgs& a, std::ostream& out) {
    CubeSet P = read_cubeset_file(a.cubes);
    TubeSet T = read_tubeset_file(a.tubes);
    ordered_json j;
    j["cubes"] = a.cubes;
    j["tubes"] = a.tubes;
    j["mode"] = a.mode;

    if (a.mode == "highlow") {
        long long S = a.S > 0 ? a.S : 1LL << std::max(1, (P.scale().n + 1) / 2);
        HighLowReport rep = highlow_decompose(P, T, S, a.eps);
        j["S"] = rep.S;
        j["eps"] = rep.eps;
        j["total_incidence"] = rep.total_incidence;
        j["low_incidence"] = rep.low_incidence;
        j["low_term"] = rep.low_term;
        j["high_energy"] = rep.high_energy;
        j["bound_high"] = rep.bound_high;
        j["energy_ratio"] = rep.energy_ratio;
        j["parseval_rel_error"] = rep.parseval_rel_error;
        j["tube_total_mult"] = rep.tube_total_mult;
        j["fitted_constant"] = rep.fitted_constant;
        out << j.dump(2) << "\n";
        return 0;
    }
    if (a.mode != "exact") throw std::invalid_argument("incidence: mode must be exact or highlow");

    Scale Delta = a.delta_exp >= 0 ? Scale(a.delta_exp) : T.scale();
    IncidenceResult res = incidence_exact(P, T, Delta, Rat(a.fat));
    j["delta_exp"] = Delta.n;
    j["fat"] = a.fat;
    j["total"] = res.total;
    j["pair_count"] = res.pair_count;
    j["tubes_with_incidence"] = (long long)res.per_tube.size();
    j["cells_with_incidence"] = (long long)res.per_cube.size();
    long long max_cells = 0;
    for (const auto& [cell, ti] : res.per_tube) max_cells = std::max(max_cells, ti.cube_count);
    j["max_cells_on_tube"] = max_cells;
    if (a.rich_b > 0) {
        auto census = rich_tube_census(P, T, a.rich_b);
        long long rich_tubes = 0, max_rich = 0;
        for (const auto& [cell, cnt] : census) {
            if (cnt > 0) ++rich_tubes;
            max_rich = std::max(max_rich, cnt);
        }
        j["rich_b"] = a.rich_b;
        j["rich_tubes"] = rich_tubes;
        j["max_rich_cells"] = max_rich;
    }
    if (!a.census_path.empty()) {
        std::ofstream cf(a.census_path);
        cf << "ia,ib,cells,weighted\n";
        for (const auto& [cell, ti] : res.per_tube)
            cf << cell.ix << "," << cell.iy << "," << ti.cube_count << ","
               << furstlab::detail::fmt_g17(ti.weighted) << "\n";
        j["census_file"] = a.census_path;
    }
    out << j.dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// decompose: branching-interval decomposition of a BRANCH file or a cube set
// (uniformizing the latter first when needed), plus the per-interval scale
// classification when cubes are available.
// ---------------------------------------------------------------------------

struct DecomposeArgs {
    std::string input;
    int T = 1;
    double s = 0.5, t = 1.0, u = 1.5, eps = 0.1;
    long long max_cells = 64;
    unsigned long long seed = 1;
};

inline int cmd_decompose(const DecomposeArgs& a, std::ostream& out) {
    std::string tag = detail::sniff_header(a.input);
    ordered_json j;
    j["input"] = a.input;

    BranchingFunction f;
    bool have_cubes = false;
    CubeSet P;
    if (tag == "BRANCH") {
        f = read_branching_file(a.input);
        j["input_kind"] = "branch";
    } else if (tag == "CUBESET") {
        P = read_cubeset_file(a.input);
        j["input_kind"] = "cubeset";
        std::vector<Scale> ladder;
        if (a.T <= 0 || P.scale().n % a.T != 0)
            throw std::invalid_argument("decompose: T must divide the scale exponent");
        for (int k = a.T; k <= P.scale().n; k += a.T) ladder.push_back(Scale(k));
        if (!is_uniform(P, ladder).uniform) {
            UniformizeResult ur = uniformize(P, a.T);
            P = ur.P;
            j["uniformized"] = true;
            j["kept"] = ur.kept;
            j["original"] = ur.original;
            j["exhaustive_search"] = ur.exhaustive;
        } else {
            j["uniformized"] = false;
        }
        f = branching_function(P, a.T);
        have_cubes = true;
    } else {
        throw std::runtime_error("decompose: input is neither CUBESET nor BRANCH: " + a.input);
    }

    Rat rs = rat_from_double(a.s), rt = rat_from_double(a.t);
    Rat ru = rat_from_double(a.u), reps = rat_from_double(a.eps);
    IntervalDecomposition dec = decompose_branching(f, rs, rt, ru, reps);
    j["T"] = f.T;
    j["m"] = f.m;
    ordered_json fv = ordered_json::array();
    for (const auto& v : f.values) fv.push_back(v.to_double());
    j["f"] = fv;
    ordered_json ivs = ordered_json::array();
    for (const auto& iv : dec.intervals) ivs.push_back(detail::interval_json(iv));
    j["intervals"] = ivs;
    j["uncovered"] = dec.uncovered.to_double();
    j["uncovered_bound"] = dec.uncovered_bound.to_double();
    j["tau"] = dec.tau.to_double();

    if (have_cubes) {
        ScaleClassification cls = classify_scales(P, f, dec, a.max_cells, a.seed);
        ordered_json cj = ordered_json::array();
        for (const auto& ck : cls.intervals) {
            ordered_json e;
            e["index"] = ck.index;
            e["kind"] = std::string(1, ck.kind);
            e["c"] = ck.c;
            e["d"] = ck.d;
            e["skipped"] = ck.skipped;
            e["pass"] = ck.pass;
            e["cells_checked"] = ck.cells_checked;
            e["threshold"] = ck.threshold;
            e["worst"] = ck.worst;
            if (!ck.witness.empty()) e["witness"] = ck.witness;
            cj.push_back(e);
        }
        j["classification"] = {{"all_pass", cls.all_pass}, {"intervals", cj}};
    }
    out << j.dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// experiment: run a spec file, write artifacts, print the metric summary.
// ---------------------------------------------------------------------------

struct ExperimentArgs {
    std::string spec;
    std::string outdir = ".";
};

inline int cmd_experiment(const ExperimentArgs& a, std::ostream& out) {
    ExperimentSpec spec = ExperimentSpec::parse_file(a.spec);
    ExperimentResult res = run_experiment(spec, a.outdir);
    ordered_json j;
    j["experiment"] = res.name;
    j["kind"] = spec.kind;
    ordered_json mj;
    for (const auto& [k, v] : res.metrics) mj[k] = v;
    j["metrics"] = mj;
    ordered_json fj = ordered_json::array();
    for (const auto& f : res.files) fj.push_back(f);
    j["files"] = fj;
    out << j.dump(2) << "\n";
    return 0;
}

} // namespace furstlab::cli
