#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <furstlab/furstlab.hpp>
#include <furstlab/cli.hpp>

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace furstlab;

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

fs::path fresh_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / "furstlab_harness" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE_MESSAGE(in.good(), "cannot open " << p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
}

ExperimentSpec spec_from(const std::string& text) {
    std::istringstream in(text);
    return ExperimentSpec::parse(in);
}

} // namespace

TEST_CASE("experiment specs parse key=value lines with comments") {
    ExperimentSpec s = spec_from(
        "# ladder settings\n"
        "kind = furstenberg   # trailing comment\n"
        "\n"
        "  family=grid\n"
        "s = 0.5\n"
        "nmax = 9\n");
    CHECK(s.kind == "furstenberg");
    CHECK(s.get("family") == "grid");
    CHECK(s.get("missing", "dflt") == "dflt");
    CHECK(s.get_num("s", 0.0) == 0.5);
    CHECK(s.get_num("t", 1.25) == 1.25);
    CHECK(s.get_int("nmax", 0) == 9);
    CHECK(s.get_int("nmin", 4) == 4);

    fs::path dir = fresh_dir("specfile");
    { std::ofstream f(dir / "exp.txt"); f << "kind=sumproduct\nfamily=interval\n"; }
    ExperimentSpec g = ExperimentSpec::parse_file((dir / "exp.txt").string());
    CHECK(g.kind == "sumproduct");
    CHECK(g.get("family") == "interval");
}

TEST_CASE("experiment specs reject malformed input") {
    CHECK_THROWS_AS(spec_from("family=grid\n"), std::invalid_argument);       // no kind
    CHECK_THROWS_AS(spec_from("kind=x\nnot a pair\n"), std::invalid_argument); // no equals
    CHECK_THROWS_AS(ExperimentSpec::parse_file("/nonexistent/spec.txt"), std::runtime_error);
}

TEST_CASE("conjectured exponents take the minimum of the three regimes") {
    CHECK(conjectured_tube_exponent(1.0, 1.0) == 1.0);
    CHECK(conjectured_tube_exponent(0.5, 1.0) == 0.75);   // averaging regime
    CHECK(conjectured_tube_exponent(0.5, 0.5) == 0.5);    // t regime
    CHECK(conjectured_tube_exponent(0.9, 0.2) == 0.2);
    CHECK(conjectured_dim_exponent(0.5, 1.0) == 1.25);    // (3s+t)/2 regime
    CHECK(conjectured_dim_exponent(0.3, 0.2) == 0.5);     // s+t regime
    CHECK(conjectured_dim_exponent(1.0, 1.0) == 2.0);
}

TEST_CASE("grid tube ladder fits slope one with zero residual") {
    fs::path dir = fresh_dir("furst_grid");
    ExperimentSpec s = spec_from(
        "kind=furstenberg\nfamily=grid\ns=1\nt=1\nnmin=4\nnmax=7\nname=gridfit\n");
    ExperimentResult r = run_furstenberg(s, dir.string());

    // the tube/slope ratio of the aligned grid is exactly 2^n, so the log-log
    // ladder is exactly collinear and the least squares slope is exact
    CHECK(r.name == "gridfit");
    CHECK(r.metrics.at("fitted_exponent") == 1.0);
    CHECK(r.metrics.at("max_residual") == 0.0);
    CHECK(r.metrics.at("predicted_exponent") == 1.0);
    CHECK(r.metrics.at("predicted_dim_exponent") == 2.0);

    REQUIRE(r.files.size() == 3);
    for (const auto& f : r.files) CHECK(fs::exists(f));
    std::vector<std::string> csv = lines_of(slurp(r.files[0]));
    REQUIRE(csv.size() == 5);
    CHECK(csv[0] == "n,points,slopes_per_point,tubes,log2_tube_ratio");
    CHECK(csv[1] == "4,16,16,256,4");
    CHECK(csv[4] == "7,128,128,16384,7");

    std::string fitjson = slurp(r.files[1]);
    CHECK(fitjson.find("\"slope\": 1") != std::string::npos);
    std::string svg = slurp(r.files[2]);
    CHECK(svg.find("<svg") == 0);
    CHECK(svg.find("slope 1.0000") != std::string::npos);
}

TEST_CASE("experiment artifacts are byte-identical across reruns") {
    ExperimentSpec s = spec_from(
        "kind=furstenberg\nfamily=random\ns=0.6\nt=1\nnmin=4\nnmax=6\nseed=7\nname=rnd\n");
    fs::path a = fresh_dir("rerun_a"), b = fresh_dir("rerun_b");
    ExperimentResult ra = run_furstenberg(s, a.string());
    ExperimentResult rb = run_furstenberg(s, b.string());
    REQUIRE(ra.files.size() == rb.files.size());
    for (size_t i = 0; i < ra.files.size(); ++i) CHECK(slurp(ra.files[i]) == slurp(rb.files[i]));
    CHECK(ra.metrics == rb.metrics);
}

TEST_CASE("full interval sum product growth has unit slope") {
    fs::path dir = fresh_dir("sp_interval");
    ExperimentSpec s = spec_from("kind=sumproduct\nfamily=interval\nnmin=4\nnmax=7\nname=spi\n");
    ExperimentResult r = run_sumproduct(s, dir.string());
    CHECK(r.metrics.at("growth_slope") == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.metrics.at("max_residual") < 1e-12);

    // A = [1,2] at scale 2^-n: |A| = 2^n cells, A+A covers exactly 2^(n+1)
    // cells of [2,4] and A.A covers exactly 3 * 2^n cells of [1,4]
    std::vector<std::string> csv = lines_of(slurp(dir / "spi_ladder.csv"));
    REQUIRE(csv.size() == 5);
    for (int n = 4; n <= 7; ++n) {
        std::istringstream row(csv[(size_t)(n - 3)]);
        std::string tok;
        std::vector<std::string> f;
        while (std::getline(row, tok, ',')) f.push_back(tok);
        REQUIRE(f.size() == 6);
        CHECK(f[0] == std::to_string(n));
        CHECK(f[1] == std::to_string(1LL << n));
        CHECK(f[2] == std::to_string(2LL << n));
        CHECK(f[3] == std::to_string(3LL << n));
    }
}

TEST_CASE("cantor sum product reports single-scale exponents") {
    REQUIRE(cantor_1d(Scale(8), 0.5).count() == 16);
    fs::path dir = fresh_dir("sp_cantor");
    ExperimentSpec s = spec_from("kind=sumproduct\nfamily=cantor\nn=8\ns=0.5\nname=spc\n");
    ExperimentResult r = run_sumproduct(s, dir.string());
    CHECK(r.metrics.at("input_exponent") == 0.5);
    CHECK(r.metrics.at("growth_exponent") > 0.55);
    CHECK(r.metrics.at("growth_exponent") < 1.25);
    CHECK(r.metrics.at("sums") >= 31.0);
    CHECK(r.metrics.at("products") >= 31.0);
    CHECK(fs::exists(dir / "spc_ladder.csv"));
}

TEST_CASE("projection experiment counts exceptional directions") {
    fs::path dir = fresh_dir("projection");
    ExperimentSpec s = spec_from(
        "kind=projection\ndim=1.0\nu=0.7\ntol=0.1\nnmin=5\nnmax=7\n"
        "directions_per_scale=2\nname=proj\n");
    ExperimentResult r = run_projection(s, dir.string());
    CHECK(r.metrics.at("exceptional_dim_bound") == doctest::Approx(0.4));
    CHECK(r.metrics.at("dim") == 1.0);
    CHECK(std::isfinite(r.metrics.at("arc_exponent")));
    CHECK(r.metrics.at("exceptional_fraction_finest") >= 0.0);
    CHECK(r.metrics.at("exceptional_fraction_finest") <= 1.0);
    std::vector<std::string> csv = lines_of(slurp(dir / "proj_ladder.csv"));
    CHECK(csv.size() == 4);
    CHECK(csv[0] == "n,directions,exceptional,exceptional_arcs");
}

TEST_CASE("highlow calibration ladder aggregates worst constants") {
    fs::path dir = fresh_dir("calibration");
    ExperimentSpec s = spec_from(
        "kind=highlow-calibration\nnmin=5\nnmax=6\neps=0.1\ns=0.7\nt=1.0\nseed=11\nname=cal\n");
    ExperimentResult r = run_highlow_calibration(s, dir.string());
    CHECK(r.metrics.at("max_fitted_constant") > 0.0);
    CHECK(r.metrics.at("max_fitted_over_log2sq") > 0.0);
    CHECK(r.metrics.at("max_energy_ratio") > 0.0);
    CHECK(r.metrics.at("max_parseval_rel_error") < 1e-8);
    std::vector<std::string> csv = lines_of(slurp(dir / "cal_ladder.csv"));
    REQUIRE(csv.size() == 5);  // header + {grid,random} x {5,6}
    CHECK(csv[1].rfind("grid,5,", 0) == 0);
    CHECK(csv[2].rfind("random,5,", 0) == 0);
    for (const auto& f : r.files) CHECK(fs::exists(f));
}

TEST_CASE("experiment dispatch validates kinds and families") {
    fs::path dir = fresh_dir("dispatch");
    CHECK_THROWS_AS(run_experiment(spec_from("kind=nope\n"), dir.string()),
                    std::invalid_argument);
    CHECK_THROWS_AS(run_sumproduct(spec_from("kind=sumproduct\nfamily=bogus\n"), dir.string()),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        run_furstenberg(spec_from("kind=furstenberg\nfamily=bogus\nnmin=4\nnmax=5\n"),
                        dir.string()),
        std::invalid_argument);
}

TEST_CASE("generate command writes cube sets with json sidecars") {
    fs::path dir = fresh_dir("gen_sets");

    cli::GenerateArgs a;
    a.kind = "cantor-1d";
    a.n = 6;
    a.s = 0.5;
    a.cubes_path = (dir / "a.cs").string();
    std::ostringstream out;
    CHECK(cli::cmd_generate(a, out) == 0);
    json j = json::parse(out.str());
    CHECK(j["kind"] == "cantor-1d");
    CHECK(j["count"] == 8);
    CHECK(j["achieved_dim"] == 0.5);
    CHECK(read_cubeset1d_file(a.cubes_path).count() == 8);
    // the sidecar repeats the stdout report byte for byte
    CHECK(slurp(a.cubes_path + ".meta.json") == out.str());

    cli::GenerateArgs b;
    b.kind = "block";
    b.n = 4;
    b.T = 2;
    b.x_schedule = {2, 4};
    b.y_schedule = {1, 2};
    b.cubes_path = (dir / "b.cs").string();
    std::ostringstream bout;
    CHECK(cli::cmd_generate(b, bout) == 0);
    json jb = json::parse(bout.str());
    CHECK(jb["distinct"] == 16);
    CHECK(read_cubeset_file(b.cubes_path).distinct_count() == 16);

    cli::GenerateArgs w;
    w.kind = "well-spaced";
    w.n = 4;
    w.coarse_exp = 2;
    w.per_cell = 2;
    w.cubes_path = (dir / "w.cs").string();
    std::ostringstream wout;
    CHECK(cli::cmd_generate(w, wout) == 0);
    CHECK(json::parse(wout.str())["distinct"] == 8);

    std::ostringstream devnull;
    cli::GenerateArgs bad1;  // no cubes path
    CHECK_THROWS_AS(cli::cmd_generate(bad1, devnull), std::invalid_argument);
    cli::GenerateArgs bad2 = b;
    bad2.tubes_path = (dir / "no.ts").string();  // block has no tube family
    CHECK_THROWS_AS(cli::cmd_generate(bad2, devnull), std::invalid_argument);
    cli::GenerateArgs bad3;
    bad3.kind = "mystery";
    bad3.cubes_path = (dir / "m.cs").string();
    CHECK_THROWS_AS(cli::cmd_generate(bad3, devnull), std::invalid_argument);
}

TEST_CASE("generate command writes tube families for configurations") {
    fs::path dir = fresh_dir("gen_config");
    cli::GenerateArgs a;
    a.kind = "grid";
    a.n = 4;
    a.s = 1.0;
    a.t = 1.0;
    a.cubes_path = (dir / "p.cs").string();
    a.tubes_path = (dir / "t.ts").string();
    std::ostringstream out;
    CHECK(cli::cmd_generate(a, out) == 0);
    json j = json::parse(out.str());
    CHECK(j["distinct"] == 16);
    CHECK(j["tubes"] == 256);
    CHECK(j["slopes_per_point"] == 16);
    CHECK(j["predicted_ratio_exponent"] == 1.0);
    CHECK(j["valid"] == true);
    CHECK(j["tubes_file"] == a.tubes_path);

    NiceConfiguration ref = grid_example(Scale(4), 1.0, 1.0);
    CubeSet P = read_cubeset_file(a.cubes_path);
    REQUIRE(P.entries().size() == ref.P.entries().size());
    for (size_t i = 0; i < P.entries().size(); ++i) {
        CHECK(P.entries()[i].ix == ref.P.entries()[i].ix);
        CHECK(P.entries()[i].iy == ref.P.entries()[i].iy);
        CHECK(P.entries()[i].mult == ref.P.entries()[i].mult);
        CHECK(P.entries()[i].weight == ref.P.entries()[i].weight);
    }
    CHECK(read_tubeset_file(a.tubes_path).distinct_count() == 256);
}

TEST_CASE("check command reports regularity and branching") {
    fs::path dir = fresh_dir("check");
    CubeSet P = cantor_product(Scale(4), 0.5, 0.5);
    std::string path = (dir / "cantor.cs").string();
    write_cubeset_file(path, P);

    cli::CheckArgs a;
    a.cubes = path;
    a.s = 0.5;
    a.T = 1;
    a.branch_out = (dir / "cantor.branch").string();
    std::ostringstream out;
    CHECK(cli::cmd_check(a, out) == 0);
    json j = json::parse(out.str());
    CHECK(j["n"] == 4);
    CHECK(j["distinct"] == 16);
    CHECK(j["frostman"]["best_constant"].get<double>() > 0.0);
    CHECK(j["katz_tao"]["best_constant"].get<double>() > 0.0);
    CHECK(j["ad_upper"]["s"] == 0.5);
    CHECK(j["uniformity"]["uniform"] == true);
    std::vector<double> vals = j["branching"]["values"].get<std::vector<double>>();
    CHECK(vals == std::vector<double>{0.0, 0.0, 2.0, 2.0, 4.0});

    BranchingFunction f = read_branching_file(a.branch_out);
    BranchingFunction ref = branching_function(P, 1);
    REQUIRE(f.values.size() == ref.values.size());
    for (size_t i = 0; i < f.values.size(); ++i) CHECK(f.values[i] == ref.values[i]);

    // T that does not divide n: uniformity is reported as not applicable
    cli::CheckArgs b = a;
    b.T = 3;
    b.branch_out.clear();
    std::ostringstream bout;
    CHECK(cli::cmd_check(b, bout) == 0);
    json jb = json::parse(bout.str());
    CHECK(jb["uniformity"]["uniform"].is_null());
}

TEST_CASE("incidence command matches library counts") {
    fs::path dir = fresh_dir("incidence");
    NiceConfiguration cfg = grid_example(Scale(4), 0.5, 1.0);
    std::string cp = (dir / "p.cs").string(), tp = (dir / "t.ts").string();
    write_cubeset_file(cp, cfg.P);
    write_tubeset_file(tp, cfg.tubes);

    cli::IncidenceArgs a;
    a.cubes = cp;
    a.tubes = tp;
    a.rich_b = 2.0;
    a.census_path = (dir / "census.csv").string();
    std::ostringstream out;
    CHECK(cli::cmd_incidence(a, out) == 0);
    json j = json::parse(out.str());

    IncidenceResult ref = incidence_exact(cfg.P, cfg.tubes, cfg.tubes.scale(), Rat(6));
    CHECK(j["total"].get<double>() == ref.total);
    CHECK(j["pair_count"].get<long long>() == ref.pair_count);
    CHECK(j["tubes_with_incidence"].get<long long>() == (long long)ref.per_tube.size());
    CHECK(j["cells_with_incidence"].get<long long>() == (long long)ref.per_cube.size());

    auto census = rich_tube_census(cfg.P, cfg.tubes, 2.0);
    long long rich = 0, max_rich = 0;
    for (const auto& [cell, cnt] : census) {
        if (cnt > 0) ++rich;
        max_rich = std::max(max_rich, cnt);
    }
    CHECK(j["rich_tubes"].get<long long>() == rich);
    CHECK(j["max_rich_cells"].get<long long>() == max_rich);

    std::vector<std::string> census_csv = lines_of(slurp(a.census_path));
    CHECK(census_csv[0] == "ia,ib,cells,weighted");
    CHECK(census_csv.size() == ref.per_tube.size() + 1);

    cli::IncidenceArgs bad = a;
    bad.mode = "sideways";
    std::ostringstream devnull;
    CHECK_THROWS_AS(cli::cmd_incidence(bad, devnull), std::invalid_argument);
}

TEST_CASE("incidence command runs the frequency split") {
    fs::path dir = fresh_dir("incidence_hl");
    NiceConfiguration cfg = grid_example(Scale(5), 1.0, 1.0);
    std::string cp = (dir / "p.cs").string(), tp = (dir / "t.ts").string();
    write_cubeset_file(cp, cfg.P);
    write_tubeset_file(tp, cfg.tubes);

    cli::IncidenceArgs a;
    a.cubes = cp;
    a.tubes = tp;
    a.mode = "highlow";
    a.eps = 0.1;
    std::ostringstream out;
    CHECK(cli::cmd_incidence(a, out) == 0);
    json j = json::parse(out.str());

    HighLowReport ref = highlow_decompose(cfg.P, cfg.tubes, 8, 0.1);
    CHECK(j["S"].get<long long>() == 8);  // default S = 2^((n+1)/2)
    CHECK(j["total_incidence"].get<double>() == ref.total_incidence);
    CHECK(j["low_incidence"].get<double>() == ref.low_incidence);
    CHECK(j["high_energy"].get<double>() == ref.high_energy);
    CHECK(j["fitted_constant"].get<double>() == ref.fitted_constant);
    CHECK(j["parseval_rel_error"].get<double>() < 1e-8);
}

TEST_CASE("decompose command reads branching files") {
    fs::path dir = fresh_dir("dec_branch");
    BranchingFunction f;
    f.T = 2;
    f.m = 5;
    f.values = {Rat(0), Rat(3, 2), Rat(3), Rat(9, 2), Rat(9, 2), Rat(9, 2)};
    std::string path = (dir / "f.branch").string();
    write_branching_file(path, f);

    cli::DecomposeArgs a;
    a.input = path;
    a.s = 0.5;
    a.t = 0.9;
    a.u = 1.5;
    a.eps = 0.1;
    std::ostringstream out;
    CHECK(cli::cmd_decompose(a, out) == 0);
    json j = json::parse(out.str());
    CHECK(j["input_kind"] == "branch");
    CHECK(j["T"] == 2);
    CHECK(j["m"] == 5);
    REQUIRE(j["intervals"].size() == 2);
    CHECK(j["intervals"][0]["kind"] == "a");
    CHECK(j["intervals"][0]["c"] == "0");
    CHECK(j["intervals"][0]["d"] == "2");
    CHECK(j["intervals"][0]["chord"] == 1.5);
    CHECK(j["intervals"][1]["kind"] == "b");
    CHECK(j["intervals"][1]["crossover"] == 2.0);
    CHECK(j["uncovered"] == 0.0);
    CHECK(j["tau"] == 0.4);
    CHECK(j.count("classification") == 0);  // no cubes, no per-scale checks

    std::ofstream junk(dir / "junk.txt");
    junk << "JUNK v1\n";
    junk.close();
    cli::DecomposeArgs bad = a;
    bad.input = (dir / "junk.txt").string();
    std::ostringstream devnull;
    CHECK_THROWS_AS(cli::cmd_decompose(bad, devnull), std::runtime_error);
}

TEST_CASE("decompose command uniformizes non-uniform cube sets") {
    fs::path dir = fresh_dir("dec_cubes");

    // a clean two-level product: 8 coarse cells, 8 children each
    CubeSet B = block_product(Scale(4), 2, {4, 4}, {2, 2});
    REQUIRE(B.distinct_count() == 64);
    std::string clean = (dir / "clean.cs").string();
    write_cubeset_file(clean, B);

    // per-block branching is log2(8)/2 = 3/2 per unit, exactly linear
    cli::DecomposeArgs a;
    a.input = clean;
    a.T = 2;
    a.s = 0.5;
    a.t = 1.5;
    a.u = 2.0;
    a.eps = 0.25;
    std::ostringstream out;
    CHECK(cli::cmd_decompose(a, out) == 0);
    json j = json::parse(out.str());
    CHECK(j["input_kind"] == "cubeset");
    CHECK(j["uniformized"] == false);
    REQUIRE(j["intervals"].size() == 1);
    CHECK(j["intervals"][0]["kind"] == "a");
    CHECK(j["intervals"][0]["chord"] == 1.5);
    CHECK(j["uncovered"] == 0.0);
    CHECK(j["classification"]["all_pass"].is_boolean());

    // damage one coarse cell: its child count drops out of the dyadic window,
    // so the command must uniformize first and report what it kept
    std::vector<CubeEntry> kept;
    int removed = 0;
    for (const auto& e : B.entries()) {
        if (removed < 3 && (e.ix >> 2) == 0 && (e.iy >> 2) == 0) {
            ++removed;
            continue;
        }
        kept.push_back(e);
    }
    REQUIRE(removed == 3);
    std::string damaged = (dir / "damaged.cs").string();
    write_cubeset_file(damaged, CubeSet(Scale(4), std::move(kept)));

    cli::DecomposeArgs b = a;
    b.input = damaged;
    std::ostringstream bout;
    CHECK(cli::cmd_decompose(b, bout) == 0);
    json jb = json::parse(bout.str());
    CHECK(jb["uniformized"] == true);
    CHECK(jb["original"] == 61);
    CHECK(jb["kept"] == 56);  // drops the damaged cell, keeps 7 full ones
    CHECK(jb["exhaustive_search"] == true);
    REQUIRE(jb["intervals"].size() == 1);
    CHECK(jb["intervals"][0]["kind"] == "a");
    CHECK(jb["intervals"][0]["chord"].get<double>() ==
          doctest::Approx(std::log2(56.0) / 4).epsilon(1e-9));
    CHECK(jb["uncovered"] == 0.0);
    CHECK(jb["tau"] == 1.0);
    REQUIRE(jb["classification"]["intervals"].size() == 1);
    CHECK(jb["classification"]["all_pass"].is_boolean());
}

TEST_CASE("experiment command output is deterministic") {
    fs::path dir = fresh_dir("cmd_experiment");
    std::string spec_path = (dir / "run.spec").string();
    {
        std::ofstream f(spec_path);
        f << "kind = furstenberg\nfamily = grid\ns = 1\nt = 1\n"
          << "nmin = 4\nnmax = 6\nname = gridrun\n";
    }
    cli::ExperimentArgs a;
    a.spec = spec_path;
    a.outdir = (dir / "out").string();
    std::ostringstream first, second;
    CHECK(cli::cmd_experiment(a, first) == 0);
    CHECK(cli::cmd_experiment(a, second) == 0);
    CHECK(first.str() == second.str());

    json j = json::parse(first.str());
    CHECK(j["kind"] == "furstenberg");
    CHECK(j["metrics"]["fitted_exponent"] == 1.0);
    CHECK(j["files"].size() == 3);
    for (const auto& f : j["files"]) CHECK(fs::exists(f.get<std::string>()));
}
