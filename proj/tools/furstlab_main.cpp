// furstlab command line driver. Subcommands are registered below; each one
// reads/writes the plain-text set formats and prints deterministic JSON.
#include <CLI11.hpp>

#include <furstlab/cli.hpp>

#include <exception>
#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"furstlab: discretized incidence geometry toolkit"};
    app.require_subcommand(1);

    furstlab::cli::GenerateArgs ga;
    auto* gen = app.add_subcommand("generate", "emit a named example set or configuration");
    gen->add_option("kind", ga.kind,
                    "one of: grid, random, cantor-config, cantor, interval-cantor, "
                    "cantor-1d, well-spaced, block")
        ->required();
    gen->add_option("--delta-exp", ga.n, "scale exponent n, delta = 2^-n");
    gen->add_option("--s", ga.s, "dimension parameter s (or dim_x for cantor)");
    gen->add_option("--t", ga.t, "dimension parameter t (or dim_y for cantor)");
    gen->add_option("--T", ga.T, "block size in scale levels (0 = auto)");
    gen->add_option("--seed", ga.seed, "seed for the random kind");
    gen->add_option("--coarse-exp", ga.coarse_exp, "well-spaced: separation scale exponent");
    gen->add_option("--per-cell", ga.per_cell, "well-spaced: cubes per occupied cell");
    gen->add_option("--x-schedule", ga.x_schedule, "block: branch counts per level (x axis)");
    gen->add_option("--y-schedule", ga.y_schedule, "block: branch counts per level (y axis)");
    gen->add_option("--cubes", ga.cubes_path, "output path for the cube set")->required();
    gen->add_option("--tubes", ga.tubes_path, "output path for the tube set (configurations)");

    furstlab::cli::CheckArgs ca;
    auto* chk = app.add_subcommand("check", "regularity / structure reports for a cube set");
    chk->add_option("cubes", ca.cubes, "CUBESET v1 input file")->required();
    chk->add_option("--s", ca.s, "exponent for the regularity scans");
    chk->add_option("--T", ca.T, "block size for uniformity and branching");
    chk->add_option("--branch-out", ca.branch_out, "write the branching function (BRANCH v1)");

    furstlab::cli::IncidenceArgs ia;
    auto* inc = app.add_subcommand("incidence", "incidence counts between cubes and tubes");
    inc->add_option("cubes", ia.cubes, "CUBESET v1 input file")->required();
    inc->add_option("tubes", ia.tubes, "TUBESET v1 input file")->required();
    inc->add_option("--delta-exp", ia.delta_exp, "counting scale exponent (default: tube scale)");
    inc->add_option("--fat", ia.fat, "fattening factor (4 or 6)")
        ->check(CLI::IsMember({4, 6}));
    inc->add_option("--mode", ia.mode, "exact | highlow")
        ->check(CLI::IsMember({"exact", "highlow"}));
    inc->add_option("--S", ia.S, "highlow: frequency split parameter (power of two)");
    inc->add_option("--eps", ia.eps, "highlow: epsilon");
    inc->add_option("--rich-b", ia.rich_b, "exact: also census cells with mass >= b");
    inc->add_option("--census", ia.census_path, "exact: per-tube CSV output path");

    furstlab::cli::DecomposeArgs da;
    auto* dec = app.add_subcommand("decompose",
                                   "branching decomposition of a cube set or BRANCH file");
    dec->add_option("input", da.input, "CUBESET v1 or BRANCH v1 file")->required();
    dec->add_option("--T", da.T, "block size (cube set input)");
    dec->add_option("--s", da.s, "lower chord exponent");
    dec->add_option("--t", da.t, "central exponent");
    dec->add_option("--u", da.u, "upper chord exponent");
    dec->add_option("--eps", da.eps, "epsilon");
    dec->add_option("--max-cells", da.max_cells, "cells sampled per classification check");
    dec->add_option("--seed", da.seed, "sampling seed for the classification");

    furstlab::cli::ExperimentArgs ea;
    auto* exp = app.add_subcommand("experiment", "run a key=value experiment spec");
    exp->add_option("spec", ea.spec, "experiment spec file")->required();
    exp->add_option("--outdir", ea.outdir, "artifact output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return furstlab::cli::cmd_generate(ga, std::cout);
        if (chk->parsed()) return furstlab::cli::cmd_check(ca, std::cout);
        if (inc->parsed()) return furstlab::cli::cmd_incidence(ia, std::cout);
        if (dec->parsed()) return furstlab::cli::cmd_decompose(da, std::cout);
        if (exp->parsed()) return furstlab::cli::cmd_experiment(ea, std::cout);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
