#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ivccp/app/commands.hpp"

int main(int argc, char** argv) {
    using namespace ivccp::app;
    CLI::App app{"Conformal prediction intervals for nonparametric IV regression"};
    app.require_subcommand(1);

    std::string run_config, run_out;
    auto* run = app.add_subcommand("run", "run Monte Carlo replications from a JSON config");
    run->add_option("config", run_config, "config file")->required()->check(CLI::ExistingFile);
    run->add_option("-o,--output", run_out, "output directory (overrides the config)");

    std::string surf_config, surf_out = "surface.csv";
    SurfaceGrid grid;
    auto* surface = app.add_subcommand("surface", "interval surfaces over an (x, z) grid");
    surface->add_option("config", surf_config, "config file")->required()->check(CLI::ExistingFile);
    surface->add_option("-o,--output", surf_out, "output csv")->capture_default_str();
    surface->add_option("--x-min", grid.x_min)->capture_default_str();
    surface->add_option("--x-max", grid.x_max)->capture_default_str();
    surface->add_option("--z-min", grid.z_min)->capture_default_str();
    surface->add_option("--z-max", grid.z_max)->capture_default_str();
    surface->add_option("--steps", grid.steps, "grid points per axis")->capture_default_str()->check(
        CLI::PositiveNumber);

    std::string ing_csv, ing_out = "dataset.csv", ing_y = "y";
    std::vector<std::string> ing_x, ing_z;
    auto* ingest = app.add_subcommand("ingest", "validate a CSV and write a normalized dataset");
    ingest->add_option("csv", ing_csv, "input csv")->required()->check(CLI::ExistingFile);
    ingest->add_option("-y", ing_y, "outcome column")->capture_default_str();
    ingest->add_option("-x", ing_x, "regressor column(s)")->required()->delimiter(',');
    ingest->add_option("-z", ing_z, "instrument column(s)")->required()->delimiter(',');
    ingest->add_option("-o,--output", ing_out, "output csv")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    if (*run) return cmd_run(run_config, run_out, std::cerr);
    if (*surface) return cmd_surface(surf_config, grid, surf_out, std::cerr);
    return cmd_ingest(ing_csv, ing_y, ing_x, ing_z, ing_out, std::cerr);
}
