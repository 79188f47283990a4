// spinstar command line: run / compare / figure

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "spinstar/scenario.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Central spin in a spin-1/2 bath: exact, TCL2, NZ2 and reference dynamics"};
    app.require_subcommand(1);

    std::string config;
    std::string out;

    auto* run = app.add_subcommand("run", "Write one CSV per configured method");
    run->add_option("--config", config, "key = value config file")->required();
    run->add_option("--out", out, "Output directory (overrides output_dir)");

    auto* compare = app.add_subcommand("compare", "Write report.csv with errors against the first method");
    compare->add_option("--config", config, "key = value config file")->required();

    int number = 0;
    double t_max = 0.0;
    double dt = 0.0;
    auto* figure = app.add_subcommand(
        "figure",
        "Figure presets at N=101 (2,3: [0,600]; 4: same as 3 on [0,8000]; 5: [0,300]; 6,7: [0,8000]). "
        "The windows are chosen defaults; override them with --t-max/--dt");
    figure->add_option("N", number, "Preset number 2..7")->required();
    auto* t_opt = figure->add_option("--t-max", t_max, "End of the time window");
    auto* dt_opt = figure->add_option("--dt", dt, "Output time step");
    figure->add_option("--out", out, "Output directory (default figure_<N>)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : spinstar::exit_config;
    }

    const std::optional<std::filesystem::path> out_dir =
        out.empty() ? std::nullopt : std::optional<std::filesystem::path>(out);
    if (*run) return spinstar::run_command(config, out_dir, std::cout, std::cerr);
    if (*compare) return spinstar::compare_command(config, std::cout, std::cerr);
    return spinstar::figure_command(number, t_opt->count() ? std::optional<double>(t_max) : std::nullopt,
                                    dt_opt->count() ? std::optional<double>(dt) : std::nullopt, out_dir, std::cout,
                                    std::cerr);
}
