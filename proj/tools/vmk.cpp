#include <CLI11.hpp>
#include <iostream>

#include "vmk/errors.hpp"
#include "vmk/experiments.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Mean-variance strategies for Volterra stochastic volatility models"};
    app.require_subcommand(1);
    vmk::RunOptions opt;
    std::uint64_t seed = 0;
    long paths = 0;
    int grid_n = 0;
    std::string out_dir;

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"affine-solve", "Solve the Riccati-Volterra system of the affine model"},
        {"quadratic-solve", "Solve the operator Riccati equation of the quadratic model"},
        {"frontier", "Efficient frontier for the configured targets"},
        {"simulate", "Monte Carlo of the optimal wealth"},
        {"sweep", "Strategy profiles over a parameter sweep"},
        {"check", "Admissibility diagnostics"}};
    for (const auto& [name, desc] : commands) {
        auto* sub = app.add_subcommand(name, desc);
        sub->add_option("--config", opt.config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "Output directory");
        sub->add_option("--seed", seed, "Monte Carlo seed");
        sub->add_option("--paths", paths, "Monte Carlo paths");
        sub->add_option("--grid-n", grid_n, "Number of grid cells")->check(CLI::PositiveNumber);
    }
    CLI11_PARSE(app, argc, argv);
    auto* sub = app.get_subcommands().front();
    if (sub->count("--out")) opt.out_dir = out_dir;
    if (sub->count("--seed")) opt.seed = seed;
    if (sub->count("--paths")) opt.paths = paths;
    if (sub->count("--grid-n")) opt.grid_n = grid_n;

    try {
        vmk::run_subcommand(sub->get_name(), opt, std::cout);
    } catch (const vmk::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const vmk::ModelAssumption& e) {
        std::cerr << "model assumption violated: " << e.what() << "\n";
        return 3;
    } catch (const vmk::RiccatiBlowUp& e) {
        std::cerr << "riccati blow-up: " << e.what() << "\nhint: shorten the horizon or lower Theta / eta\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
