#include <CLI11.hpp>

#include <iostream>

#include "coexist/cli/commands.hpp"

int main(int argc, char** argv) {
    using namespace coexist;
    CLI::App app{"Bifurcation toolkit for cross-diffusion elliptic systems on an interval"};
    std::string command, config_path, out_dir;
    std::optional<long long> n, seed;
    app.add_option("command", command, "eig | semitrivial | curves | branch | region | check")
        ->required()
        ->check(CLI::IsMember({"eig", "semitrivial", "curves", "branch", "region", "check"}));
    app.add_option("--config", config_path, "run configuration (INI)")->required();
    app.add_option("--out", out_dir, "output directory (overrides run.out)");
    app.add_option("--n", n, "interior grid nodes (overrides grid.n)");
    app.add_option("--seed", seed, "probe seed (overrides run.seed)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::ConfigFailure;
    }

    try {
        cli::Config config = cli::Config::from_file(config_path);
        if (n) config.set_override("grid", "n", std::to_string(*n));
        if (seed) config.set_override("run", "seed", std::to_string(*seed));
        const std::string out = !out_dir.empty() ? out_dir : config.text("run", "out", ".");
        return cli::dispatch(command, config, out);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.kind() == ErrorKind::ConfigError ? cli::ConfigFailure : cli::SolverFailure;
    }
}
