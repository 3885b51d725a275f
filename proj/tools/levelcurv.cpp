#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "levelcurv/cli.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Level-set curvature analysis of parabolic solutions on convex rings"};
    app.require_subcommand(1);

    std::string config;
    std::string out;
    const std::pair<const char*, const char*> commands[] = {
        {"solve", "Run the solver and write snapshot fields"},
        {"analyze", "Extract level sets and rank data from saved snapshots"},
        {"verify", "Solve and write the verification report"},
        {"structure", "Solve and scan the structure-condition concavity"},
        {"plot", "Write curvature charts from an existing report"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config, "Scenario configuration file")->required();
        sub->add_option("--out", out, "Output directory (default: [output] dir of the config)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return levelcurv::kExitConfig;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    const std::optional<std::filesystem::path> out_dir =
        out.empty() ? std::nullopt : std::optional<std::filesystem::path>(out);
    return levelcurv::run_command(command, config, out_dir, std::cout, std::cerr);
}
