#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "empcn/commands.hpp"
#include "empcn/graph_io.hpp"

namespace {

int run(int argc, char** argv) {
    using namespace empcn::cli;
    CLI::App app{"E(n) equivariant message passing on cellular complexes"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    std::vector<std::string> overrides;
    std::string out_dir;
    std::string input;
    app.add_option("--config", config_path, "JSON run config")->check(CLI::ExistingFile);
    auto* seed_opt = app.add_option("--seed", seed, "Seed for every random stream");
    app.add_option("--set", overrides, "Override a config value, dotted.key=value (repeatable)");
    auto* out_opt = app.add_option("--out", out_dir, "Output directory");
    auto* in_opt = app.add_option("-i,--input", input, "Input graph or dataset");

    const std::vector<std::pair<const char*, const char*>> tasks = {
        {"lift", "Lift a graph to a cellular complex"},
        {"invariants", "Tabulate per-message geometric invariants"},
        {"simulate", "Generate N-body train/val/test datasets"},
        {"train", "Train a model and write a checkpoint"},
        {"eval", "Evaluate a checkpoint on a dataset"},
        {"check", "Run the equivariance and gradient checks"}};
    for (const auto& [name, help] : tasks) app.add_subcommand(name, help)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        nlohmann::json file_config;
        if (!config_path.empty()) file_config = empcn::read_json_file(config_path);
        if (in_opt->count()) overrides.push_back("input=" + nlohmann::json(input).dump());
        auto config = resolve_config(file_config, overrides, seed_opt->count() ? std::optional(seed) : std::nullopt,
                                     out_opt->count() ? std::optional(out_dir) : std::nullopt);
        return run_command(app.get_subcommands().front()->get_name(), config, std::cout);
    } catch (const RunFailed& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailed;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
