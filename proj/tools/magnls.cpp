#include "magnls/config.hpp"
#include "magnls/runner.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Spectral experiments for the magnetic cubic Schrodinger equation"};
    app.require_subcommand(1, 1);
    std::string config_path, output_dir;
    std::uint64_t seed = 0;
    std::vector<std::string> overrides;
    for (const auto& name : magnls::subcommands()) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "INI experiment file")->required();
        sub->add_option("--output", output_dir, "output directory (overrides output.directory)");
        sub->add_option("--seed", seed, "random seed (overrides output.seed)");
        sub->add_option("--override", overrides, "section.key=value, repeatable")
            ->take_all()
            ->allow_extra_args(false);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : magnls::exit_error;
    }
    const std::string sub = app.get_subcommands().front()->get_name();
    auto* subapp = app.get_subcommands().front();

    magnls::ExperimentConfig cfg;
    try {
        auto table = magnls::IniTable::load(config_path);
        for (const auto& o : overrides) table.set_override(o);
        if (subapp->count("--output")) table.set("output", "directory", output_dir);
        if (subapp->count("--seed")) table.set("output", "seed", std::to_string(seed));
        cfg = magnls::build_config(table);
    } catch (const magnls::Error& e) {
        std::cerr << "magnls: " << e.what() << '\n';
        return magnls::exit_error;
    }
    try {
        return magnls::run(sub, cfg, std::cout);
    } catch (const std::exception& e) {
        std::cerr << "magnls: " << e.what() << '\n';
        return magnls::exit_error;
    }
}
