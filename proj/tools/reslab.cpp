#include <iostream>

#include <CLI11.hpp>

#include "reslab/cli.hpp"
#include "reslab/errors.hpp"

namespace fs = std::filesystem;
using reslab::cli::json;

int main(int argc, char** argv) {
    CLI::App app{"Zero-energy resonance and local decay toolkit"};
    app.set_version_flag("--version", std::string(reslab::cli::toolkit_version));
    app.require_subcommand(1);

    struct Args {
        std::string config;
        std::string out = "out";
        std::string potential;
        double alpha = 0.0;
    };
    std::vector<std::pair<CLI::App*, Args>> subs;
    subs.reserve(reslab::cli::commands().size());
    for (const auto& name : reslab::cli::commands()) {
        subs.emplace_back(app.add_subcommand(name, "run " + name), Args{});
        auto& [sub, a] = subs.back();
        sub->add_option("--config", a.config, "JSON run config");
        sub->add_option("--out", a.out, "output directory")->capture_default_str();
        if (name != "groundstate") {
            sub->add_option("--potential", a.potential, "potential shorthand kind:params, e.g. exponential:1.0");
            sub->add_option("--alpha", a.alpha, "angular channel for --potential");
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : reslab::cli::ExitCode::usage;
    }

    for (auto& [sub, a] : subs) {
        if (!sub->parsed()) continue;
        const std::string name = sub->get_name();
        json config = json::object();
        fs::path base;
        try {
            if (!a.config.empty()) {
                config = reslab::cli::load_config(a.config);
                base = fs::path(a.config).parent_path();
            }
            if (!a.potential.empty()) {
                json decl = reslab::cli::potential_shorthand(a.potential);
                if (a.alpha != 0.0) decl = json{{"kind", "centrifugal_composite"}, {"base", decl}, {"alpha", a.alpha}};
                config["potential"] = decl;
            }
        } catch (const reslab::Error& e) {
            std::cerr << "error: " << e.what() << "\n";
            return reslab::cli::ExitCode::usage;
        }
        return reslab::cli::run_command(name, config, a.out, std::cout, base);
    }
    return reslab::cli::ExitCode::usage;
}
