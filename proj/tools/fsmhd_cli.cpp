#include "fsmhd/config.hpp"
#include "fsmhd/run.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Free-surface MHD inviscid-limit toolkit"};
    app.require_subcommand(1);
    std::string config;
    const char* verbs[][2] = {{"simulate", "single viscous or ideal run"},
                              {"sweep", "eps ladder with difference norms and fitted rates"},
                              {"layer", "boundary-layer profiles and scaling scans"},
                              {"check-algebra", "vorticity algebra property suite on the configured surface"}};
    for (const auto& v : verbs) app.add_subcommand(v[0], v[1])->add_option("config", config, "JSON run config")->required();
    app.add_subcommand("version", "print the version");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : fsmhd::exit_config;
    }
    const std::string verb = app.get_subcommands().front()->get_name();
    if (verb == "version") {
        std::cout << "fsmhd " << fsmhd::fsmhd_version << " (config schema " << fsmhd::config_schema_version << ")\n";
        return fsmhd::exit_ok;
    }
    return fsmhd::run_verb(verb, config, std::cerr);
}
