// Command-line driver for the polymeric fluid-structure simulator.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pfsi/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"pfsi_sim - polymeric fluid-structure interaction simulator"};

    std::string config_path;
    std::string output_dir;
    std::vector<std::string> overrides;
    bool list_scenarios = false;
    bool quiet = false;

    app.add_option("--config", config_path, "configuration file (key = value sections)");
    app.add_option("--output", output_dir, "output directory (overrides the config)");
    app.add_option("--override", overrides, "extra section.key=value settings (repeatable)");
    app.add_flag("--list-scenarios", list_scenarios, "list built-in scenarios and exit");
    app.add_flag("--quiet", quiet, "suppress progress output");

    CLI11_PARSE(app, argc, argv);

    if (list_scenarios) {
        for (const auto& [name, desc] : pfsi::scenario_table())
            std::cout << name << "  -  " << desc << '\n';
        return pfsi::kExitOk;
    }
    if (config_path.empty()) {
        std::cerr << "error: --config is required (or use --list-scenarios)\n";
        return pfsi::kExitUsage;
    }

    std::ifstream in(config_path);
    if (!in) {
        std::cerr << "error: cannot open config file: " << config_path << '\n';
        return pfsi::kExitUsage;
    }
    std::stringstream buf;
    buf << in.rdbuf();

    pfsi::RunConfig cfg;
    try {
        cfg = pfsi::parse_config(buf.str());
        for (const auto& ov : overrides) {
            auto eq = ov.find('=');
            if (eq == std::string::npos) {
                std::cerr << "error: --override expects key=value, got '" << ov << "'\n";
                return pfsi::kExitUsage;
            }
            std::string key = ov.substr(0, eq), value = ov.substr(eq + 1);
            if (!pfsi::apply_config_key(cfg, key, value)) {
                std::cerr << "error: unknown override key '" << key << "'\n";
                return pfsi::kExitUsage;
            }
        }
        if (!output_dir.empty()) cfg.output_dir = output_dir;
        pfsi::validate_config(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return pfsi::kExitUsage;
    }

    return pfsi::run_simulation(cfg, std::cout, quiet);
}
