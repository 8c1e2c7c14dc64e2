#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "fieldroad/experiment.hpp"

namespace {

void emit_error_json(const std::string& type, const std::string& message) {
    fieldroad::json err;
    err["error"] = {{"type", type}, {"message", message}};
    std::cerr << err.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fieldroad: field-road diffusion experiments"};
    app.require_subcommand(1);

    std::string config_path, out_path;
    long seed = -1;
    bool verbose = false;
    for (const auto& [name, _] : fieldroad::command_names()) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON config path")->required();
        sub->add_option("--out", out_path, "output CSV path (overrides config)");
        sub->add_option("--seed", seed, "seed for stochastic oracles");
        sub->add_flag("--verbose", verbose, "print progress to stderr");
    }
    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        std::ifstream in(config_path);
        if (!in) {
            emit_error_json("io", "cannot read config file \"" + config_path + "\"");
            return 1;
        }
        std::stringstream buf;
        buf << in.rdbuf();

        fieldroad::ExperimentSpec spec = fieldroad::parse_config(buf.str());
        const std::string config_command = spec.resolved["command"].get<std::string>();
        if (config_command != command) {
            emit_error_json("config", "config declares command \"" + config_command +
                                          "\" but \"" + command + "\" was invoked");
            return 1;
        }
        if (!out_path.empty()) {
            spec.output_path = out_path;
            spec.resolved["output"] = out_path;
        }
        if (seed >= 0) {
            spec.seed = seed;
            spec.resolved["seed"] = seed;
        }
        if (verbose)
            std::cerr << "fieldroad " << fieldroad::kVersion << ": running " << command
                      << " -> " << spec.output_path << "\n";
        const int status = fieldroad::execute(spec);
        if (verbose) std::cerr << "done\n";
        return status;
    } catch (const fieldroad::ConfigError& e) {
        emit_error_json("config", e.what());
    } catch (const fieldroad::QuadratureNotConverged& e) {
        emit_error_json("quadrature", e.what());
    } catch (const fieldroad::InstabilityError& e) {
        emit_error_json("instability", e.what());
    } catch (const fieldroad::DomainError& e) {
        emit_error_json("domain", e.what());
    } catch (const std::exception& e) {
        emit_error_json("internal", e.what());
    }
    return 1;
}
