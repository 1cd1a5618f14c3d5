#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "ipx/commands.hpp"
#include "ipx/errors.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Indifference and superhedging prices in binomial models with proportional costs"};
    std::string command, config_path, method, scenario, out;
    int n = 0;
    std::uint64_t seed = 0;

    app.add_option("command", command, "price | disutility | convergence | strategy | simulate | check")
        ->required()
        ->check(CLI::IsMember(ipx::command_names()));
    app.add_option("--config", config_path, "config file")->required();
    auto* o_method = app.add_option("--method", method, "upper or lower")->check(CLI::IsMember({"upper", "lower"}));
    auto* o_n = app.add_option("--n", n, "grid size; scenario count for simulate");
    auto* o_seed = app.add_option("--seed", seed, "simulation seed");
    auto* o_scenario = app.add_option("--scenario", scenario, "path such as uudd");
    auto* o_out = app.add_option("--out", out, "report file (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    ipx::RunConfig config;
    try {
        config = ipx::load_config(config_path);
        ipx::Overrides o;
        if (*o_method) o.method = ipx::parse_method(method);
        if (*o_n) o.n = n;
        if (*o_seed) o.seed = seed;
        if (*o_scenario) o.scenario = scenario;
        if (*o_out) o.out = out;
        ipx::apply_overrides(config, command, o);
    } catch (const ipx::InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return ipx::run_command(command, config, std::cout, std::cerr);
}
