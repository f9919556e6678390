#include <cstdint>
#include <string>

#include <CLI11.hpp>

#include "cfd/scenario.hpp"
#include "cfd/version.hpp"

namespace {

struct CommonArgs {
    std::string input;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_set = false;
    double horizon = 0.0;
    bool horizon_set = false;
    double tol = 0.0;
    bool tol_set = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--input", args.input, "scenario file (JSON)")->required();
    cmd->add_option("--out-dir", args.out_dir, "output directory for report.json and tables/");
    cmd->add_option("--seed", args.seed, "seed recorded in the report")
        ->each([&args](const std::string&) { args.seed_set = true; });
    cmd->add_option("--horizon", args.horizon, "override the scenario horizon")
        ->each([&args](const std::string&) { args.horizon_set = true; });
    cmd->add_option("--tol", args.tol, "override rk/fixed-point/quadrature tolerances")
        ->each([&args](const std::string&) { args.tol_set = true; });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conformable fractional dichotomy toolkit"};
    app.set_version_flag("--version", std::string(cfd::kLibraryVersion));
    app.require_subcommand(1);

    const char* kinds[] = {"solve",     "ml",       "dichotomy-estimate",
                           "dichotomy-verify", "roughness", "manifold", "nonuniform"};
    CommonArgs args;
    for (const char* kind : kinds) {
        CLI::App* cmd = app.add_subcommand(kind, std::string("run a ") + kind + " scenario");
        add_common(cmd, args);
    }

    CLI11_PARSE(app, argc, argv);

    cfd::ScenarioOverrides overrides;
    if (args.seed_set) overrides.seed = args.seed;
    if (args.horizon_set) overrides.horizon = args.horizon;
    if (args.tol_set) overrides.tol = args.tol;
    for (const CLI::App* sub : app.get_subcommands())
        overrides.expected_kind = sub->get_name();
    return cfd::run_scenario(args.input, args.out_dir, overrides);
}
