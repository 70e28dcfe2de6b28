// Command-line front end: run one experiment, compare strategies under the
// same config and seeds, or run the fast invariant selftest.

#include <CLI11.hpp>

#include <cstdint>
#include <sstream>
#include <string>

#include "osal/cli.hpp"
#include "osal/config.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Open-set annotation active-learning benchmark"};
    app.require_subcommand(1);
    app.footer("Config file keys (key = default):\n" + osal::config_keys_help() +
               "\nEnvironment: OSAL_LOG = quiet|info|debug controls stderr logging.");

    osal::RunOptions run_options;
    std::uint64_t seed_override = 0;
    std::string strategy_override;
    CLI::App* run = app.add_subcommand("run", "Run one experiment and write a results CSV");
    run->add_option("config", run_options.config_path, "Path to a key = value config file")
        ->required();
    run->add_option("--out", run_options.out_path, "Results CSV path (default results.csv)");
    run->add_option("--jobs", run_options.jobs, "Seeds to run in parallel (default 1)");
    CLI::Option* seed_opt =
        run->add_option("--seed-override", seed_override, "Run only this single seed");
    CLI::Option* strategy_opt = run->add_option("--strategy-override", strategy_override,
                                                "Override the config's strategy");

    osal::CompareOptions compare_options;
    std::string strategies_csv;
    CLI::App* compare = app.add_subcommand(
        "compare", "Run several strategies under the identical config and seeds");
    compare->add_option("config", compare_options.config_path, "Path to a key = value config file")
        ->required();
    compare
        ->add_option("--strategies", strategies_csv,
                     "Comma-separated strategy list, e.g. lfosa,random")
        ->required();
    compare->add_option("--out", compare_options.out_dir, "Output directory (default .)");
    compare->add_option("--jobs", compare_options.jobs, "Seeds to run in parallel (default 1)");

    bool mutate_gradient = false;
    CLI::App* selftest =
        app.add_subcommand("selftest", "Run the fast invariant suite and report pass/fail");
    selftest
        ->add_flag("--mutate-gradient", mutate_gradient,
                   "Perturb the gradient under test (negative control; must fail)")
        ->group("");  // hidden from --help

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) {
        if (*seed_opt) run_options.seed_override = seed_override;
        if (*strategy_opt) run_options.strategy_override = strategy_override;
        return osal::cmd_run(run_options);
    }
    if (compare->parsed()) {
        std::string item;
        std::stringstream ss(strategies_csv);
        while (std::getline(ss, item, ',')) {
            if (!item.empty()) compare_options.strategies.push_back(item);
        }
        return osal::cmd_compare(compare_options);
    }
    return osal::cmd_selftest(mutate_gradient);
}
