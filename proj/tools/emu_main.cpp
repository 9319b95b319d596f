#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "emu/cli/commands.hpp"
#include "emu/core/error.hpp"
#include "emu/model/config.hpp"

namespace {
enum class Command { none, generate, train, infer, evaluate, bench };
}

int main(int argc, char** argv) {
    CLI::App app{"emu: train and run a Bayesian emulator for pixelwise atmospheric correction"};
    app.require_subcommand(1);

    Command selected = Command::none;
    std::string config_path;
    std::uint64_t seed_value = 0;
    bool seed_given = false;
    bool force = false;
    std::string arch_override;
    std::string mode_override;
    std::size_t samples_override = 0;

    const auto add_common = [&](CLI::App* sub, Command cmd) {
        sub->add_option("--config", config_path, "run configuration file")
            ->required();
        sub->add_option("--seed", seed_value, "override every phase seed in the config")
            ->each([&seed_given](const std::string&) { seed_given = true; });
        sub->add_flag("--force", force, "overwrite existing outputs");
        sub->callback([&selected, cmd] { selected = cmd; });
        return sub;
    };

    add_common(app.add_subcommand("generate", "render the synthetic tile dataset"),
               Command::generate);
    CLI::App* train =
        add_common(app.add_subcommand("train", "fit the emulator on the training split"),
                   Command::train);
    train->add_option("--arch", arch_override, "architecture override (dcfc|dccnn|dcvdsr)");
    CLI::App* infer =
        add_common(app.add_subcommand("infer", "write per-tile predictive moments"),
                   Command::infer);
    infer->add_option("--mode", mode_override, "inference mode override (bayes|static)");
    infer->add_option("--samples", samples_override, "stochastic passes override");
    add_common(app.add_subcommand("evaluate", "score predictions against the reference"),
               Command::evaluate);
    add_common(app.add_subcommand("bench", "time static vs stochastic inference"),
               Command::bench);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    }

    try {
        emu::cli::RunConfig rc = emu::cli::RunConfig::load(config_path);
        if (seed_given) rc.apply_seed_override(seed_value);
        if (!arch_override.empty()) rc.model.arch = emu::model::arch_from_name(arch_override);
        if (!mode_override.empty()) {
            rc.infer_mode = mode_override;
            rc.validate();
        }
        if (samples_override > 0) rc.infer_samples = samples_override;

        switch (selected) {
            case Command::generate: emu::cli::cmd_generate(rc, force, std::cout); break;
            case Command::train: emu::cli::cmd_train(rc, force, std::cout); break;
            case Command::infer: emu::cli::cmd_infer(rc, force, std::cout); break;
            case Command::evaluate: emu::cli::cmd_evaluate(rc, force, std::cout); break;
            case Command::bench: emu::cli::cmd_bench(rc, std::cout); break;
            case Command::none: return 2;
        }
    } catch (const emu::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
