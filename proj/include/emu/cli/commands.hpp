#pragma once

#include <ostream>

#include "emu/cli/run_config.hpp"

namespace emu::cli {

// Subcommand bodies. Progress goes to `log`; failures are reported by
// throwing the project error types, which the executable maps to exit codes.
void cmd_generate(const RunConfig& rc, bool force, std::ostream& log);
void cmd_train(const RunConfig& rc, bool force, std::ostream& log);
void cmd_infer(const RunConfig& rc, bool force, std::ostream& log);
void cmd_evaluate(const RunConfig& rc, bool force, std::ostream& log);
void cmd_bench(const RunConfig& rc, std::ostream& log);

}  // namespace emu::cli
