#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ipx/config.hpp"

namespace ipx {

const std::vector<std::string>& command_names();

// Command-line values that take precedence over the config file. `n` is the
// scenario count for simulate and the grid size everywhere else (for
// convergence it replaces the sweep).
struct Overrides {
    std::optional<Method> method;
    std::optional<int> n;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> scenario;
    std::optional<std::string> out;
};
void apply_overrides(RunConfig& config, const std::string& command, const Overrides& o);

// CSV text of one command. Progress and timings go to `log`, never into the
// report, so reports are byte-for-byte reproducible.
std::string run_report(const std::string& command, const RunConfig& config, std::ostream& log);

// Writes the report; on failure the partial file is removed and InputError thrown.
void write_report(const std::string& path, const std::string& text);

// Runs a command end to end and maps errors to exit codes (1 input, 2 numeric,
// 3 model). The report goes to config.out, or to `out` when that is empty.
int run_command(const std::string& command, const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace ipx
