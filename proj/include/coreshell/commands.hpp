#pragma once

/**
 * @file commands.hpp
 * @brief The four batch commands behind the `coreshell` executable.
 *
 * Every command writes into cfg.output.dir, echoes the resolved
 * configuration into each text output and returns a process exit code.
 */

#include <iosfwd>
#include <vector>

#include "coreshell/config.hpp"
#include "coreshell/discretization.hpp"
#include "coreshell/mesh.hpp"
#include "coreshell/properties.hpp"

namespace coreshell {

enum ExitCode : int {
    exit_success = 0,
    exit_property_violation = 1,
    exit_invalid_input = 2,
    exit_solver_failure = 3,
};

struct VerifyOptions {
    /// Flips the sign of b1 and b2 and skips parameter validation, so that
    /// the suite can be seen to catch a broken operator.
    bool inject_negative_b{false};
};

/// Initial field selected by cfg.initial. Throws ConfigError for unreadable
/// or mismatched restart files.
DiscreteField make_initial_field(const RunConfig& cfg, const CoreShellMesh& mesh, const AssembledSystem& sys);

/// Reads the `u` column of a node,x,y,u CSV (lines starting with '#' are
/// skipped). The row count must equal the node count of `sys`.
DiscreteField read_field_csv(const std::string& path, const AssembledSystem& sys);

/// Runs every randomised property check of the verify command.
std::vector<PropertyResult> run_property_suite(const RunConfig& cfg, const AssembledSystem& sys,
                                               const ModelParams& params, double gamma);

int cmd_mesh(const RunConfig& cfg, std::ostream& log);
int cmd_stationary(const RunConfig& cfg, std::ostream& log);
int cmd_evolve(const RunConfig& cfg, std::ostream& log);
int cmd_verify(const RunConfig& cfg, const VerifyOptions& options, std::ostream& log);

/// Command-line entry point: `coreshell <mesh|stationary|evolve|verify> CONFIG [options]`.
int run_cli(int argc, const char* const* argv, std::ostream& log);

}  // namespace coreshell
