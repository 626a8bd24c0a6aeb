#pragma once

/**
 * @file config.hpp
 * @brief Run configuration: an INI file with one section per concern,
 * optionally overridden by `section.key=value` assignments.
 *
 *   [model]     b1 b2 c0 c1 consumption
 *   [geometry]  kind dimension r1 r2 h
 *   [solver]    newton_tol newton_max_iter linear_tol dt t_end
 *   [initial]   field amplitude seed file
 *   [output]    dir vtk csv
 *   [verify]    seed phi_samples antiderivative_samples monotonicity_pairs
 *               coercivity_samples strong_monotonicity_pairs gradient_pairs
 *               resolvent_samples
 *
 * Unknown sections or keys are rejected so that typos cannot silently fall
 * back to defaults.
 */

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "coreshell/mesh.hpp"
#include "coreshell/model.hpp"
#include "coreshell/solvers.hpp"

namespace coreshell {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class InitialKind {
    zero,
    cone,    ///< c0 (1 - |x| / r2), vanishes on the outer boundary
    random,  ///< uniform in [-amplitude, amplitude], seeded
    file,    ///< nodal values from a CSV written by `stationary` or `evolve`
};

std::string to_string(InitialKind kind);
InitialKind parse_initial_kind(const std::string& text);

struct InitialConfig {
    InitialKind kind{InitialKind::zero};
    double amplitude{1.0};
    std::uint64_t seed{1};
    std::string file;
};

struct OutputConfig {
    std::string dir{"out"};
    bool vtk{true};
    bool csv{true};
};

struct VerifyConfig {
    std::uint64_t seed{20240601};
    std::size_t phi_samples{1000000};
    std::size_t antiderivative_samples{10000};
    std::size_t monotonicity_pairs{1000};
    std::size_t coercivity_samples{200};
    std::size_t strong_monotonicity_pairs{200};
    std::size_t gradient_pairs{100};
    std::size_t resolvent_samples{5};
};

struct RunConfig {
    ModelParams model;
    GeometrySpec geometry;
    SolverConfig solver;
    InitialConfig initial;
    OutputConfig output;
    VerifyConfig verify;

    /// Validates model, geometry and solver settings.
    void validate() const;
};

/// Applies one `section.key=value` assignment. Throws ConfigError.
void apply_setting(RunConfig& cfg, const std::string& assignment);

/// Parses INI text; `source` names the input in error messages.
RunConfig parse_config(const std::string& text, const std::string& source = "<string>");

/// Reads the file, then applies `overrides` in order and validates.
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Complete INI rendering of `cfg` (floats with 17 significant digits);
/// parse_config(to_ini(cfg)) reproduces cfg exactly.
std::string to_ini(const RunConfig& cfg);

}  // namespace coreshell
