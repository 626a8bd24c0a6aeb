#include "coreshell/commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "coreshell/analysis.hpp"
#include "coreshell/solvers.hpp"

namespace coreshell {

namespace fs = std::filesystem;

namespace {

std::string g17(double x) { return fmt::format("{:.17g}", x); }

/// Config echo as comment lines, prepended to every text artefact.
std::string config_echo(const RunConfig& cfg, const std::string& command) {
    std::string out = fmt::format("# coreshell {}\n", command);
    std::istringstream lines(to_ini(cfg));
    std::string line;
    while (std::getline(lines, line)) {
        out += line.empty() ? "#\n" : "# " + line + "\n";
    }
    return out;
}

class OutputDir {
public:
    explicit OutputDir(const RunConfig& cfg) : root_(cfg.output.dir) {
        std::error_code ec;
        fs::create_directories(root_, ec);
        if (ec) {
            throw ConfigError(fmt::format("output.dir '{}' cannot be created: {}", cfg.output.dir, ec.message()));
        }
        std::ofstream probe(root_ / "resolved_config.ini", std::ios::binary);
        if (!probe) {
            throw ConfigError(fmt::format("output.dir '{}' is not writable", cfg.output.dir));
        }
        probe << to_ini(cfg);
    }

    std::ofstream open(const std::string& name) const {
        std::ofstream os(root_ / name, std::ios::binary);
        if (!os) {
            throw std::runtime_error(fmt::format("cannot write {}", (root_ / name).string()));
        }
        return os;
    }

    std::string path(const std::string& name) const { return (root_ / name).string(); }

private:
    fs::path root_;
};

std::string vtk_title(const std::string& command) {
    return fmt::format("coreshell {} (configuration in resolved_config.ini)", command);
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

void write_nodal_csv(std::ostream& os, const std::string& echo, const CoreShellMesh& mesh, const Vector& u) {
    os << echo << "node,x,y,u\n";
    for (std::size_t i = 0; i < mesh.node_count(); ++i) {
        os << fmt::format("{},{},{},{}\n", i, g17(mesh.nodes[i].x), g17(mesh.nodes[i].y),
                          g17(u[static_cast<Eigen::Index>(i)]));
    }
}

double radius(const Point& p) { return std::hypot(p.x, p.y); }

}  // namespace

DiscreteField read_field_csv(const std::string& path, const AssembledSystem& sys) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(fmt::format("cannot read initial field file '{}'", path));
    }
    std::string line;
    std::ptrdiff_t u_column = -1;
    std::vector<double> values;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::vector<std::string> cells;
        std::istringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ',')) {
            cells.push_back(cell);
        }
        if (u_column < 0) {
            const auto it = std::find(cells.begin(), cells.end(), "u");
            if (it == cells.end()) {
                throw ConfigError(fmt::format("{}: header has no 'u' column", path));
            }
            u_column = it - cells.begin();
            continue;
        }
        if (static_cast<std::size_t>(u_column) >= cells.size()) {
            throw ConfigError(fmt::format("{}:{}: missing 'u' value", path, line_no));
        }
        try {
            std::size_t used = 0;
            values.push_back(std::stod(cells[static_cast<std::size_t>(u_column)], &used));
        } catch (const std::exception&) {
            throw ConfigError(fmt::format("{}:{}: '{}' is not a number", path, line_no,
                                          cells[static_cast<std::size_t>(u_column)]));
        }
    }
    if (values.size() != sys.size()) {
        throw ConfigError(
            fmt::format("{}: {} nodal values but the mesh has {} nodes", path, values.size(), sys.size()));
    }
    return sys.make_field(Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size())));
}

DiscreteField make_initial_field(const RunConfig& cfg, const CoreShellMesh& mesh, const AssembledSystem& sys) {
    switch (cfg.initial.kind) {
        case InitialKind::zero:
            return sys.zero_field();
        case InitialKind::cone: {
            const double c0 = cfg.model.c0;
            const double r2 = cfg.geometry.r2;
            return interpolate(sys, mesh, [&](const Point& p) { return c0 * (1.0 - radius(p) / r2); });
        }
        case InitialKind::random: {
            Rng rng(cfg.initial.seed);
            return random_field(sys, rng, -cfg.initial.amplitude, cfg.initial.amplitude);
        }
        case InitialKind::file:
            return read_field_csv(cfg.initial.file, sys);
    }
    throw ConfigError("unknown initial field");
}

std::vector<PropertyResult> run_property_suite(const RunConfig& cfg, const AssembledSystem& sys,
                                               const ModelParams& params, double gamma) {
    const VerifyConfig& v = cfg.verify;
    // each check draws from its own stream so that changing one count
    // leaves the samples of the others untouched
    auto stream = [&](std::uint64_t index) {
        std::seed_seq seq{static_cast<std::uint32_t>(v.seed), static_cast<std::uint32_t>(v.seed >> 32),
                          static_cast<std::uint32_t>(index)};
        return Rng(seq);
    };
    std::vector<PropertyResult> results;
    Rng r0 = stream(0);
    results.push_back(check_phi_properties(params, r0, v.phi_samples));
    Rng r1 = stream(1);
    results.push_back(check_antiderivative(params, r1, v.antiderivative_samples));
    Rng r2 = stream(2);
    results.push_back(check_monotonicity(sys, params, r2, v.monotonicity_pairs));
    Rng r3 = stream(3);
    results.push_back(check_coercivity(sys, params, r3, v.coercivity_samples));
    Rng r4 = stream(4);
    results.push_back(check_strong_monotonicity(sys, params, gamma, r4, v.strong_monotonicity_pairs));
    Rng r5 = stream(5);
    results.push_back(check_gradient(sys, params, r5, v.gradient_pairs));
    Rng r6 = stream(6);
    results.push_back(check_resolvent(sys, params, cfg.solver, r6, v.resolvent_samples));
    return results;
}

int cmd_mesh(const RunConfig& cfg, std::ostream& log) {
    const CoreShellMesh mesh = build_mesh(cfg.geometry);
    mesh.check();
    const OutputDir out(cfg);
    if (cfg.output.vtk) {
        auto os = out.open("mesh.vtk");
        write_vtk(os, mesh, vtk_title("mesh"));
    }
    auto os = out.open("mesh_summary.txt");
    os << config_echo(cfg, "mesh");
    os << fmt::format("kind = {}\n", to_string(mesh.geometry.kind));
    os << fmt::format("dimension = {}\n", mesh.geometry.dimension);
    os << fmt::format("nodes = {}\n", mesh.node_count());
    os << fmt::format("elements = {}\n", mesh.element_count());
    os << fmt::format("core_elements = {}\n", mesh.count_region(Region::core));
    os << fmt::format("shell_elements = {}\n", mesh.count_region(Region::shell));
    os << fmt::format("interface_facets = {}\n", mesh.gamma_facets.size());
    os << fmt::format("dirichlet_nodes = {}\n", mesh.s_nodes.size());
    fmt::print(log, "mesh: {} nodes, {} elements ({} core, {} shell) -> {}\n", mesh.node_count(),
               mesh.element_count(), mesh.count_region(Region::core), mesh.count_region(Region::shell),
               out.path("mesh_summary.txt"));
    return exit_success;
}

int cmd_stationary(const RunConfig& cfg, std::ostream& log) {
    const CoreShellMesh mesh = build_mesh(cfg.geometry);
    const AssembledSystem sys = assemble(mesh, cfg.model);
    const DiscreteField u0 = make_initial_field(cfg, mesh, sys);
    const OutputDir out(cfg);

    const NonlinearSolveResult solved = stationary_solve(sys, cfg.model, cfg.solver, u0);
    const bool ok = solved.report.converged();
    const std::string echo = config_echo(cfg, "stationary");
    const std::string partial = ok ? "" : "# PARTIAL: stationary solve did not converge\n";

    if (cfg.output.csv) {
        auto os = out.open("stationary.csv");
        write_nodal_csv(os, echo + partial, mesh, solved.u.values);
    }
    if (cfg.output.csv && mesh.is_radial()) {
        auto os = out.open("radial_profile.csv");
        os << echo << partial << "r,u\n";
        for (std::size_t i = 0; i < mesh.node_count(); ++i) {
            os << fmt::format("{},{}\n", g17(mesh.nodes[i].x), g17(solved.u.values[static_cast<Eigen::Index>(i)]));
        }
    }
    if (cfg.output.vtk) {
        auto os = out.open("stationary.vtk");
        const std::vector<double> field = to_std(solved.u.values);
        write_vtk(os, mesh, vtk_title(ok ? "stationary" : "stationary PARTIAL"), &field, "u");
    }

    const double e = energy(sys, solved.u, cfg.model);
    const FieldNorms n = norms(sys, solved.u);
    const double jump = interface_flux_jump(sys, mesh, solved.u, cfg.model);

    auto report = out.open("stationary_report.txt");
    report << echo;
    report << fmt::format("status = {}\n", to_string(solved.report.status));
    if (!ok) {
        report << "partial = true\n";
        report << fmt::format("message = {}\n", solved.report.message);
    }
    report << fmt::format("initial_field = {}\n", to_string(cfg.initial.kind));
    report << fmt::format("newton_iterations = {}\n", solved.report.iterations);
    report << fmt::format("final_residual = {}\n", g17(solved.report.final_residual()));
    report << fmt::format("relative_residual = {}\n",
                          g17(solved.report.final_residual() / solved.report.residual_scale));
    report << fmt::format("energy = {}\n", g17(e));
    report << fmt::format("h_norm = {}\n", g17(n.h_norm));
    report << fmt::format("v_norm = {}\n", g17(n.v_norm));
    report << fmt::format("u_min = {}\n", g17(solved.u.values.minCoeff()));
    report << fmt::format("u_max = {}\n", g17(solved.u.values.maxCoeff()));
    report << fmt::format("max_flux_jump = {}\n", g17(jump));

    if (ok && mesh.is_radial() && cfg.model.consumption) {
        try {
            const RadialProfile ref = radial_stationary_reference(cfg.model, cfg.geometry);
            double max_err = 0.0;
            auto os = out.open("reference_profile.csv");
            os << echo << "r,u_fem,u_ref\n";
            for (std::size_t i = 0; i < mesh.node_count(); ++i) {
                const double r = mesh.nodes[i].x;
                const double fem = solved.u.values[static_cast<Eigen::Index>(i)];
                const double exact = ref.value(r);
                max_err = std::max(max_err, std::abs(fem - exact));
                os << fmt::format("{},{},{}\n", g17(r), g17(fem), g17(exact));
            }
            report << fmt::format("reference_alpha = {}\n", g17(ref.alpha()));
            report << fmt::format("reference_max_error = {}\n", g17(max_err));
        } catch (const std::exception& ex) {
            report << fmt::format("reference = unavailable ({})\n", ex.what());
        }
    }

    if (!ok) {
        fmt::print(log, "stationary: solver failed ({}): {}; partial results in {}\n",
                   to_string(solved.report.status), solved.report.message, out.path(""));
        return exit_solver_failure;
    }
    fmt::print(log, "stationary: converged in {} Newton steps, E(u*) = {}, max flux jump = {}\n",
               solved.report.iterations, g17(e), g17(jump));
    return exit_success;
}

int cmd_evolve(const RunConfig& cfg, std::ostream& log) {
    const CoreShellMesh mesh = build_mesh(cfg.geometry);
    const AssembledSystem sys = assemble(mesh, cfg.model);
    const DiscreteField u0 = make_initial_field(cfg, mesh, sys);
    const OutputDir out(cfg);
    const std::string echo = config_echo(cfg, "evolve");

    const NonlinearSolveResult star = stationary_solve(sys, cfg.model, cfg.solver, sys.zero_field());
    if (!star.report.converged()) {
        fmt::print(log, "evolve: stationary reference failed ({}): {}\n", to_string(star.report.status),
                   star.report.message);
        return exit_solver_failure;
    }
    const EvolutionTrace trace = evolve(sys, cfg.model, cfg.solver, u0, star.u);

    if (cfg.output.csv) {
        auto os = out.open("trace.csv");
        os << echo << "t,energy,err_H,err_V,newton_iters\n";
        for (std::size_t i = 0; i < trace.size(); ++i) {
            os << fmt::format("{},{},{},{},{}\n", g17(trace.times[i]), g17(trace.energies[i]), g17(trace.err_H[i]),
                              g17(trace.err_V[i]), trace.newton_iters[i]);
        }
        auto fs_final = out.open("final.csv");
        write_nodal_csv(fs_final, echo, mesh, trace.final_state.values);
    }
    if (cfg.output.vtk) {
        auto os = out.open("final.vtk");
        const std::vector<double> field = to_std(trace.final_state.values);
        write_vtk(os, mesh, vtk_title("evolve"), &field, "u");
    }

    const GammaEstimate gamma = estimate_gamma(sys, cfg.model);
    DecayReport decay;
    bool fitted = true;
    try {
        decay = fit_decay_rate(trace, gamma.gamma);
    } catch (const std::invalid_argument&) {
        fitted = false;
        decay.gamma_disc = gamma.gamma;
        decay.flag = DecayFlag::underflow;
    }
    const double t_begin = fitted && decay.window_end > decay.window_begin ? trace.times[decay.window_begin] : 0.0;
    const double t_last =
        fitted && decay.window_end > decay.window_begin ? trace.times[decay.window_end - 1] : 0.0;

    {
        auto os = out.open("decay_report.csv");
        os << echo << "beta_fit,gamma_disc,lambda,r_squared,window_begin,window_end,t_begin,t_last,flag\n";
        os << fmt::format("{},{},{},{},{},{},{},{},{}\n", g17(decay.beta_fit), g17(decay.gamma_disc),
                          g17(gamma.lambda), g17(decay.r_squared), decay.window_begin, decay.window_end,
                          g17(t_begin), g17(t_last), to_string(decay.flag));
    }
    {
        auto os = out.open("decay_report.txt");
        os << echo;
        os << fmt::format("steps = {}\n", trace.size() == 0 ? 0 : trace.size() - 1);
        os << fmt::format("status = {}\n",
                          trace.status == TraceStatus::completed ? "completed" : "step_failed");
        os << fmt::format("energy_monotone = {}\n", trace.energy_monotone);
        os << fmt::format("proximal_inequality = {}\n", trace.proximal_inequality);
        os << fmt::format("error_monotone = {}\n", trace.error_monotone);
        os << fmt::format("flag = {}\n", fitted ? to_string(decay.flag) : "too_few_samples");
        os << fmt::format("beta_fit = {}\n", g17(decay.beta_fit));
        os << fmt::format("gamma_disc = {}\n", g17(decay.gamma_disc));
        os << fmt::format("lambda_min = {}\n", g17(gamma.lambda));
        os << fmt::format("r_squared = {}\n", g17(decay.r_squared));
        os << fmt::format("fit_window = [{}, {})\n", decay.window_begin, decay.window_end);
        os << fmt::format("fit_window_time = [{}, {}]\n", g17(t_begin), g17(t_last));
        if (decay.gamma_disc > 0.0) {
            os << fmt::format("beta_over_gamma = {}\n", g17(decay.beta_fit / decay.gamma_disc));
        }
    }

    if (trace.status == TraceStatus::step_failed) {
        fmt::print(log, "evolve: implicit Euler step {} failed; last good time t = {}\n",
                   trace.failed_step.value_or(0), g17(trace.last_time()));
        return exit_solver_failure;
    }
    fmt::print(log, "evolve: {} steps, beta_fit = {}, gamma_disc = {}, flag = {}\n", trace.size() - 1,
               g17(decay.beta_fit), g17(decay.gamma_disc), to_string(decay.flag));
    if (!trace.energy_monotone || !trace.error_monotone) {
        fmt::print(log, "evolve: monotonicity violated (energy {}, err_H {})\n", trace.energy_monotone,
                   trace.error_monotone);
        return exit_property_violation;
    }
    return exit_success;
}

int cmd_verify(const RunConfig& cfg, const VerifyOptions& options, std::ostream& log) {
    ModelParams params = cfg.model;
    AssemblyOptions assembly;
    if (options.inject_negative_b) {
        params.b1 = -std::abs(params.b1);
        params.b2 = -std::abs(params.b2);
        assembly.validate_params = false;
    }
    const CoreShellMesh mesh = build_mesh(cfg.geometry);
    const AssembledSystem sys = assemble(mesh, params, assembly);
    const OutputDir out(cfg);

    const GammaEstimate gamma = estimate_gamma(sys, params);
    const std::vector<PropertyResult> results = run_property_suite(cfg, sys, params, gamma.gamma);

    auto os = out.open("verify_report.txt");
    os << config_echo(cfg, "verify");
    if (options.inject_negative_b) {
        os << "# injected: b1 and b2 negated\n";
    }
    os << fmt::format("nodes = {}\n", sys.size());
    os << fmt::format("gamma_disc = {}\n", g17(gamma.gamma));
    os << fmt::format("lambda_min = {}\n\n", g17(gamma.lambda));
    os << fmt::format("{:<22} {:>9} {:>10} {:>24}  {:<6} {}\n", "property", "samples", "tolerance", "worst_margin",
                      "result", "detail");
    bool all = true;
    for (const PropertyResult& r : results) {
        all = all && r.passed;
        os << fmt::format("{:<22} {:>9} {:>10.3e} {:>24}  {:<6} {}\n", r.name, r.samples, r.tolerance,
                          g17(r.worst_margin), r.passed ? "PASS" : "FAIL", r.detail);
        if (!r.passed) {
            auto dump = out.open("violation_" + r.name + ".csv");
            dump << config_echo(cfg, "verify");
            std::size_t rows = 0;
            for (std::size_t c = 0; c < r.violation.size(); ++c) {
                dump << (c ? "," : "") << r.violation[c].first;
                rows = std::max(rows, r.violation[c].second.size());
            }
            dump << "\n";
            for (std::size_t i = 0; i < rows; ++i) {
                for (std::size_t c = 0; c < r.violation.size(); ++c) {
                    const auto& col = r.violation[c].second;
                    dump << (c ? "," : "") << (i < col.size() ? g17(col[i]) : "");
                }
                dump << "\n";
            }
        }
    }
    os << fmt::format("\noverall = {}\n", all ? "PASS" : "FAIL");
    for (const PropertyResult& r : results) {
        fmt::print(log, "{:<22} {}\n", r.name, r.passed ? "PASS" : "FAIL");
    }
    if (!all) {
        fmt::print(log, "verify: property violation; samples written to {}\n", out.path("violation_*.csv"));
        return exit_property_violation;
    }
    return exit_success;
}

int run_cli(int argc, const char* const* argv, std::ostream& log) {
    CLI::App app{"Core-shell oxygen reaction-diffusion: meshing, stationary and transient solves, verification"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;
    std::uint64_t seed = 0;
    std::string init;
    bool inject = false;

    auto common = [&](CLI::App* sub) {
        sub->add_option("config", config_path, "INI configuration file")->required();
        sub->add_option("--set", overrides, "Override a key, e.g. --set solver.dt=0.01 (repeatable)");
        sub->add_option("--out", out_dir, "Output directory (overrides output.dir)");
        sub->add_option("--seed", seed, "Seed for random initial fields and the verify suite");
        sub->add_option("--init", init, "Initial field: zero, cone, random or file");
    };
    CLI::App* mesh = app.add_subcommand("mesh", "Build the mesh and write it with a summary");
    CLI::App* stationary = app.add_subcommand("stationary", "Compute the stationary state");
    CLI::App* evolve_cmd = app.add_subcommand("evolve", "Run implicit Euler towards the stationary state");
    CLI::App* verify = app.add_subcommand("verify", "Run the randomised property suite");
    for (CLI::App* sub : {mesh, stationary, evolve_cmd, verify}) {
        common(sub);
    }
    verify->add_flag("--inject-negative-b", inject)->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::ostringstream err;
        const int code = app.exit(e, err, err);
        log << err.str();
        return code == 0 ? exit_success : exit_invalid_input;
    }

    try {
        RunConfig cfg = load_config(config_path, overrides);
        if (!out_dir.empty()) {
            cfg.output.dir = out_dir;
        }
        if (!init.empty()) {
            cfg.initial.kind = parse_initial_kind(init);
        }
        CLI::App* chosen = app.get_subcommands().front();
        if (chosen->count("--seed") > 0) {
            cfg.initial.seed = seed;
            cfg.verify.seed = seed;
        }
        cfg.validate();
        if (chosen == mesh) {
            return cmd_mesh(cfg, log);
        }
        if (chosen == stationary) {
            return cmd_stationary(cfg, log);
        }
        if (chosen == evolve_cmd) {
            return cmd_evolve(cfg, log);
        }
        return cmd_verify(cfg, VerifyOptions{inject}, log);
    } catch (const std::invalid_argument& e) {
        fmt::print(log, "error: {}\n", e.what());
        return exit_invalid_input;
    } catch (const std::exception& e) {
        fmt::print(log, "solver failure: {}\n", e.what());
        return exit_solver_failure;
    }
}

}  // namespace coreshell
