// Command-line driver: generate benchmark instances, build preconditioners,
// run solves and execute the verification suite.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "kronsolve/config.hpp"
#include "kronsolve/util.hpp"
#include "kronsolve/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace kronsolve;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    int threads = 0;
};

RunConfig load_and_override(const CommonArgs& args) {
    RunConfig config = load_config(args.config_path);
    if (!args.out_dir.empty()) config.output.dir = args.out_dir;
    if (args.threads > 0) config.threads = args.threads;
    validate(config);
    set_max_threads(config.threads);
    return config;
}

int cmd_generate(const CommonArgs& args) {
    RunConfig config = load_and_override(args);
    ProblemInstance problem = load_problem(config);
    std::string manifest =
        write_instance(config.output.dir, config.output.prefix, problem);
    std::cout << "generated '" << problem.name << "': n=" << problem.op.n()
              << " m=" << problem.op.m() << " r=" << problem.op.r()
              << "\nmanifest: " << manifest << "\n";
    return 0;
}

int cmd_precond(const CommonArgs& args) {
    RunConfig config = load_and_override(args);
    ProblemInstance problem = load_problem(config);
    json diagnostics;
    Stopwatch sw;
    Preconditioner pre = build_preconditioner(config, problem, &diagnostics);
    pre.prepare();
    diagnostics["setup_seconds"] = sw.seconds();
    diagnostics["type"] = config.precond.type;

    fs::create_directories(config.output.dir);
    const std::string path =
        (fs::path(config.output.dir) / (config.output.prefix + "_precond.json"))
            .string();
    std::ofstream out(path);
    out << diagnostics.dump(2) << "\n";
    std::cout << diagnostics.dump(2) << "\n";
    return 0;
}

int cmd_solve(const CommonArgs& args) {
    RunConfig config = load_and_override(args);
    ProblemInstance problem = load_problem(config);

    json diagnostics;
    Stopwatch setup;
    Preconditioner pre = build_preconditioner(config, problem, &diagnostics);
    pre.prepare();
    const double setup_seconds = setup.seconds();

    SolverOptions opts;
    opts.tol = config.solver.tol;
    opts.restart = config.solver.restart;
    opts.max_iter = config.solver.max_iter;
    opts.track_bandwidth = config.solver.track_bandwidth;

    SolveReport report =
        config.solver.method == "bicgstab"
            ? bicgstab(problem.op, pre, problem.rhs, opts)
            : gmres(problem.op, pre, problem.rhs, opts);

    fs::create_directories(config.output.dir);
    const fs::path dir(config.output.dir);
    write_history_csv((dir / (config.output.prefix + "_history.csv")).string(),
                      report.history);

    json summary{{"converged", report.history.converged},
                 {"iterations", report.history.iterations},
                 {"setup_seconds", setup_seconds},
                 {"solve_seconds", report.solve_seconds},
                 {"final_residual", report.history.residuals.back()}};
    if (const KronInverse* inv = pre.kinv_data())
        summary["preconditioner_residual"] = inv->final_residual;
    if (report.breakdown) summary["breakdown"] = true;
    if (!diagnostics.empty()) summary["preconditioner"] = diagnostics;

    const std::string summary_path =
        (dir / (config.output.prefix + "_summary.json")).string();
    std::ofstream out(summary_path);
    out << summary.dump(2) << "\n";
    std::cout << summary.dump(2) << "\n";

    if (report.breakdown) return 3;
    return report.history.converged ? 0 : 2;
}

int cmd_verify(Index cap, const std::string& inject) {
    VerifyReport report = run_verification(cap, inject);
    for (const auto& check : report.checks)
        std::cout << (check.passed ? "[PASS] " : "[FAIL] ") << check.name
                  << " — " << check.detail << "\n";
    std::printf("%zu/%zu checks passed in %.2f s\n",
                static_cast<size_t>(std::count_if(
                    report.checks.begin(), report.checks.end(),
                    [](const VerifyCheck& c) { return c.passed; })),
                report.checks.size(), report.seconds);
    if (report.over_budget)
        std::cout << "warning: suite exceeded the 60 s budget\n";
    return report.all_passed ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kronsolve — multiterm Sylvester equations with low "
                 "Kronecker rank preconditioning"};
    app.require_subcommand(1);

    CommonArgs args;
    auto add_common = [&](CLI::App* cmd, bool config_required = true) {
        cmd->add_option("--config", args.config_path, "JSON run configuration")
            ->required(config_required);
        cmd->add_option("--out", args.out_dir, "output directory override");
        cmd->add_option("--threads", args.threads, "worker thread cap");
    };

    CLI::App* generate =
        app.add_subcommand("generate", "write operator manifest and matrices");
    add_common(generate);
    CLI::App* solve = app.add_subcommand("solve", "run a configured solve");
    add_common(solve);
    CLI::App* precond =
        app.add_subcommand("precond", "build and inspect a preconditioner");
    add_common(precond);

    CLI::App* verify =
        app.add_subcommand("verify", "run the oracle verification suite");
    Index cap = 4096;
    std::string inject;
    verify->add_option("--cap", cap, "materialization size cap");
    verify->add_option("--inject", inject,
                       "test fixture: inject a named defect");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 1;
    }

    auto guarded = [](auto&& fn) {
        try {
            return fn();
        } catch (const ConfigError& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 1;
        } catch (const IoError& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 1;
        } catch (const ParseError& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 1;
        } catch (const Error& e) {
            std::cerr << "numerical failure: " << e.what() << "\n";
            return 3;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 3;
        }
    };

    if (generate->parsed()) return guarded([&] { return cmd_generate(args); });
    if (solve->parsed()) return guarded([&] { return cmd_solve(args); });
    if (precond->parsed()) return guarded([&] { return cmd_precond(args); });
    if (verify->parsed())
        return guarded([&] { return cmd_verify(cap, inject); });
    return 1;
}
