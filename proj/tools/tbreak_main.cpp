// tbreak: run and validate perturbation-theory scenarios with a broken
// time-reversal coupling.

#include "tbreak/runner.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    using namespace tbreak::cli;

    CLI::App app{"First-order transition probabilities with distinct forward and backward Hamiltonians"};
    app.require_subcommand(1);

    RunOptions options;
    std::string run_path;
    std::string format;
    auto* run = app.add_subcommand("run", "Evaluate a scenario and write the result table");
    run->add_option("scenario", run_path, "Scenario file (JSON)")->required();
    run->add_option("--out", options.out, "Output path (default: scenario output.path, else stdout)");
    run->add_option("--format", format, "csv or jsonl")->check(CLI::IsMember({"csv", "jsonl"}));
    run->add_flag("--strict", options.strict, "Fail (exit 2) when quadrature misses its tolerance");
    run->add_option("--threads", options.threads, "Worker threads for sweep points")->check(CLI::PositiveNumber);
    run->add_option("--set", options.sets, "Override a scenario value: key.path=value")->take_all();

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "Check a scenario without computing anything");
    validate->add_option("scenario", validate_path, "Scenario file (JSON)")->required();

    app.add_subcommand("version", "Print the tool version");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    if (app.got_subcommand("version")) {
        std::cout << kToolName << " " << kToolVersion << "\n";
        return kExitOk;
    }

    if (app.got_subcommand("validate")) {
        const ValidationReport report = validate_scenario(validate_path);
        for (const Diagnostic& d : report.diagnostics) {
            std::cerr << to_string(d) << "\n";
        }
        if (report.ok()) std::cout << "ok\n";
        return report.exit_code();
    }

    if (!format.empty()) options.format = parse_format(format);
    const RunResult result = run_scenario(run_path, options);
    for (const std::string& w : result.warnings) {
        std::cerr << "warning: " << w << "\n";
    }
    if (result.exit_code != kExitOk) {
        std::cerr << "error: " << result.error << "\n";
        return result.exit_code;
    }
    if (!result.written_to) {
        std::cout << result.output;
    }
    return kExitOk;
}
