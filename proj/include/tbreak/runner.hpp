#pragma once

#include "tbreak/scenario.hpp"

#include <complex>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace tbreak::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitNumerical = 2;

struct RunOptions {
    std::optional<std::string> out;
    std::optional<OutputFormat> format;
    // Escalate unconverged quadrature to a numerical failure.
    bool strict{false};
    unsigned threads{1};
    std::vector<std::string> sets;
    // Fixed manifest timestamp; tests use it to compare whole files.
    std::optional<std::string> timestamp;
};

using Cell = std::variant<std::monostate, std::string, double, std::int64_t, bool, Complex>;

struct Column {
    std::string name;
    Cell value;
};

using ResultRow = std::vector<Column>;

struct RunResult {
    int exit_code{kExitOk};
    std::string error;
    std::vector<std::string> warnings;
    // Complete output document (manifest + rows).
    std::string output;
    OutputFormat format{OutputFormat::Csv};
    std::optional<std::string> written_to;
};

RunResult run_scenario(const std::filesystem::path& scenario_path, const RunOptions& options);

// Rows for one parsed sweep point.
std::vector<ResultRow> evaluate(const Scenario& scenario, std::size_t sweep_index,
                                std::optional<double> sweep_value);

// Output document without the manifest lines.
std::string result_body(const std::string& output, OutputFormat format);

struct Diagnostic {
    enum class Severity { Error, Warning };
    Severity severity{Severity::Error};
    std::string field;
    std::string message;
};

struct ValidationReport {
    std::vector<Diagnostic> diagnostics;
    bool ok() const noexcept;
    int exit_code() const noexcept { return ok() ? kExitOk : kExitValidation; }
};

// Schema and physics checks for every sweep point, without computing anything.
ValidationReport validate_scenario(const std::filesystem::path& scenario_path,
                                   const std::vector<std::string>& sets = {});

std::string to_string(const Diagnostic& d);

} // namespace tbreak::cli
