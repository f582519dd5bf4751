#pragma once

#include "tbreak/errors.hpp"
#include "tbreak/model.hpp"
#include "tbreak/numerics.hpp"
#include "tbreak/rates.hpp"
#include "tbreak/tsvf.hpp"

#include <json.hpp>

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace tbreak::cli {

inline constexpr const char* kToolName = "tbreak";
inline constexpr const char* kToolVersion = "0.1.0";

using Json = nlohmann::json;

// Malformed scenario document. `field` is the dotted path of the offending key
// (empty for syntax errors, which carry a line number instead).
class SchemaError : public ValidationError {
public:
    SchemaError(std::string field, const std::string& message, std::size_t line = 0);

    const std::string& field() const noexcept { return field_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string field_;
    std::size_t line_;
};

enum class Mode { Probability, BandRate, HarmonicRate, Abl, FirstOrderValidity };
enum class OutputFormat { Csv, JsonLines };

std::string to_string(Mode mode);
std::string to_string(OutputFormat format);
OutputFormat parse_format(const std::string& text);

struct Sweep {
    std::string parameter;
    std::vector<double> values;
};

struct OutputSpec {
    std::optional<std::string> path;
    OutputFormat format{OutputFormat::Csv};
};

struct ChannelSet {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    double t_i{0.0};
    double t_f{1.0};
};

struct BandRateSpec {
    rates::BandProblem problem;
    double time{1.0};
};

struct HarmonicRateSpec {
    rates::HarmonicBandProblem problem;
    rates::Branch branch{rates::Branch::Absorption};
    double time{1.0};
};

struct AblSpec {
    ComplexVector pre;
    std::optional<ComplexVector> post;
    std::optional<tsvf::ProjectiveMeasurement> measurement;
};

// A fully parsed, validated scenario (one sweep point).
struct Scenario {
    std::string id;
    Mode mode{Mode::Probability};
    std::optional<QuantumSystem> system;
    LambdaProfile lambda;
    std::optional<ChannelSet> channels;
    std::optional<BandRateSpec> band;
    std::optional<HarmonicRateSpec> harmonic;
    std::optional<AblSpec> abl;
    double epsilon{1.0};
    numerics::QuadratureSettings quadrature;
    numerics::PropagatorSettings propagator;
    std::optional<Sweep> sweep;
    OutputSpec output;
};

// Reads and syntax-checks a scenario file.
Json load_document(const std::filesystem::path& path);

// Sets the numeric leaf at a dotted path ("lambda.base", "system.energies.1").
// With require_numeric_leaf the leaf must already exist and hold a number.
void set_path(Json& doc, const std::string& path, const Json& value, bool require_numeric_leaf);

// Parses `key=value`; the value is read as JSON when possible, else as a string.
std::pair<std::string, Json> parse_assignment(const std::string& text);

Scenario parse_scenario(const Json& doc);

// The document for sweep point `index` (the document itself when there is no sweep).
Json sweep_point(const Json& doc, const Scenario& scenario, std::size_t index);

// Smallest value the resolved lambda can take anywhere in the scenario.
double lambda_lower_bound(const LambdaProfile& lambda);

} // namespace tbreak::cli
