#include "tbreak/runner.hpp"

#include "tbreak/rates.hpp"
#include "tbreak/retro.hpp"
#include "tbreak/tsvf.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

namespace tbreak::cli {

namespace {

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string json_number(double x) {
    return std::isfinite(x) ? format_double(x) : "null";
}

std::string csv_cell(const Cell& cell) {
    struct Visitor {
        std::string operator()(std::monostate) const { return ""; }
        std::string operator()(const std::string& s) const { return csv_escape(s); }
        std::string operator()(double d) const { return format_double(d); }
        std::string operator()(std::int64_t n) const { return std::to_string(n); }
        std::string operator()(bool b) const { return b ? "true" : "false"; }
        std::string operator()(const Complex& z) const { return format_double(z.real()) + "," + format_double(z.imag()); }
    };
    return std::visit(Visitor{}, cell);
}

std::string json_cell(const Cell& cell) {
    struct Visitor {
        std::string operator()(std::monostate) const { return "null"; }
        std::string operator()(const std::string& s) const { return Json(s).dump(); }
        std::string operator()(double d) const { return json_number(d); }
        std::string operator()(std::int64_t n) const { return std::to_string(n); }
        std::string operator()(bool b) const { return b ? "true" : "false"; }
        std::string operator()(const Complex& z) const {
            return "[" + json_number(z.real()) + "," + json_number(z.imag()) + "]";
        }
    };
    return std::visit(Visitor{}, cell);
}

std::string csv_header(const ResultRow& row) {
    std::string out;
    for (std::size_t k = 0; k < row.size(); ++k) {
        if (k > 0) out += ',';
        if (std::holds_alternative<Complex>(row[k].value)) {
            out += row[k].name + "_re," + row[k].name + "_im";
        } else {
            out += row[k].name;
        }
    }
    return out;
}

std::string csv_line(const ResultRow& row) {
    std::string out;
    for (std::size_t k = 0; k < row.size(); ++k) {
        if (k > 0) out += ',';
        out += csv_cell(row[k].value);
    }
    return out;
}

std::string json_line(const ResultRow& row) {
    std::string out = "{";
    for (std::size_t k = 0; k < row.size(); ++k) {
        if (k > 0) out += ',';
        out += Json(row[k].name).dump() + ":" + json_cell(row[k].value);
    }
    return out + "}";
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

Json settings_json(const Scenario& s) {
    Json q = {{"abs_tol", s.quadrature.abs_tol},
              {"rel_tol", s.quadrature.rel_tol},
              {"max_subdivisions", s.quadrature.max_subdivisions},
              {"min_panels_per_period", s.quadrature.min_panels_per_period}};
    Json p = {{"steps_per_unit_time", s.propagator.steps_per_unit_time},
              {"method", s.propagator.method == numerics::PropagatorMethod::RungeKutta4 ? "rk4"
                                                                                      : "midpoint-exponential"},
              {"unitarity_check_tol", s.propagator.unitarity_check_tol}};
    return {{"quadrature", q}, {"propagator", p}};
}

ResultRow row_prefix(const Scenario& s, std::size_t sweep_index, std::optional<double> sweep_value) {
    ResultRow row;
    row.push_back({"scenario_id", s.id});
    row.push_back({"sweep_index", static_cast<std::int64_t>(sweep_index)});
    row.push_back({"sweep_value", sweep_value ? Cell{*sweep_value} : Cell{}});
    return row;
}

double relative_deviation(double value, double reference) {
    return reference != 0.0 ? (value - reference) / reference : 0.0;
}

std::vector<ResultRow> probability_rows(const Scenario& s, std::size_t idx, std::optional<double> value) {
    std::vector<ResultRow> rows;
    const TimeWindow window(s.channels->t_i, s.channels->t_f);
    for (const auto& [i, f] : s.channels->pairs) {
        const TransitionChannel channel(*s.system, i, f, window);
        const retro::TransitionResult r = retro::transition_probability(*s.system, s.lambda, channel, s.quadrature);
        ResultRow row = row_prefix(s, idx, value);
        row.push_back({"i", static_cast<std::int64_t>(i)});
        row.push_back({"f", static_cast<std::int64_t>(f)});
        row.push_back({"t_i", window.t_i()});
        row.push_back({"t_f", window.t_f()});
        row.push_back({"probability", r.probability});
        row.push_back({"pr_qm", r.pr_qm});
        row.push_back({"pr_retro", r.pr_retro});
        row.push_back({"is_real", r.is_real});
        row.push_back({"in_unit_interval", r.in_unit_interval});
        row.push_back({"converged", r.converged});
        row.push_back({"lambda", r.lambda_summary});
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<ResultRow> band_rows(const Scenario& s, std::size_t idx, std::optional<double> value) {
    const rates::BandProblem& p = s.band->problem;
    const rates::RateResult r = rates::finite_time_band_rate(p, s.lambda, s.band->time);
    const std::size_t k = p.band.nearest_state(p.initial_energy);
    const double lambda_ref = s.lambda.state_value(rates::band_state_index(k));
    const double reference =
        rates::golden_rule_rate(std::norm(p.band.coupling(k)), p.band.density_of_states(), lambda_ref, p.hbar);

    ResultRow row = row_prefix(s, idx, value);
    row.push_back({"initial_energy", p.initial_energy});
    row.push_back({"states", static_cast<std::int64_t>(p.band.count)});
    row.push_back({"rho", p.band.density_of_states()});
    row.push_back({"t", r.time_used});
    row.push_back({"rate", r.rate});
    row.push_back({"golden_rule_rate", reference});
    row.push_back({"relative_deviation", relative_deviation(r.rate, reference)});
    row.push_back({"regime", rates::to_string(r.regime)});
    row.push_back({"lambda", lambda_ref});
    return {row};
}

std::vector<ResultRow> harmonic_rows(const Scenario& s, std::size_t idx, std::optional<double> value) {
    const rates::HarmonicBandProblem& p = s.harmonic->problem;
    const std::size_t k = p.band.nearest_state(rates::resonant_energy(p, s.harmonic->branch));
    const double lambda_f = s.lambda.state_value(rates::band_state_index(k));
    const rates::HarmonicRateResult r = rates::harmonic_rate(p, lambda_f, s.harmonic->branch, s.harmonic->time);

    ResultRow row = row_prefix(s, idx, value);
    row.push_back({"branch", rates::to_string(s.harmonic->branch)});
    row.push_back({"resonant_energy", r.resonant_energy});
    row.push_back({"t", r.band_sum.time_used});
    row.push_back({"closed_form_rate", r.closed_form});
    row.push_back({"band_sum_rate", r.band_sum.rate});
    row.push_back({"relative_deviation", relative_deviation(r.band_sum.rate, r.closed_form)});
    row.push_back({"full_band_sum_rate", r.full_band_sum});
    row.push_back({"counter_rotating_deviation", r.counter_rotating_deviation});
    row.push_back({"regime", rates::to_string(r.band_sum.regime)});
    row.push_back({"lambda_f", lambda_f});
    return {row};
}

std::vector<ResultRow> abl_rows(const Scenario& s, std::size_t idx, std::optional<double> value) {
    const AblSpec& a = *s.abl;
    const std::vector<double> born = tsvf::born_probability(a.pre, *a.measurement);
    std::vector<double> abl;
    if (a.post) abl = tsvf::abl_probability(tsvf::TwoStateVector(a.pre, *a.post), *a.measurement);

    std::vector<ResultRow> rows;
    for (std::size_t n = 0; n < born.size(); ++n) {
        ResultRow row = row_prefix(s, idx, value);
        row.push_back({"outcome", a.measurement->outcomes()[n].label});
        row.push_back({"abl_probability", a.post ? Cell{abl[n]} : Cell{}});
        row.push_back({"born_probability", born[n]});
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<ResultRow> validity_rows(const Scenario& s, std::size_t idx, std::optional<double> value) {
    std::vector<ResultRow> rows;
    const TimeWindow window(s.channels->t_i, s.channels->t_f);
    for (const auto& [i, f] : s.channels->pairs) {
        const TransitionChannel channel(*s.system, i, f, window);
        const retro::Amplitude first = retro::forward_amplitude(*s.system, channel, s.quadrature);
        const Complex exact = retro::exact_forward_amplitude(*s.system, channel, s.propagator);
        ResultRow row = row_prefix(s, idx, value);
        row.push_back({"i", static_cast<std::int64_t>(i)});
        row.push_back({"f", static_cast<std::int64_t>(f)});
        row.push_back({"epsilon", s.epsilon});
        row.push_back({"exact", exact});
        row.push_back({"first_order", first.value});
        row.push_back({"residual", std::abs(exact - first.value)});
        row.push_back({"converged", first.converged});
        rows.push_back(std::move(row));
    }
    return rows;
}

bool row_converged(const ResultRow& row) {
    for (const Column& c : row) {
        if (c.name == "converged" && std::holds_alternative<bool>(c.value)) return std::get<bool>(c.value);
    }
    return true;
}

struct PointOutcome {
    std::vector<ResultRow> rows;
    std::exception_ptr error;
};

int exit_code_for(const std::exception_ptr& e, std::string& message) {
    try {
        std::rethrow_exception(e);
    } catch (const ValidationError& ex) {
        message = ex.what();
        return kExitValidation;
    } catch (const Json::exception& ex) {
        message = ex.what();
        return kExitValidation;
    } catch (const std::exception& ex) {
        message = ex.what();
        return kExitNumerical;
    }
}

} // namespace

std::vector<ResultRow> evaluate(const Scenario& scenario, std::size_t sweep_index, std::optional<double> sweep_value) {
    switch (scenario.mode) {
    case Mode::Probability: return probability_rows(scenario, sweep_index, sweep_value);
    case Mode::BandRate: return band_rows(scenario, sweep_index, sweep_value);
    case Mode::HarmonicRate: return harmonic_rows(scenario, sweep_index, sweep_value);
    case Mode::Abl: return abl_rows(scenario, sweep_index, sweep_value);
    case Mode::FirstOrderValidity: return validity_rows(scenario, sweep_index, sweep_value);
    }
    return {};
}

std::string result_body(const std::string& output, OutputFormat format) {
    std::istringstream in(output);
    std::string line;
    std::string body;
    bool first = true;
    while (std::getline(in, line)) {
        const bool manifest = format == OutputFormat::Csv ? line.starts_with("#") : first;
        first = false;
        if (!manifest) body += line + "\n";
    }
    return body;
}

RunResult run_scenario(const std::filesystem::path& scenario_path, const RunOptions& options) {
    RunResult result;
    const auto started = std::chrono::steady_clock::now();

    Json doc;
    Scenario base;
    try {
        doc = load_document(scenario_path);
        for (const std::string& s : options.sets) {
            const auto [key, value] = parse_assignment(s);
            set_path(doc, key, value, false);
        }
        base = parse_scenario(doc);
    } catch (...) {
        result.exit_code = exit_code_for(std::current_exception(), result.error);
        return result;
    }
    result.format = options.format.value_or(base.output.format);

    const std::size_t points = base.sweep ? base.sweep->values.size() : 1;
    std::vector<PointOutcome> outcomes(points);

    auto run_point = [&](std::size_t k) {
        try {
            const Json point_doc = sweep_point(doc, base, k);
            const Scenario point = parse_scenario(point_doc);
            std::optional<double> value;
            if (base.sweep) value = base.sweep->values[k];
            outcomes[k].rows = evaluate(point, k, value);
        } catch (...) {
            outcomes[k].error = std::current_exception();
        }
    };

    const unsigned threads = std::clamp<unsigned>(options.threads, 1u, static_cast<unsigned>(points));
    if (threads == 1) {
        for (std::size_t k = 0; k < points; ++k) run_point(k);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < threads; ++w) {
            pool.emplace_back([&]() {
                for (std::size_t k = next++; k < points; k = next++) run_point(k);
            });
        }
        for (auto& t : pool) t.join();
    }

    for (std::size_t k = 0; k < points; ++k) {
        if (outcomes[k].error) {
            std::string message;
            result.exit_code = exit_code_for(outcomes[k].error, message);
            result.error = "scenario '" + base.id + "'";
            if (base.sweep) {
                result.error += " sweep point " + std::to_string(k) + " (" + base.sweep->parameter + " = " +
                                format_double(base.sweep->values[k]) + ")";
            }
            result.error += ": " + message;
            return result;
        }
    }

    std::size_t unconverged = 0;
    for (const auto& o : outcomes) {
        for (const auto& row : o.rows) {
            if (!row_converged(row)) ++unconverged;
        }
    }
    if (unconverged > 0) {
        const std::string msg = std::to_string(unconverged) + " row(s) did not reach the quadrature tolerance";
        if (options.strict) {
            result.exit_code = kExitNumerical;
            result.error = "scenario '" + base.id + "': ToleranceNotReached: " + msg;
            return result;
        }
        result.warnings.push_back(msg + "; recorded as converged=false");
    }

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    Json manifest = {{"tool", kToolName},
                     {"version", kToolVersion},
                     {"created", options.timestamp.value_or(utc_timestamp())},
                     {"wall_time_s", options.timestamp ? 0.0 : wall},
                     {"mode", to_string(base.mode)},
                     {"format", to_string(result.format)},
                     {"strict", options.strict},
                     {"threads", threads},
                     {"scenario", doc},
                     {"resolved", settings_json(base)}};

    std::ostringstream out;
    bool header_written = false;
    if (result.format == OutputFormat::Csv) {
        out << "# " << kToolName << "-manifest " << manifest.dump() << "\n";
    } else {
        out << Json{{"manifest", manifest}}.dump() << "\n";
    }
    for (const auto& o : outcomes) {
        for (const auto& row : o.rows) {
            if (result.format == OutputFormat::Csv) {
                if (!header_written) {
                    out << csv_header(row) << "\n";
                    header_written = true;
                }
                out << csv_line(row) << "\n";
            } else {
                out << json_line(row) << "\n";
            }
        }
    }
    result.output = out.str();

    const std::optional<std::string> target = options.out ? options.out : base.output.path;
    if (target) {
        std::ofstream file(*target, std::ios::binary | std::ios::trunc);
        if (!file) {
            result.exit_code = kExitValidation;
            result.error = "cannot write output file " + *target;
            return result;
        }
        file << result.output;
        result.written_to = *target;
    }
    return result;
}

bool ValidationReport::ok() const noexcept {
    return std::none_of(diagnostics.begin(), diagnostics.end(),
                        [](const Diagnostic& d) { return d.severity == Diagnostic::Severity::Error; });
}

std::string to_string(const Diagnostic& d) {
    std::string out = d.severity == Diagnostic::Severity::Error ? "error" : "warning";
    if (!d.field.empty()) out += " [" + d.field + "]";
    return out + ": " + d.message;
}

ValidationReport validate_scenario(const std::filesystem::path& scenario_path, const std::vector<std::string>& sets) {
    ValidationReport report;
    auto record = [&report](const std::exception_ptr& e, const std::string& context) {
        try {
            std::rethrow_exception(e);
        } catch (const SchemaError& ex) {
            report.diagnostics.push_back({Diagnostic::Severity::Error, ex.field(), context + ex.what()});
        } catch (const NonHermitianPerturbation& ex) {
            report.diagnostics.push_back({Diagnostic::Severity::Error,
                                          "system.perturbation.matrix." + std::to_string(ex.row()) + "." +
                                              std::to_string(ex.col()),
                                          context + ex.what()});
        } catch (const std::exception& ex) {
            report.diagnostics.push_back({Diagnostic::Severity::Error, "", context + ex.what()});
        }
    };

    Json doc;
    Scenario base;
    try {
        doc = load_document(scenario_path);
        for (const std::string& s : sets) {
            const auto [key, value] = parse_assignment(s);
            set_path(doc, key, value, false);
        }
        base = parse_scenario(doc);
    } catch (...) {
        record(std::current_exception(), "");
        return report;
    }

    const std::size_t points = base.sweep ? base.sweep->values.size() : 1;
    bool warned = false;
    for (std::size_t k = 0; k < points; ++k) {
        const std::string context =
            base.sweep ? "sweep point " + std::to_string(k) + " (" + base.sweep->parameter + " = " +
                             format_double(base.sweep->values[k]) + "): "
                       : "";
        try {
            const Scenario point = parse_scenario(sweep_point(doc, base, k));
            const double lowest = lambda_lower_bound(point.lambda);
            if (lowest < -1.0 && !warned) {
                report.diagnostics.push_back(
                    {Diagnostic::Severity::Warning, "lambda",
                     context + "resolved lambda reaches " + format_double(lowest) +
                         " < -1; composed probabilities may be negative"});
                warned = true;
            }
        } catch (...) {
            record(std::current_exception(), context);
        }
    }
    return report;
}

} // namespace tbreak::cli
