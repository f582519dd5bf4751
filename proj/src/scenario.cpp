#include "tbreak/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <iterator>
#include <limits>
#include <set>
#include <sstream>

namespace tbreak::cli {

namespace {

std::size_t line_of(const std::string& text, std::size_t byte) {
    const auto end = text.begin() + static_cast<std::ptrdiff_t>(std::min(byte, text.size()));
    return 1 + static_cast<std::size_t>(std::count(text.begin(), end, '\n'));
}

// Cursor into the document that remembers its dotted path for diagnostics.
class Node {
public:
    Node(const Json& json, std::string path) : json_(json), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }
    const Json& json() const noexcept { return json_; }

    std::string child_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    [[noreturn]] void fail(const std::string& message) const { throw SchemaError(path_, message); }

    void require_object(std::initializer_list<const char*> allowed) const {
        if (!json_.is_object()) fail("expected an object");
        const std::set<std::string> keys(allowed.begin(), allowed.end());
        for (const auto& item : json_.items()) {
            if (!keys.contains(item.key())) {
                throw SchemaError(child_path(item.key()), "unknown field");
            }
        }
    }

    bool has(const std::string& key) const { return json_.is_object() && json_.contains(key); }

    Node at(const std::string& key) const {
        if (!has(key)) {
            throw SchemaError(child_path(key), "missing required field");
        }
        return {json_.at(key), child_path(key)};
    }

    std::optional<Node> maybe(const std::string& key) const {
        if (!has(key) || json_.at(key).is_null()) return std::nullopt;
        return Node{json_.at(key), child_path(key)};
    }

    Node index(std::size_t k) const { return {json_.at(k), path_ + "." + std::to_string(k)}; }

    std::size_t size() const { return json_.size(); }

    void require_array() const {
        if (!json_.is_array()) fail("expected an array");
    }

    double number() const {
        if (!json_.is_number()) fail("expected a number");
        const double v = json_.get<double>();
        if (!std::isfinite(v)) fail("expected a finite number");
        return v;
    }

    std::size_t count() const {
        if (!json_.is_number_integer() || json_.get<long long>() < 0) fail("expected a non-negative integer");
        return json_.get<std::size_t>();
    }

    std::string text() const {
        if (!json_.is_string()) fail("expected a string");
        return json_.get<std::string>();
    }

    bool boolean() const {
        if (!json_.is_boolean()) fail("expected true or false");
        return json_.get<bool>();
    }

    // number, or [re, im]
    Complex complex() const {
        if (json_.is_number()) return {number(), 0.0};
        if (json_.is_array() && json_.size() == 2 && json_[0].is_number() && json_[1].is_number()) {
            return {index(0).number(), index(1).number()};
        }
        fail("expected a number or a [re, im] pair");
    }

    std::vector<double> numbers() const {
        require_array();
        std::vector<double> out;
        for (std::size_t k = 0; k < size(); ++k) out.push_back(index(k).number());
        return out;
    }

    std::vector<Complex> complexes() const {
        if (!json_.is_array() || (json_.size() == 2 && json_[0].is_number() && json_[1].is_number())) {
            return {complex()};
        }
        std::vector<Complex> out;
        for (std::size_t k = 0; k < size(); ++k) out.push_back(index(k).complex());
        return out;
    }

    ComplexVector vector() const {
        require_array();
        ComplexVector v(static_cast<Eigen::Index>(size()));
        for (std::size_t k = 0; k < size(); ++k) v(static_cast<Eigen::Index>(k)) = index(k).complex();
        return v;
    }

    // Array of rows of complex entries.
    ComplexMatrix matrix() const {
        require_array();
        const std::size_t rows = size();
        if (rows == 0) fail("matrix must have at least one row");
        const std::size_t cols = index(0).json().is_array() ? index(0).size() : 0;
        ComplexMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (std::size_t r = 0; r < rows; ++r) {
            const Node row = index(r);
            row.require_array();
            if (row.size() != cols) row.fail("ragged matrix row");
            for (std::size_t c = 0; c < cols; ++c) {
                m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row.index(c).complex();
            }
        }
        return m;
    }

private:
    const Json& json_;
    std::string path_;
};

Mode parse_mode(const Node& node) {
    const std::string m = node.text();
    if (m == "probability") return Mode::Probability;
    if (m == "band-rate") return Mode::BandRate;
    if (m == "harmonic-rate") return Mode::HarmonicRate;
    if (m == "abl") return Mode::Abl;
    if (m == "first-order-validity") return Mode::FirstOrderValidity;
    node.fail("unknown mode '" + m + "' (expected probability, band-rate, harmonic-rate, abl, first-order-validity)");
}

// Re-throws module validation errors against the field that produced them.
template <typename F>
auto within(const Node& node, F&& build) -> decltype(build()) {
    try {
        return build();
    } catch (const SchemaError&) {
        throw;
    } catch (const NonHermitianPerturbation&) {
        throw;
    } catch (const ValidationError& e) {
        throw SchemaError(node.path(), e.what());
    }
}

PerturbationSpec parse_perturbation(const Node& node, double epsilon) {
    node.require_object({"kind", "matrix", "frequency", "times", "matrices", "switch_on_time"});
    const std::string kind = node.at("kind").text();
    std::optional<double> switch_on;
    if (auto s = node.maybe("switch_on_time")) switch_on = s->number();

    return within(node, [&]() {
        if (kind == "constant") {
            return PerturbationSpec::constant(epsilon * node.at("matrix").matrix(), switch_on);
        }
        if (kind == "harmonic") {
            return PerturbationSpec::harmonic(epsilon * node.at("matrix").matrix(), node.at("frequency").number(),
                                              switch_on);
        }
        if (kind == "sampled") {
            const Node mats = node.at("matrices");
            mats.require_array();
            std::vector<ComplexMatrix> matrices;
            for (std::size_t k = 0; k < mats.size(); ++k) matrices.push_back(epsilon * mats.index(k).matrix());
            return PerturbationSpec::sampled(node.at("times").numbers(), std::move(matrices), switch_on);
        }
        node.at("kind").fail("unknown perturbation kind '" + kind + "' (expected constant, harmonic, sampled)");
    });
}

QuantumSystem parse_system(const Node& node, double epsilon) {
    node.require_object({"energies", "perturbation", "hbar", "hermiticity_samples"});
    std::vector<double> energies = node.at("energies").numbers();
    if (energies.empty()) node.at("energies").fail("energies list is empty");
    const double hbar = node.maybe("hbar") ? node.at("hbar").number() : 1.0;
    HermiticityCheck check;
    if (auto s = node.maybe("hermiticity_samples")) check.harmonic_samples = static_cast<int>(s->count());
    PerturbationSpec perturbation = parse_perturbation(node.at("perturbation"), epsilon);
    return within(node, [&]() { return QuantumSystem(std::move(energies), std::move(perturbation), hbar, check); });
}

LambdaProfile parse_lambda(const std::optional<Node>& maybe_node) {
    if (!maybe_node) return {};
    const Node& node = *maybe_node;
    node.require_object({"base", "per_final_state", "time_profile"});
    const double base = node.maybe("base") ? node.at("base").number() : 0.0;

    std::map<std::size_t, double> per_final;
    if (auto table = node.maybe("per_final_state")) {
        if (!table->json().is_object()) table->fail("expected an object mapping state index to lambda");
        for (const auto& item : table->json().items()) {
            const Node entry(item.value(), table->child_path(item.key()));
            std::size_t idx = 0;
            try {
                std::size_t used = 0;
                idx = std::stoul(item.key(), &used);
                if (used != item.key().size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                entry.fail("state index keys must be non-negative integers");
            }
            per_final[idx] = entry.number();
        }
    }

    std::optional<TimeProfile> profile;
    if (auto tp = node.maybe("time_profile")) {
        tp->require_object({"form", "composition", "value", "amplitude", "frequency", "times", "values"});
        TimeProfile p;
        const std::string comp = tp->at("composition").text();
        if (comp == "multiplicative") {
            p.composition = Composition::Multiplicative;
        } else if (comp == "additive") {
            p.composition = Composition::Additive;
        } else {
            tp->at("composition").fail("expected multiplicative or additive");
        }
        const std::string form = tp->at("form").text();
        if (form == "constant") {
            p.form = ConstantForm{tp->at("value").number()};
        } else if (form == "sinusoid") {
            p.form = SinusoidForm{tp->at("amplitude").number(), tp->at("frequency").number()};
        } else if (form == "sampled") {
            p.form = SampledForm{tp->at("times").numbers(), tp->at("values").numbers()};
        } else {
            tp->at("form").fail("expected constant, sinusoid or sampled");
        }
        profile = std::move(p);
    }
    return within(node, [&]() { return LambdaProfile(base, std::move(per_final), std::move(profile)); });
}

ChannelSet parse_channels(const Node& node, std::size_t dimension) {
    node.require_object({"pairs", "window"});
    ChannelSet set;
    const Node pairs = node.at("pairs");
    pairs.require_array();
    if (pairs.size() == 0) pairs.fail("at least one (i, f) pair is required");
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const Node p = pairs.index(k);
        if (!p.json().is_array() || p.size() != 2) p.fail("expected an [i, f] pair");
        const std::size_t i = p.index(0).count();
        const std::size_t f = p.index(1).count();
        if (i >= dimension || f >= dimension) p.fail("state index outside the system dimension");
        if (i == f) p.fail("channel requires i != f");
        set.pairs.emplace_back(i, f);
    }
    const Node window = node.at("window");
    window.require_object({"t_i", "t_f"});
    set.t_i = window.at("t_i").number();
    set.t_f = window.at("t_f").number();
    if (!(set.t_f > set.t_i)) window.fail("window requires t_f > t_i");
    return set;
}

rates::BandSpec parse_band_spec(const Node& node) {
    rates::BandSpec band;
    band.center_energy = node.at("center_energy").number();
    band.width = node.at("width").number();
    band.count = node.at("count").count();
    band.couplings = node.at("coupling").complexes();
    within(node, [&]() {
        band.validate();
        return 0;
    });
    return band;
}

BandRateSpec parse_band(const Node& node) {
    node.require_object({"initial_energy", "center_energy", "width", "count", "coupling", "time", "hbar"});
    BandRateSpec spec;
    spec.problem.initial_energy = node.at("initial_energy").number();
    spec.problem.band = parse_band_spec(node);
    if (node.maybe("hbar")) spec.problem.hbar = node.at("hbar").number();
    if (!(spec.problem.hbar > 0.0)) node.at("hbar").fail("hbar must be positive");
    spec.time = node.at("time").number();
    if (!(spec.time > 0.0)) node.at("time").fail("time must be positive");
    return spec;
}

HarmonicRateSpec parse_harmonic(const Node& node) {
    node.require_object({"initial_energy", "drive_frequency", "branch", "time", "hbar", "band", "reverse_coupling"});
    HarmonicRateSpec spec;
    spec.problem.initial_energy = node.at("initial_energy").number();
    spec.problem.drive_frequency = node.at("drive_frequency").number();
    if (node.maybe("hbar")) spec.problem.hbar = node.at("hbar").number();
    if (!(spec.problem.hbar > 0.0)) node.at("hbar").fail("hbar must be positive");
    const Node band = node.at("band");
    band.require_object({"center_energy", "width", "count", "coupling"});
    spec.problem.band = parse_band_spec(band);
    if (auto rev = node.maybe("reverse_coupling")) spec.problem.reverse_couplings = rev->complexes();
    const std::string branch = node.at("branch").text();
    if (branch == "emission") {
        spec.branch = rates::Branch::Emission;
    } else if (branch == "absorption") {
        spec.branch = rates::Branch::Absorption;
    } else {
        node.at("branch").fail("expected emission or absorption");
    }
    spec.time = node.at("time").number();
    if (!(spec.time > 0.0)) node.at("time").fail("time must be positive");
    within(node, [&]() {
        spec.problem.validate();
        return 0;
    });
    return spec;
}

AblSpec parse_abl(const Node& node) {
    node.require_object({"pre", "post", "measurement"});
    AblSpec spec;
    spec.pre = node.at("pre").vector();
    if (auto post = node.maybe("post")) spec.post = post->vector();
    const Node meas = node.at("measurement");
    if (meas.json().is_string()) {
        if (meas.text() != "computational") meas.fail("expected \"computational\" or a list of outcomes");
        spec.measurement = within(meas, [&]() {
            return tsvf::ProjectiveMeasurement::computational_basis(static_cast<std::size_t>(spec.pre.size()));
        });
    } else {
        meas.require_array();
        std::vector<tsvf::Outcome> outcomes;
        for (std::size_t k = 0; k < meas.size(); ++k) {
            const Node o = meas.index(k);
            o.require_object({"label", "projector"});
            outcomes.push_back({o.at("label").text(), o.at("projector").matrix()});
        }
        spec.measurement = within(meas, [&]() { return tsvf::ProjectiveMeasurement(std::move(outcomes)); });
    }
    within(node, [&]() {
        if (spec.post) {
            tsvf::TwoStateVector(spec.pre, *spec.post);
        } else {
            tsvf::born_probability(spec.pre, *spec.measurement);
        }
        return 0;
    });
    return spec;
}

void parse_numerics(const std::optional<Node>& maybe_node, Scenario& s) {
    if (!maybe_node) return;
    const Node& node = *maybe_node;
    node.require_object({"quadrature", "propagator"});
    if (auto q = node.maybe("quadrature")) {
        q->require_object({"abs_tol", "rel_tol", "max_subdivisions", "min_panels_per_period"});
        if (q->has("abs_tol")) s.quadrature.abs_tol = q->at("abs_tol").number();
        if (q->has("rel_tol")) s.quadrature.rel_tol = q->at("rel_tol").number();
        if (q->has("max_subdivisions")) s.quadrature.max_subdivisions = q->at("max_subdivisions").count();
        if (q->has("min_panels_per_period")) {
            s.quadrature.min_panels_per_period = static_cast<int>(q->at("min_panels_per_period").count());
        }
        within(*q, [&]() {
            s.quadrature.validate();
            return 0;
        });
    }
    if (auto p = node.maybe("propagator")) {
        p->require_object({"steps_per_unit_time", "method", "unitarity_check_tol"});
        if (p->has("steps_per_unit_time")) {
            s.propagator.steps_per_unit_time = static_cast<int>(p->at("steps_per_unit_time").count());
        }
        if (p->has("unitarity_check_tol")) s.propagator.unitarity_check_tol = p->at("unitarity_check_tol").number();
        if (p->has("method")) {
            const std::string m = p->at("method").text();
            if (m == "rk4") {
                s.propagator.method = numerics::PropagatorMethod::RungeKutta4;
            } else if (m == "midpoint-exponential") {
                s.propagator.method = numerics::PropagatorMethod::MidpointExponential;
            } else {
                p->at("method").fail("expected rk4 or midpoint-exponential");
            }
        }
        within(*p, [&]() {
            s.propagator.validate();
            return 0;
        });
    }
}

const Json* resolve_path(const Json& doc, const std::string& path) {
    const Json* cur = &doc;
    std::stringstream ss(path);
    std::string part;
    while (std::getline(ss, part, '.')) {
        if (cur->is_object()) {
            if (!cur->contains(part)) return nullptr;
            cur = &cur->at(part);
        } else if (cur->is_array()) {
            std::size_t idx = 0;
            try {
                idx = std::stoul(part);
            } catch (const std::exception&) {
                return nullptr;
            }
            if (idx >= cur->size()) return nullptr;
            cur = &cur->at(idx);
        } else {
            return nullptr;
        }
    }
    return cur;
}

} // namespace

SchemaError::SchemaError(std::string field, const std::string& message, std::size_t line)
    : ValidationError(line > 0 ? "line " + std::to_string(line) + ": " + message
                               : (field.empty() ? message : "'" + field + "': " + message)),
      field_(std::move(field)), line_(line) {}

std::string to_string(Mode mode) {
    switch (mode) {
    case Mode::Probability: return "probability";
    case Mode::BandRate: return "band-rate";
    case Mode::HarmonicRate: return "harmonic-rate";
    case Mode::Abl: return "abl";
    case Mode::FirstOrderValidity: return "first-order-validity";
    }
    return "unknown";
}

std::string to_string(OutputFormat format) {
    return format == OutputFormat::Csv ? "csv" : "jsonl";
}

OutputFormat parse_format(const std::string& text) {
    if (text == "csv") return OutputFormat::Csv;
    if (text == "jsonl" || text == "json-lines") return OutputFormat::JsonLines;
    throw SchemaError("output.format", "expected csv or jsonl (got '" + text + "')");
}

Json load_document(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw SchemaError("", "cannot read scenario file " + path.string());
    }
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        Json doc = Json::parse(text);
        if (!doc.is_object()) throw SchemaError("", "scenario must be a JSON object");
        return doc;
    } catch (const Json::parse_error& e) {
        throw SchemaError("", e.what(), line_of(text, e.byte));
    }
}

void set_path(Json& doc, const std::string& path, const Json& value, bool require_numeric_leaf) {
    if (path.empty()) throw SchemaError(path, "empty parameter path");
    if (require_numeric_leaf) {
        const Json* leaf = resolve_path(doc, path);
        if (leaf == nullptr) throw SchemaError(path, "parameter path does not exist in the scenario");
        if (!leaf->is_number()) throw SchemaError(path, "parameter path does not resolve to a numeric leaf");
    }
    Json* cur = &doc;
    std::stringstream ss(path);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const bool last = k + 1 == parts.size();
        if (cur->is_array()) {
            std::size_t idx = 0;
            try {
                idx = std::stoul(parts[k]);
            } catch (const std::exception&) {
                throw SchemaError(path, "array index expected at '" + parts[k] + "'");
            }
            if (idx >= cur->size()) throw SchemaError(path, "array index out of range");
            cur = &(*cur)[idx];
        } else {
            if (cur->is_null()) *cur = Json::object();
            if (!cur->is_object()) throw SchemaError(path, "cannot descend into a scalar at '" + parts[k] + "'");
            cur = &(*cur)[parts[k]];
        }
        if (last) *cur = value;
    }
}

std::pair<std::string, Json> parse_assignment(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw SchemaError("", "override must look like key=value (got '" + text + "')");
    }
    const std::string key = text.substr(0, eq);
    const std::string raw = text.substr(eq + 1);
    Json value;
    try {
        value = Json::parse(raw);
    } catch (const Json::parse_error&) {
        value = raw;
    }
    return {key, value};
}

Scenario parse_scenario(const Json& doc) {
    const Node root(doc, "");
    root.require_object({"id", "mode", "system", "lambda", "channels", "band", "harmonic", "abl", "validity",
                         "numerics", "sweep", "output", "description"});
    Scenario s;
    s.id = root.maybe("id") ? root.at("id").text() : "scenario";
    s.mode = parse_mode(root.at("mode"));

    if (auto v = root.maybe("validity")) {
        v->require_object({"epsilon"});
        s.epsilon = v->at("epsilon").number();
    }

    s.lambda = parse_lambda(root.maybe("lambda"));
    parse_numerics(root.maybe("numerics"), s);

    switch (s.mode) {
    case Mode::Probability:
    case Mode::FirstOrderValidity:
        s.system = parse_system(root.at("system"), s.epsilon);
        s.channels = parse_channels(root.at("channels"), s.system->dimension());
        break;
    case Mode::BandRate:
        s.band = parse_band(root.at("band"));
        if (s.lambda.is_time_dependent()) root.at("lambda").fail("band-rate mode needs a time-independent lambda");
        break;
    case Mode::HarmonicRate:
        s.harmonic = parse_harmonic(root.at("harmonic"));
        if (s.lambda.is_time_dependent()) root.at("lambda").fail("harmonic-rate mode needs a time-independent lambda");
        break;
    case Mode::Abl:
        s.abl = parse_abl(root.at("abl"));
        break;
    }

    if (auto sw = root.maybe("sweep")) {
        sw->require_object({"parameter", "values"});
        Sweep sweep{sw->at("parameter").text(), sw->at("values").numbers()};
        if (sweep.values.empty()) sw->at("values").fail("sweep needs at least one value");
        const Json* leaf = resolve_path(doc, sweep.parameter);
        if (leaf == nullptr || !leaf->is_number()) {
            sw->at("parameter").fail("'" + sweep.parameter + "' does not resolve to a numeric leaf");
        }
        s.sweep = std::move(sweep);
    }

    if (auto out = root.maybe("output")) {
        out->require_object({"path", "format"});
        if (auto p = out->maybe("path")) s.output.path = p->text();
        if (auto f = out->maybe("format")) {
            try {
                s.output.format = parse_format(f->text());
            } catch (const SchemaError&) {
                f->fail("expected csv or jsonl");
            }
        }
    }
    return s;
}

Json sweep_point(const Json& doc, const Scenario& scenario, std::size_t index) {
    if (!scenario.sweep) return doc;
    Json point = doc;
    set_path(point, scenario.sweep->parameter, scenario.sweep->values.at(index), true);
    return point;
}

double lambda_lower_bound(const LambdaProfile& lambda) {
    std::vector<double> states{lambda.base()};
    for (const auto& [f, v] : lambda.per_final_state()) states.push_back(v);

    double pmin = 1.0;
    double pmax = 1.0;
    const auto& tp = lambda.time_profile();
    if (tp) {
        if (const auto* c = std::get_if<ConstantForm>(&tp->form)) {
            pmin = pmax = c->value;
        } else if (const auto* s = std::get_if<SinusoidForm>(&tp->form)) {
            pmin = -std::abs(s->amplitude);
            pmax = std::abs(s->amplitude);
        } else {
            const auto& values = std::get<SampledForm>(tp->form).values;
            pmin = *std::min_element(values.begin(), values.end());
            pmax = *std::max_element(values.begin(), values.end());
        }
    }

    double lowest = std::numeric_limits<double>::infinity();
    for (double s : states) {
        double lo = s;
        if (tp) {
            lo = tp->composition == Composition::Multiplicative ? std::min(s * pmin, s * pmax) : s + pmin;
        }
        lowest = std::min(lowest, lo);
    }
    return lowest;
}

} // namespace tbreak::cli
