#include "tbreak/model.hpp"

#include "tbreak/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace tbreak {

namespace {

std::string fmt_num(double x) {
    std::ostringstream os;
    os.precision(12);
    os << x;
    return os.str();
}

void require_finite(const ComplexMatrix& m, const char* what) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            const Complex z = m(r, c);
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
                throw NonFiniteEntry(std::string(what) + ": non-finite entry at (" +
                                     std::to_string(r) + ", " + std::to_string(c) + ")");
            }
        }
    }
}

void require_square(const ComplexMatrix& m, const char* what) {
    if (m.rows() != m.cols()) {
        throw DimensionMismatch(std::string(what) + ": matrix is " + std::to_string(m.rows()) +
                                "x" + std::to_string(m.cols()) + ", expected square");
    }
}

void require_strictly_increasing(const std::vector<double>& t, const char* what) {
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (!std::isfinite(t[k])) {
            throw NonFiniteEntry(std::string(what) + ": non-finite time at index " + std::to_string(k));
        }
        if (k > 0 && !(t[k] > t[k - 1])) {
            throw ValidationError(std::string(what) + ": time grid must be strictly increasing (index " +
                                  std::to_string(k) + ")");
        }
    }
}

// Segment index k with times[k] <= t < times[k+1] and the fractional position.
std::pair<std::size_t, double> locate(const std::vector<double>& times, double t) {
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const auto k = static_cast<std::size_t>(std::distance(times.begin(), it)) - 1;
    const double s = (t - times[k]) / (times[k + 1] - times[k]);
    return {k, s};
}

void update_report(HermiticityReport& report, const ComplexMatrix& m, double t) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = r; c < m.cols(); ++c) {
            const double dev = std::abs(m(r, c) - std::conj(m(c, r)));
            if (dev > report.max_deviation) {
                report = {dev, static_cast<std::size_t>(r), static_cast<std::size_t>(c), t};
            }
        }
    }
}

} // namespace

NonHermitianPerturbation::NonHermitianPerturbation(double max_deviation, std::size_t row,
                                                   std::size_t col, double time)
    : ValidationError("perturbation is not Hermitian: max |H'(t) - H'(t)^dagger| = " +
                      fmt_num(max_deviation) + " at entry (" + std::to_string(row) + ", " +
                      std::to_string(col) + "), t = " + fmt_num(time)),
      max_deviation_(max_deviation), row_(row), col_(col), time_(time) {}

UnitarityLost::UnitarityLost(double drift, double tolerance)
    : NumericalError("propagator norm drift " + fmt_num(drift) + " exceeds tolerance " +
                     fmt_num(tolerance) + "; increase steps_per_unit_time"),
      drift_(drift) {}

TimeWindow::TimeWindow(double t_i, double t_f) : t_i_(t_i), t_f_(t_f) {
    if (!std::isfinite(t_i) || !std::isfinite(t_f)) {
        throw NonFiniteEntry("time window bounds must be finite");
    }
    if (!(t_f > t_i)) {
        throw ValidationError("time window requires t_f > t_i (got t_i = " + fmt_num(t_i) +
                              ", t_f = " + fmt_num(t_f) + ")");
    }
}

std::string to_string(PerturbationKind kind) {
    switch (kind) {
    case PerturbationKind::Constant: return "constant";
    case PerturbationKind::Harmonic: return "harmonic";
    case PerturbationKind::Sampled: return "sampled";
    }
    return "unknown";
}

// --- PerturbationSpec ---------------------------------------------------------

PerturbationSpec PerturbationSpec::constant(ComplexMatrix matrix, std::optional<double> switch_on_time) {
    require_square(matrix, "constant perturbation");
    require_finite(matrix, "constant perturbation");
    PerturbationSpec p;
    p.kind_ = PerturbationKind::Constant;
    p.matrix_ = std::move(matrix);
    p.switch_on_time_ = switch_on_time;
    return p;
}

PerturbationSpec PerturbationSpec::harmonic(ComplexMatrix v, double drive_frequency,
                                            std::optional<double> switch_on_time) {
    require_square(v, "harmonic perturbation");
    require_finite(v, "harmonic perturbation");
    if (!std::isfinite(drive_frequency)) {
        throw NonFiniteEntry("harmonic perturbation: drive frequency must be finite");
    }
    PerturbationSpec p;
    p.kind_ = PerturbationKind::Harmonic;
    p.matrix_ = std::move(v);
    p.drive_frequency_ = drive_frequency;
    p.switch_on_time_ = switch_on_time;
    return p;
}

PerturbationSpec PerturbationSpec::sampled(std::vector<double> times, std::vector<ComplexMatrix> matrices,
                                           std::optional<double> switch_on_time) {
    if (times.empty() || times.size() != matrices.size()) {
        throw DimensionMismatch("sampled perturbation: need one matrix per grid time (got " +
                                std::to_string(times.size()) + " times, " +
                                std::to_string(matrices.size()) + " matrices)");
    }
    require_strictly_increasing(times, "sampled perturbation");
    const Eigen::Index n = matrices.front().rows();
    for (const auto& m : matrices) {
        require_square(m, "sampled perturbation");
        if (m.rows() != n) {
            throw DimensionMismatch("sampled perturbation: matrices differ in dimension");
        }
        require_finite(m, "sampled perturbation");
    }
    PerturbationSpec p;
    p.kind_ = PerturbationKind::Sampled;
    p.times_ = std::move(times);
    p.samples_ = std::move(matrices);
    p.switch_on_time_ = switch_on_time;
    return p;
}

std::size_t PerturbationSpec::dimension() const noexcept {
    if (kind_ == PerturbationKind::Sampled) {
        return static_cast<std::size_t>(samples_.front().rows());
    }
    return static_cast<std::size_t>(matrix_.rows());
}

double PerturbationSpec::effective_start(const TimeWindow& window) const noexcept {
    return switch_on_time_ ? std::max(window.t_i(), *switch_on_time_) : window.t_i();
}

bool PerturbationSpec::active(double t) const noexcept {
    return !switch_on_time_ || t >= *switch_on_time_;
}

ComplexMatrix PerturbationSpec::at(double t) const {
    const auto n = static_cast<Eigen::Index>(dimension());
    if (!active(t)) {
        return ComplexMatrix::Zero(n, n);
    }
    switch (kind_) {
    case PerturbationKind::Constant:
        return matrix_;
    case PerturbationKind::Harmonic: {
        const Complex phase = std::polar(1.0, drive_frequency_ * t);
        return matrix_ * phase + matrix_.adjoint() * std::conj(phase);
    }
    case PerturbationKind::Sampled: {
        if (t <= times_.front()) return samples_.front();
        if (t >= times_.back()) return samples_.back();
        const auto [k, s] = locate(times_, t);
        return (1.0 - s) * samples_[k] + s * samples_[k + 1];
    }
    }
    return ComplexMatrix::Zero(n, n);
}

Complex PerturbationSpec::element(std::size_t f, std::size_t i, double t) const {
    const std::size_t n = dimension();
    if (f >= n || i >= n) {
        throw IndexOutOfRange("matrix element (" + std::to_string(f) + ", " + std::to_string(i) +
                              ") outside dimension " + std::to_string(n));
    }
    if (!active(t)) {
        return {0.0, 0.0};
    }
    const auto r = static_cast<Eigen::Index>(f);
    const auto c = static_cast<Eigen::Index>(i);
    switch (kind_) {
    case PerturbationKind::Constant:
        return matrix_(r, c);
    case PerturbationKind::Harmonic: {
        const Complex phase = std::polar(1.0, drive_frequency_ * t);
        return matrix_(r, c) * phase + std::conj(matrix_(c, r)) * std::conj(phase);
    }
    case PerturbationKind::Sampled: {
        if (t <= times_.front()) return samples_.front()(r, c);
        if (t >= times_.back()) return samples_.back()(r, c);
        const auto [k, s] = locate(times_, t);
        return (1.0 - s) * samples_[k](r, c) + s * samples_[k + 1](r, c);
    }
    }
    return {0.0, 0.0};
}

HermiticityReport hermiticity_report(const PerturbationSpec& perturbation, const HermiticityCheck& check) {
    HermiticityReport report;
    switch (perturbation.kind()) {
    case PerturbationKind::Constant:
        update_report(report, perturbation.matrix(), perturbation.switch_on_time().value_or(0.0));
        break;
    case PerturbationKind::Harmonic: {
        const double t0 = perturbation.switch_on_time().value_or(0.0);
        const double w = perturbation.drive_frequency();
        const double period = w != 0.0 ? 2.0 * std::numbers::pi / std::abs(w) : 1.0;
        const int samples = std::max(1, check.harmonic_samples);
        for (int k = 0; k < samples; ++k) {
            const double t = t0 + period * k / samples;
            update_report(report, perturbation.at(t), t);
        }
        break;
    }
    case PerturbationKind::Sampled:
        // Linear interpolation of Hermitian nodes stays Hermitian.
        for (std::size_t k = 0; k < perturbation.sample_times().size(); ++k) {
            update_report(report, perturbation.sample_matrices()[k], perturbation.sample_times()[k]);
        }
        break;
    }
    return report;
}

// --- QuantumSystem ------------------------------------------------------------

QuantumSystem::QuantumSystem(std::vector<double> energies, PerturbationSpec perturbation, double hbar,
                             const HermiticityCheck& check)
    : energies_(std::move(energies)), perturbation_(std::move(perturbation)), hbar_(hbar) {
    if (energies_.empty()) {
        throw DimensionMismatch("energies list is empty");
    }
    for (std::size_t n = 0; n < energies_.size(); ++n) {
        if (!std::isfinite(energies_[n])) {
            throw NonFiniteEntry("energy E_" + std::to_string(n) + " is not finite");
        }
    }
    if (!std::isfinite(hbar_) || !(hbar_ > 0.0)) {
        throw ValidationError("hbar must be a positive finite number");
    }
    if (perturbation_.dimension() != energies_.size()) {
        throw DimensionMismatch("perturbation is " + std::to_string(perturbation_.dimension()) + "x" +
                                std::to_string(perturbation_.dimension()) + " but there are " +
                                std::to_string(energies_.size()) + " energies");
    }
    const HermiticityReport report = hermiticity_report(perturbation_, check);
    if (report.max_deviation > check.tolerance) {
        throw NonHermitianPerturbation(report.max_deviation, report.row, report.col, report.time);
    }
}

double QuantumSystem::energy(std::size_t n) const {
    if (n >= energies_.size()) {
        throw IndexOutOfRange("state index " + std::to_string(n) + " outside dimension " +
                              std::to_string(energies_.size()));
    }
    return energies_[n];
}

double QuantumSystem::omega(std::size_t i, std::size_t f) const {
    return (energy(f) - energy(i)) / hbar_;
}

QuantumSystem build_system(std::vector<double> energies, PerturbationSpec perturbation, double hbar,
                           const HermiticityCheck& check) {
    return QuantumSystem(std::move(energies), std::move(perturbation), hbar, check);
}

Complex matrix_element(const QuantumSystem& system, std::size_t f, std::size_t i, double t) {
    return system.perturbation().element(f, i, t);
}

TransitionChannel::TransitionChannel(const QuantumSystem& system, std::size_t i, std::size_t f,
                                     TimeWindow window)
    : i_(i), f_(f), omega_fi_(system.omega(i, f)), window_(window) {
    if (i == f) {
        throw ValidationError("transition channel requires i != f (got " + std::to_string(i) + ")");
    }
}

// --- Lambda -------------------------------------------------------------------

double evaluate(const TimeForm& form, double t) {
    struct Visitor {
        double t;
        double operator()(const ConstantForm& c) const { return c.value; }
        double operator()(const SinusoidForm& s) const { return s.amplitude * std::sin(s.frequency * t); }
        double operator()(const SampledForm& s) const {
            if (t <= s.times.front()) return s.values.front();
            if (t >= s.times.back()) return s.values.back();
            const auto [k, u] = locate(s.times, t);
            return (1.0 - u) * s.values[k] + u * s.values[k + 1];
        }
    };
    return std::visit(Visitor{t}, form);
}

bool is_time_dependent(const TimeForm& form) {
    return !std::holds_alternative<ConstantForm>(form);
}

LambdaProfile::LambdaProfile(double base, std::map<std::size_t, double> per_final_state,
                             std::optional<TimeProfile> time_profile)
    : base_(base), per_final_(std::move(per_final_state)), time_profile_(std::move(time_profile)) {
    if (!std::isfinite(base_)) {
        throw NonFiniteEntry("lambda base must be finite");
    }
    for (const auto& [f, v] : per_final_) {
        if (!std::isfinite(v)) {
            throw NonFiniteEntry("lambda for final state " + std::to_string(f) + " must be finite");
        }
    }
    if (time_profile_) {
        if (const auto* c = std::get_if<ConstantForm>(&time_profile_->form); c && !std::isfinite(c->value)) {
            throw NonFiniteEntry("lambda time profile value must be finite");
        }
        if (const auto* s = std::get_if<SinusoidForm>(&time_profile_->form);
            s && (!std::isfinite(s->amplitude) || !std::isfinite(s->frequency))) {
            throw NonFiniteEntry("lambda sinusoid parameters must be finite");
        }
        if (const auto* s = std::get_if<SampledForm>(&time_profile_->form)) {
            if (s->times.size() < 2 || s->times.size() != s->values.size()) {
                throw DimensionMismatch("lambda sampled table needs >= 2 points and one value per time");
            }
            require_strictly_increasing(s->times, "lambda sampled table");
            for (double v : s->values) {
                if (!std::isfinite(v)) throw NonFiniteEntry("lambda sampled value must be finite");
            }
        }
    }
}

double LambdaProfile::state_value(std::size_t f) const noexcept {
    const auto it = per_final_.find(f);
    return it != per_final_.end() ? it->second : base_;
}

LambdaAffine LambdaProfile::affine(std::size_t f) const noexcept {
    const double s = state_value(f);
    if (!time_profile_) {
        return {s, 0.0, nullptr};
    }
    if (time_profile_->composition == Composition::Multiplicative) {
        return {0.0, s, &time_profile_->form};
    }
    return {s, 1.0, &time_profile_->form};
}

double LambdaProfile::resolve(std::size_t f, double t) const {
    const double s = state_value(f);
    if (!time_profile_) {
        return s;
    }
    const double p = evaluate(time_profile_->form, t);
    return time_profile_->composition == Composition::Multiplicative ? s * p : s + p;
}

bool LambdaProfile::is_time_dependent() const noexcept {
    return time_profile_ && tbreak::is_time_dependent(time_profile_->form);
}

std::string LambdaProfile::summary(std::size_t f) const {
    std::string out = fmt_num(state_value(f));
    if (!time_profile_) {
        return out;
    }
    const bool mult = time_profile_->composition == Composition::Multiplicative;
    std::string p;
    if (const auto* c = std::get_if<ConstantForm>(&time_profile_->form)) {
        p = fmt_num(c->value);
    } else if (const auto* s = std::get_if<SinusoidForm>(&time_profile_->form)) {
        p = fmt_num(s->amplitude) + "*sin(" + fmt_num(s->frequency) + "t)";
    } else {
        p = "table(t)";
    }
    return out + (mult ? "*" : "+") + p;
}

double resolve_lambda(const LambdaProfile& profile, std::size_t f, double t) {
    return profile.resolve(f, t);
}

} // namespace tbreak
