#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace tbreak {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

// Absolute tolerance on max|H'(t) - H'(t)^dagger| at construction.
inline constexpr double kHermiticityTolerance = 1e-12;

// Closed interval [t_i, t_f] with t_f > t_i.
class TimeWindow {
public:
    TimeWindow(double t_i, double t_f);

    double t_i() const noexcept { return t_i_; }
    double t_f() const noexcept { return t_f_; }
    double length() const noexcept { return t_f_ - t_i_; }

private:
    double t_i_;
    double t_f_;
};

enum class PerturbationKind { Constant, Harmonic, Sampled };

std::string to_string(PerturbationKind kind);

// The interaction H'(t) in the eigenbasis of H0.
//
//   Constant : H'(t) = M
//   Harmonic : H'(t) = V e^{i w t} + V^dagger e^{-i w t}
//   Sampled  : entrywise linear interpolation between grid matrices; the end
//              matrices are held outside the grid.
//
// H'(t) is zero before switch_on_time. When no switch-on time is given the
// perturbation is active from the start of whatever window it is integrated
// over.
class PerturbationSpec {
public:
    static PerturbationSpec constant(ComplexMatrix matrix,
                                     std::optional<double> switch_on_time = std::nullopt);
    static PerturbationSpec harmonic(ComplexMatrix v, double drive_frequency,
                                     std::optional<double> switch_on_time = std::nullopt);
    static PerturbationSpec sampled(std::vector<double> times, std::vector<ComplexMatrix> matrices,
                                    std::optional<double> switch_on_time = std::nullopt);

    PerturbationKind kind() const noexcept { return kind_; }
    std::size_t dimension() const noexcept;
    std::optional<double> switch_on_time() const noexcept { return switch_on_time_; }

    // First instant inside the window at which H' may be nonzero.
    double effective_start(const TimeWindow& window) const noexcept;

    // Constant matrix, or V for the harmonic kind.
    const ComplexMatrix& matrix() const noexcept { return matrix_; }
    double drive_frequency() const noexcept { return drive_frequency_; }
    const std::vector<double>& sample_times() const noexcept { return times_; }
    const std::vector<ComplexMatrix>& sample_matrices() const noexcept { return samples_; }

    ComplexMatrix at(double t) const;
    Complex element(std::size_t f, std::size_t i, double t) const;

private:
    PerturbationSpec() = default;
    bool active(double t) const noexcept;

    PerturbationKind kind_{PerturbationKind::Constant};
    ComplexMatrix matrix_;
    double drive_frequency_{0.0};
    std::vector<double> times_;
    std::vector<ComplexMatrix> samples_;
    std::optional<double> switch_on_time_;
};

struct HermiticityCheck {
    // Harmonic kind: number of equally spaced times across one drive period.
    int harmonic_samples{16};
    double tolerance{kHermiticityTolerance};
};

// H0 (diagonal, given by its eigenvalues) plus the perturbation H'.
class QuantumSystem {
public:
    QuantumSystem(std::vector<double> energies, PerturbationSpec perturbation, double hbar = 1.0,
                  const HermiticityCheck& check = {});

    std::size_t dimension() const noexcept { return energies_.size(); }
    const std::vector<double>& energies() const noexcept { return energies_; }
    double energy(std::size_t n) const;
    const PerturbationSpec& perturbation() const noexcept { return perturbation_; }
    double hbar() const noexcept { return hbar_; }

    // Bohr frequency (E_f - E_i) / hbar.
    double omega(std::size_t i, std::size_t f) const;

private:
    std::vector<double> energies_;
    PerturbationSpec perturbation_;
    double hbar_;
};

QuantumSystem build_system(std::vector<double> energies, PerturbationSpec perturbation,
                           double hbar = 1.0, const HermiticityCheck& check = {});

// <f|H'(t)|i>; zero before the switch-on time.
Complex matrix_element(const QuantumSystem& system, std::size_t f, std::size_t i, double t);

// Largest |H'(t) - H'(t)^dagger| entry found by the construction-time sampling.
struct HermiticityReport {
    double max_deviation{0.0};
    std::size_t row{0};
    std::size_t col{0};
    double time{0.0};
};

HermiticityReport hermiticity_report(const PerturbationSpec& perturbation,
                                     const HermiticityCheck& check = {});

class TransitionChannel {
public:
    TransitionChannel(const QuantumSystem& system, std::size_t i, std::size_t f, TimeWindow window);

    std::size_t i() const noexcept { return i_; }
    std::size_t f() const noexcept { return f_; }
    double omega_fi() const noexcept { return omega_fi_; }
    const TimeWindow& window() const noexcept { return window_; }

private:
    std::size_t i_;
    std::size_t f_;
    double omega_fi_;
    TimeWindow window_;
};

// --- T-violation parameter ---------------------------------------------------

struct ConstantForm {
    double value{0.0};
};

struct SinusoidForm {
    double amplitude{0.0};
    double frequency{0.0};
};

// Piecewise linear; end values are held outside the table.
struct SampledForm {
    std::vector<double> times;
    std::vector<double> values;
};

using TimeForm = std::variant<ConstantForm, SinusoidForm, SampledForm>;

double evaluate(const TimeForm& form, double t);
bool is_time_dependent(const TimeForm& form);

enum class Composition { Multiplicative, Additive };

struct TimeProfile {
    TimeForm form;
    Composition composition{Composition::Multiplicative};
};

// lambda_f(t) = offset + scale * p(t), where p is the time profile (or absent).
struct LambdaAffine {
    double offset{0.0};
    double scale{0.0};
    const TimeForm* form{nullptr};
};

class LambdaProfile {
public:
    LambdaProfile() = default;
    explicit LambdaProfile(double base, std::map<std::size_t, double> per_final_state = {},
                           std::optional<TimeProfile> time_profile = std::nullopt);

    static LambdaProfile constant(double value) { return LambdaProfile(value); }

    double base() const noexcept { return base_; }
    const std::map<std::size_t, double>& per_final_state() const noexcept { return per_final_; }
    const std::optional<TimeProfile>& time_profile() const noexcept { return time_profile_; }

    // State part for final state f: the override if present, otherwise base.
    double state_value(std::size_t f) const noexcept;
    double resolve(std::size_t f, double t) const;
    LambdaAffine affine(std::size_t f) const noexcept;
    bool is_time_dependent() const noexcept;

    std::string summary(std::size_t f) const;

private:
    double base_{0.0};
    std::map<std::size_t, double> per_final_;
    std::optional<TimeProfile> time_profile_;
};

double resolve_lambda(const LambdaProfile& profile, std::size_t f, double t);

} // namespace tbreak
